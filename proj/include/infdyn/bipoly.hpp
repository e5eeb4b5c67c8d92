#pragma once

// Bivariate polynomials over a scalar backend K, plus their homogeneous
// layers. BiPoly is sparse (map keyed by exponent pair), HomPoly is a dense
// coefficient vector for a single degree.

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "infdyn/errors.hpp"
#include "infdyn/scalars.hpp"

namespace infdyn {

enum class Var { z, w };

// Hard cap on rational coefficient size; composition of high-degree maps can
// genuinely explode, and we prefer a typed error over an apparent hang.
inline constexpr size_t max_rat_bits = 1u << 22;

inline void check_coeff_size(const RatCx& c) {
    size_t bits = mpz_sizeinbase(c.re.get_num().get_mpz_t(), 2) +
                  mpz_sizeinbase(c.re.get_den().get_mpz_t(), 2) +
                  mpz_sizeinbase(c.im.get_num().get_mpz_t(), 2) +
                  mpz_sizeinbase(c.im.get_den().get_mpz_t(), 2);
    if (bits > max_rat_bits)
        throw CoefficientOverflow("rational coefficient exceeds " +
                                  std::to_string(max_rat_bits) + " bits");
}
inline void check_coeff_size(const Cx&) {}

template <class K>
class BiPoly {
public:
    using Key = std::pair<int, int>; // (z exponent, w exponent)
    std::map<Key, K> terms;

    BiPoly() = default;

    static BiPoly zero() { return {}; }
    static BiPoly constant(const K& c) {
        BiPoly p;
        p.set(0, 0, c);
        return p;
    }
    static BiPoly var_z() {
        BiPoly p;
        p.set(1, 0, scalar_traits<K>::from_int(1));
        return p;
    }
    static BiPoly var_w() {
        BiPoly p;
        p.set(0, 1, scalar_traits<K>::from_int(1));
        return p;
    }
    static BiPoly monomial(int i, int j, const K& c) {
        BiPoly p;
        p.set(i, j, c);
        return p;
    }

    bool is_zero() const { return terms.empty(); }

    void set(int i, int j, const K& c) {
        if (scalar_traits<K>::is_zero(c))
            terms.erase({i, j});
        else
            terms[{i, j}] = c;
    }

    K get(int i, int j) const {
        auto it = terms.find({i, j});
        return it == terms.end() ? K{} : it->second;
    }

    // Total degree; -1 for the zero polynomial.
    int degree() const {
        int d = -1;
        for (auto& [k, c] : terms) d = std::max(d, k.first + k.second);
        return d;
    }

    double max_abs() const {
        double m = 0;
        for (auto& [k, c] : terms) m = std::max(m, std::sqrt(norm2_d(c)));
        return m;
    }

    // Drop coefficients that are zero at the backend's resolution. The float
    // backend prunes relative to the largest coefficient.
    BiPoly& prune() {
        double scale = scalar_traits<K>::is_exact ? 1.0 : max_abs();
        for (auto it = terms.begin(); it != terms.end();) {
            if (scalar_traits<K>::is_zero(it->second, scale))
                it = terms.erase(it);
            else
                ++it;
        }
        return *this;
    }

    BiPoly operator-() const {
        BiPoly r;
        for (auto& [k, c] : terms) r.terms[k] = -c;
        return r;
    }
    BiPoly& operator+=(const BiPoly& o) {
        for (auto& [k, c] : o.terms) {
            auto it = terms.find(k);
            if (it == terms.end())
                terms[k] = c;
            else {
                it->second += c;
                if (scalar_traits<K>::is_zero(it->second)) terms.erase(it);
            }
        }
        return *this;
    }
    BiPoly& operator-=(const BiPoly& o) { return *this += -o; }

    friend BiPoly operator+(BiPoly a, const BiPoly& b) { return a += b; }
    friend BiPoly operator-(BiPoly a, const BiPoly& b) { return a -= b; }

    friend BiPoly operator*(const BiPoly& a, const BiPoly& b) {
        BiPoly r;
        for (auto& [ka, ca] : a.terms)
            for (auto& [kb, cb] : b.terms) {
                Key k{ka.first + kb.first, ka.second + kb.second};
                auto it = r.terms.find(k);
                if (it == r.terms.end())
                    r.terms[k] = ca * cb;
                else
                    it->second += ca * cb;
            }
        for (auto& [k, c] : r.terms) check_coeff_size(c);
        r.prune();
        return r;
    }

    friend BiPoly operator*(const K& s, const BiPoly& p) {
        BiPoly r;
        if (scalar_traits<K>::is_zero(s)) return r;
        for (auto& [k, c] : p.terms) r.terms[k] = s * c;
        return r;
    }

    BiPoly pow(int e) const {
        if (e < 0) throw DegenerateInput("negative polynomial power");
        BiPoly r = constant(scalar_traits<K>::from_int(1));
        BiPoly base = *this;
        while (e > 0) {
            if (e & 1) r = r * base;
            base = (e >>= 1) ? base * base : base;
        }
        return r;
    }

    K eval(const K& z, const K& w) const {
        // Direct monomial evaluation with cached powers.
        int dz = 0, dw = 0;
        for (auto& [k, c] : terms) {
            dz = std::max(dz, k.first);
            dw = std::max(dw, k.second);
        }
        std::vector<K> pz(dz + 1), pw(dw + 1);
        pz[0] = scalar_traits<K>::from_int(1);
        for (int i = 1; i <= dz; ++i) pz[i] = pz[i - 1] * z;
        pw[0] = scalar_traits<K>::from_int(1);
        for (int j = 1; j <= dw; ++j) pw[j] = pw[j - 1] * w;
        K acc{};
        for (auto& [k, c] : terms) acc += c * pz[k.first] * pw[k.second];
        return acc;
    }

    BiPoly derivative(Var v) const {
        BiPoly r;
        for (auto& [k, c] : terms) {
            int e = (v == Var::z) ? k.first : k.second;
            if (e == 0) continue;
            Key nk = (v == Var::z) ? Key{k.first - 1, k.second}
                                   : Key{k.first, k.second - 1};
            K nc = scalar_traits<K>::from_int(e) * c;
            auto it = r.terms.find(nk);
            if (it == r.terms.end())
                r.terms[nk] = nc;
            else
                it->second += nc;
        }
        r.prune();
        return r;
    }

    bool operator==(const BiPoly& o) const { return terms == o.terms; }
};

// ---------------------------------------------------------------------------
// HomPoly: one homogeneous layer. coeff(k) is the coefficient of z^k w^{n-k};
// serialization emits them z-descending.
// ---------------------------------------------------------------------------

template <class K>
class HomPoly {
public:
    int deg = 0;
    std::vector<K> c; // size deg+1, index = z-exponent

    HomPoly() : c(1, K{}) {}
    explicit HomPoly(int d) : deg(d), c(d + 1, K{}) {}
    HomPoly(int d, std::vector<K> coeffs) : deg(d), c(std::move(coeffs)) {
        if (static_cast<int>(c.size()) != d + 1)
            throw DegenerateInput("homogeneous coefficient count does not match degree");
    }

    bool is_zero() const {
        for (auto& x : c)
            if (!scalar_traits<K>::is_zero(x)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0;
        for (auto& x : c) m = std::max(m, std::sqrt(norm2_d(x)));
        return m;
    }

    const K& coeff(int zexp) const { return c.at(zexp); }
    K& coeff(int zexp) { return c.at(zexp); }

    K eval(const K& z, const K& w) const {
        K acc{};
        K pz = scalar_traits<K>::from_int(1);
        std::vector<K> zs(deg + 1);
        for (int k = 0; k <= deg; ++k) {
            zs[k] = pz;
            pz = pz * z;
        }
        K pw = scalar_traits<K>::from_int(1);
        for (int k = deg; k >= 0; --k) {
            acc += c[k] * zs[k] * pw;
            pw = pw * w;
        }
        return acc;
    }

    BiPoly<K> to_bipoly() const {
        BiPoly<K> p;
        for (int k = 0; k <= deg; ++k) p.set(k, deg - k, c[k]);
        return p;
    }

    // Largest z-exponent with a nonzero coefficient; -1 if zero polynomial.
    int top_z_exp() const {
        double scale = scalar_traits<K>::is_exact ? 1.0 : max_abs();
        for (int k = deg; k >= 0; --k)
            if (!scalar_traits<K>::is_zero(c[k], scale)) return k;
        return -1;
    }
    // Smallest z-exponent with a nonzero coefficient; deg+1 if zero.
    int low_z_exp() const {
        double scale = scalar_traits<K>::is_exact ? 1.0 : max_abs();
        for (int k = 0; k <= deg; ++k)
            if (!scalar_traits<K>::is_zero(c[k], scale)) return k;
        return deg + 1;
    }

    friend HomPoly operator*(const HomPoly& a, const HomPoly& b) {
        HomPoly r(a.deg + b.deg);
        for (int i = 0; i <= a.deg; ++i) {
            if (scalar_traits<K>::is_zero(a.c[i])) continue;
            for (int j = 0; j <= b.deg; ++j) r.c[i + j] += a.c[i] * b.c[j];
        }
        return r;
    }
    friend HomPoly operator*(const K& s, const HomPoly& p) {
        HomPoly r(p.deg);
        for (int k = 0; k <= p.deg; ++k) r.c[k] = s * p.c[k];
        return r;
    }

    bool operator==(const HomPoly& o) const { return deg == o.deg && c == o.c; }
};

// ---------------------------------------------------------------------------
// hom_components / top part
// ---------------------------------------------------------------------------

// Split into homogeneous layers, lowest degree first; layers that are
// identically zero are still present (dense in degree) up to degree().
template <class K>
std::vector<HomPoly<K>> hom_components(const BiPoly<K>& p) {
    int d = p.degree();
    std::vector<HomPoly<K>> layers;
    if (d < 0) return layers;
    layers.reserve(d + 1);
    for (int n = 0; n <= d; ++n) layers.emplace_back(n);
    for (auto& [k, c] : p.terms) layers[k.first + k.second].coeff(k.first) = c;
    return layers;
}

// Homogeneous part of a fixed degree (zero polynomial of that degree if absent).
template <class K>
HomPoly<K> hom_part(const BiPoly<K>& p, int n) {
    HomPoly<K> h(n);
    for (auto& [k, c] : p.terms)
        if (k.first + k.second == n) h.coeff(k.first) = c;
    return h;
}

template <class K>
HomPoly<K> top_part(const BiPoly<K>& p) {
    int d = p.degree();
    if (d < 0) throw DegenerateInput("top part of the zero polynomial");
    return hom_part(p, d);
}

// ---------------------------------------------------------------------------
// compose_pair: substitute a pair of polynomials into a polynomial map pair.
// compose_pair(f, g) = f o g, components (f1(g1,g2), f2(g1,g2)).
// ---------------------------------------------------------------------------

template <class K>
BiPoly<K> substitute(const BiPoly<K>& f, const BiPoly<K>& g1, const BiPoly<K>& g2) {
    int dz = 0, dw = 0;
    for (auto& [k, c] : f.terms) {
        dz = std::max(dz, k.first);
        dw = std::max(dw, k.second);
    }
    std::vector<BiPoly<K>> p1(dz + 1), p2(dw + 1);
    p1[0] = BiPoly<K>::constant(scalar_traits<K>::from_int(1));
    for (int i = 1; i <= dz; ++i) p1[i] = p1[i - 1] * g1;
    p2[0] = BiPoly<K>::constant(scalar_traits<K>::from_int(1));
    for (int j = 1; j <= dw; ++j) p2[j] = p2[j - 1] * g2;
    BiPoly<K> acc;
    for (auto& [k, c] : f.terms) acc += c * (p1[k.first] * p2[k.second]);
    acc.prune();
    return acc;
}

template <class K>
struct PolyPair {
    BiPoly<K> f1, f2;

    int degree() const { return std::max(f1.degree(), f2.degree()); }
    bool operator==(const PolyPair& o) const { return f1 == o.f1 && f2 == o.f2; }
};

template <class K>
PolyPair<K> compose_pair(const PolyPair<K>& f, const PolyPair<K>& g) {
    if (f.f1.is_zero() && f.f2.is_zero())
        throw DegenerateInput("composing the zero map");
    return {substitute(f.f1, g.f1, g.f2), substitute(f.f2, g.f1, g.f2)};
}

// Floating lifts, used by the numeric orbit and sampling machinery on either
// backend.
template <class K>
BiPoly<Cx> bipoly_to_cx(const BiPoly<K>& p) {
    BiPoly<Cx> r;
    for (auto& [k, c] : p.terms) r.terms[k] = to_cx(c);
    return r;
}

template <class K>
HomPoly<Cx> hom_to_cx(const HomPoly<K>& h) {
    HomPoly<Cx> r(h.deg);
    for (int k = 0; k <= h.deg; ++k) r.coeff(k) = to_cx(h.coeff(k));
    return r;
}

template <class K>
PolyPair<Cx> pair_to_cx(const PolyPair<K>& f) {
    return {bipoly_to_cx(f.f1), bipoly_to_cx(f.f2)};
}

// Exact division helper used when peeling known factors off a polynomial:
// returns q with p = q * d, throws if the division leaves a remainder beyond
// the backend's resolution.
template <class K>
HomPoly<K> hom_divide(const HomPoly<K>& p, const HomPoly<K>& d) {
    int dd = d.top_z_exp();
    int dl = d.low_z_exp();
    if (dd < 0) throw DegenerateInput("division by zero polynomial");
    if (p.is_zero()) {
        if (p.deg < d.deg) throw DegenerateInput("degree underflow in division");
        return HomPoly<K>(p.deg - d.deg);
    }
    if (p.deg < d.deg) throw DegenerateInput("degree underflow in division");
    (void)dl;
    // Long division in the z-leading sense.
    HomPoly<K> rem = p;
    HomPoly<K> quot(p.deg - d.deg);
    double scale = std::max(p.max_abs(), 1.0);
    for (int k = p.deg - d.deg; k >= 0; --k) {
        int lead = k + dd; // z-exponent this quotient slot must clear
        K coef = rem.c[lead] / d.c[dd];
        quot.c[k] = coef;
        if (scalar_traits<K>::is_zero(coef, scale)) continue;
        for (int j = 0; j <= d.deg; ++j) rem.c[k + j] -= coef * d.c[j];
    }
    for (auto& x : rem.c)
        if (!scalar_traits<K>::is_zero(x, scale * 1e2))
            throw DegenerateInput("inexact homogeneous division");
    return quot;
}

} // namespace infdyn
