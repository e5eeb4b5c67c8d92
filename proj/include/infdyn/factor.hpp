#pragma once

// Factorization of homogeneous bivariate polynomials into linear forms
// (a z - b w)^alpha, and gcds of homogeneous polynomials.
//
// Float backend: dehomogenize, take clustered roots, rebuild. Exact backend:
// the same root candidates are snapped to Gaussian rationals and verified by
// exact deflation, so a returned factorization is exact, not approximate.

#include <algorithm>
#include <cmath>
#include <vector>

#include "infdyn/bipoly.hpp"
#include "infdyn/errors.hpp"
#include "infdyn/roots.hpp"
#include "infdyn/scalars.hpp"

namespace infdyn {

// One linear form (a z - b w), vanishing at the projective point [z:w]=[b:a].
template <class K>
struct LinearFactor {
    K a{};
    K b{};
    int alpha = 1;

    // Root direction as an affine slope b/a; factors vanishing at [1:0] map
    // to infinity and are ordered last.
    bool is_infinite() const { return scalar_traits<K>::is_zero(a); }
    Cx root_cx() const { return to_cx(b) / to_cx(a); }

    K eval(const K& z, const K& w) const { return a * z - b * w; }

    HomPoly<K> to_hompoly() const {
        HomPoly<K> l(1);
        l.coeff(0) = -b;
        l.coeff(1) = a;
        return l;
    }

    bool operator==(const LinearFactor& o) const {
        return alpha == o.alpha && a == o.a && b == o.b;
    }
};

// Chordal distance between the root directions of two linear forms.
template <class K>
double factor_chordal(const LinearFactor<K>& f, const LinearFactor<K>& g) {
    Cx a1 = to_cx(f.a), b1 = to_cx(f.b), a2 = to_cx(g.a), b2 = to_cx(g.b);
    double num = std::abs(b1 * a2 - b2 * a1);
    double den = std::sqrt((std::norm(a1) + std::norm(b1)) * (std::norm(a2) + std::norm(b2)));
    return num / std::max(den, 1e-300);
}

template <class K>
struct Factorization {
    K c0{};
    std::vector<LinearFactor<K>> factors;

    int total_multiplicity() const {
        int s = 0;
        for (auto& f : factors) s += f.alpha;
        return s;
    }

    HomPoly<K> product() const {
        HomPoly<K> p(0);
        p.coeff(0) = c0;
        for (auto& f : factors) {
            HomPoly<K> l = f.to_hompoly();
            for (int k = 0; k < f.alpha; ++k) p = p * l;
        }
        return p;
    }
};

namespace detail_factor {

template <class K>
K k_pow(K x, int e) {
    K r = scalar_traits<K>::from_int(1);
    while (e > 0) {
        if (e & 1) r = r * x;
        x = x * x;
        e >>= 1;
    }
    return r;
}

template <class K>
bool norm_ge(const K& x, const K& y) {
    if constexpr (scalar_traits<K>::is_exact)
        return norm2(x) >= norm2(y);
    else
        return std::norm(x) >= std::norm(y);
}

// Scale (a, b) so the larger-modulus entry is exactly 1; fold the scaling
// into the leading constant.
template <class K>
void canonicalize(LinearFactor<K>& f, K& c0) {
    K s = norm_ge(f.a, f.b) ? f.a : f.b;
    if (scalar_traits<K>::is_zero(s)) throw DegenerateInput("zero linear factor");
    f.a = f.a / s;
    f.b = f.b / s;
    c0 = c0 * k_pow(s, f.alpha);
}

template <class K>
void sort_factors(std::vector<LinearFactor<K>>& fs) {
    std::sort(fs.begin(), fs.end(), [](const LinearFactor<K>& x, const LinearFactor<K>& y) {
        bool ix = x.is_infinite(), iy = y.is_infinite();
        if (ix != iy) return iy; // finite roots first
        if (ix) return false;
        Cx rx = x.root_cx(), ry = y.root_cx();
        if (rx.real() != ry.real()) return rx.real() < ry.real();
        return rx.imag() < ry.imag();
    });
}

} // namespace detail_factor

// Complete factorization p = c0 * prod (a_j z - b_j w)^{alpha_j}.
// Over the exact backend every factor is verified by exact deflation;
// irrational root directions raise IllConditioned.
template <class K>
Factorization<K> hom_factor_linear(const HomPoly<K>& p,
                                   double eps_cluster = default_eps_cluster) {
    if (p.is_zero()) throw DegenerateInput("factoring the zero polynomial");
    Factorization<K> res;
    int topz = p.top_z_exp();
    int t_inf = p.deg - topz; // multiplicity of the root direction [1:0]

    if (p.deg == 0) {
        res.c0 = p.coeff(0);
        return res;
    }

    res.c0 = (t_inf % 2) ? K{} - p.coeff(topz) : p.coeff(topz);

    if constexpr (scalar_traits<K>::is_exact) {
        if (topz > 0) {
            std::vector<K> q(p.c.begin(), p.c.begin() + topz + 1);
            for (auto& rc : uni_roots_exact(q, eps_cluster))
                res.factors.push_back({scalar_traits<K>::from_int(1), rc.value, rc.mult});
        }
    } else {
        if (topz > 0) {
            std::vector<Cx> q(p.c.begin(), p.c.begin() + topz + 1);
            for (auto& rc : uni_roots(q, eps_cluster))
                res.factors.push_back({Cx(1), rc.value, rc.mult});
        }
    }
    if (t_inf > 0)
        res.factors.push_back({K{}, scalar_traits<K>::from_int(1), t_inf});

    for (auto& f : res.factors) detail_factor::canonicalize(f, res.c0);
    detail_factor::sort_factors(res.factors);
    return res;
}

// Divide a homogeneous polynomial by its z-leading coefficient.
template <class K>
HomPoly<K> normalize_z_leading(const HomPoly<K>& p) {
    int t = p.top_z_exp();
    if (t < 0) throw DegenerateInput("normalizing the zero polynomial");
    HomPoly<K> r(p.deg);
    K lead = p.coeff(t);
    for (int k = 0; k <= p.deg; ++k) r.coeff(k) = p.coeff(k) / lead;
    return r;
}

namespace detail_factor {

// Exact univariate helpers on ascending coefficient vectors.
inline void trim_exact(std::vector<RatCx>& a) {
    while (!a.empty() && a.back().is_zero()) a.pop_back();
}

inline std::vector<RatCx> poly_mod_exact(std::vector<RatCx> a, const std::vector<RatCx>& b) {
    while (a.size() >= b.size() && !a.empty()) {
        RatCx coef = a.back() / b.back();
        size_t shift = a.size() - b.size();
        for (size_t i = 0; i < b.size(); ++i) a[shift + i] = a[shift + i] - coef * b[i];
        a.pop_back();
        trim_exact(a);
        if (a.empty()) break;
    }
    return a;
}

inline std::vector<RatCx> poly_gcd_exact(std::vector<RatCx> a, std::vector<RatCx> b) {
    trim_exact(a);
    trim_exact(b);
    while (!b.empty()) {
        auto r = poly_mod_exact(a, b);
        a = std::move(b);
        b = std::move(r);
    }
    // Monic-normalize.
    RatCx lead = a.back();
    for (auto& x : a) x = x / lead;
    return a;
}

} // namespace detail_factor

// Greatest common homogeneous divisor, normalized so the z-leading
// coefficient is 1. Float backend matches factor root directions within
// eps_cluster (chordal); exact backend runs a Euclid remainder sequence.
template <class K>
HomPoly<K> hom_gcd(const HomPoly<K>& p, const HomPoly<K>& q,
                   double eps_cluster = default_eps_cluster) {
    bool pz = p.is_zero(), qz = q.is_zero();
    if (pz && qz) throw DegenerateInput("gcd of two zero polynomials");
    if (pz) return normalize_z_leading(q);
    if (qz) return normalize_z_leading(p);

    if constexpr (scalar_traits<K>::is_exact) {
        int sp = p.deg - p.top_z_exp(), sq = q.deg - q.top_z_exp();
        int s = std::min(sp, sq); // shared power of w
        std::vector<RatCx> a(p.c.begin(), p.c.begin() + p.top_z_exp() + 1);
        std::vector<RatCx> b(q.c.begin(), q.c.begin() + q.top_z_exp() + 1);
        auto g = detail_factor::poly_gcd_exact(a, b);
        int dg = static_cast<int>(g.size()) - 1;
        HomPoly<K> out(dg + s);
        for (int k = 0; k <= dg; ++k) out.coeff(k) = g[k];
        return out;
    } else {
        auto fp = hom_factor_linear(p, eps_cluster);
        auto fq = hom_factor_linear(q, eps_cluster);
        HomPoly<K> out(0);
        out.coeff(0) = scalar_traits<K>::from_int(1);
        for (auto& f : fp.factors) {
            int common = 0;
            for (auto& g : fq.factors)
                if (factor_chordal(f, g) <= eps_cluster) common = std::min(f.alpha, g.alpha);
            HomPoly<K> l = f.to_hompoly();
            for (int k = 0; k < common; ++k) out = out * l;
        }
        return normalize_z_leading(out);
    }
}

} // namespace infdyn
