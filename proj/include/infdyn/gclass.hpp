#pragma once

// Normal form for polynomial maps of C^2 whose top-degree parts share a
// product of linear factors:
//
//     f_i = (prod_j (a_j z - b_j w)^{alpha_j}) * P_i + Q_i,   i = 1, 2
//
// with P_1, P_2 homogeneous of degree dprime >= 1 and coprime, and
// deg Q_i < D = d + dprime, d = sum alpha_j. Each root direction
// [b_j : a_j] is a point of indeterminacy of the extension to the
// projective plane; [P_1 : P_2] is the action induced on the line at
// infinity.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "infdyn/bipoly.hpp"
#include "infdyn/errors.hpp"
#include "infdyn/factor.hpp"
#include "infdyn/projective.hpp"
#include "infdyn/scalars.hpp"

namespace infdyn {

inline constexpr double eps_recon = 1e-8; // relative reassembly tolerance

// ---------------------------------------------------------------------------
// Homogeneous helpers
// ---------------------------------------------------------------------------

template <class K>
HomPoly<K> hom_pow(const HomPoly<K>& h, int e) {
    HomPoly<K> r(0);
    r.coeff(0) = scalar_traits<K>::from_int(1);
    for (int k = 0; k < e; ++k) r = r * h;
    return r;
}

// h(A, B) for homogeneous h of degree n and A, B homogeneous of equal degree.
template <class K>
HomPoly<K> hom_substitute(const HomPoly<K>& h, const HomPoly<K>& A, const HomPoly<K>& B) {
    if (A.deg != B.deg) throw DegenerateInput("substitution arguments of unequal degree");
    std::vector<HomPoly<K>> pa(h.deg + 1, HomPoly<K>(0)), pb(h.deg + 1, HomPoly<K>(0));
    pa[0].coeff(0) = scalar_traits<K>::from_int(1);
    pb[0].coeff(0) = scalar_traits<K>::from_int(1);
    for (int k = 1; k <= h.deg; ++k) {
        pa[k] = pa[k - 1] * A;
        pb[k] = pb[k - 1] * B;
    }
    HomPoly<K> acc(h.deg * A.deg);
    for (int k = 0; k <= h.deg; ++k) {
        if (scalar_traits<K>::is_zero(h.coeff(k))) continue;
        acc = acc + (h.coeff(k) * (pa[k] * pb[h.deg - k]));
    }
    return acc;
}

template <class K>
HomPoly<K> operator+(const HomPoly<K>& a, const HomPoly<K>& b) {
    if (a.deg != b.deg) throw DegenerateInput("adding homogeneous parts of unequal degree");
    HomPoly<K> r(a.deg);
    for (int k = 0; k <= a.deg; ++k) r.coeff(k) = a.coeff(k) + b.coeff(k);
    return r;
}

// ---------------------------------------------------------------------------
// GMap
// ---------------------------------------------------------------------------

template <class K>
struct GMap {
    std::vector<LinearFactor<K>> factors; // canonical, sorted, alpha_j >= 1
    HomPoly<K> P1, P2;                    // degree dprime, coprime
    BiPoly<K> Q1, Q2;                     // degree < D
    int d = 0;
    int dprime = 0;
    int D = 0;

    // Product of the linear factors (degree d, canonical constants folded
    // into P_i so that ginf * P_i + Q_i reproduces the input exactly).
    HomPoly<K> ginf() const {
        HomPoly<K> g(0);
        g.coeff(0) = scalar_traits<K>::from_int(1);
        for (auto& f : factors) {
            HomPoly<K> l = f.to_hompoly();
            for (int k = 0; k < f.alpha; ++k) g = g * l;
        }
        return g;
    }

    PolyPair<K> to_pair() const {
        HomPoly<K> g = ginf();
        BiPoly<K> t1 = (g * P1).to_bipoly() + Q1;
        BiPoly<K> t2 = (g * P2).to_bipoly() + Q2;
        return {t1, t2};
    }

    std::pair<K, K> eval(const K& z, const K& w) const {
        K g = scalar_traits<K>::from_int(1);
        for (auto& f : factors) g = g * detail_factor::k_pow(f.eval(z, w), f.alpha);
        return {g * P1.eval(z, w) + Q1.eval(z, w), g * P2.eval(z, w) + Q2.eval(z, w)};
    }

    // Indeterminacy points [b_j : a_j] with their multiplicities alpha_j,
    // in the stored factor order.
    std::vector<std::pair<ProjPt<K>, int>> indeterminacy_points() const {
        std::vector<std::pair<ProjPt<K>, int>> out;
        for (auto& f : factors)
            out.push_back({ProjPt<K>{f.b, f.a}.canonical(), f.alpha});
        return out;
    }

    // Action on the line at infinity.
    ProjPt<K> apply_infinity(const ProjPt<K>& p) const {
        ProjPt<K> q{P1.eval(p.x, p.y), P2.eval(p.x, p.y)};
        if (!q.is_valid())
            throw IndeterminateEvaluation("restricted map evaluated at a common zero of its components");
        return q.canonical();
    }
};

// ---------------------------------------------------------------------------
// Normal-form extraction
// ---------------------------------------------------------------------------

namespace detail_gclass {

// Build a GMap from an exact reassembly recipe: Q_i is defined as the
// difference f_i - ginf * P_i, so to_pair() reproduces f bit-for-bit over the
// exact backend. Float noise at total degree >= D is pruned; anything large
// there means the factor extraction failed.
template <class K>
GMap<K> assemble(const PolyPair<K>& f, std::vector<LinearFactor<K>> factors,
                 HomPoly<K> P1, HomPoly<K> P2, double eps_cluster) {
    GMap<K> m;
    m.factors = std::move(factors);
    m.P1 = std::move(P1);
    m.P2 = std::move(P2);
    m.d = 0;
    for (auto& fa : m.factors) m.d += fa.alpha;
    m.dprime = m.P1.deg;
    m.D = m.d + m.dprime;
    if (m.dprime < 1) throw ConstantAtInfinity("shared factor exhausts the whole top part");

    HomPoly<K> g = m.ginf();
    BiPoly<K> top1 = (g * m.P1).to_bipoly();
    BiPoly<K> top2 = (g * m.P2).to_bipoly();
    m.Q1 = f.f1 - top1;
    m.Q2 = f.f2 - top2;

    double scale = std::max({f.f1.max_abs(), f.f2.max_abs(), top1.max_abs(), top2.max_abs(), 1e-300});
    for (BiPoly<K>* q : {&m.Q1, &m.Q2}) {
        q->prune();
        for (auto it = q->terms.begin(); it != q->terms.end();) {
            if (it->first.first + it->first.second >= m.D) {
                if (std::sqrt(norm2_d(it->second)) > eps_recon * scale)
                    throw IllConditioned("top-degree part does not cancel after factor extraction");
                it = q->terms.erase(it);
            } else {
                ++it;
            }
        }
    }

    // The remaining top parts must be coprime.
    HomPoly<K> check = hom_gcd(m.P1, m.P2, eps_cluster);
    if (check.deg != 0)
        throw IllConditioned("components still share a factor after extraction");
    return m;
}

} // namespace detail_gclass

// Put a polynomial pair into the normal form. Throws NoIndeterminacy if the
// top parts are coprime and ConstantAtInfinity if they share their entire
// degree (the induced map at infinity would be constant).
template <class K>
GMap<K> from_polynomials(const PolyPair<K>& f, double eps_cluster = default_eps_cluster) {
    int D = f.degree();
    if (D <= 0) throw DegenerateInput("map of degree < 1 has no dynamics at infinity");
    HomPoly<K> h1 = hom_part(f.f1, D);
    HomPoly<K> h2 = hom_part(f.f2, D);
    HomPoly<K> g = hom_gcd(h1, h2, eps_cluster);
    if (g.deg == 0) throw NoIndeterminacy("top-degree parts are coprime");
    if (g.deg == D) throw ConstantAtInfinity("one component dominates: induced map at infinity is constant");

    auto fac = hom_factor_linear(g, eps_cluster);
    GMap<K> probe;
    probe.factors = fac.factors;
    HomPoly<K> gprod = probe.ginf();
    HomPoly<K> P1 = hom_divide(h1, gprod);
    HomPoly<K> P2 = hom_divide(h2, gprod);
    return detail_gclass::assemble(f, fac.factors, P1, P2, eps_cluster);
}

// ---------------------------------------------------------------------------
// Attraction criterion
// ---------------------------------------------------------------------------

enum class CriterionStatus { Satisfied, SmallDegreeCase, FailedDegree, FailedDivisibility };

inline const char* criterion_name(CriterionStatus s) {
    switch (s) {
        case CriterionStatus::Satisfied: return "Satisfied";
        case CriterionStatus::SmallDegreeCase: return "SmallDegreeCase";
        case CriterionStatus::FailedDegree: return "FailedDegree";
        default: return "FailedDivisibility";
    }
}

template <class K>
struct CriterionResult {
    CriterionStatus status = CriterionStatus::FailedDegree;
    BiPoly<K> phi;          // f1 P2 - f2 P1, computed cancellation-free
    int deg_phi = -1;
    int required_degree = 0; // deg phi >= 2 + dprime is needed
    int failing_factor = -1; // index into factors when divisibility fails
};

// Decide whether the line at infinity attracts a full neighborhood. The
// test polynomial is phi = f1 P2 - f2 P1; the top-degree terms cancel
// algebraically, so phi is computed as Q1 P2 - Q2 P1, which is the same
// polynomial without the float cancellation.
template <class K>
CriterionResult<K> attraction_criterion(const GMap<K>& m) {
    CriterionResult<K> r;
    BiPoly<K> p1 = m.P1.to_bipoly(), p2 = m.P2.to_bipoly();
    r.phi = m.Q1 * p2 - m.Q2 * p1;
    r.phi.prune();
    r.deg_phi = r.phi.degree();
    r.required_degree = 2 + m.dprime;

    if (r.deg_phi >= r.required_degree) {
        HomPoly<K> top = top_part(r.phi);
        double scale = std::max(top.max_abs(), 1e-300);
        for (size_t j = 0; j < m.factors.size(); ++j) {
            // (a z - b w) divides a homogeneous polynomial iff it vanishes
            // at the root direction [b : a].
            K v = top.eval(m.factors[j].b, m.factors[j].a);
            bool vanishes;
            if constexpr (scalar_traits<K>::is_exact)
                vanishes = scalar_traits<K>::is_zero(v);
            else
                vanishes = std::sqrt(norm2_d(v)) <= 1e-9 * scale;
            if (vanishes) {
                r.status = CriterionStatus::FailedDivisibility;
                r.failing_factor = static_cast<int>(j);
                return r;
            }
        }
        r.status = CriterionStatus::Satisfied;
        return r;
    }

    r.status = (m.D == 2) ? CriterionStatus::SmallDegreeCase : CriterionStatus::FailedDegree;
    return r;
}

// ---------------------------------------------------------------------------
// Composition inside the class
// ---------------------------------------------------------------------------

namespace detail_gclass {

template <class K>
void merge_factor(std::vector<LinearFactor<K>>& acc, LinearFactor<K> nf, double eps_cluster) {
    for (auto& f : acc) {
        bool same;
        if constexpr (scalar_traits<K>::is_exact)
            same = (f.a * nf.b - nf.a * f.b).is_zero();
        else
            same = factor_chordal(f, nf) <= eps_cluster;
        if (same) {
            f.alpha += nf.alpha;
            return;
        }
    }
    acc.push_back(nf);
}

} // namespace detail_gclass

// Field-by-field conversion to the floating backend, preserving the
// factorization (no root re-clustering involved).
template <class K>
GMap<Cx> map_to_cx(const GMap<K>& m) {
    GMap<Cx> out;
    for (auto& f : m.factors) out.factors.push_back({to_cx(f.a), to_cx(f.b), f.alpha});
    out.P1 = hom_to_cx(m.P1);
    out.P2 = hom_to_cx(m.P2);
    out.Q1 = bipoly_to_cx(m.Q1);
    out.Q2 = bipoly_to_cx(m.Q2);
    out.d = m.d;
    out.dprime = m.dprime;
    out.D = m.D;
    return out;
}

// Composition f o g of two maps in the class. The result stays in the class:
// its linear factors are those of g (multiplicity scaled by deg f) together
// with the factors of a_j P1_g - b_j P2_g for each factor of f, and its
// induced map at infinity is the composition of the two induced maps.
template <class K>
GMap<K> compose_g(const GMap<K>& f, const GMap<K>& g,
                  double eps_cluster = default_eps_cluster) {
    std::vector<LinearFactor<K>> factors;
    for (auto& fg : g.factors) {
        LinearFactor<K> nf = fg;
        nf.alpha = fg.alpha * f.D;
        detail_gclass::merge_factor(factors, nf, eps_cluster);
    }

    K C = scalar_traits<K>::from_int(1);
    for (auto& ff : f.factors) {
        // a z - b w pulled back through g's top part.
        HomPoly<K> M = ff.a * g.P1 + (K{} - ff.b) * g.P2;
        auto fac = hom_factor_linear(M, eps_cluster);
        C = C * detail_factor::k_pow(fac.c0, ff.alpha);
        for (auto& mf : fac.factors) {
            LinearFactor<K> nf = mf;
            nf.alpha = mf.alpha * ff.alpha;
            detail_gclass::merge_factor(factors, nf, eps_cluster);
        }
    }
    detail_factor::sort_factors(factors);

    HomPoly<K> NP1 = C * hom_substitute(f.P1, g.P1, g.P2);
    HomPoly<K> NP2 = C * hom_substitute(f.P2, g.P1, g.P2);

    PolyPair<K> h = compose_pair(f.to_pair(), g.to_pair());
    return detail_gclass::assemble(h, std::move(factors), std::move(NP1), std::move(NP2),
                                   eps_cluster);
}

// ---------------------------------------------------------------------------
// Chart evaluation near the line at infinity (float precision)
// ---------------------------------------------------------------------------

// In the (u, v) chart (u = z/w, v = 1/w) the map becomes
//   u' = F1(u, v) / F2(u, v),   v' = v^D / F2(u, v)
// with F_i(u, v) = v^D f_i(u/v, 1/v) polynomial. In the (u', v') chart the
// same holds with F_i(u', v') = v'^D f_i(1/v', u'/v') and the roles of the
// output charts swapped.
struct ChartMap {
    Chart chart = Chart::u_v;
    BiPoly<Cx> F1, F2;
    int D = 0;
};

template <class K>
ChartMap make_chart_map(const GMap<K>& m, Chart chart) {
    if (chart == Chart::affine) throw DegenerateInput("chart map is for charts at infinity");
    PolyPair<K> f = m.to_pair();
    ChartMap cm;
    cm.chart = chart;
    cm.D = m.D;
    auto lift = [&](const BiPoly<K>& p) {
        BiPoly<Cx> out;
        for (auto& [k, c] : p.terms) {
            int i = k.first, j = k.second;
            int fiber_pow = m.D - i - j;
            if (chart == Chart::u_v)
                out.set(i, fiber_pow, out.get(i, fiber_pow) + to_cx(c));
            else
                out.set(j, fiber_pow, out.get(j, fiber_pow) + to_cx(c));
        }
        return out;
    };
    cm.F1 = lift(f.f1);
    cm.F2 = lift(f.f2);
    return cm;
}

// Apply the map to a chart point; the output chart (u_v or up_vp) is chosen
// so the base coordinate has modulus <= 1.
inline ChartPoint eval_chart(const ChartMap& cm, const ChartPoint& p) {
    if (p.chart != cm.chart)
        throw DegenerateInput("chart point does not match the chart map");
    Cx f1 = cm.F1.eval(p.base, p.fiber);
    Cx f2 = cm.F2.eval(p.base, p.fiber);
    Cx vD = std::pow(p.fiber, cm.D);
    // The image is [z' : w' : 1] = [F1 : F2 : fiber^D] projectively, so the
    // u_v image is (F1/F2, vD/F2) and the up_vp image is (F2/F1, vD/F1),
    // whichever keeps the base coordinate inside the unit disc.
    double scale = std::max({std::abs(f1), std::abs(f2), 1e-300});
    double coeff_scale = std::max(cm.F1.max_abs(), cm.F2.max_abs());
    double arg_scale = std::pow(std::max({std::abs(p.base), std::abs(p.fiber), 1.0}), cm.D);
    if (scale <= 1e-14 * coeff_scale * arg_scale)
        throw IndeterminateEvaluation("image direction is numerically indeterminate");
    if (std::abs(f2) >= std::abs(f1))
        return {Chart::u_v, f1 / f2, vD / f2};
    return {Chart::up_vp, f2 / f1, vD / f1};
}

} // namespace infdyn
