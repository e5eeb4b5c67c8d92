#pragma once

// Dynamics of the induced map on the line at infinity: preimages, local
// degrees, the backward tree over the indeterminacy points, orbit
// classification (transient / hits an indeterminacy point / periodic), and a
// numeric hyperbolicity probe at fixed points.

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "infdyn/errors.hpp"
#include "infdyn/factor.hpp"
#include "infdyn/gclass.hpp"
#include "infdyn/projective.hpp"

namespace infdyn {

namespace detail_sphere {

// Partial derivatives of a homogeneous polynomial (any scalar backend).
template <class K>
HomPoly<K> hom_dz_k(const HomPoly<K>& p) {
    HomPoly<K> q(p.deg - 1);
    for (int k = 0; k < p.deg; ++k)
        q.coeff(k) = scalar_traits<K>::from_int(k + 1) * p.coeff(k + 1);
    return q;
}

template <class K>
HomPoly<K> hom_dw_k(const HomPoly<K>& p) {
    HomPoly<K> q(p.deg - 1);
    for (int k = 0; k < p.deg; ++k)
        q.coeff(k) = scalar_traits<K>::from_int(p.deg - k) * p.coeff(k);
    return q;
}

} // namespace detail_sphere

// Degree-n self-map of the projective line, [x:y] -> [N(x,y) : M(x,y)].
template <class K>
struct RatMap1D {
    HomPoly<K> N, M;

    int deg() const { return N.deg; }

    ProjPt<K> apply(const ProjPt<K>& p) const {
        ProjPt<K> q{N.eval(p.x, p.y), M.eval(p.x, p.y)};
        if (!q.is_valid())
            throw IndeterminateEvaluation("map on the line evaluated at a common zero");
        return q.canonical();
    }

    // Homogeneous polynomial whose roots are the preimages of q:
    // q_y * N - q_x * M.
    HomPoly<K> fiber_poly(const ProjPt<K>& q) const {
        HomPoly<K> h = q.y * N + (-q.x) * M;
        if (h.is_zero())
            throw DegenerateInput("fiber polynomial vanished identically; components are not coprime");
        return h;
    }

    std::vector<std::pair<ProjPt<K>, int>> preimages(const ProjPt<K>& q,
                                                     double eps_cluster = default_eps_cluster) const {
        auto fac = hom_factor_linear(fiber_poly(q), eps_cluster);
        std::vector<std::pair<ProjPt<K>, int>> out;
        for (auto& f : fac.factors)
            out.push_back({ProjPt<K>{f.b, f.a}.canonical(), f.alpha});
        return out;
    }

    // Local degree at p: multiplicity of p in the fiber over its own image.
    int local_degree(const ProjPt<K>& p, double eps_cluster = default_eps_cluster) const {
        if constexpr (scalar_traits<K>::is_exact) {
            // The local degree exceeds 1 only at a zero of the Wronskian.
            // Deciding that exactly first keeps fibers of points of large
            // height (whose roots cannot be recovered from float
            // candidates) out of the factoring path entirely.
            if (deg() >= 1) {
                HomPoly<K> w = detail_sphere::hom_dz_k(N) * detail_sphere::hom_dw_k(M) +
                               (K{} - scalar_traits<K>::from_int(1)) *
                                   (detail_sphere::hom_dw_k(N) * detail_sphere::hom_dz_k(M));
                if (w.is_zero())
                    throw DegenerateInput("vanishing Wronskian: the components share a factor");
                if (!scalar_traits<K>::is_zero(w.eval(p.x, p.y))) return 1;
            } else {
                return 1;
            }
        }
        ProjPt<K> q = apply(p);
        auto pre = preimages(q, eps_cluster);
        for (auto& [pt, m] : pre)
            if (same_point(pt, p)) return m;
        // p must appear in its own fiber; only float clustering can lose it.
        throw IllConditioned("point not found in its own fiber; clustering lost a preimage");
    }
};

template <class K>
RatMap1D<K> restrict_infinity(const GMap<K>& m) {
    return {m.P1, m.P2};
}

// Float copy for the numeric probes (fixed points, expansion data).
template <class K>
RatMap1D<Cx> ratmap_to_cx(const RatMap1D<K>& f) {
    RatMap1D<Cx> g{HomPoly<Cx>(f.N.deg), HomPoly<Cx>(f.M.deg)};
    for (int k = 0; k <= f.N.deg; ++k) g.N.coeff(k) = to_cx(f.N.coeff(k));
    for (int k = 0; k <= f.M.deg; ++k) g.M.coeff(k) = to_cx(f.M.coeff(k));
    return g;
}

// ---------------------------------------------------------------------------
// Orbit classification for the indeterminacy points
// ---------------------------------------------------------------------------

enum class OrbitClass { Transient, HitsIndeterminacy, Periodic };

inline const char* orbit_class_name(OrbitClass c) {
    switch (c) {
        case OrbitClass::Transient: return "Transient";
        case OrbitClass::HitsIndeterminacy: return "HitsIndeterminacy";
        default: return "Periodic";
    }
}

template <class K>
struct InfOrbitInfo {
    OrbitClass cls = OrbitClass::Transient;
    std::vector<ProjPt<K>> orbit; // orbit[k] = f^k(start), up to the horizon or first revisit
    std::vector<std::pair<int, int>> indet_hits; // (step >= 1, index of the point hit)
    int cycle_start = -1; // first index of the eventual cycle, -1 if none found
    int cycle_len = 0;
};

// Forward orbit of each indeterminacy point under the restricted map, with
// revisit detection. `Periodic` reports an orbit that returns to its own
// starting point — the degenerate case for the boundary theory. A revisit
// elsewhere (the orbit entered a distant cycle, or merely converged to an
// attracting fixed point at floating tolerance) keeps the cycle data but is
// not degenerate; hitting another indeterminacy point is reported separately
// (it changes the weight recursion but is handled by geometric tails).
template <class K>
std::vector<InfOrbitInfo<K>> classify_indeterminacy_orbits(const GMap<K>& m, int horizon = 64) {
    RatMap1D<K> f = restrict_infinity(m);
    auto ipts = m.indeterminacy_points();
    std::vector<InfOrbitInfo<K>> out;
    for (auto& [start, alpha] : ipts) {
        InfOrbitInfo<K> info;
        ProjPt<K> p = start;
        for (int k = 0; k <= horizon; ++k) {
            // Revisit?
            for (size_t m2 = 0; m2 < info.orbit.size(); ++m2) {
                if (same_point(info.orbit[m2], p)) {
                    info.cycle_start = static_cast<int>(m2);
                    info.cycle_len = k - static_cast<int>(m2);
                    if (m2 == 0) info.cls = OrbitClass::Periodic;
                    goto done;
                }
            }
            info.orbit.push_back(p);
            if (k >= 1) {
                for (size_t j = 0; j < ipts.size(); ++j)
                    if (same_point(p, ipts[j].first))
                        info.indet_hits.push_back({k, static_cast<int>(j)});
            }
            p = f.apply(p);
            if (proj_bits(p) > max_exact_walk_bits) goto done; // left the exact horizon
        }
    done:
        if (info.cls != OrbitClass::Periodic && !info.indet_hits.empty())
            info.cls = OrbitClass::HitsIndeterminacy;
        out.push_back(std::move(info));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backward tree over the indeterminacy points
// ---------------------------------------------------------------------------

template <class K>
struct ENode {
    ProjPt<K> point;
    int depth = 0;          // least n with f^n(point) an indeterminacy point
    int parent = -1;        // node index of f(point), -1 when the image is outside the tree
    int local_deg = 1;      // local degree of the restricted map at this point
    int indet_index = -1;   // >= 0 when this point is an indeterminacy point
    bool collision = false; // an indeterminacy point reached again as a preimage
    std::vector<int> children;
};

template <class K>
struct ETree {
    std::vector<ENode<K>> nodes;
    int max_depth = 0;
    bool truncated = false; // a depth or node budget stopped the expansion
};

// Breadth-first preimage expansion starting from the indeterminacy points.
// Every point is expanded once; a preimage that is already a node (possible
// only for indeterminacy points) is recorded as a collision edge.
template <class K>
ETree<K> build_etree(const GMap<K>& m, int depth_limit, int node_budget = 4096,
                     double eps_cluster = default_eps_cluster) {
    RatMap1D<K> f = restrict_infinity(m);
    ETree<K> tree;
    auto ipts = m.indeterminacy_points();
    for (size_t j = 0; j < ipts.size(); ++j) {
        ENode<K> n;
        n.point = ipts[j].first;
        n.depth = 0;
        n.indet_index = static_cast<int>(j);
        n.local_deg = f.local_degree(n.point);
        tree.nodes.push_back(std::move(n));
    }

    std::deque<int> queue;
    for (size_t i = 0; i < tree.nodes.size(); ++i) queue.push_back(static_cast<int>(i));

    while (!queue.empty()) {
        int qi = queue.front();
        queue.pop_front();
        if (tree.nodes[qi].depth >= depth_limit) {
            tree.truncated = true;
            continue;
        }
        auto pre = f.preimages(tree.nodes[qi].point, eps_cluster);
        for (auto& [p, mult] : pre) {
            int existing = -1;
            for (size_t i = 0; i < tree.nodes.size(); ++i)
                if (same_point(tree.nodes[i].point, p)) {
                    existing = static_cast<int>(i);
                    break;
                }
            if (existing >= 0) {
                // Only an indeterminacy point can already be present: any
                // other point has a unique image, hence a unique way to be
                // reached. Record the edge; do not expand twice.
                tree.nodes[existing].collision = true;
                tree.nodes[existing].parent = qi;
                tree.nodes[qi].children.push_back(existing);
                continue;
            }
            if (static_cast<int>(tree.nodes.size()) >= node_budget) {
                tree.truncated = true;
                continue;
            }
            ENode<K> n;
            n.point = p;
            n.depth = tree.nodes[qi].depth + 1;
            n.parent = qi;
            n.local_deg = mult;
            for (size_t j = 0; j < ipts.size(); ++j)
                if (same_point(p, ipts[j].first)) n.indet_index = static_cast<int>(j);
            tree.nodes.push_back(std::move(n));
            int ni = static_cast<int>(tree.nodes.size()) - 1;
            tree.nodes[qi].children.push_back(ni);
            tree.max_depth = std::max(tree.max_depth, tree.nodes[ni].depth);
            queue.push_back(ni);
        }
    }
    return tree;
}

// ---------------------------------------------------------------------------
// Hyperbolicity probe (numeric, heuristic)
// ---------------------------------------------------------------------------

struct FixedPointInfo {
    Cx location;        // affine coordinate, or infinity flag below
    bool at_infinity = false;
    double multiplier = 0; // |derivative| at the fixed point
    int mult = 1;          // multiplicity as a root of the fixed-point equation
};

// True when the map fixes every point (its fixed-point polynomial vanishes).
template <class K>
bool is_identity_map(const RatMap1D<K>& f) {
    HomPoly<K> x_pol(1), y_pol(1);
    x_pol.coeff(1) = scalar_traits<K>::from_int(1);
    y_pol.coeff(0) = scalar_traits<K>::from_int(1);
    HomPoly<K> fp = x_pol * f.M + (-scalar_traits<K>::from_int(1)) * (y_pol * f.N);
    return fp.is_zero();
}

// Fixed points of the restricted map with |derivative| at each.
template <class K>
std::vector<FixedPointInfo> fixed_points(const RatMap1D<K>& f,
                                         double eps_cluster = default_eps_cluster) {
    // Fixed points: roots of x * M - y * N (homogeneous, degree n+1).
    HomPoly<K> x_pol(1), y_pol(1);
    x_pol.coeff(1) = scalar_traits<K>::from_int(1);
    y_pol.coeff(0) = scalar_traits<K>::from_int(1);
    HomPoly<K> fp = x_pol * f.M + (-scalar_traits<K>::from_int(1)) * (y_pol * f.N);
    if (fp.is_zero()) throw DegenerateInput("identity map has no isolated fixed points");
    auto fac = hom_factor_linear(fp, eps_cluster);

    // Dehomogenized components for derivative evaluation.
    std::vector<Cx> n_aff(f.N.deg + 1), m_aff(f.M.deg + 1);
    for (int k = 0; k <= f.N.deg; ++k) n_aff[k] = to_cx(f.N.coeff(k));
    for (int k = 0; k <= f.M.deg; ++k) m_aff[k] = to_cx(f.M.coeff(k));
    auto evald = [](const std::vector<Cx>& c, Cx u, Cx& v, Cx& dv) {
        v = c.back();
        dv = 0;
        for (int k = static_cast<int>(c.size()) - 2; k >= 0; --k) {
            dv = dv * u + v;
            v = v * u + c[k];
        }
    };

    std::vector<FixedPointInfo> out;
    for (auto& fa : fac.factors) {
        FixedPointInfo info;
        info.mult = fa.alpha;
        if (fa.is_infinite()) {
            info.at_infinity = true;
            // Conjugate by inversion: s -> M*(s)/N*(s) with reversed
            // coefficients; the multiplier is the derivative at s = 0.
            std::vector<Cx> n_rev(n_aff.rbegin(), n_aff.rend());
            std::vector<Cx> m_rev(m_aff.rbegin(), m_aff.rend());
            Cx nv, ndv, mv, mdv;
            evald(m_rev, Cx(0), mv, mdv);
            evald(n_rev, Cx(0), nv, ndv);
            if (std::abs(nv) < 1e-300)
                info.multiplier = std::numeric_limits<double>::infinity();
            else
                info.multiplier = std::abs((mdv * nv - mv * ndv) / (nv * nv));
        } else {
            Cx u = fa.root_cx();
            info.location = u;
            Cx nv, ndv, mv, mdv;
            evald(n_aff, u, nv, ndv);
            evald(m_aff, u, mv, mdv);
            if (std::abs(mv) < 1e-300) {
                // The affine denominator vanishes at this fixed point;
                // compute the (conjugation-invariant) multiplier in the
                // inverted chart s = 1/u instead.
                std::vector<Cx> n_rev(n_aff.rbegin(), n_aff.rend());
                std::vector<Cx> m_rev(m_aff.rbegin(), m_aff.rend());
                Cx s = 1.0 / u;
                evald(m_rev, s, mv, mdv);
                evald(n_rev, s, nv, ndv);
                if (std::abs(nv) < 1e-300)
                    info.multiplier = std::numeric_limits<double>::infinity();
                else
                    info.multiplier = std::abs((mdv * nv - mv * ndv) / (nv * nv));
            } else {
                info.multiplier = std::abs((ndv * mv - nv * mdv) / (mv * mv));
            }
        }
        out.push_back(info);
    }
    return out;
}

enum class CriticalOrbitStatus { Converged, Inconclusive };

struct CriticalOrbitInfo {
    ProjPt<Cx> point; // the critical point
    int mult = 1;     // multiplicity as a zero of the Wronskian
    CriticalOrbitStatus status = CriticalOrbitStatus::Inconclusive;
    int period = 0;                // length of the detected attracting cycle
    double multiplier = 0;         // |cycle multiplier|
    std::vector<ProjPt<Cx>> cycle; // one representative per cycle point
};

struct HyperbolicityReport {
    bool moebius = false;      // degree 1: no critical points, classify instead
    std::string moebius_class; // "identity" / "parabolic" / "elliptic" / "loxodromic"
    std::vector<FixedPointInfo> fixed; // fixed-point data (moebius branch)
    std::vector<CriticalOrbitInfo> critical;
    bool looks_hyperbolic = false; // every critical orbit reached an attracting cycle
};

namespace detail_sphere {

inline HomPoly<Cx> hom_dz(const HomPoly<Cx>& p) {
    HomPoly<Cx> q(p.deg - 1);
    for (int k = 0; k < p.deg; ++k) q.coeff(k) = double(k + 1) * p.coeff(k + 1);
    return q;
}

inline HomPoly<Cx> hom_dw(const HomPoly<Cx>& p) {
    HomPoly<Cx> q(p.deg - 1);
    for (int k = 0; k < p.deg; ++k) q.coeff(k) = double(p.deg - k) * p.coeff(k);
    return q;
}

// Scale-invariant derivative norm at p for the degree-n pair F = (N, M):
//   |f'|_sph(p) = ||p||^2 |W(p)| / (n ||F(p)||^2),  W = Nz*Mw - Nw*Mz.
// The product of these along a periodic cycle is the modulus of the cycle
// multiplier (the chart factors telescope), and the expression stays finite
// at every point of the sphere.
inline double spherical_derivative(const HomPoly<Cx>& N, const HomPoly<Cx>& M,
                                   const HomPoly<Cx>& W, const ProjPt<Cx>& p) {
    double np = std::norm(p.x) + std::norm(p.y);
    Cx fn = N.eval(p.x, p.y), fm = M.eval(p.x, p.y);
    double nf = std::norm(fn) + std::norm(fm);
    if (nf == 0) return std::numeric_limits<double>::infinity();
    return np * std::abs(W.eval(p.x, p.y)) / (double(N.deg) * nf);
}

} // namespace detail_sphere

// Heuristic expansion probe for the restricted map: for degree >= 2, iterate
// every critical point and report whether its orbit settles on an attracting
// cycle (modulus of the cycle multiplier < 1); for degree 1 classify the
// Moebius map instead. Purely numeric -- this annotates reports and never
// gates any other computation.
template <class K>
HyperbolicityReport hyperbolicity_probe(const RatMap1D<K>& f, int iters = 256,
                                        double eps_cluster = default_eps_cluster) {
    HyperbolicityReport rep;

    // Float copy of the map.
    RatMap1D<Cx> g{HomPoly<Cx>(f.N.deg), HomPoly<Cx>(f.M.deg)};
    for (int k = 0; k <= f.N.deg; ++k) g.N.coeff(k) = to_cx(f.N.coeff(k));
    for (int k = 0; k <= f.M.deg; ++k) g.M.coeff(k) = to_cx(f.M.coeff(k));
    int n = g.deg();

    if (n == 0) throw DegenerateInput("constant map on the line");
    if (n == 1) {
        // u -> (a u + b) / (c u + d); classify by tr^2 / det.
        rep.moebius = true;
        Cx a = g.N.coeff(1), b = g.N.coeff(0), c = g.M.coeff(1), d = g.M.coeff(0);
        Cx det = a * d - b * c;
        Cx tr = a + d;
        double scale = std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d);
        if (std::abs(det) <= 1e-14 * scale * scale)
            throw DegenerateInput("degree-1 map with vanishing determinant");
        Cx sigma = tr * tr / det;
        if (std::abs(b) <= 1e-12 * scale && std::abs(c) <= 1e-12 * scale &&
            std::abs(a - d) <= 1e-12 * scale) {
            rep.moebius_class = "identity";
        } else if (std::abs(sigma - 4.0) <= 1e-9 * (1.0 + std::abs(sigma))) {
            rep.moebius_class = "parabolic";
        } else if (std::abs(sigma.imag()) <= 1e-9 * (1.0 + std::abs(sigma)) &&
                   sigma.real() >= 0.0 && sigma.real() < 4.0) {
            rep.moebius_class = "elliptic";
        } else {
            rep.moebius_class = "loxodromic";
        }
        if (rep.moebius_class != "identity") rep.fixed = fixed_points(g, eps_cluster);
        rep.looks_hyperbolic = rep.moebius_class == "loxodromic";
        return rep;
    }

    // Critical points: zeros of the homogeneous Wronskian (degree 2n - 2).
    HomPoly<Cx> W = detail_sphere::hom_dz(g.N) * detail_sphere::hom_dw(g.M) +
                    Cx(-1) * (detail_sphere::hom_dw(g.N) * detail_sphere::hom_dz(g.M));
    if (W.is_zero()) throw DegenerateInput("degenerate map: vanishing Wronskian");
    auto crit = hom_factor_linear(W, eps_cluster);

    const double cycle_tol = 1e-7;
    const double contraction_margin = 1e-3;
    rep.looks_hyperbolic = true;
    for (auto& fa : crit.factors) {
        CriticalOrbitInfo info;
        info.point = ProjPt<Cx>{fa.b, fa.a}.canonical();
        info.mult = fa.alpha;
        try {
            ProjPt<Cx> p = info.point;
            for (int k = 0; k < iters; ++k) p = g.apply(p).canonical();
            // Look for a return to the post-burn-in point.
            std::vector<ProjPt<Cx>> tail{p};
            int period = 0;
            int max_period = std::min(iters, 128);
            ProjPt<Cx> q = p;
            for (int k = 1; k <= max_period; ++k) {
                q = g.apply(q).canonical();
                if (chordal(q, p) <= cycle_tol) {
                    period = k;
                    break;
                }
                tail.push_back(q);
            }
            if (period > 0) {
                double mult = 1.0;
                for (int i = 0; i < period; ++i)
                    mult *= detail_sphere::spherical_derivative(g.N, g.M, W, tail[i]);
                info.multiplier = mult;
                info.period = period;
                if (mult < 1.0 - contraction_margin) {
                    info.status = CriticalOrbitStatus::Converged;
                    info.cycle.assign(tail.begin(), tail.begin() + period);
                }
            }
        } catch (const Error&) {
            // Orbit fell onto a numerically indeterminate point: inconclusive.
        }
        if (info.status != CriticalOrbitStatus::Converged) rep.looks_hyperbolic = false;
        rep.critical.push_back(std::move(info));
    }
    return rep;
}

// Per-indeterminacy-point non-periodicity report (hypothesis check).
template <class K>
std::vector<InfOrbitInfo<K>> periodicity_check(const GMap<K>& m, int horizon = 64) {
    return classify_indeterminacy_orbits(m, horizon);
}

} // namespace infdyn
