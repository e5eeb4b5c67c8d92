#pragma once

// Bidisk boxes along the exceptional tree and the chart-aware orbit
// machinery: numeric horizontal-like certificates, slice-degree counts,
// iteration in log scale (norms grow doubly exponentially, so log||.|| is the
// primary state), Green-function sequences with an almost-decreasing
// certificate, and the invariant-region check for the cubic fixture
// (z^3 + w^2, z w^2).
//
// Chart conventions follow projective.hpp: in the (u, v) chart the base u
// parametrizes the line at infinity and the fiber v = 1/w vanishes on it; the
// (u', v') chart covers the point [1:0:0] the same way. In either chart
// log ||M|| = (1/2) log(1 + |base|^2) - log |fiber|.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bipoly.hpp"
#include "errors.hpp"
#include "gclass.hpp"
#include "projective.hpp"
#include "rng.hpp"
#include "roots.hpp"
#include "scalars.hpp"
#include "sphere.hpp"

namespace infdyn {

// ---------------------------------------------------------------------------
// Floating lift of a map: affine pair, indeterminacy directions, restriction.
// ---------------------------------------------------------------------------

struct MapLift {
    PolyPair<Cx> f;
    int D = 0;
    int dprime = 0;
    std::vector<std::pair<ProjPt<Cx>, int>> indet;
    HomPoly<Cx> N, M; // restriction to the line
    double coeff_scale = 1;
};

template <class K>
MapLift make_lift(const GMap<K>& m) {
    MapLift l;
    l.f = pair_to_cx(m.to_pair());
    l.D = m.D;
    l.dprime = m.dprime;
    for (auto& [p, a] : m.indeterminacy_points())
        l.indet.push_back({ProjPt<Cx>{to_cx(p.x), to_cx(p.y)}.canonical(), a});
    RatMap1D<K> g = restrict_infinity(m);
    l.N = hom_to_cx(g.N);
    l.M = hom_to_cx(g.M);
    l.coeff_scale = std::max({l.f.f1.max_abs(), l.f.f2.max_abs(), 1.0});
    return l;
}

// Degree-D homogenizations (F1, F2) of the affine pair, evaluated at
// (Z, W, T): F_i = sum of c_jk Z^j W^k T^(D-j-k).
inline std::pair<Cx, Cx> eval_lift(const PolyPair<Cx>& f, int D, const Cx& Z, const Cx& W,
                                   const Cx& T) {
    std::vector<Cx> pz(static_cast<size_t>(D) + 1), pw(pz.size()), pt(pz.size());
    pz[0] = pw[0] = pt[0] = Cx(1);
    for (int k = 1; k <= D; ++k) {
        pz[static_cast<size_t>(k)] = pz[static_cast<size_t>(k - 1)] * Z;
        pw[static_cast<size_t>(k)] = pw[static_cast<size_t>(k - 1)] * W;
        pt[static_cast<size_t>(k)] = pt[static_cast<size_t>(k - 1)] * T;
    }
    Cx h1(0), h2(0);
    for (auto& [k, c] : f.f1.terms)
        h1 += c * pz[static_cast<size_t>(k.first)] * pw[static_cast<size_t>(k.second)] *
              pt[static_cast<size_t>(D - k.first - k.second)];
    for (auto& [k, c] : f.f2.terms)
        h2 += c * pz[static_cast<size_t>(k.first)] * pw[static_cast<size_t>(k.second)] *
              pt[static_cast<size_t>(D - k.first - k.second)];
    return {h1, h2};
}

// Ascending coefficients in the base variable b of F_i on the slice through
// fiber v0: chart u_v evaluates at (b, 1, v0), chart up_vp at (1, b, v0).
inline std::vector<Cx> slice_poly(const BiPoly<Cx>& fi, int D, Chart chart, const Cx& v0) {
    std::vector<Cx> pt(static_cast<size_t>(D) + 1);
    pt[0] = Cx(1);
    for (int k = 1; k <= D; ++k) pt[static_cast<size_t>(k)] = pt[static_cast<size_t>(k - 1)] * v0;
    std::vector<Cx> coeffs(static_cast<size_t>(D) + 1, Cx(0));
    for (auto& [k, c] : fi.terms) {
        int bexp = (chart == Chart::u_v) ? k.first : k.second;
        coeffs[static_cast<size_t>(bexp)] += c * pt[static_cast<size_t>(D - k.first - k.second)];
    }
    while (coeffs.size() > 1 && std::abs(coeffs.back()) == 0.0) coeffs.pop_back();
    return coeffs;
}

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

inline constexpr int box_outside = -1;

struct Box {
    int id = -1;
    int node = -1; // tree node this box belongs to; -1 for auxiliary boxes
    Chart chart = Chart::u_v;
    Cx center{};      // base coordinate of the center in `chart`
    double radius = 0;
    double v_bound = 0;
    ProjPt<Cx> point; // projective center
};

struct BoxSet {
    std::vector<Box> boxes;
    double r = 0;
    double eps = 0;
    int shrink_rounds = 0;
    bool special_layout = false; // nested layout for a totally invariant indeterminacy point
    int skipped_separation = 0;  // nodes whose boundary-separation check was skipped (critical base point)
};

// Chart-tagged point with the fiber carried in log-polar form, the state of
// the deep-orbit iteration. Fibers shrink like exp(-c D^n), far below any
// floating-point range, so only log|fiber| is meaningful late in an orbit.
struct OrbitState {
    Chart chart = Chart::u_v; // u_v or up_vp
    Cx base{};
    double log_fiber = 0;
    double arg_fiber = 0;

    double log_norm() const { return 0.5 * std::log1p(std::norm(base)) - log_fiber; }
    Cx fiber_value() const {
        if (log_fiber < -650) return Cx(0);
        return std::polar(std::exp(log_fiber), arg_fiber);
    }
};

inline OrbitState make_state(Chart chart, Cx base, Cx fiber) {
    OrbitState s;
    s.chart = chart;
    s.base = base;
    double a = std::abs(fiber);
    s.log_fiber = (a > 0) ? std::log(a) : -1e9;
    s.arg_fiber = (a > 0) ? std::arg(fiber) : 0.0;
    return s;
}

inline bool state_in_box(const OrbitState& s, const Box& b, double slack = 1.0) {
    Cx base = s.base;
    double lf = s.log_fiber;
    if (s.chart != b.chart) {
        // u_v <-> up_vp conversion: base' = 1/base, fiber' = fiber/base.
        double ab = std::abs(s.base);
        if (ab < 1e-300) return false;
        base = 1.0 / s.base;
        lf = s.log_fiber - std::log(ab);
    }
    return std::abs(base - b.center) < b.radius * slack &&
           lf < std::log(b.v_bound * slack);
}

inline int locate_box(const BoxSet& bs, const OrbitState& s) {
    for (auto& b : bs.boxes)
        if (state_in_box(s, b)) return b.id;
    return box_outside;
}

namespace detail_orbit {

inline Chart chart_of(const ProjPt<Cx>& p) {
    return (std::abs(p.x) <= std::abs(p.y)) ? Chart::u_v : Chart::up_vp;
}

inline Cx chart_coord(const ProjPt<Cx>& p, Chart c) {
    if (c == Chart::u_v) {
        if (std::abs(p.y) < 1e-300) throw DegenerateInput("point not covered by the (u, v) chart");
        return p.x / p.y;
    }
    if (std::abs(p.x) < 1e-300) throw DegenerateInput("point not covered by the (u', v') chart");
    return p.y / p.x;
}

// Euclidean distance from a projective point to a box center, measured in the
// box's chart. Points essentially at the chart's missing point are reported
// as far away.
inline double dist_in_chart(const ProjPt<Cx>& p, const Box& b) {
    Cx num = (b.chart == Chart::u_v) ? p.x : p.y;
    Cx den = (b.chart == Chart::u_v) ? p.y : p.x;
    if (std::abs(den) < 1e-12 * std::abs(num)) return std::numeric_limits<double>::infinity();
    return std::abs(num / den - b.center);
}

inline ProjPt<Cx> boundary_dir(const Box& b, double theta) {
    Cx base = b.center + std::polar(b.radius, theta);
    return (b.chart == Chart::u_v) ? ProjPt<Cx>{base, Cx(1)}.canonical()
                                   : ProjPt<Cx>{Cx(1), base}.canonical();
}

} // namespace detail_orbit

// Build one bidisk per explicit tree node: base disk of radius r around the
// node in its own chart, fiber bound eps/sqrt(1+|u_p|^2). The common radii
// are halved (at most 20 times) until (a) all base disks are pairwise
// disjoint and (b) the sampled one-dimensional separation holds: the image of
// each non-indeterminate node's boundary circle stays at distance >= 0.4 r
// from its target disk. Nodes where the restricted map is critical are
// excluded from (b) — their image circles shrink superlinearly and the
// transition content is certified by slice degrees instead.
//
// A periodic indeterminacy point aborts with HypothesisViolation unless the
// configuration is the totally invariant exceptional one (single
// indeterminacy point equal to its own full preimage, plus a second totally
// invariant point): that case gets the nested three-box layout around the
// two exceptional points.
template <class K>
BoxSet build_boxes(const GMap<K>& m, const ETree<K>& tree, double r = 0.05, double eps = 1e-3) {
    using detail_orbit::chart_of;
    if (tree.nodes.empty()) throw DegenerateInput("cannot build boxes over an empty tree");
    if (!(r > 0) || !(eps > 0)) throw DegenerateInput("box radii must be positive");

    RatMap1D<K> g = restrict_infinity(m);
    RatMap1D<Cx> gf{hom_to_cx(g.N), hom_to_cx(g.M)};
    auto ipts = m.indeterminacy_points();
    auto orbits = classify_indeterminacy_orbits(m);
    bool periodic = false;
    for (auto& o : orbits) periodic = periodic || (o.cls == OrbitClass::Periodic);

    BoxSet bs;
    bs.r = r;
    bs.eps = eps;

    if (periodic) {
        bool invariant = (ipts.size() == 1);
        if (invariant)
            for (auto& [q, mult] : g.preimages(ipts[0].first)) {
                (void)mult;
                invariant = invariant && same_point(q, ipts[0].first);
            }
        if (!invariant)
            throw HypothesisViolation(
                "an indeterminacy point is periodic on the line at infinity; boxes require "
                "aperiodic indeterminacy orbits (or a single totally invariant one)");

        ProjPt<Cx> I0{to_cx(ipts[0].first.x), to_cx(ipts[0].first.y)};
        I0 = I0.canonical();
        // The complementary totally invariant point of the restriction.
        ProjPt<K> zero_k{scalar_traits<K>::from_int(0), scalar_traits<K>::from_int(1)};
        ProjPt<K> inf_k{scalar_traits<K>::from_int(1), scalar_traits<K>::from_int(0)};
        ProjPt<K> other{};
        bool found = false;
        for (const ProjPt<K>& cand : {zero_k, inf_k}) {
            if (same_point(cand, ipts[0].first)) continue;
            bool tot = same_point(g.apply(cand), cand);
            if (tot)
                for (auto& [q, mult] : g.preimages(cand)) {
                    (void)mult;
                    tot = tot && same_point(q, cand);
                }
            if (tot) {
                other = cand;
                found = true;
                break;
            }
        }
        if (!found)
            throw HypothesisViolation(
                "totally invariant indeterminacy point without a complementary totally "
                "invariant point; the nested box layout does not apply");
        ProjPt<Cx> E2{to_cx(other.x), to_cx(other.y)};
        E2 = E2.canonical();

        const double r0 = std::min(r, 0.05);
        const double r1 = 0.3;
        const double r2 = 2.2;
        const double eps_small = std::min(eps, 1e-3);
        Chart c0 = chart_of(I0);
        Cx u0 = detail_orbit::chart_coord(I0, c0);
        Chart c2 = chart_of(E2);
        Cx u2 = detail_orbit::chart_coord(E2, c2);
        double vb01 = eps_small / std::sqrt(1 + std::norm(u0));
        double vb2 = eps_small / std::sqrt(1 + std::norm(u2));
        bs.boxes.push_back({0, 0, c0, u0, r0, vb01, I0});
        bs.boxes.push_back({1, -1, c0, u0, r1, vb01, I0});
        bs.boxes.push_back({2, -1, c2, u2, r2, vb2, E2});
        bs.special_layout = true;
        bs.r = r0;
        bs.eps = eps_small;

        // Sampled nesting: the preimage of the inner disk boundary must stay
        // well inside the middle disk.
        for (int k = 0; k < 24; ++k) {
            auto pre = gf.preimages(detail_orbit::boundary_dir(bs.boxes[0], 0.2617993877991494 * k));
            for (auto& [q, mult] : pre) {
                (void)mult;
                if (detail_orbit::dist_in_chart(q, bs.boxes[1]) > 0.9 * r1)
                    throw SeparationFailure(
                        "preimage of the inner disk is not compactly contained in the middle disk");
            }
        }
        return bs;
    }

    const int n = static_cast<int>(tree.nodes.size());
    std::vector<ProjPt<Cx>> pts(static_cast<size_t>(n));
    std::vector<Chart> charts(static_cast<size_t>(n));
    std::vector<Cx> centers(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        pts[static_cast<size_t>(i)] =
            ProjPt<Cx>{to_cx(tree.nodes[static_cast<size_t>(i)].point.x),
                       to_cx(tree.nodes[static_cast<size_t>(i)].point.y)}
                .canonical();
        charts[static_cast<size_t>(i)] = chart_of(pts[static_cast<size_t>(i)]);
        centers[static_cast<size_t>(i)] =
            detail_orbit::chart_coord(pts[static_cast<size_t>(i)], charts[static_cast<size_t>(i)]);
    }

    double cur_r = r, cur_eps = eps;
    for (int round = 0; round <= 20; ++round) {
        bool ok = true;
        int skipped = 0;

        // (a) pairwise disjoint base disks
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j) {
                if (charts[static_cast<size_t>(i)] == charts[static_cast<size_t>(j)]) {
                    ok = std::abs(centers[static_cast<size_t>(i)] - centers[static_cast<size_t>(j)]) >=
                         2.1 * cur_r;
                } else {
                    // Convert disk j into chart i through base -> 1/base.
                    double cj = std::abs(centers[static_cast<size_t>(j)]);
                    if (cj < 1e-12) continue; // centered at the other chart's missing point: far away
                    if (cj <= 2 * cur_r) {
                        ok = false;
                        break;
                    }
                    double rj = cur_r / (cj * (cj - cur_r));
                    ok = std::abs(centers[static_cast<size_t>(i)] - 1.0 / centers[static_cast<size_t>(j)]) >=
                         1.05 * (cur_r + rj);
                }
            }

        // (b) sampled boundary separation toward the target disk
        for (int i = 0; i < n && ok; ++i) {
            const ENode<K>& nd = tree.nodes[static_cast<size_t>(i)];
            if (nd.indet_index >= 0 || nd.parent < 0) continue;
            if (nd.local_deg > 1) {
                ++skipped;
                continue;
            }
            Box src{i, i, charts[static_cast<size_t>(i)], centers[static_cast<size_t>(i)], cur_r, 0,
                    pts[static_cast<size_t>(i)]};
            Box dst{nd.parent,
                    nd.parent,
                    charts[static_cast<size_t>(nd.parent)],
                    centers[static_cast<size_t>(nd.parent)],
                    cur_r,
                    0,
                    pts[static_cast<size_t>(nd.parent)]};
            for (int k = 0; k < 24 && ok; ++k) {
                ProjPt<Cx> img = gf.apply(detail_orbit::boundary_dir(src, 0.2617993877991494 * k));
                ok = detail_orbit::dist_in_chart(img, dst) >= 1.4 * cur_r;
            }
        }

        if (ok) {
            for (int i = 0; i < n; ++i) {
                double vb = cur_eps / std::sqrt(1 + std::norm(centers[static_cast<size_t>(i)]));
                bs.boxes.push_back({i, i, charts[static_cast<size_t>(i)],
                                    centers[static_cast<size_t>(i)], cur_r, vb,
                                    pts[static_cast<size_t>(i)]});
            }
            bs.r = cur_r;
            bs.eps = cur_eps;
            bs.shrink_rounds = round;
            bs.skipped_separation = skipped;
            return bs;
        }
        cur_r /= 2;
        cur_eps /= 2;
    }
    throw SeparationFailure("box disjointness/separation not reached after 20 halvings");
}

// ---------------------------------------------------------------------------
// Horizontal-like certificate (sampled, not a proof)
// ---------------------------------------------------------------------------

struct BoxCertificate {
    int src = -1, dst = -1;
    int samples_vertical = 0;
    int samples_interior = 0;
    double margin_vertical = std::numeric_limits<double>::infinity(); // (i)
    double margin_horizontal = 1.0;                                   // (ii)
    int overlap_hits = 0;                                             // (iii)
    bool indeterminacy_clear = true;
};

namespace detail_orbit {

// One materialized chart step (fibers of ordinary size; no log state).
inline ChartPoint chart_image(const MapLift& l, Chart chart, Cx base, Cx fiber) {
    Cx Z = (chart == Chart::u_v) ? base : Cx(1);
    Cx W = (chart == Chart::u_v) ? Cx(1) : base;
    auto [h1, h2] = eval_lift(l.f, l.D, Z, W, fiber);
    double scale = l.coeff_scale * std::pow(std::max(1.0, std::abs(base)), l.D);
    if (std::max(std::abs(h1), std::abs(h2)) <= 1e-13 * scale)
        throw IndeterminateEvaluation("chart image evaluated at an indeterminacy point");
    Cx h3 = Cx(1);
    for (int k = 0; k < l.D; ++k) h3 *= fiber;
    if (std::abs(h2) >= std::abs(h1)) return {Chart::u_v, h1 / h2, h3 / h2};
    return {Chart::up_vp, h2 / h1, h3 / h1};
}

// Solve for the fiber v at a base point inside src that makes the next base
// coordinate land on the target center. Near an indeterminacy point the
// blow-up sends the fiber direction onto the line, so the landing equation
// has a solution with |v| ~ dist(base, I) * |target - image|. Plain Newton
// with a numeric derivative; returns false when no in-bounds solution exists.
inline bool solve_jump_fiber(const MapLift& lift, const Box& src, const Box& dst, Cx base,
                             Cx& v_out) {
    auto land = [&](Cx v) -> Cx {
        ChartPoint img = chart_image(lift, src.chart, base, v);
        Cx b2 = img.base;
        if (img.chart != dst.chart) {
            if (std::abs(img.base) < 1e-300) return Cx(1e9);
            b2 = 1.0 / img.base;
        }
        return b2 - dst.center;
    };
    Cx v(0);
    double h0 = src.v_bound * 1e-6;
    for (int it = 0; it < 12; ++it) {
        Cx g;
        try {
            g = land(v);
        } catch (const IndeterminateEvaluation&) {
            return false;
        }
        if (std::abs(g) < 1e-6 * dst.radius) {
            v_out = v;
            return std::abs(v) < 0.9 * src.v_bound && std::abs(v) > 0;
        }
        double h = std::max(h0, 1e-8 * std::abs(v));
        Cx gp;
        try {
            gp = (land(v + Cx(h, 0)) - g) / h;
        } catch (const IndeterminateEvaluation&) {
            return false;
        }
        if (std::abs(gp) < 1e-280) return false;
        v -= g / gp;
        if (std::abs(v) > src.v_bound) return false;
    }
    return false;
}

// Signed exit margin of a materialized point from the closure of a box:
// positive means outside, measured relative to the box dimensions.
inline double closure_margin(const ChartPoint& p, const Box& b) {
    Cx base = p.base;
    Cx fiber = p.fiber;
    if (p.chart != b.chart) {
        double ab = std::abs(p.base);
        if (ab < 1e-300) return std::numeric_limits<double>::infinity();
        base = 1.0 / p.base;
        fiber = p.fiber / p.base;
    }
    double mb = (std::abs(base - b.center) - b.radius) / b.radius;
    double mf = (std::abs(fiber) - b.v_bound) / b.v_bound;
    return std::max(mb, mf);
}

} // namespace detail_orbit

// Sampled check of the three horizontal-like conditions for f : src -> dst:
//   (i)   images of the vertical boundary of src avoid the closure of dst
//         (and no indeterminacy point sits on that boundary);
//   (ii)  images of the closure of src cross the boundary of dst only through
//         its vertical part (no sampled image approaches the horizontal face);
//   (iii) some image lands inside dst.
// Interior samples use log-uniform radii so the thin blow-up slivers near an
// indeterminacy center are exercised. Margins are reported; any violation
// throws CertificateFailure carrying the offending sample.
template <class K>
BoxCertificate horizontal_like_certificate(const GMap<K>& m, const Box& src, const Box& dst,
                                           int boundary_samples = 256, std::uint64_t seed = 1) {
    using detail_orbit::chart_image;
    using detail_orbit::closure_margin;
    if (boundary_samples < 16) throw DegenerateInput("certificate needs at least 16 samples");
    MapLift lift = make_lift(m);
    RandomStream rng(seed);
    BoxCertificate cert;
    cert.src = src.id;
    cert.dst = dst.id;

    // Indeterminacy points must stay off the vertical boundary circle.
    for (auto& [ip, a] : lift.indet) {
        (void)a;
        double dloc = detail_orbit::dist_in_chart(ip, src);
        if (std::isfinite(dloc) && std::abs(dloc - src.radius) <= 0.02 * src.radius) {
            cert.indeterminacy_clear = false;
            throw CertificateFailure("an indeterminacy point lies on the vertical boundary of the source box");
        }
    }

    auto sample_desc = [](Chart c, Cx b, Cx v) {
        return std::string("chart ") + chart_name(c) + " base (" + std::to_string(b.real()) + "," +
               std::to_string(b.imag()) + ") fiber (" + std::to_string(v.real()) + "," +
               std::to_string(v.imag()) + ")";
    };

    // (i) vertical boundary
    for (int k = 0; k < boundary_samples; ++k) {
        double theta = 6.283185307179586 * (k + 0.5 * rng.next_unit()) / boundary_samples;
        Cx base = src.center + std::polar(src.radius, theta);
        double mu = (k % 5 == 0) ? 0.0 : ((k % 3 == 0) ? 1.0 : rng.next_unit());
        Cx fiber = std::polar(src.v_bound * mu, 6.283185307179586 * rng.next_unit());
        ChartPoint img;
        try {
            img = chart_image(lift, src.chart, base, fiber);
        } catch (const IndeterminateEvaluation&) {
            throw CertificateFailure("vertical boundary sample hit an indeterminacy point: " +
                                     sample_desc(src.chart, base, fiber));
        }
        double margin = closure_margin(img, dst);
        cert.margin_vertical = std::min(cert.margin_vertical, margin);
        ++cert.samples_vertical;
        if (margin <= 0)
            throw CertificateFailure("condition (i): image of the vertical boundary meets the "
                                     "target closure at " +
                                     sample_desc(src.chart, base, fiber));
    }

    // (ii) + (iii) closure samples, log-uniform in both radii
    const double lr = std::log(1e-8);
    for (int k = 0; k < boundary_samples; ++k) {
        double rho;
        if (k % 4 == 0)
            rho = src.radius * (1 - 1e-3);
        else
            rho = src.radius * std::exp(lr * rng.next_unit());
        Cx base = src.center + std::polar(rho, 6.283185307179586 * rng.next_unit());
        double mu = (k % 7 == 0) ? 0.0 : std::exp(lr * rng.next_unit());
        Cx fiber = std::polar(src.v_bound * mu * (1 - 1e-6), 6.283185307179586 * rng.next_unit());
        ChartPoint img;
        try {
            img = chart_image(lift, src.chart, base, fiber);
        } catch (const IndeterminateEvaluation&) {
            continue; // exact center of a blow-up: measure-zero sample, skip
        }
        ++cert.samples_interior;

        Cx b2 = img.base;
        Cx v2 = img.fiber;
        if (img.chart != dst.chart) {
            double ab = std::abs(img.base);
            if (ab < 1e-300) continue;
            b2 = 1.0 / img.base;
            v2 = img.fiber / img.base;
        }
        if (std::abs(b2 - dst.center) < dst.radius) {
            double ratio = std::abs(v2) / dst.v_bound;
            cert.margin_horizontal = std::min(cert.margin_horizontal, 1 - ratio);
            if (ratio >= 0.98)
                throw CertificateFailure("condition (ii): image approaches the horizontal "
                                         "boundary of the target at " +
                                         sample_desc(src.chart, base, fiber));
            if (ratio < 1.0) ++cert.overlap_hits;
        }
    }
    if (cert.overlap_hits == 0) {
        // Random sampling can miss a thin overlap sliver (near a blow-up the
        // preimage of the target is a narrow band at base offsets comparable
        // to the fiber bound), so search for a witness constructively across
        // log-spaced base offsets before declaring failure.
        const double off_lo = std::max(src.v_bound * 0.3, src.radius * 1e-12);
        const double off_hi = src.radius * 0.9;
        for (int k = 0; k < 10 && cert.overlap_hits == 0; ++k) {
            double t = k / 9.0;
            double off = off_lo * std::pow(off_hi / std::max(off_lo, 1e-300), t);
            Cx base = src.center + std::polar(std::min(off, off_hi),
                                              6.283185307179586 * rng.next_unit());
            Cx v;
            if (!detail_orbit::solve_jump_fiber(lift, src, dst, base, v)) continue;
            ChartPoint img;
            try {
                img = chart_image(lift, src.chart, base, v);
            } catch (const IndeterminateEvaluation&) {
                continue;
            }
            Cx b2 = img.base, v2 = img.fiber;
            if (img.chart != dst.chart) {
                if (std::abs(img.base) < 1e-300) continue;
                b2 = 1.0 / img.base;
                v2 = img.fiber / img.base;
            }
            if (std::abs(b2 - dst.center) < dst.radius && std::abs(v2) < 0.98 * dst.v_bound) {
                ++cert.overlap_hits;
                ++cert.samples_interior;
            }
        }
    }
    if (cert.overlap_hits == 0)
        throw CertificateFailure("condition (iii): no sampled image of the source box lands in "
                                 "the target box");
    return cert;
}

// Count, with multiplicity, the solutions in the source base disk of
// f(., v0) ∈ {vertical line through the target center}, on the horizontal
// slice v = v0. Equals the transition degree of the pair.
template <class K>
int slice_degree_numeric(const GMap<K>& m, const Box& src, const Box& dst) {
    MapLift lift = make_lift(m);
    const Cx v0(src.v_bound * 0.3, 0.0);
    std::vector<Cx> s1 = slice_poly(lift.f.f1, lift.D, src.chart, v0);
    std::vector<Cx> s2 = slice_poly(lift.f.f2, lift.D, src.chart, v0);
    // Image base coordinate is F1/F2 in the (u,v) chart and F2/F1 in the
    // other; the vertical line {base' = t} pulls back to num - t * den = 0.
    const std::vector<Cx>& num = (dst.chart == Chart::u_v) ? s1 : s2;
    const std::vector<Cx>& den = (dst.chart == Chart::u_v) ? s2 : s1;
    std::vector<Cx> gpoly(std::max(num.size(), den.size()), Cx(0));
    for (size_t i = 0; i < num.size(); ++i) gpoly[i] += num[i];
    for (size_t i = 0; i < den.size(); ++i) gpoly[i] -= dst.center * den[i];
    while (gpoly.size() > 1 && std::abs(gpoly.back()) == 0.0) gpoly.pop_back();
    if (gpoly.size() <= 1) throw IllConditioned("slice polynomial is constant");

    int count = 0;
    for (auto& rc : uni_roots(gpoly))
        if (std::abs(rc.value - src.center) < src.radius) count += rc.mult;
    return count;
}

// ---------------------------------------------------------------------------
// Orbit iteration
// ---------------------------------------------------------------------------

struct OrbitStep {
    int step = 0;
    Chart chart = Chart::affine;
    Cx base{};          // z (affine) or the chart base coordinate
    double log_fiber = 0; // log|w| (affine) or log|fiber|
    double arg_fiber = 0;
    double log_norm = 0;
    int box = box_outside;
};

struct OrbitRecord {
    std::vector<OrbitStep> steps; // steps[k] is f^k(q); size n_steps+1
    double min_log_growth = std::numeric_limits<double>::infinity();
    // log||f^k(q)|| per step
    std::vector<double> log_norms() const {
        std::vector<double> out;
        out.reserve(steps.size());
        for (auto& s : steps) out.push_back(s.log_norm);
        return out;
    }
    std::vector<int> itinerary() const {
        std::vector<int> out;
        out.reserve(steps.size());
        for (auto& s : steps) out.push_back(s.box);
        return out;
    }
};

namespace detail_orbit {

// One log-domain chart step.
inline OrbitState step_state(const MapLift& l, const OrbitState& s, int step_idx) {
    Cx v = s.fiber_value();
    Cx Z = (s.chart == Chart::u_v) ? s.base : Cx(1);
    Cx W = (s.chart == Chart::u_v) ? Cx(1) : s.base;
    auto [h1, h2] = eval_lift(l.f, l.D, Z, W, v);
    double scale = l.coeff_scale * std::pow(std::max(1.0, std::abs(s.base)), l.D);
    if (std::max(std::abs(h1), std::abs(h2)) <= 1e-12 * scale)
        throw IndeterminateEvaluation("orbit reached an indeterminacy point at step " +
                                      std::to_string(step_idx));
    bool to_upvp;
    if (s.chart == Chart::u_v)
        to_upvp = std::abs(h1) > 1.1 * std::abs(h2); // switch only on clear dominance
    else
        to_upvp = !(std::abs(h2) > 1.1 * std::abs(h1));
    OrbitState r;
    const double two_pi = 6.283185307179586476925286766559;
    if (!to_upvp) {
        r.chart = Chart::u_v;
        r.base = h1 / h2;
        r.log_fiber = l.D * s.log_fiber - std::log(std::abs(h2));
        r.arg_fiber = std::remainder(l.D * s.arg_fiber - std::arg(h2), two_pi);
    } else {
        r.chart = Chart::up_vp;
        r.base = h2 / h1;
        r.log_fiber = l.D * s.log_fiber - std::log(std::abs(h1));
        r.arg_fiber = std::remainder(l.D * s.arg_fiber - std::arg(h1), two_pi);
    }
    return r;
}

inline OrbitState affine_to_state(Cx z, Cx w) {
    if (std::abs(w) >= std::abs(z)) return make_state(Chart::u_v, z / w, 1.0 / w);
    return make_state(Chart::up_vp, w / z, 1.0 / z);
}

} // namespace detail_orbit

// Iterate n_steps times from a chart state, recording membership against the
// boxes. The growth statistic tracks consecutive log-norm differences once
// the orbit is inside the attraction regime (log||.|| > 10).
template <class K>
OrbitRecord iterate_orbit_state(const GMap<K>& m, OrbitState s, int n_steps,
                                const BoxSet& boxes = {}) {
    if (n_steps < 0) throw DegenerateInput("orbit length must be nonnegative");
    MapLift lift = make_lift(m);
    OrbitRecord rec;
    rec.steps.reserve(static_cast<size_t>(n_steps) + 1);
    auto push = [&](int k, const OrbitState& st) {
        OrbitStep os;
        os.step = k;
        os.chart = st.chart;
        os.base = st.base;
        os.log_fiber = st.log_fiber;
        os.arg_fiber = st.arg_fiber;
        os.log_norm = st.log_norm();
        os.box = locate_box(boxes, st);
        if (k > 0) {
            double prev = rec.steps.back().log_norm;
            if (prev > 10) rec.min_log_growth = std::min(rec.min_log_growth, os.log_norm - prev);
        }
        rec.steps.push_back(os);
    };
    push(0, s);
    for (int k = 0; k < n_steps; ++k) {
        s = detail_orbit::step_state(lift, s, k);
        push(k + 1, s);
    }
    return rec;
}

// Iterate from an affine start. Moderate points advance in plain affine
// coordinates; once log||.|| clears the chart threshold the state moves to a
// chart with a log-polar fiber and never comes back (the region is forward
// invariant for the fixtures' seeds; a non-escaping orbit simply stays
// affine).
template <class K>
OrbitRecord iterate_orbit(const GMap<K>& m, Cx z, Cx w, int n_steps, const BoxSet& boxes = {}) {
    if (n_steps < 0) throw DegenerateInput("orbit length must be nonnegative");
    MapLift lift = make_lift(m);
    const double switch_log = std::min(45.0, 600.0 / std::max(1, lift.D));
    OrbitRecord rec;
    rec.steps.reserve(static_cast<size_t>(n_steps) + 1);

    bool affine = true;
    OrbitState s;
    auto affine_log_norm = [](Cx zz, Cx ww) {
        double n2 = std::norm(zz) + std::norm(ww);
        return 0.5 * std::log(std::max(n2, 1e-300));
    };
    auto push_affine = [&](int k) {
        OrbitStep os;
        os.step = k;
        os.chart = Chart::affine;
        os.base = z;
        double aw = std::abs(w);
        os.log_fiber = (aw > 0) ? std::log(aw) : -1e9;
        os.arg_fiber = (aw > 0) ? std::arg(w) : 0.0;
        os.log_norm = affine_log_norm(z, w);
        os.box = box_outside;
        if (std::abs(z) > 0 || aw > 0)
            os.box = locate_box(boxes, detail_orbit::affine_to_state(z, w));
        if (k > 0) {
            double prev = rec.steps.back().log_norm;
            if (prev > 10) rec.min_log_growth = std::min(rec.min_log_growth, os.log_norm - prev);
        }
        rec.steps.push_back(os);
    };
    auto push_chart = [&](int k) {
        OrbitStep os;
        os.step = k;
        os.chart = s.chart;
        os.base = s.base;
        os.log_fiber = s.log_fiber;
        os.arg_fiber = s.arg_fiber;
        os.log_norm = s.log_norm();
        os.box = locate_box(boxes, s);
        if (k > 0) {
            double prev = rec.steps.back().log_norm;
            if (prev > 10) rec.min_log_growth = std::min(rec.min_log_growth, os.log_norm - prev);
        }
        rec.steps.push_back(os);
    };

    push_affine(0);
    for (int k = 0; k < n_steps; ++k) {
        if (affine && affine_log_norm(z, w) > switch_log) {
            s = detail_orbit::affine_to_state(z, w);
            affine = false;
        }
        if (affine) {
            Cx nz = lift.f.f1.eval(z, w);
            Cx nw = lift.f.f2.eval(z, w);
            z = nz;
            w = nw;
            push_affine(k + 1);
        } else {
            s = detail_orbit::step_state(lift, s, k);
            push_chart(k + 1);
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Green-function sequence u_n = D^{-n} log+ ||f^n(q)||
// ---------------------------------------------------------------------------

struct GreenSeq {
    std::vector<double> u;
    std::vector<double> c; // certificate constants c_n = K * D^{-n}
    double K_fit = 0;
    bool monotone = true; // u_n + c_n non-increasing over the computed range
};

template <class K>
GreenSeq green_function_seq(const GMap<K>& m, Cx z, Cx w, int n_max) {
    if (n_max < 1) throw DegenerateInput("Green sequence needs at least one step");
    OrbitRecord rec = iterate_orbit(m, z, w, n_max);
    std::vector<double> L = rec.log_norms();
    GreenSeq gs;
    gs.u.resize(L.size());
    double dpow = 1;
    for (size_t k = 0; k < L.size(); ++k) {
        gs.u[k] = std::max(0.0, L[k]) * dpow;
        dpow /= m.D;
    }
    // Fit the smallest K with u_{n+1} - u_n <= K D^{-(n+1)} (D - 1), which
    // makes u_n + K D^{-n} non-increasing by construction.
    double K_need = 0;
    double dp = static_cast<double>(m.D);
    for (size_t k = 0; k + 1 < gs.u.size(); ++k) {
        double diff = gs.u[k + 1] - gs.u[k];
        if (diff > 1e-300) {
            double need = diff * dp / (m.D - 1 > 0 ? (m.D - 1) : 1);
            if (std::isfinite(need))
                K_need = std::max(K_need, need);
            else
                gs.monotone = false;
        }
        dp *= m.D;
        if (!std::isfinite(dp)) dp = std::numeric_limits<double>::max();
    }
    gs.K_fit = K_need;
    gs.c.resize(gs.u.size());
    double cpow = K_need;
    for (size_t k = 0; k < gs.c.size(); ++k) {
        gs.c[k] = cpow;
        cpow /= m.D;
    }
    for (size_t k = 0; k + 1 < gs.u.size(); ++k)
        if (gs.u[k + 1] + gs.c[k + 1] > gs.u[k] + gs.c[k] + 1e-12) gs.monotone = false;
    return gs;
}

// ---------------------------------------------------------------------------
// Invariant-region and slice-mass checks for the cubic fixture
// ---------------------------------------------------------------------------

struct RegionCheck {
    int samples = 0;
    int violations = 0;
    // Minimum observed slack in the three inequalities of the invariance
    // proof; all must stay positive.
    double margin_contraction = std::numeric_limits<double>::infinity(); // 1/2 - |u'|
    double margin_lower = std::numeric_limits<double>::infinity();       // |u'| - |u|^2/2
    double margin_fiber = std::numeric_limits<double>::infinity();       // |u'|^3/4 - |v'|
    double margin_proof = std::numeric_limits<double>::infinity();       // 1/2 - (1/4 + |u|^2/4)
};

// Samples V = { |u| < 1/2, |v| < |u|^3/4 } and pushes each point through
// (u, v) -> ((u^3+v)/u, v^3/u), recording the slack in the three proof
// inequalities. A tenth of the samples stress the outer shell |u| = 0.499 and
// a seventh sit on the invariant slice v = 0.
inline RegionCheck example3_region_check(int samples, std::uint64_t seed) {
    if (samples < 1) throw DegenerateInput("region check needs samples");
    RandomStream rng(seed);
    RegionCheck rep;
    rep.samples = samples;
    for (int i = 0; i < samples; ++i) {
        Cx u = (i % 10 == 0) ? rng.next_circle(0.499) : rng.next_disk(0.5);
        if (std::abs(u) < 1e-9) u = Cx(1e-3, 0);
        double vcap = std::pow(std::abs(u), 3) / 4;
        Cx v = (i % 7 == 0) ? Cx(0) : rng.next_disk(vcap * 0.999);
        Cx u2 = (u * u * u + v) / u;
        Cx v2 = v * v * v / u;
        double m1 = 0.5 - std::abs(u2);
        double m2 = std::abs(u2) - 0.5 * std::norm(u);
        double m3 = std::pow(std::abs(u2), 3) / 4 - std::abs(v2);
        double m4 = 0.5 - (0.25 + std::norm(u) / 4);
        rep.margin_contraction = std::min(rep.margin_contraction, m1);
        rep.margin_lower = std::min(rep.margin_lower, m2);
        rep.margin_fiber = std::min(rep.margin_fiber, m3);
        rep.margin_proof = std::min(rep.margin_proof, m4);
        if (m1 <= 0 || m2 <= 0 || m3 <= 0) ++rep.violations;
    }
    return rep;
}

// Slice-mass transfer across the nested layout: one pull-back step sends
// (m1, m2) to (m1 + m2/3, (2/3) m2); the second component dies geometrically.
inline std::vector<std::pair<double, double>> example3_mass_collapse(
    int depth, std::pair<double, double> initial = {0.0, 1.0}) {
    if (depth < 0) throw DegenerateInput("depth must be nonnegative");
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<size_t>(depth) + 1);
    out.push_back(initial);
    for (int k = 0; k < depth; ++k) {
        auto [m1, m2] = out.back();
        out.push_back({m1 + m2 / 3.0, 2.0 * m2 / 3.0});
    }
    return out;
}

} // namespace infdyn
