#pragma once

// Weights of the trace measure on the line at infinity: the multiplicity
// recursion lambda_{p,n} = mult_p(f^n)/D^n driven by forward orbits of the
// restricted map, closed-form limits for eventually periodic incidence
// patterns, the partial-sum law, the induced atomic measure, and pointwise
// evaluation of the potential at infinity.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <type_traits>
#include <vector>

#include "sphere.hpp"

namespace infdyn {

// Weights are real numbers: exact rationals on the exact backend, doubles on
// the floating backend.
template <class K> struct weight_scalar;
template <> struct weight_scalar<Cx> { using type = double; };
template <> struct weight_scalar<RatCx> { using type = Rat; };
template <class K> using WeightReal = typename weight_scalar<K>::type;

inline double weight_to_double(double x) { return x; }
inline double weight_to_double(const Rat& x) { return x.get_d(); }

namespace detail_weights {

inline double w_abs(double x) { return std::abs(x); }
inline Rat w_abs(const Rat& x) { return abs(x); }

// The parameter is non-deduced so integer and gmp expression-template
// arguments are materialized into R at the call boundary.
template <class R>
R w_pow(const std::type_identity_t<R>& base, int n) {
    R out(1);
    for (int i = 0; i < n; ++i) out = out * base;
    return out;
}

} // namespace detail_weights

template <class K>
struct NodeWeights {
    // seq[n] = lambda_{p,n} for 0 <= n <= n_max; non-decreasing in n.
    std::vector<WeightReal<K>> seq;
    // Incidence records (orbit step k, indeterminacy index): the forward
    // orbit of the node meets that indeterminacy point after k steps, which
    // raises lambda at n = k + 1.
    std::vector<std::pair<int, int>> hits;
    WeightReal<K> limit;           // limit weight lambda_p
    bool closed_form_tail = false; // eventually periodic incidences: geometric tail summed exactly
    // Least n with lambda_{p,m} = lambda_{p,n} over the walked range; for a
    // geometric tail, the step at which the periodic pattern was identified.
    int stabilization_depth = 0;
    bool stabilized = false; // limit trusted: tail summed, or walked well past the last incidence
};

template <class K>
struct WeightTable {
    int n_max = 0;
    int D = 0;
    int dprime = 0;
    std::vector<NodeWeights<K>> node; // parallel to the tree's node list
    WeightReal<K> sum_at_nmax;        // sum over the tree of lambda_{p,n_max}
    WeightReal<K> residual;           // 1 - sum_at_nmax
};

// Per-node weight sequences on the backward tree. The recursion is driven by
// the forward orbit of each node under the restricted map:
//
//   lambda_{p,n+1} = lambda_{p,n} + D^{-(n+1)} * sum_j alpha_j * mu_j(n),
//
// where mu_j(n) is the product of the local degrees along the first n orbit
// steps when the orbit sits on the j-th indeterminacy point at step n, and 0
// otherwise. A first revisit makes the orbit eventually periodic, all later
// incidences repeat with a fixed ratio (cycle degree product / D^cycle), and
// the tail is summed in closed form - exactly so on the rational backend.
template <class K>
WeightTable<K> lambda_table(const ETree<K>& tree, const GMap<K>& f, int n_max,
                            double eps_cluster = default_eps_cluster) {
    using R = WeightReal<K>;
    if (n_max < 0) throw DegenerateInput("weight recursion needs a non-negative depth");
    // Each node's sequence walks that node's forward orbit, so a truncated
    // tree still yields valid per-node weights; only whole-tree mass sums
    // (partial-sum checks, residuals) see the missing shells.

    RatMap1D<K> g = restrict_infinity(f);
    auto ipts = f.indeterminacy_points();
    const R rD(f.D);
    std::vector<R> dpow(static_cast<size_t>(n_max) + 1, R(1));
    for (int i = 1; i <= n_max; ++i) dpow[i] = dpow[i - 1] * rD;

    WeightTable<K> table;
    table.n_max = n_max;
    table.D = f.D;
    table.dprime = f.dprime;
    R total(0);

    for (auto& nd : tree.nodes) {
        NodeWeights<K> nw;
        nw.seq.assign(static_cast<size_t>(n_max) + 1, R(0));
        nw.limit = R(0);

        // Forward orbit with first-revisit detection. The walk also stops if
        // the exact representation explodes: such a point can no longer land
        // on an indeterminacy point, so later increments are all zero.
        std::vector<ProjPt<K>> pts{nd.point};
        int cyc_start = -1, cyc_len = 0;
        while (static_cast<int>(pts.size()) < n_max && cyc_start < 0 &&
               proj_bits(pts.back()) <= max_exact_walk_bits) {
            ProjPt<K> q = g.apply(pts.back());
            for (size_t m = 0; m < pts.size(); ++m) {
                if (same_point(pts[m], q)) {
                    cyc_start = static_cast<int>(m);
                    cyc_len = static_cast<int>(pts.size()) - cyc_start;
                    break;
                }
            }
            if (cyc_start < 0) pts.push_back(q);
        }
        const int walked = static_cast<int>(pts.size());

        // Local degree and indeterminacy match for each distinct orbit point.
        std::vector<int> loc(pts.size(), 1), hit(pts.size(), -1);
        for (size_t i = 0; i < pts.size(); ++i) {
            loc[i] = g.local_degree(pts[i], eps_cluster);
            for (size_t j = 0; j < ipts.size(); ++j) {
                if (same_point(pts[i], ipts[j].first)) {
                    hit[i] = static_cast<int>(j);
                    break;
                }
            }
        }
        auto idx = [&](int k) -> int {
            if (k < static_cast<int>(pts.size())) return k;
            return cyc_start + (k - cyc_start) % cyc_len;
        };

        // Increments within the computed horizon (stored, then prefix-summed).
        R chain(1);
        int last_hit = -1;
        for (int k = 0; k < n_max; ++k) {
            if (cyc_start < 0 && k >= walked) break; // walk stopped; no later hits
            int i = idx(k);
            if (hit[i] >= 0) {
                nw.hits.push_back({k, hit[i]});
                last_hit = k;
                nw.seq[k + 1] = R(ipts[hit[i]].second) * chain / dpow[k + 1];
            }
            chain = chain * R(loc[i]);
        }
        for (int n = 1; n <= n_max; ++n) nw.seq[n] = nw.seq[n] + nw.seq[n - 1];

        if (cyc_start >= 0) {
            // Head = increments before the cycle; pass = increments of the
            // first full cycle traversal; each further traversal multiplies
            // the pass by r = (cycle degree product) / D^len < 1.
            R head(0), pass(0), chain2(1), cyc_prod(1);
            for (int k = 0; k < cyc_start + cyc_len; ++k) {
                int i = idx(k);
                if (hit[i] >= 0) {
                    R inc = R(ipts[hit[i]].second) * chain2 / dpow[k + 1];
                    if (k < cyc_start)
                        head = head + inc;
                    else
                        pass = pass + inc;
                }
                chain2 = chain2 * R(loc[i]);
                if (k >= cyc_start) cyc_prod = cyc_prod * R(loc[i]);
            }
            bool tail = !(pass == R(0));
            R r = cyc_prod / detail_weights::w_pow<R>(rD, cyc_len);
            nw.limit = tail ? head + pass / (R(1) - r) : nw.seq[n_max];
            nw.closed_form_tail = tail;
            nw.stabilization_depth = tail ? cyc_start + cyc_len : last_hit + 1;
            nw.stabilized = true; // revisit found: the incidence pattern is known in full
        } else {
            nw.limit = nw.seq[n_max];
            nw.stabilization_depth = last_hit + 1;
            // Heuristic: trust the limit once the walk went at least as far
            // past the last incidence as it took to reach it.
            nw.stabilized = last_hit >= 0 && 2 * (last_hit + 1) <= walked;
        }

        total = total + nw.seq[n_max];
        table.node.push_back(std::move(nw));
    }

    table.sum_at_nmax = total;
    table.residual = R(1) - total;
    return table;
}

// | sum_p lambda_{p,n} - (1 - (d'/D)^n) | -- identically zero on the exact
// backend whenever the tree reaches depth n.
template <class K>
WeightReal<K> partial_sum_check(const WeightTable<K>& t, int n) {
    using R = WeightReal<K>;
    if (n < 0 || n > t.n_max)
        throw TreeTooShallow("partial-sum check beyond the computed table depth");
    R sum(0);
    for (auto& nw : t.node) sum = sum + nw.seq[n];
    R expect = R(1) - detail_weights::w_pow<R>(R(t.dprime) / R(t.D), n);
    return detail_weights::w_abs(sum - expect);
}

template <class K>
struct TraceAtom {
    ProjPt<K> point;
    WeightReal<K> weight;
    int depth = 0;
    int stabilization_depth = 0;
};

template <class K>
struct TraceMeasure {
    std::vector<TraceAtom<K>> atoms;
    WeightReal<K> residual; // 1 - total atom mass at the truncation depth
};

// Atomic measure at the truncation depth: one atom per tree node carrying
// positive mass lambda_{p,n_max}; the unattributed mass (d'/D)^{n_max} is
// reported as the residual, never silently renormalized.
template <class K>
TraceMeasure<K> trace_measure(const ETree<K>& tree, const WeightTable<K>& t) {
    using R = WeightReal<K>;
    TraceMeasure<K> out;
    R sum(0);
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
        const R& w = t.node[i].seq[t.n_max];
        if (!(w > R(0))) continue;
        out.atoms.push_back({tree.nodes[i].point, w, tree.nodes[i].depth,
                             t.node[i].stabilization_depth});
        sum = sum + w;
    }
    out.residual = R(1) - sum;
    return out;
}

struct GreenPotential {
    double value = 0;       // -infinity marker at an atom
    double tail_bound = 0;  // crude bound for the truncated mass contribution
    bool at_atom = false;
};

// Potential of the trace measure at a point q of the line at infinity:
//   max(sum_p lambda_p log|x_p y_q - y_p x_q|, 0) - (1/2) log(|x_q|^2+|y_q|^2)
// with every point in canonical normalization (the linear form of the atom
// [x_p : y_p] is the cross product with q, vanishing exactly at the atom).
// Limit weights are used for the atoms; the residual mass contributes only
// to the reported tail bound.
template <class K>
GreenPotential green_potential_infinity(const ETree<K>& tree, const WeightTable<K>& t,
                                        const ProjPt<Cx>& q_in, double tol = eps_match) {
    ProjPt<Cx> q = q_in.canonical();
    GreenPotential out;
    double s = 0, worst = 1.0;
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
        double lam = weight_to_double(t.node[i].limit);
        if (lam <= 0) continue;
        ProjPt<Cx> p{to_cx(tree.nodes[i].point.x), to_cx(tree.nodes[i].point.y)};
        p = p.canonical();
        if (chordal(p, q) <= tol) {
            out.at_atom = true;
            out.value = -std::numeric_limits<double>::infinity();
            out.tail_bound = weight_to_double(t.residual);
            return out;
        }
        double lg = std::log(std::abs(p.x * q.y - p.y * q.x));
        s += lam * lg;
        worst = std::max(worst, std::abs(lg));
    }
    out.value = std::max(s, 0.0) - 0.5 * std::log(std::norm(q.x) + std::norm(q.y));
    out.tail_bound = weight_to_double(t.residual) * worst;
    return out;
}

// n-th approximants of the potential along forward iteration:
//   u_n(q) = max(sum_p lambda_{p,n} log|ell_p(q)| + D^{-n} log||G^n(q)||, 0)
//            - (1/2) log||q||^2,
// where G is the homogeneous lift of the restricted map, evaluated by
// renormalized iteration (never raw coordinates). Confirms convergence to
// green_potential_infinity; throws OrbitHitsE when q or an iterate lands on
// an atom (such q belong to the atom set and are excluded by hypothesis).
template <class K>
std::vector<double> green_potential_convergence_check(const GMap<K>& f, const ProjPt<Cx>& q_in,
                                                      int n_max,
                                                      double eps_cluster = default_eps_cluster) {
    ETree<K> tree = build_etree(f, n_max, /*node_budget=*/1 << 14, eps_cluster);
    WeightTable<K> table = lambda_table(tree, f, n_max, eps_cluster);

    RatMap1D<K> gk = restrict_infinity(f);
    HomPoly<Cx> N(gk.N.deg), M(gk.M.deg);
    for (int k = 0; k <= gk.N.deg; ++k) N.coeff(k) = to_cx(gk.N.coeff(k));
    for (int k = 0; k <= gk.M.deg; ++k) M.coeff(k) = to_cx(gk.M.coeff(k));

    ProjPt<Cx> q = q_in.canonical();
    std::vector<ProjPt<Cx>> atoms;
    std::vector<double> lg(tree.nodes.size(), 0.0);
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
        ProjPt<Cx> p{to_cx(tree.nodes[i].point.x), to_cx(tree.nodes[i].point.y)};
        p = p.canonical();
        if (chordal(p, q) <= eps_match)
            throw OrbitHitsE("evaluation point lies in the atom set");
        lg[i] = std::log(std::abs(p.x * q.y - p.y * q.x));
        atoms.push_back(p);
    }

    double norm_q = std::sqrt(std::norm(q.x) + std::norm(q.y));
    Cx ux = q.x / norm_q, uy = q.y / norm_q;
    const double half_log_norm2 = std::log(norm_q);
    const int dp = f.dprime;
    double B = std::log(norm_q); // log||G^n(q)|| / d'^n, accumulated
    double ratio_pow = 1.0;      // (d'/D)^n
    double dp_pow = 1.0;         // d'^n

    std::vector<double> out;
    out.reserve(static_cast<size_t>(n_max) + 1);
    for (int n = 0;; ++n) {
        double inner = ratio_pow * B;
        for (size_t i = 0; i < tree.nodes.size(); ++i)
            inner += weight_to_double(table.node[i].seq[n]) * lg[i];
        out.push_back(std::max(inner, 0.0) - half_log_norm2);
        if (n == n_max) break;

        Cx wx = N.eval(ux, uy), wy = M.eval(ux, uy);
        double nw = std::sqrt(std::norm(wx) + std::norm(wy));
        if (nw == 0)
            throw IndeterminateEvaluation("restricted map vanished along the orbit");
        B += std::log(nw) / (dp_pow * dp);
        dp_pow *= dp;
        ratio_pow *= static_cast<double>(dp) / f.D;
        ux = wx / nw;
        uy = wy / nw;
        ProjPt<Cx> cur = ProjPt<Cx>{ux, uy}.canonical();
        for (auto& a : atoms)
            if (chordal(a, cur) <= eps_match)
                throw OrbitHitsE("forward orbit of the evaluation point meets an atom");
    }
    return out;
}

// Direct multiplicity extraction from the expanded n-fold composition: the
// common linear factors of the top-degree parts of f^n with multiplicities
// (lambda_{p,n} = multiplicity / D^n). Coefficient growth is
// double-exponential, so this is restricted to very small n; it serves as an
// independent cross-check of the recursion.
template <class K>
std::vector<std::pair<ProjPt<K>, int>> multiplicity_oracle(const GMap<K>& f, int n,
                                                           double eps_cluster = default_eps_cluster) {
    if (n < 1 || n > 3)
        throw DegenerateInput("direct multiplicity extraction is limited to 1 <= n <= 3");
    PolyPair<K> base = f.to_pair();
    PolyPair<K> acc = base;
    long Dn = f.D;
    for (int i = 1; i < n; ++i) {
        acc = compose_pair(base, acc);
        Dn *= f.D;
    }
    HomPoly<K> t1 = hom_part(acc.f1, static_cast<int>(Dn));
    HomPoly<K> t2 = hom_part(acc.f2, static_cast<int>(Dn));
    HomPoly<K> g = hom_gcd(t1, t2, eps_cluster);
    if (g.deg == 0) return {};
    auto fac = hom_factor_linear(g, eps_cluster);
    std::vector<std::pair<ProjPt<K>, int>> out;
    for (auto& fa : fac.factors)
        out.push_back({ProjPt<K>{fa.b, fa.a}.canonical(), fa.alpha});
    return out;
}

} // namespace infdyn
