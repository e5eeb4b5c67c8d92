#pragma once

// Countable-state subshift attached to the dynamics on the line at infinity.
//
// States are the nodes of the exceptional backward-orbit tree (one symbol per
// point of E kept explicit) plus one lumped REST state standing for the rest
// of the tree beyond truncation. The transition matrix
//
//     a_p^q = d_{p,q} * lambda_q / (D * lambda_p)
//
// is row-stochastic and has lambda as a stationary (left-eigenvector) measure;
// d_{p,q} are the local transition degrees:
//
//   (1) p not an indeterminacy point: d = locdeg(p) if q is the image of p,
//       else 0 (one transition, up the tree);
//   (2) p an indeterminacy point, q not its image: d = alpha_p (the blow-up
//       spreads over the whole line);
//   (3) p an indeterminacy point and q its image: d = alpha_p + locdeg(p).
//
// The REST state supports two closures: "absorb" (REST is a sink, the default
// for reporting truncation loss) and "reinject" (REST models the lumped deep
// tree exactly: it keeps mass with probability d'/D and otherwise re-enters
// the explicit boundary proportionally to the subtree masses hanging below
// it). With reinjection the extended chain is exactly stationary whenever the
// image of each indeterminacy point is explicit or falls outside E.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gclass.hpp"
#include "rng.hpp"
#include "sphere.hpp"
#include "weights.hpp"

namespace infdyn {

enum class RestMode { Absorb, Reinject };

// What sample_itinerary does when a step lands in REST.
enum class RestPolicy { Allow, Resample, Truncate, Throw };

// Local transition degree d_{p,q} between two explicit tree nodes.
template <class K>
long transition_degree(const GMap<K>& f, const ETree<K>& tree, int p, int q) {
    const ENode<K>& np = tree.nodes.at(static_cast<size_t>(p));
    const ENode<K>& nq = tree.nodes.at(static_cast<size_t>(q));
    // The image node is normally the parent, but a root can map onto another
    // tree node too (its expansion was then recorded as a collision), so the
    // image must be resolved through the restriction map itself.
    bool is_image = (np.parent == q);
    int img_deg = np.local_deg;
    if (np.parent < 0) {
        RatMap1D<K> g = restrict_infinity(f);
        is_image = same_point(g.apply(np.point), nq.point);
        if (is_image) img_deg = g.local_degree(np.point);
    }
    if (np.indet_index < 0) return is_image ? img_deg : 0;
    auto ipts = f.indeterminacy_points();
    long alpha = ipts.at(static_cast<size_t>(np.indet_index)).second;
    return is_image ? alpha + img_deg : alpha;
}

template <class K>
struct SubState {
    int node = -1; // index into the tree this state was built from
    ProjPt<K> point;
    int depth = 0;
    int indet_index = -1;
};

template <class K>
struct SubshiftModel {
    using R = WeightReal<K>;

    std::vector<SubState<K>> states;          // explicit states; REST sits at index states.size()
    std::vector<std::map<int, R>> rows;       // sparse transition rows, size states.size()+1
    std::vector<std::map<int, long>> degrees; // transition degrees between explicit states
    std::vector<R> lambda;                    // stationary weights; lambda[rest()] = lumped mass
    int D = 0;
    int dprime = 0;
    RestMode mode = RestMode::Reinject;

    int rest() const { return static_cast<int>(states.size()); }

    R a(int i, int j) const {
        auto it = rows.at(static_cast<size_t>(i)).find(j);
        return it == rows[static_cast<size_t>(i)].end() ? R(0) : it->second;
    }
    long d(int i, int j) const {
        // The lumped REST row carries probabilities but no transition degrees.
        if (i >= static_cast<int>(degrees.size())) return 0;
        auto it = degrees[static_cast<size_t>(i)].find(j);
        return it == degrees[static_cast<size_t>(i)].end() ? 0 : it->second;
    }
    // State index of the tree node whose point matches q, or -1.
    int find_state(const ProjPt<K>& q, double tol = eps_match) const {
        for (size_t i = 0; i < states.size(); ++i)
            if (same_point(states[i].point, q, tol)) return static_cast<int>(i);
        return -1;
    }
};

template <class K>
SubshiftModel<K> build_model(const GMap<K>& f, const ETree<K>& tree, const WeightTable<K>& table,
                             RestMode mode = RestMode::Absorb) {
    using R = WeightReal<K>;
    if (table.node.size() != tree.nodes.size())
        throw DegenerateInput("weight table does not match the tree it is paired with");
    if (tree.nodes.empty()) throw DegenerateInput("empty tree has no subshift states");

    SubshiftModel<K> m;
    m.D = f.D;
    m.dprime = f.dprime;
    m.mode = mode;
    auto ipts = f.indeterminacy_points();
    const R rD(f.D);

    for (size_t i = 0; i < tree.nodes.size(); ++i) {
        const ENode<K>& nd = tree.nodes[i];
        const NodeWeights<K>& nw = table.node[i];
        if (!nw.stabilized)
            throw WeightNotStabilized("weight at tree node " + std::to_string(i) + " (depth " +
                                      std::to_string(nd.depth) +
                                      ") has not stabilized; raise the weight iteration depth");
        if (!(nw.limit > R(0)))
            throw WeightNotStabilized("tree node " + std::to_string(i) +
                                      " carries zero stabilized weight and cannot be conditioned on");
        m.states.push_back({static_cast<int>(i), nd.point, nd.depth, nd.indet_index});
        m.lambda.push_back(nw.limit);
    }

    const int n = static_cast<int>(m.states.size());
    R lam_rest(1);
    for (int i = 0; i < n; ++i) lam_rest = lam_rest - m.lambda[i];
    if (!(lam_rest > R(0))) lam_rest = R(0); // guard tiny negative float residue
    m.lambda.push_back(lam_rest);
    m.rows.assign(static_cast<size_t>(n) + 1, {});
    m.degrees.assign(static_cast<size_t>(n), {});

    RatMap1D<K> g = restrict_infinity(f);
    for (int i = 0; i < n; ++i) {
        const ENode<K>& nd = tree.nodes[static_cast<size_t>(i)];
        // Image node inside the tree: the parent for expanded nodes; a root
        // can map onto another tree node (recorded at build time as a
        // collision), so roots resolve their image through the restriction.
        int target = nd.parent;
        int img_deg = nd.local_deg;
        if (target < 0) {
            ProjPt<K> img = g.apply(nd.point);
            for (int q = 0; q < n; ++q)
                if (same_point(img, tree.nodes[static_cast<size_t>(q)].point)) {
                    target = q;
                    img_deg = g.local_degree(nd.point);
                    break;
                }
        }
        if (nd.indet_index < 0) {
            if (target < 0)
                throw IllConditioned("non-root tree node without an image edge");
            m.degrees[i][target] = img_deg;
            m.rows[i][target] = R(img_deg) * m.lambda[static_cast<size_t>(target)] / (rD * m.lambda[static_cast<size_t>(i)]);
        } else {
            const long alpha = ipts.at(static_cast<size_t>(nd.indet_index)).second;
            for (int q = 0; q < n; ++q) {
                const long dq = alpha + ((q == target) ? img_deg : 0);
                m.degrees[i][q] = dq;
                m.rows[i][q] = R(dq) * m.lambda[static_cast<size_t>(q)] / (rD * m.lambda[static_cast<size_t>(i)]);
            }
            if (lam_rest > R(0))
                m.rows[i][n] = R(alpha) * lam_rest / (rD * m.lambda[static_cast<size_t>(i)]);
        }
    }

    // REST row.
    if (!(lam_rest > R(0)) || mode == RestMode::Absorb) {
        m.rows[static_cast<size_t>(n)][n] = R(1);
    } else {
        // One step out of the lumped deep tree surfaces at an explicit leaf b
        // with probability (d'/D) * lambda_b / lambda_rest and stays deep
        // otherwise (exactly d'/D when the leaf shells are complete).
        const R ratio = R(f.dprime) / rD;
        R acc(0);
        for (int b = 0; b < n; ++b) {
            if (!tree.nodes[static_cast<size_t>(b)].children.empty()) continue;
            const R share = ratio * m.lambda[static_cast<size_t>(b)] / lam_rest;
            m.rows[static_cast<size_t>(n)][b] = share;
            acc = acc + share;
        }
        m.rows[static_cast<size_t>(n)][n] = R(1) - acc;
    }
    return m;
}

// Both closed forms of the measure of the cylinder [word]:
//     nu = lambda_{w0} * prod_i a_{wi}^{w(i+1)}        (product of transitions)
//     nu = lambda_{wn} * prod_i d_{wi,w(i+1)} / D      (product of degrees)
// They agree identically (the lambda factors telescope); both are returned so
// callers can assert the identity at their backend's precision.
template <class K>
struct CylinderMeasure {
    WeightReal<K> product_form;
    WeightReal<K> degree_form;
};

template <class K>
CylinderMeasure<K> cylinder_measure(const SubshiftModel<K>& m, const std::vector<int>& word) {
    using R = WeightReal<K>;
    if (word.empty()) return {R(1), R(1)};
    const int n = static_cast<int>(m.states.size());
    for (int s : word)
        if (s < 0 || s >= n)
            throw InadmissibleWord("cylinder words are over explicit states only");
    R prod = m.lambda[static_cast<size_t>(word.front())];
    R degf = m.lambda[static_cast<size_t>(word.back())];
    const R rD(m.D);
    for (size_t k = 0; k + 1 < word.size(); ++k) {
        const long dq = m.d(word[k], word[k + 1]);
        if (dq <= 0)
            throw InadmissibleWord("word contains a forbidden transition at position " +
                                   std::to_string(k));
        prod = prod * m.a(word[k], word[k + 1]);
        degf = degf * R(dq) / rD;
    }
    return {prod, degf};
}

template <class K>
struct InvarianceReport {
    WeightReal<K> max_row_dev;        // max |row sum - 1| over all rows, REST included
    WeightReal<K> max_stationary_dev; // max |sum_p lambda_p a_p^q - lambda_q| over explicit q
    WeightReal<K> rest_leakage;       // the same imbalance for the REST column, kept separate
};

template <class K>
InvarianceReport<K> verify_invariance(const SubshiftModel<K>& m) {
    using R = WeightReal<K>;
    using detail_weights::w_abs;
    const int n = static_cast<int>(m.states.size());
    InvarianceReport<K> rep{R(0), R(0), R(0)};
    for (int i = 0; i <= n; ++i) {
        R s(0);
        for (const auto& [j, a] : m.rows[static_cast<size_t>(i)]) {
            (void)j;
            s = s + a;
        }
        const R dev = w_abs(s - R(1));
        if (rep.max_row_dev < dev) rep.max_row_dev = dev;
    }
    for (int q = 0; q <= n; ++q) {
        R s(0);
        for (int i = 0; i <= n; ++i) {
            auto it = m.rows[static_cast<size_t>(i)].find(q);
            if (it != m.rows[static_cast<size_t>(i)].end())
                s = s + it->second * m.lambda[static_cast<size_t>(i)];
        }
        const R dev = w_abs(s - m.lambda[static_cast<size_t>(q)]);
        if (q == n)
            rep.rest_leakage = dev;
        else if (rep.max_stationary_dev < dev)
            rep.max_stationary_dev = dev;
    }
    return rep;
}

// Mixing-time summary of the positivity pattern. least_n[p][q] is the least
// power n <= n_max with (A^n)_{p,q} > 0 (equivalently the length of the
// shortest directed path), or -1. full_cover_n[p] is the least n at which the
// whole explicit alphabet is reached from p *simultaneously* — for a node at
// depth j this is expected to be j+1 (descend to the root indeterminacy
// point, then one blow-up step fans out over every state). REST connectivity
// is reported separately and never gates the explicit verdict.
struct TransitivityReport {
    std::vector<std::vector<int>> least_n;
    std::vector<int> full_cover_n;
    std::vector<int> rest_reach; // least n with (A^n)_{p,REST} > 0, -1 if never
    std::vector<int> rest_out;   // least n with (A^n)_{REST,q} > 0, -1 if never
    bool all_pairs_reachable = false;
};

template <class K>
TransitivityReport transitivity_check(const SubshiftModel<K>& m, int n_max) {
    using R = WeightReal<K>;
    const int n = static_cast<int>(m.states.size());
    if (n_max < 1) throw DegenerateInput("transitivity horizon must be at least 1");

    // adjacency over explicit + REST
    std::vector<std::vector<int>> succ(static_cast<size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        for (const auto& [j, a] : m.rows[static_cast<size_t>(i)])
            if (a > R(0)) succ[static_cast<size_t>(i)].push_back(j);

    TransitivityReport rep;
    rep.least_n.assign(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n), -1));
    rep.full_cover_n.assign(static_cast<size_t>(n), -1);
    rep.rest_reach.assign(static_cast<size_t>(n), -1);
    rep.rest_out.assign(static_cast<size_t>(n), -1);
    rep.all_pairs_reachable = true;

    auto sweep = [&](int src, std::vector<int>* row, int* cover, int* to_rest) {
        std::vector<char> cur(static_cast<size_t>(n) + 1, 0);
        cur[static_cast<size_t>(src)] = 1;
        for (int step = 1; step <= n_max; ++step) {
            std::vector<char> nxt(static_cast<size_t>(n) + 1, 0);
            for (int i = 0; i <= n; ++i)
                if (cur[static_cast<size_t>(i)])
                    for (int j : succ[static_cast<size_t>(i)]) nxt[static_cast<size_t>(j)] = 1;
            bool explicit_full = true;
            for (int q = 0; q <= n; ++q) {
                if (!nxt[static_cast<size_t>(q)]) {
                    if (q < n) explicit_full = false;
                    continue;
                }
                if (q == n) {
                    if (to_rest && *to_rest < 0) *to_rest = step;
                } else if (row && (*row)[static_cast<size_t>(q)] < 0) {
                    (*row)[static_cast<size_t>(q)] = step;
                }
            }
            if (explicit_full && cover && *cover < 0) *cover = step;
            cur.swap(nxt);
        }
    };

    for (int p = 0; p < n; ++p)
        sweep(p, &rep.least_n[static_cast<size_t>(p)], &rep.full_cover_n[static_cast<size_t>(p)],
              &rep.rest_reach[static_cast<size_t>(p)]);

    { // REST as a source
        std::vector<int> row(static_cast<size_t>(n), -1);
        sweep(n, &row, nullptr, nullptr);
        rep.rest_out = row;
    }

    for (int p = 0; p < n && rep.all_pairs_reachable; ++p)
        for (int q = 0; q < n; ++q)
            if (rep.least_n[static_cast<size_t>(p)][static_cast<size_t>(q)] < 0) {
                rep.all_pairs_reachable = false;
                break;
            }
    return rep;
}

// Draw one word of the given length. The initial symbol is drawn from lambda
// renormalized over the explicit states; each step follows the sampled row.
// Draw sequence (documented for reproducibility): one unit draw for the
// initial symbol, then one unit draw per step, consumed from
// RandomStream(seed, restart) where restart counts Resample retries.
template <class K>
std::vector<int> sample_itinerary(const SubshiftModel<K>& m, int length, std::uint64_t seed,
                                  RestPolicy policy = RestPolicy::Allow, int max_restarts = 1000) {
    using R = WeightReal<K>;
    if (length < 0) throw DegenerateInput("itinerary length must be nonnegative");
    if (length == 0) return {};
    const int n = static_cast<int>(m.states.size());
    const int rest = m.rest();

    double total = 0;
    for (int i = 0; i < n; ++i) total += weight_to_double(m.lambda[static_cast<size_t>(i)]);
    if (!(total > 0)) throw DegenerateInput("model carries no explicit mass to sample from");

    for (int restart = 0; restart <= max_restarts; ++restart) {
        RandomStream rng(seed, static_cast<std::uint64_t>(restart));
        std::vector<int> word;
        word.reserve(static_cast<size_t>(length));

        double x = rng.next_unit() * total;
        int cur = n - 1;
        for (int i = 0; i < n; ++i) {
            x -= weight_to_double(m.lambda[static_cast<size_t>(i)]);
            if (x < 0) {
                cur = i;
                break;
            }
        }
        word.push_back(cur);

        bool rejected = false;
        while (static_cast<int>(word.size()) < length) {
            double y = rng.next_unit();
            int nxt = -1;
            const auto& row = m.rows[static_cast<size_t>(cur)];
            for (const auto& [j, a] : row) {
                y -= weight_to_double(a);
                nxt = j;
                if (y < 0) break;
            }
            if (nxt < 0) throw IllConditioned("empty transition row during sampling");
            if (nxt == rest) {
                if (policy == RestPolicy::Truncate) return word;
                if (policy == RestPolicy::Throw)
                    throw RestEntered("sampled itinerary entered the lumped REST state");
                if (policy == RestPolicy::Resample) {
                    rejected = true;
                    break;
                }
            }
            word.push_back(nxt);
            cur = nxt;
        }
        if (!rejected) return word;
    }
    throw RestEntered("itinerary sampling exhausted " + std::to_string(max_restarts) +
                      " restarts without avoiding REST");
}

} // namespace infdyn
