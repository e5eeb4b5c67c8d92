#pragma once

// JSON and CSV serialization for every result type, plus map-file parsing.
// Rational scalars round-trip bit-exactly as "num/den" strings; floating
// values are printed with 17 significant digits so CSV output is
// byte-deterministic for a given platform.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../../vendor/json.hpp"

#include "bipoly.hpp"
#include "errors.hpp"
#include "escape.hpp"
#include "gclass.hpp"
#include "orbit.hpp"
#include "scalars.hpp"
#include "sphere.hpp"
#include "subshift.hpp"
#include "weights.hpp"

namespace infdyn {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Scalar atoms
// ---------------------------------------------------------------------------

inline std::string num_str(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// rat_str / parse_rat come from the scalar layer; JSON carries rationals as
// "num/den" strings so the exact backend round-trips without loss.
inline Rat rat_parse(const std::string& s) { return parse_rat(s); }

inline json scalar_json(const Cx& c) { return json::array({c.real(), c.imag()}); }
inline json scalar_json(const RatCx& c) { return json::array({rat_str(c.re), rat_str(c.im)}); }
inline json weight_json(double w) { return json(w); }
inline json weight_json(const Rat& w) { return json(rat_str(w)); }

namespace detail_serialize {

inline double json_num(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return rat_parse(j.get<std::string>()).get_d();
    throw ParseError("expected a number");
}

inline Rat json_rat(const json& j) {
    if (j.is_string()) return rat_parse(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long>());
    if (j.is_number()) {
        Rat r(j.get<double>()); // exact binary value of the double
        r.canonicalize();
        return r;
    }
    throw ParseError("expected a rational");
}

template <class K>
K scalar_from(const json& re, const json& im);

template <>
inline Cx scalar_from<Cx>(const json& re, const json& im) {
    return {json_num(re), json_num(im)};
}

template <>
inline RatCx scalar_from<RatCx>(const json& re, const json& im) {
    return {json_rat(re), json_rat(im)};
}

} // namespace detail_serialize

// ---------------------------------------------------------------------------
// Polynomials and maps
// ---------------------------------------------------------------------------

// BiPoly as an array of [z_exp, w_exp, re, im] rows, exponent-sorted.
template <class K>
json bipoly_to_json(const BiPoly<K>& p) {
    json out = json::array();
    for (auto& [k, c] : p.terms) {
        json row = json::array({k.first, k.second});
        json s = scalar_json(c);
        row.push_back(s[0]);
        row.push_back(s[1]);
        out.push_back(row);
    }
    return out;
}

template <class K>
BiPoly<K> bipoly_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("polynomial must be an array of terms");
    BiPoly<K> p;
    for (auto& row : j) {
        if (!row.is_array() || row.size() < 3)
            throw ParseError("polynomial term must be [z_exp, w_exp, re(, im)]");
        int i = row[0].get<int>(), k = row[1].get<int>();
        if (i < 0 || k < 0) throw ParseError("negative exponent in polynomial term");
        json im = row.size() > 3 ? row[3] : json(0);
        K c = detail_serialize::scalar_from<K>(row[2], im);
        p.set(i, k, p.get(i, k) + c);
    }
    p.prune();
    return p;
}

// HomPoly as {"degree": n, "coeffs": [...]} with coefficients listed from the
// top z power down.
template <class K>
json hompoly_to_json(const HomPoly<K>& h) {
    json coeffs = json::array();
    for (int k = h.deg; k >= 0; --k) coeffs.push_back(scalar_json(h.coeff(k)));
    return json{{"degree", h.deg}, {"coeffs", coeffs}};
}

template <class K>
HomPoly<K> hompoly_from_json(const json& j) {
    int deg = j.at("degree").get<int>();
    if (deg < 0) throw ParseError("negative homogeneous degree");
    const json& coeffs = j.at("coeffs");
    if (static_cast<int>(coeffs.size()) != deg + 1)
        throw ParseError("homogeneous coefficient count does not match the degree");
    HomPoly<K> h(deg);
    for (int k = 0; k <= deg; ++k) {
        const json& c = coeffs[static_cast<size_t>(deg - k)];
        h.coeff(k) = detail_serialize::scalar_from<K>(c[0], c[1]);
    }
    return h;
}

template <class K>
json gmap_to_json(const GMap<K>& m) {
    json factors = json::array();
    for (auto& f : m.factors) {
        json a = scalar_json(K(f.a)), b = scalar_json(K(f.b));
        factors.push_back(json{{"a", a}, {"b", b}, {"alpha", f.alpha}});
    }
    return json{{"factors", factors},      {"P1", hompoly_to_json(m.P1)},
                {"P2", hompoly_to_json(m.P2)}, {"Q1", bipoly_to_json(m.Q1)},
                {"Q2", bipoly_to_json(m.Q2)},  {"d", m.d},
                {"dprime", m.dprime},          {"D", m.D}};
}

// Accepts either a raw pair {"f1": terms, "f2": terms} or the normal-form
// schema; the normal form is reassembled into the full polynomials first, so
// both routes go through the same validation.
template <class K>
GMap<K> gmap_from_json(const json& j) {
    if (j.contains("f1") && j.contains("f2")) {
        PolyPair<K> f{bipoly_from_json<K>(j.at("f1")), bipoly_from_json<K>(j.at("f2"))};
        return from_polynomials(f);
    }
    if (!(j.contains("factors") && j.contains("P1") && j.contains("P2") && j.contains("Q1") &&
          j.contains("Q2")))
        throw ParseError("map file needs either {f1, f2} or {factors, P1, P2, Q1, Q2}");
    HomPoly<K> P1 = hompoly_from_json<K>(j.at("P1"));
    HomPoly<K> P2 = hompoly_from_json<K>(j.at("P2"));
    BiPoly<K> Q1 = bipoly_from_json<K>(j.at("Q1"));
    BiPoly<K> Q2 = bipoly_from_json<K>(j.at("Q2"));
    GMap<K> probe;
    for (auto& fj : j.at("factors")) {
        LinearFactor<K> lf;
        const json& a = fj.at("a");
        const json& b = fj.at("b");
        lf.a = a.is_array() ? detail_serialize::scalar_from<K>(a[0], a[1])
                            : detail_serialize::scalar_from<K>(a, json(0));
        lf.b = b.is_array() ? detail_serialize::scalar_from<K>(b[0], b[1])
                            : detail_serialize::scalar_from<K>(b, json(0));
        lf.alpha = fj.at("alpha").get<int>();
        if (lf.alpha < 1) throw ParseError("factor multiplicity must be >= 1");
        probe.factors.push_back(lf);
    }
    HomPoly<K> g = probe.ginf();
    BiPoly<K> gb = g.to_bipoly();
    PolyPair<K> f{gb * P1.to_bipoly() + Q1, gb * P2.to_bipoly() + Q2};
    return from_polynomials(f);
}

template <class K>
GMap<K> gmap_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open map file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw ParseError(std::string("map file is not valid JSON: ") + e.what());
    }
    return gmap_from_json<K>(j);
}

// ---------------------------------------------------------------------------
// Trees, weights, measures
// ---------------------------------------------------------------------------

template <class K>
json etree_to_json(const ETree<K>& t) {
    json nodes = json::array();
    for (int i = 0; i < static_cast<int>(t.nodes.size()); ++i) {
        const ENode<K>& n = t.nodes[static_cast<size_t>(i)];
        nodes.push_back(json{{"id", i},
                             {"depth", n.depth},
                             {"point", json::array({scalar_json(n.point.x), scalar_json(n.point.y)})},
                             {"parent_id", n.parent},
                             {"edge_mult", n.local_deg},
                             {"flags", json{{"indet_index", n.indet_index},
                                            {"collision", n.collision},
                                            {"leaf", n.children.empty()}}}});
    }
    return json{{"nodes", nodes}, {"max_depth", t.max_depth}, {"truncated", t.truncated}};
}

template <class K>
std::string etree_to_csv(const ETree<K>& t) {
    std::ostringstream out;
    out << "id,depth,parent_id,edge_mult,indet_index,collision,point_x_re,point_x_im,point_y_re,"
           "point_y_im\n";
    for (int i = 0; i < static_cast<int>(t.nodes.size()); ++i) {
        const ENode<K>& n = t.nodes[static_cast<size_t>(i)];
        Cx x = to_cx(n.point.x), y = to_cx(n.point.y);
        out << i << ',' << n.depth << ',' << n.parent << ',' << n.local_deg << ','
            << n.indet_index << ',' << (n.collision ? 1 : 0) << ',' << num_str(x.real()) << ','
            << num_str(x.imag()) << ',' << num_str(y.real()) << ',' << num_str(y.imag()) << '\n';
    }
    return out.str();
}

template <class K>
json weight_table_to_json(const WeightTable<K>& t) {
    json nodes = json::array();
    for (int i = 0; i < static_cast<int>(t.node.size()); ++i) {
        const NodeWeights<K>& n = t.node[static_cast<size_t>(i)];
        json seq = json::array();
        for (auto& v : n.seq) seq.push_back(weight_json(v));
        json hits = json::array();
        for (auto& [step, idx] : n.hits) hits.push_back(json::array({step, idx}));
        nodes.push_back(json{{"id", i},
                             {"limit", weight_json(n.limit)},
                             {"stabilized", n.stabilized},
                             {"stabilization_depth", n.stabilization_depth},
                             {"closed_form_tail", n.closed_form_tail},
                             {"seq", seq},
                             {"hits", hits}});
    }
    return json{{"n_max", t.n_max},
                {"D", t.D},
                {"dprime", t.dprime},
                {"sum_at_nmax", weight_json(t.sum_at_nmax)},
                {"residual", weight_json(t.residual)},
                {"nodes", nodes}};
}

template <class K>
std::string weight_table_to_csv(const ETree<K>& tree, const WeightTable<K>& t) {
    std::ostringstream out;
    out << "id,depth,limit,stabilized,stabilization_depth,closed_form_tail\n";
    for (int i = 0; i < static_cast<int>(t.node.size()); ++i) {
        const NodeWeights<K>& n = t.node[static_cast<size_t>(i)];
        out << i << ',' << tree.nodes[static_cast<size_t>(i)].depth << ','
            << num_str(weight_to_double(n.limit)) << ',' << (n.stabilized ? 1 : 0) << ','
            << n.stabilization_depth << ',' << (n.closed_form_tail ? 1 : 0) << '\n';
    }
    return out.str();
}

template <class K>
json trace_to_json(const TraceMeasure<K>& t) {
    json atoms = json::array();
    for (auto& a : t.atoms)
        atoms.push_back(json{{"point", json::array({scalar_json(a.point.x), scalar_json(a.point.y)})},
                             {"weight", weight_json(a.weight)},
                             {"depth", a.depth},
                             {"stabilization_depth", a.stabilization_depth}});
    return json{{"atoms", atoms}, {"residual", weight_json(t.residual)}};
}

// ---------------------------------------------------------------------------
// Subshift model
// ---------------------------------------------------------------------------

template <class K>
json model_to_json(const SubshiftModel<K>& m) {
    json states = json::array();
    for (int i = 0; i < static_cast<int>(m.states.size()); ++i) {
        const SubState<K>& s = m.states[static_cast<size_t>(i)];
        states.push_back(json{{"id", i},
                              {"node", s.node},
                              {"depth", s.depth},
                              {"indet_index", s.indet_index},
                              {"point", json::array({scalar_json(s.point.x), scalar_json(s.point.y)})},
                              {"lambda", weight_json(m.lambda[static_cast<size_t>(i)])}});
    }
    json triplets = json::array();
    for (int i = 0; i < static_cast<int>(m.rows.size()); ++i)
        for (auto& [q, a] : m.rows[static_cast<size_t>(i)])
            triplets.push_back(json{{"from", i},
                                    {"to", q},
                                    {"value", weight_json(a)},
                                    {"degree", m.d(i, q)}});
    return json{{"D", m.D},
                {"dprime", m.dprime},
                {"rest_mode", m.mode == RestMode::Absorb ? "absorb" : "reinject"},
                {"rest_index", m.rest()},
                {"rest_lambda", weight_json(m.lambda[static_cast<size_t>(m.rest())])},
                {"states", states},
                {"matrix", triplets}};
}

template <class K>
std::string model_matrix_to_csv(const SubshiftModel<K>& m) {
    std::ostringstream out;
    int n = static_cast<int>(m.states.size());
    out << "from";
    for (int j = 0; j < n; ++j) out << ",s" << j;
    out << ",REST\n";
    for (int i = 0; i <= n; ++i) {
        if (i < n)
            out << 's' << i;
        else
            out << "REST";
        for (int j = 0; j <= n; ++j) out << ',' << num_str(weight_to_double(m.a(i, j)));
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Boxes, certificates, orbits
// ---------------------------------------------------------------------------

inline json boxes_to_json(const BoxSet& bs) {
    json arr = json::array();
    for (auto& b : bs.boxes)
        arr.push_back(json{{"id", b.id},
                           {"node", b.node},
                           {"chart", chart_name(b.chart)},
                           {"center", scalar_json(b.center)},
                           {"radius", b.radius},
                           {"v_bound", b.v_bound}});
    return json{{"r", bs.r},
                {"eps", bs.eps},
                {"shrink_rounds", bs.shrink_rounds},
                {"special_layout", bs.special_layout},
                {"skipped_separation", bs.skipped_separation},
                {"boxes", arr}};
}

inline json certificate_to_json(const BoxCertificate& c) {
    return json{{"src", c.src},
                {"dst", c.dst},
                {"samples_vertical", c.samples_vertical},
                {"samples_interior", c.samples_interior},
                {"margin_vertical", c.margin_vertical},
                {"margin_horizontal", c.margin_horizontal},
                {"overlap_hits", c.overlap_hits},
                {"indeterminacy_clear", c.indeterminacy_clear}};
}

// Orbit CSV: coord1 is the base coordinate as "re|im"; coord2 is the fiber in
// log-polar form "log_abs|arg" (the only faithful representation once the
// fiber leaves floating range).
inline std::string orbit_to_csv(const OrbitRecord& rec) {
    std::ostringstream out;
    out << "step,chart,coord1,coord2,log_norm,box_id\n";
    for (auto& s : rec.steps) {
        out << s.step << ',' << chart_name(s.chart) << ',' << num_str(s.base.real()) << '|'
            << num_str(s.base.imag()) << ',' << num_str(s.log_fiber) << '|'
            << num_str(s.arg_fiber) << ',' << num_str(s.log_norm) << ',' << s.box << '\n';
    }
    return out.str();
}

inline json green_seq_to_json(const GreenSeq& g) {
    return json{{"u", g.u}, {"c", g.c}, {"K_fit", g.K_fit}, {"monotone", g.monotone}};
}

inline json region_check_to_json(const RegionCheck& r) {
    return json{{"samples", r.samples},
                {"violations", r.violations},
                {"margin_contraction", r.margin_contraction},
                {"margin_lower", r.margin_lower},
                {"margin_fiber", r.margin_fiber},
                {"margin_proof", r.margin_proof}};
}

// ---------------------------------------------------------------------------
// Escape reports
// ---------------------------------------------------------------------------

inline json growth_to_json(const GrowthExponent& g) {
    return json{{"indet_index", g.indet_index},
                {"slope", g.slope},
                {"slope_stderr", g.slope_stderr},
                {"snapped", g.snapped},
                {"l", g.l},
                {"D", g.D},
                {"shells", g.shells},
                {"samples_used", g.samples_used},
                {"samples_rejected", g.samples_rejected}};
}

inline json escape_report_to_json(const EscapeReport& r) {
    json exps = json::array();
    for (auto& g : r.exponents) exps.push_back(growth_to_json(g));
    json law{{"birkhoff_mean", r.law.birkhoff_mean},
             {"birkhoff_target", r.law.birkhoff_target},
             {"mc_stderr", r.law.mc_stderr},
             {"words_sampled", r.law.words_sampled},
             {"word_length", r.law.word_length},
             {"orbits_checked", r.law.orbits_checked},
             {"jump_orbits", r.law.jump_orbits},
             {"checkpoints", r.law.checkpoints},
             {"envelope_C", r.law.envelope_C},
             {"envelope_stability", r.law.envelope_stability}};
    return json{{"range", json::array({r.range_lo, r.range_hi})},
                {"range_note", r.range_note},
                {"mean", r.mean},
                {"lambda_outside", r.lambda_outside},
                {"exponents", exps},
                {"law", law}};
}

inline std::string escape_rows_to_csv(const EscapeLawReport& r) {
    std::ostringstream out;
    out << "orbit,n,empirical,predicted,deviation,envelope\n";
    for (int i = 0; i < static_cast<int>(r.orbit_rows.size()); ++i)
        for (auto& row : r.orbit_rows[static_cast<size_t>(i)])
            out << i << ',' << row.n << ',' << num_str(row.empirical) << ','
                << num_str(row.predicted) << ',' << num_str(row.deviation) << ','
                << num_str(row.envelope) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << content;
}

inline void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace infdyn
