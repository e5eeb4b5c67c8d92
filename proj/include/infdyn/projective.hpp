#pragma once

// Points of the projective line (used both for directions at infinity and
// for the restricted dynamics on the line at infinity), plus the affine
// charts used when iterating near that line.

#include <cmath>
#include <complex>
#include <utility>

#include "infdyn/errors.hpp"
#include "infdyn/scalars.hpp"

namespace infdyn {

inline constexpr double eps_match = 1e-9; // chordal tolerance for point identity

// [x : y]; the canonical representative scales the larger-modulus entry to 1.
template <class K>
struct ProjPt {
    K x{};
    K y{};

    static ProjPt from_affine(const K& u) { return {u, scalar_traits<K>::from_int(1)}; }
    static ProjPt at_infinity() { return {scalar_traits<K>::from_int(1), K{}}; }

    bool is_valid() const {
        return !(scalar_traits<K>::is_zero(x) && scalar_traits<K>::is_zero(y));
    }

    bool is_infinite() const {
        if constexpr (scalar_traits<K>::is_exact)
            return scalar_traits<K>::is_zero(y);
        else {
            double s = std::max(std::sqrt(norm2_d(x)), std::sqrt(norm2_d(y)));
            return std::sqrt(norm2_d(y)) <= eps_zero * std::max(s, 1e-300);
        }
    }

    void canonicalize() {
        if (!is_valid()) throw DegenerateInput("projective point [0:0]");
        bool by_x;
        if constexpr (scalar_traits<K>::is_exact)
            by_x = norm2(x) > norm2(y);
        else
            by_x = norm2_d(x) > norm2_d(y);
        K s = by_x ? x : y;
        x = x / s;
        y = y / s;
    }

    ProjPt canonical() const {
        ProjPt p = *this;
        p.canonicalize();
        return p;
    }

    // Affine coordinate x/y in double precision.
    Cx affine_cx() const {
        if (is_infinite())
            throw DegenerateInput("affine coordinate of the point at infinity");
        return to_cx(x) / to_cx(y);
    }
};

// Bit size of a point's exact representation; 0 on the floating backend.
// Forward walks under a nonlinear map can double this every step, and a
// point of huge height can no longer coincide with any point of small
// height, so exact walkers stop once it passes max_exact_walk_bits.
inline constexpr size_t max_exact_walk_bits = 1u << 16;

inline size_t proj_bits(const ProjPt<Cx>&) { return 0; }
inline size_t proj_bits(const ProjPt<RatCx>& p) {
    auto rat_bits = [](const Rat& q) {
        return mpz_sizeinbase(q.get_num().get_mpz_t(), 2) +
               mpz_sizeinbase(q.get_den().get_mpz_t(), 2);
    };
    return rat_bits(p.x.re) + rat_bits(p.x.im) + rat_bits(p.y.re) + rat_bits(p.y.im);
}

template <class K>
double chordal(const ProjPt<K>& p, const ProjPt<K>& q) {
    Cx x1 = to_cx(p.x), y1 = to_cx(p.y), x2 = to_cx(q.x), y2 = to_cx(q.y);
    double s1 = std::sqrt(std::norm(x1) + std::norm(y1));
    double s2 = std::sqrt(std::norm(x2) + std::norm(y2));
    return std::abs(x1 * y2 - x2 * y1) / std::max(s1 * s2, 1e-300);
}

template <class K>
bool same_point(const ProjPt<K>& p, const ProjPt<K>& q, double tol = eps_match) {
    if constexpr (scalar_traits<K>::is_exact)
        return (p.x * q.y - q.x * p.y).is_zero();
    else
        return chordal(p, q) <= tol;
}

// ---------------------------------------------------------------------------
// Charts around the line at infinity (float precision; used by the orbit and
// escape machinery).
//
//   affine : (z, w)
//   u_v    : u = z/w, v = 1/w   base u parametrizes [u:1:0], fiber v
//   up_vp  : u' = w/z, v' = 1/z base u' parametrizes [1:u':0], fiber v'
// ---------------------------------------------------------------------------

enum class Chart { affine, u_v, up_vp };

inline const char* chart_name(Chart c) {
    switch (c) {
        case Chart::affine: return "affine";
        case Chart::u_v: return "u_v";
        default: return "up_vp";
    }
}

struct ChartPoint {
    Chart chart = Chart::affine;
    Cx base{};  // z (affine), u, or u'
    Cx fiber{}; // w (affine), v, or v'
};

inline std::pair<Cx, Cx> chart_to_affine(const ChartPoint& p) {
    switch (p.chart) {
        case Chart::affine:
            return {p.base, p.fiber};
        case Chart::u_v:
            if (std::abs(p.fiber) < 1e-300)
                throw DegenerateInput("point on the line at infinity has no affine coordinates");
            return {p.base / p.fiber, 1.0 / p.fiber};
        default:
            if (std::abs(p.fiber) < 1e-300)
                throw DegenerateInput("point on the line at infinity has no affine coordinates");
            return {1.0 / p.fiber, p.base / p.fiber};
    }
}

inline ChartPoint affine_to_chart(Cx z, Cx w, Chart target) {
    switch (target) {
        case Chart::affine:
            return {Chart::affine, z, w};
        case Chart::u_v:
            if (std::abs(w) < 1e-300)
                throw DegenerateInput("w = 0 is not covered by the (u, v) chart");
            return {Chart::u_v, z / w, 1.0 / w};
        default:
            if (std::abs(z) < 1e-300)
                throw DegenerateInput("z = 0 is not covered by the (u', v') chart");
            return {Chart::up_vp, w / z, 1.0 / z};
    }
}

inline ChartPoint convert(const ChartPoint& p, Chart target) {
    if (p.chart == target) return p;
    // Direct chart-to-chart conversion stays finite on the line at infinity.
    if (p.chart == Chart::u_v && target == Chart::up_vp) {
        if (std::abs(p.base) < 1e-300)
            throw DegenerateInput("u = 0 is not covered by the (u', v') chart");
        return {Chart::up_vp, 1.0 / p.base, p.fiber / p.base};
    }
    if (p.chart == Chart::up_vp && target == Chart::u_v) {
        if (std::abs(p.base) < 1e-300)
            throw DegenerateInput("u' = 0 is not covered by the (u, v) chart");
        return {Chart::u_v, 1.0 / p.base, p.fiber / p.base};
    }
    auto [z, w] = chart_to_affine(p);
    return affine_to_chart(z, w, target);
}

// Direction at infinity of an affine point, as [z : w].
inline ProjPt<Cx> direction(Cx z, Cx w) { return ProjPt<Cx>{z, w}.canonical(); }

} // namespace infdyn
