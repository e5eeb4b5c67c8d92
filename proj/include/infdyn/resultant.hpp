#pragma once

// Resultants of bivariate polynomials with respect to one variable.
//
// The Sylvester matrix is kept in its formal shape (entries are univariate
// polynomials in the surviving variable); its determinant is computed by
// evaluation at sample points followed by interpolation. Determinant and
// evaluation commute, so specializing the variable never changes the matrix
// shape and no degree-drop correction is needed.
//
// Float backend: samples on the unit circle, inverse DFT. Exact backend:
// integer sample points, Newton interpolation, exact Gaussian elimination.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "infdyn/bipoly.hpp"
#include "infdyn/errors.hpp"
#include "infdyn/scalars.hpp"

namespace infdyn {

namespace detail_res {

// Coefficient layers of p in the eliminated variable: layer[j][i] is the
// coefficient of elim^j * keep^i.
template <class K>
std::vector<std::vector<K>> layers(const BiPoly<K>& p, Var elim) {
    int de = 0, dk = 0;
    for (auto& [k, c] : p.terms) {
        int e = (elim == Var::w) ? k.second : k.first;
        int s = (elim == Var::w) ? k.first : k.second;
        de = std::max(de, e);
        dk = std::max(dk, s);
    }
    std::vector<std::vector<K>> L(de + 1, std::vector<K>(dk + 1, K{}));
    for (auto& [k, c] : p.terms) {
        int e = (elim == Var::w) ? k.second : k.first;
        int s = (elim == Var::w) ? k.first : k.second;
        L[e][s] += c;
    }
    return L;
}

template <class K>
K eval_layer(const std::vector<K>& coeffs, const K& x) {
    K acc{};
    for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i) acc = acc * x + coeffs[i];
    return acc;
}

inline Cx det_numeric(std::vector<std::vector<Cx>>& M) {
    int n = static_cast<int>(M.size());
    Eigen::MatrixXcd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = M[i][j];
    return A.partialPivLu().determinant();
}

inline RatCx det_exact(std::vector<std::vector<RatCx>>& M) {
    int n = static_cast<int>(M.size());
    RatCx det = RatCx(1);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (!M[r][col].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) return RatCx(0);
        if (piv != col) {
            std::swap(M[piv], M[col]);
            det = RatCx(0) - det;
        }
        det = det * M[col][col];
        RatCx inv = RatCx(1) / M[col][col];
        for (int r = col + 1; r < n; ++r) {
            if (M[r][col].is_zero()) continue;
            RatCx f = M[r][col] * inv;
            for (int cc = col; cc < n; ++cc) M[r][cc] = M[r][cc] - f * M[col][cc];
        }
    }
    return det;
}

// Evaluate the Sylvester determinant of (p, q) in `elim` at keep-value x.
template <class K>
K sylvester_at(const std::vector<std::vector<K>>& lp, const std::vector<std::vector<K>>& lq,
               const K& x) {
    int m = static_cast<int>(lp.size()) - 1;
    int n = static_cast<int>(lq.size()) - 1;
    std::vector<K> a(m + 1), b(n + 1);
    for (int j = 0; j <= m; ++j) a[j] = eval_layer(lp[j], x);
    for (int j = 0; j <= n; ++j) b[j] = eval_layer(lq[j], x);
    int N = m + n;
    std::vector<std::vector<K>> M(N, std::vector<K>(N, K{}));
    for (int r = 0; r < n; ++r)
        for (int j = 0; j <= m; ++j) M[r][r + (m - j)] = a[j];
    for (int r = 0; r < m; ++r)
        for (int j = 0; j <= n; ++j) M[n + r][r + (n - j)] = b[j];
    if constexpr (scalar_traits<K>::is_exact)
        return det_exact(M);
    else
        return det_numeric(M);
}

inline void trim_trailing(std::vector<Cx>& c) {
    double mx = 0;
    for (auto& x : c) mx = std::max(mx, std::abs(x));
    while (!c.empty() && std::abs(c.back()) <= 1e-10 * std::max(mx, 1e-300)) c.pop_back();
    for (auto& x : c)
        if (std::abs(x) <= 1e-12 * mx) x = 0;
}

inline void trim_trailing(std::vector<RatCx>& c) {
    while (!c.empty() && c.back().is_zero()) c.pop_back();
}

} // namespace detail_res

// Resultant of p and q eliminating `elim`; returns the coefficients of the
// resulting univariate polynomial in the other variable, ascending. An empty
// vector means the resultant is identically zero (the inputs share a factor
// involving the eliminated variable).
template <class K>
std::vector<K> resultant(const BiPoly<K>& p, const BiPoly<K>& q, Var elim) {
    if (p.is_zero() || q.is_zero())
        throw DegenerateInput("resultant of a zero polynomial");
    auto lp = detail_res::layers(p, elim);
    auto lq = detail_res::layers(q, elim);
    int m = static_cast<int>(lp.size()) - 1;
    int n = static_cast<int>(lq.size()) - 1;
    if (m == 0 && n == 0) return {scalar_traits<K>::from_int(1)};
    if (m == 0) {
        // Res(p, q) = p^{deg q} when p does not involve the variable.
        std::vector<K> r{scalar_traits<K>::from_int(1)};
        for (int k = 0; k < n; ++k) {
            std::vector<K> nr(r.size() + lp[0].size() - 1, K{});
            for (size_t i = 0; i < r.size(); ++i)
                for (size_t j = 0; j < lp[0].size(); ++j) nr[i + j] += r[i] * lp[0][j];
            r = std::move(nr);
        }
        detail_res::trim_trailing(r);
        return r;
    }
    if (n == 0) {
        std::vector<K> r{scalar_traits<K>::from_int(1)};
        for (int k = 0; k < m; ++k) {
            std::vector<K> nr(r.size() + lq[0].size() - 1, K{});
            for (size_t i = 0; i < r.size(); ++i)
                for (size_t j = 0; j < lq[0].size(); ++j) nr[i + j] += r[i] * lq[0][j];
            r = std::move(nr);
        }
        detail_res::trim_trailing(r);
        return r;
    }

    int dzp = 0, dzq = 0;
    for (auto& row : lp) dzp = std::max(dzp, static_cast<int>(row.size()) - 1);
    for (auto& row : lq) dzq = std::max(dzq, static_cast<int>(row.size()) - 1);
    int B = n * dzp + m * dzq; // degree bound on det of the formal matrix
    int M = B + 1;

    if constexpr (scalar_traits<K>::is_exact) {
        // Newton interpolation at integer nodes 0, 1, -1, 2, -2, ...
        std::vector<K> nodes(M), vals(M);
        for (int i = 0; i < M; ++i) {
            long v = (i + 1) / 2;
            if (i % 2 == 0) v = -v;
            nodes[i] = scalar_traits<K>::from_int(v);
            vals[i] = detail_res::sylvester_at(lp, lq, nodes[i]);
        }
        // Divided differences.
        std::vector<K> dd = vals;
        for (int j = 1; j < M; ++j)
            for (int i = M - 1; i >= j; --i)
                dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - j]);
        // Expand the Newton form into monomials.
        std::vector<K> poly{dd[M - 1]};
        for (int i = M - 2; i >= 0; --i) {
            std::vector<K> np(poly.size() + 1, K{});
            for (size_t k = 0; k < poly.size(); ++k) {
                np[k + 1] += poly[k];
                np[k] = np[k] - nodes[i] * poly[k];
            }
            np[0] += dd[i];
            poly = std::move(np);
        }
        detail_res::trim_trailing(poly);
        return poly;
    } else {
        // Samples on the unit circle, inverse DFT.
        std::vector<Cx> vals(M);
        for (int k = 0; k < M; ++k) {
            double th = 2 * M_PI * k / M;
            vals[k] = detail_res::sylvester_at(lp, lq, Cx(std::cos(th), std::sin(th)));
        }
        std::vector<Cx> poly(M, Cx(0));
        for (int j = 0; j < M; ++j) {
            Cx acc = 0;
            for (int k = 0; k < M; ++k) {
                double th = -2 * M_PI * j * k / M;
                acc += vals[k] * Cx(std::cos(th), std::sin(th));
            }
            poly[j] = acc / static_cast<double>(M);
        }
        detail_res::trim_trailing(poly);
        return poly;
    }
}

template <class K>
std::vector<K> res_w(const BiPoly<K>& p, const BiPoly<K>& q) {
    return resultant(p, q, Var::w);
}
template <class K>
std::vector<K> res_z(const BiPoly<K>& p, const BiPoly<K>& q) {
    return resultant(p, q, Var::z);
}

} // namespace infdyn
