#pragma once

// Univariate complex root extraction.
//
// Primary path: Ehrlich-Aberth simultaneous iteration. If it stalls, fall
// back to balanced companion-matrix eigenvalues (Eigen). Raw roots are then
// clustered into (value, multiplicity) pairs: near-multiple roots of a
// degree-n polynomial scatter like residual^(1/m), so clustering is done at
// an adaptive radius, refined through the (m-1)-th derivative, and verified;
// ambiguous clusterings raise IllConditioned.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "infdyn/errors.hpp"
#include "infdyn/scalars.hpp"

namespace infdyn {

inline constexpr double default_eps_cluster = 1e-6;
inline constexpr double root_residual_tol = 1e-13;

struct RootCluster {
    Cx value;
    int mult = 1;
};

namespace detail_roots {

// Evaluate p and p' at x; coefficients ascending.
inline void horner2(const std::vector<Cx>& c, const Cx& x, Cx& p, Cx& dp) {
    p = c.back();
    dp = 0;
    for (int k = static_cast<int>(c.size()) - 2; k >= 0; --k) {
        dp = dp * x + p;
        p = p * x + c[k];
    }
}

// Backward-error scale: sum |c_k| |x|^k.
inline double poly_scale(const std::vector<Cx>& c, const Cx& x) {
    double ax = std::abs(x), s = 0, pw = 1;
    for (auto& ck : c) {
        s += std::abs(ck) * pw;
        pw *= ax;
    }
    return std::max(s, 1e-300);
}

inline std::vector<Cx> derivative(const std::vector<Cx>& c) {
    std::vector<Cx> d;
    for (size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
    if (d.empty()) d.push_back(Cx(0));
    return d;
}

inline std::vector<Cx> companion_roots(const std::vector<Cx>& c) {
    int n = static_cast<int>(c.size()) - 1;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) M(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) M(i, n - 1) = -c[i] / c[n];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    if (es.info() != Eigen::Success)
        throw NonConvergence("companion-matrix eigenvalue solve failed");
    std::vector<Cx> out(n);
    for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()(i);
    return out;
}

// Ehrlich-Aberth on a monic-normalizable polynomial; returns n raw roots.
inline std::vector<Cx> raw_roots(std::vector<Cx> c, int max_iter = 400) {
    int n = static_cast<int>(c.size()) - 1;
    for (auto& ck : c) ck /= c[n];

    // Initial guesses on a circle sized by the geometric mean of root moduli,
    // with an irrational angular offset so symmetric configurations break.
    double r0 = std::pow(std::max(std::abs(c[0]), 1e-20), 1.0 / n);
    double cauchy = 0;
    for (int k = 0; k < n; ++k) cauchy = std::max(cauchy, std::abs(c[k]));
    r0 = std::min(std::max(r0, 1e-3), 1.0 + cauchy);
    std::vector<Cx> x(n);
    for (int i = 0; i < n; ++i) {
        double th = 2 * M_PI * i / n + 0.7;
        x[i] = r0 * Cx(std::cos(th), std::sin(th));
    }

    std::vector<bool> done(n, false);
    for (int it = 0; it < max_iter; ++it) {
        bool all = true;
        for (int i = 0; i < n; ++i) {
            if (done[i]) continue;
            Cx p, dp;
            horner2(c, x[i], p, dp);
            if (std::abs(p) <= root_residual_tol * poly_scale(c, x[i])) {
                done[i] = true;
                continue;
            }
            all = false;
            Cx N = (std::abs(dp) > 1e-300) ? p / dp : Cx(1e-8, 1e-8);
            Cx S = 0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                Cx d = x[i] - x[j];
                if (std::abs(d) < 1e-300) d = Cx(1e-12, 1e-12);
                S += 1.0 / d;
            }
            Cx denom = 1.0 - N * S;
            Cx step = (std::abs(denom) > 1e-300) ? N / denom : N;
            x[i] -= step;
        }
        if (all) return x;
    }

    // Aberth stalled; take eigenvalues and polish with Newton.
    x = companion_roots(c);
    for (auto& xi : x) {
        for (int k = 0; k < 40; ++k) {
            Cx p, dp;
            horner2(c, xi, p, dp);
            if (std::abs(p) <= root_residual_tol * poly_scale(c, xi)) break;
            if (std::abs(dp) < 1e-300) break;
            xi -= p / dp;
        }
    }
    for (auto& xi : x) {
        Cx p, dp;
        horner2(c, xi, p, dp);
        if (std::abs(p) > 1e3 * root_residual_tol * poly_scale(c, xi))
            throw NonConvergence("root iteration did not reach residual tolerance");
    }
    return x;
}

struct UF {
    std::vector<int> p;
    explicit UF(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int a) { return p[a] == a ? a : p[a] = find(p[a]); }
    void unite(int a, int b) { p[find(a)] = find(b); }
};

inline std::vector<std::vector<int>> group(const std::vector<Cx>& xs, double radius) {
    int n = static_cast<int>(xs.size());
    UF uf(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(xs[i] - xs[j]) <= radius) uf.unite(i, j);
    std::vector<std::vector<int>> out;
    std::vector<int> rep(n, -1);
    for (int i = 0; i < n; ++i) {
        int r = uf.find(i);
        if (rep[r] < 0) {
            rep[r] = static_cast<int>(out.size());
            out.emplace_back();
        }
        out[rep[r]].push_back(i);
    }
    return out;
}

// Refine a candidate m-fold root via Newton on the (m-1)-th derivative.
inline Cx refine_multiple(const std::vector<Cx>& c, Cx seed, int m) {
    std::vector<Cx> d = c;
    for (int k = 1; k < m; ++k) d = derivative(d);
    Cx x = seed;
    for (int it = 0; it < 60; ++it) {
        Cx p, dp;
        horner2(d, x, p, dp);
        if (std::abs(dp) < 1e-300) break;
        Cx step = p / dp;
        x -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

struct Cluster {
    Cx center;
    std::vector<int> members;
};

// Verified clustering: merge at `radius`, refine multi-clusters, split any
// cluster whose members do not sit within the multiplicity-adjusted scatter
// of the refined center.
inline void cluster_verified(const std::vector<Cx>& xs, const std::vector<Cx>& c,
                             const std::vector<int>& idx, double radius,
                             double eps_cluster, std::vector<Cluster>& out) {
    std::vector<Cx> pts;
    for (int i : idx) pts.push_back(xs[i]);
    auto groups = group(pts, radius);
    for (auto& g : groups) {
        std::vector<int> orig;
        for (int k : g) orig.push_back(idx[k]);
        int m = static_cast<int>(orig.size());
        Cx centroid = 0;
        for (int i : orig) centroid += xs[i];
        centroid /= static_cast<double>(m);
        if (m == 1) {
            out.push_back({centroid, orig});
            continue;
        }
        Cx refined = refine_multiple(c, centroid, m);
        double local = std::max(1.0, std::abs(centroid));
        double scatter = std::max(eps_cluster, 12 * std::pow(root_residual_tol, 1.0 / m) * local);
        auto within = [&](const Cx& ctr) {
            for (int i : orig)
                if (std::abs(xs[i] - ctr) > scatter) return false;
            return true;
        };
        if (std::abs(refined - centroid) <= std::max(radius, scatter) && within(refined)) {
            out.push_back({refined, orig});
        } else if (within(centroid)) {
            out.push_back({centroid, orig});
        } else if (radius > eps_cluster * 1.001) {
            cluster_verified(xs, c, orig, std::max(radius / 8, eps_cluster), eps_cluster, out);
        } else {
            throw IllConditioned("root cluster does not verify at requested radius");
        }
    }
}

} // namespace detail_roots

// Roots of sum c[k] x^k with multiplicities. Leading/trailing zero
// coefficients are handled (trailing zeros become a root at the origin).
inline std::vector<RootCluster> uni_roots(std::vector<Cx> c,
                                          double eps_cluster = default_eps_cluster) {
    // Trim numerically-zero leading coefficients.
    double mx = 0;
    for (auto& ck : c) mx = std::max(mx, std::abs(ck));
    if (c.empty() || mx == 0) throw DegenerateInput("root-finding on the zero polynomial");
    while (c.size() > 1 && std::abs(c.back()) <= eps_zero * mx) c.pop_back();

    std::vector<RootCluster> out;
    // Peel roots at the origin.
    int zeros = 0;
    while (c.size() > 1 && std::abs(c.front()) <= eps_zero * mx) {
        c.erase(c.begin());
        ++zeros;
    }
    if (zeros > 0) out.push_back({Cx(0, 0), zeros});
    if (c.size() <= 1) {
        if (out.empty() && c.size() == 1) return {}; // nonzero constant: no roots
        return out;
    }

    auto xs = detail_roots::raw_roots(c);
    double radius = std::max(eps_cluster,
                             25 * std::pow(root_residual_tol, 1.0 / static_cast<double>(xs.size())));
    std::vector<int> all(xs.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<detail_roots::Cluster> clusters;
    detail_roots::cluster_verified(xs, c, all, radius, eps_cluster, clusters);

    for (auto& cl : clusters)
        out.push_back({cl.center, static_cast<int>(cl.members.size())});

    // A zero root found by iteration (rather than peeling) merges with the
    // peeled origin cluster if both are present.
    for (size_t i = 1; i < out.size(); ++i) {
        if (zeros > 0 && std::abs(out[i].value) <= eps_cluster && std::abs(out[0].value) == 0.0) {
            out[0].mult += out[i].mult;
            out.erase(out.begin() + i);
            --i;
        }
    }

    // Ambiguity guard: distinct clusters closer than a few radii apart mean
    // the multiplicity assignment is not trustworthy at this resolution.
    for (size_t i = 0; i < out.size(); ++i)
        for (size_t j = i + 1; j < out.size(); ++j) {
            double local = std::max(1.0, std::abs(out[i].value));
            if (std::abs(out[i].value - out[j].value) < 4 * eps_cluster * local)
                throw IllConditioned("two root clusters nearly coincide; clustering radius is ambiguous");
        }

    std::sort(out.begin(), out.end(), [](const RootCluster& a, const RootCluster& b) {
        if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
        return a.value.imag() < b.value.imag();
    });
    return out;
}

// ---------------------------------------------------------------------------
// Exact-backend wrapper: find roots in floating point, snap each to a
// Gaussian rational, and verify by exact deflation.
// ---------------------------------------------------------------------------

struct RatRootCluster {
    RatCx value;
    int mult = 1;
};

// Divide p (ascending coeffs) by (x - r) exactly, m times; throws if any
// division leaves a remainder.
inline std::vector<RatCx> deflate_exact(std::vector<RatCx> c, const RatCx& r, int m) {
    for (int k = 0; k < m; ++k) {
        std::vector<RatCx> q(c.size() - 1);
        RatCx carry = c.back();
        for (int i = static_cast<int>(c.size()) - 2; i >= 0; --i) {
            q[i] = carry;
            carry = c[i] + carry * r;
        }
        if (!carry.is_zero())
            throw IllConditioned("candidate root is not exact for the rational backend");
        c = std::move(q);
    }
    return c;
}

inline std::vector<RatRootCluster> uni_roots_exact(const std::vector<RatCx>& coeffs,
                                                   double eps_cluster = default_eps_cluster) {
    // Scale to doubles through the largest coefficient to avoid overflow.
    double mx = 0;
    for (auto& ck : coeffs) mx = std::max(mx, std::sqrt(norm2_d(ck)));
    if (mx == 0) throw DegenerateInput("root-finding on the zero polynomial");
    std::vector<Cx> cd;
    for (auto& ck : coeffs) cd.push_back(to_cx(ck) / mx);

    auto approx = uni_roots(cd, eps_cluster);
    std::vector<RatRootCluster> out;
    std::vector<RatCx> rem = coeffs;
    // Deflate largest multiplicity first for stability of the exact check.
    std::stable_sort(approx.begin(), approx.end(),
                     [](const RootCluster& a, const RootCluster& b) { return a.mult > b.mult; });
    for (auto& rc : approx) {
        RatCx r;
        if (!snap_to_ratcx(rc.value, r, 1e-7))
            throw IllConditioned("root does not snap to a rational of bounded height");
        rem = deflate_exact(rem, r, rc.mult);
        out.push_back({r, rc.mult});
    }
    std::sort(out.begin(), out.end(), [](const RatRootCluster& a, const RatRootCluster& b) {
        Cx x = to_cx(a.value), y = to_cx(b.value);
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    return out;
}

} // namespace infdyn
