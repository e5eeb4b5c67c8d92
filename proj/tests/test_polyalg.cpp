#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "infdyn/bipoly.hpp"
#include "infdyn/errors.hpp"
#include "infdyn/factor.hpp"
#include "infdyn/resultant.hpp"
#include "infdyn/roots.hpp"

using namespace infdyn;

namespace {

template <class K>
BiPoly<K> mono(int i, int j, long c) {
    return BiPoly<K>::monomial(i, j, scalar_traits<K>::from_int(c));
}

// Ascending z-exponent coefficient list -> homogeneous polynomial.
template <class K>
HomPoly<K> hp(std::vector<long> coeffs) {
    HomPoly<K> h(static_cast<int>(coeffs.size()) - 1);
    for (size_t k = 0; k < coeffs.size(); ++k)
        h.coeff(static_cast<int>(k)) = scalar_traits<K>::from_int(coeffs[k]);
    return h;
}

bool hom_close(const HomPoly<Cx>& a, const HomPoly<Cx>& b, double tol = 1e-10) {
    if (a.deg != b.deg) return false;
    for (int k = 0; k <= a.deg; ++k)
        if (std::abs(a.coeff(k) - b.coeff(k)) > tol) return false;
    return true;
}

} // namespace

TEST_CASE("bivariate arithmetic expands (z+w)^2") {
    auto z = BiPoly<RatCx>::var_z();
    auto w = BiPoly<RatCx>::var_w();
    auto sq = (z + w) * (z + w);
    CHECK(sq == mono<RatCx>(2, 0, 1) + mono<RatCx>(1, 1, 2) + mono<RatCx>(0, 2, 1));
    CHECK(sq.degree() == 2);
    CHECK(sq.get(1, 1) == RatCx(2));
    CHECK((z + w).pow(2) == sq);
    CHECK((sq - sq).is_zero());
}

TEST_CASE("pruning drops explicit zero terms") {
    BiPoly<RatCx> p;
    p.set(3, 1, RatCx(5));
    p.set(0, 0, RatCx(Rat(1, 2)));
    p.set(3, 1, RatCx(0)); // overwrite with zero
    p.prune();
    CHECK(p.degree() == 0);
    CHECK(p.get(3, 1) == RatCx(0));
    CHECK(p.get(0, 0) == RatCx(Rat(1, 2)));
}

TEST_CASE("evaluation and derivative agree with hand expansion") {
    // p = z^2 w - 3 w^3
    auto p = mono<Cx>(2, 1, 1) + mono<Cx>(0, 3, -3);
    CHECK(std::abs(p.eval(Cx(2), Cx(1)) - Cx(1)) < 1e-14);      // 4 - 3
    CHECK(std::abs(p.eval(Cx(1), Cx(2)) - Cx(-22)) < 1e-14);    // 2 - 24
    auto pz = p.derivative(Var::z); // 2 z w
    auto pw = p.derivative(Var::w); // z^2 - 9 w^2
    CHECK(std::abs(pz.eval(Cx(3), Cx(5)) - Cx(30)) < 1e-12);
    CHECK(std::abs(pw.eval(Cx(3), Cx(2)) - Cx(-27)) < 1e-12);
}

TEST_CASE("homogeneous layers split and reassemble") {
    // p = z^3 + z w + w^2
    auto p = mono<RatCx>(3, 0, 1) + mono<RatCx>(1, 1, 1) + mono<RatCx>(0, 2, 1);
    auto h2 = hom_part(p, 2);
    CHECK(h2.deg == 2);
    CHECK(h2.coeff(1) == RatCx(1)); // z w
    CHECK(h2.coeff(0) == RatCx(1)); // w^2
    CHECK(h2.coeff(2) == RatCx(0));
    auto t = top_part(p);
    CHECK(t.deg == 3);
    CHECK(t.coeff(3) == RatCx(1));
    CHECK(hom_part(p, 1).is_zero());
    CHECK(hom_part(p, 0).is_zero());
    CHECK_THROWS_AS(top_part(BiPoly<RatCx>::zero()), DegenerateInput);

    auto layers = hom_components(p);
    BiPoly<RatCx> back;
    for (auto& h : layers) back += h.to_bipoly();
    back.prune();
    CHECK(back == p);
}

TEST_CASE("substitution composes polynomial pairs") {
    // f = z w under (g1, g2) = (z + w, z - w) gives z^2 - w^2.
    auto f = mono<RatCx>(1, 1, 1);
    auto g1 = BiPoly<RatCx>::var_z() + BiPoly<RatCx>::var_w();
    auto g2 = BiPoly<RatCx>::var_z() - BiPoly<RatCx>::var_w();
    auto s = substitute(f, g1, g2);
    CHECK(s == mono<RatCx>(2, 0, 1) - mono<RatCx>(0, 2, 1));

    PolyPair<RatCx> pair_f{mono<RatCx>(2, 0, 1), mono<RatCx>(0, 2, 1)};   // (z^2, w^2)
    PolyPair<RatCx> pair_g{mono<RatCx>(1, 1, 1), g2};                     // (z w, z - w)
    auto comp = compose_pair(pair_f, pair_g);
    CHECK(comp.degree() == pair_f.degree() * pair_g.degree());
    // (f o g)_1 = (z w)^2
    CHECK(comp.f1 == mono<RatCx>(2, 2, 1));
}

TEST_CASE("homogeneous division is exact or refused") {
    // (z^2 - w^2) / (z - w) = z + w, both backends.
    auto quot_r = hom_divide(hp<RatCx>({-1, 0, 1}), hp<RatCx>({-1, 1}));
    CHECK(quot_r == hp<RatCx>({1, 1}));
    auto quot_f = hom_divide(hp<Cx>({-1, 0, 1}), hp<Cx>({-1, 1}));
    CHECK(hom_close(quot_f, hp<Cx>({1, 1})));

    // z^2 + w^2 is not divisible by z - w (remainder 2 w^2).
    CHECK_THROWS_AS(hom_divide(hp<RatCx>({1, 0, 1}), hp<RatCx>({-1, 1})), DegenerateInput);
    // Degree underflow.
    CHECK_THROWS_AS(hom_divide(hp<RatCx>({-1, 1}), hp<RatCx>({-1, 0, 1})), DegenerateInput);
}

TEST_CASE("homogeneous gcd divides both inputs") {
    // p = (z - w)^2 (z + 2 w), q = (z - w) (z + 2 w)^2
    auto zmw = hp<RatCx>({-1, 1});
    auto zp2w = hp<RatCx>({2, 1});
    auto p = zmw * zmw * zp2w;
    auto q = zmw * zp2w * zp2w;
    auto g = hom_gcd(p, q);
    CHECK(g.deg == 2);
    CHECK(g.coeff(2) == RatCx(1)); // z-leading normalized
    CHECK(g == zmw * zp2w);
    CHECK_NOTHROW(hom_divide(p, g));
    CHECK_NOTHROW(hom_divide(q, g));

    auto gf = hom_gcd(hom_to_cx(p), hom_to_cx(q));
    CHECK(gf.deg == 2);
    CHECK(hom_close(gf, hom_to_cx(g)));

    // Coprime inputs have trivial gcd.
    CHECK(hom_gcd(hp<RatCx>({0, 1}), hp<RatCx>({1, 0})).deg == 0);
    CHECK_THROWS_AS(hom_gcd(HomPoly<RatCx>(), HomPoly<RatCx>()), DegenerateInput);
}

TEST_CASE("linear factorization reconstructs the input") {
    // p = z w (z - w): roots [0:1], [1:1], and the direction [1:0].
    auto p = hp<RatCx>({0, 1}) * hp<RatCx>({1, 0, 0}) * hp<RatCx>({-1, 1});
    auto fac = hom_factor_linear(p);
    CHECK(fac.factors.size() == 3);
    HomPoly<RatCx> back(0);
    back.coeff(0) = fac.c0;
    int total = 0;
    for (auto& f : fac.factors) {
        total += f.alpha;
        for (int k = 0; k < f.alpha; ++k) back = back * f.to_hompoly();
    }
    CHECK(total == 3);
    CHECK(back == p);

    // Triple root keeps its multiplicity.
    auto cube = hom_factor_linear(hp<RatCx>({-1, 1}) * hp<RatCx>({-1, 1}) * hp<RatCx>({-1, 1}));
    REQUIRE(cube.factors.size() == 1);
    CHECK(cube.factors[0].alpha == 3);

    // z^2 - 2 w^2 has irrational root directions: refused exactly, fine in floats.
    CHECK_THROWS_AS(hom_factor_linear(hp<RatCx>({-2, 0, 1})), IllConditioned);
    auto facf = hom_factor_linear(hp<Cx>({-2, 0, 1}));
    CHECK(facf.factors.size() == 2);
    for (auto& f : facf.factors)
        CHECK(std::abs(std::abs(f.root_cx()) - std::sqrt(2.0)) < 1e-9);
}

TEST_CASE("univariate root clustering recovers multiplicities") {
    // (x - 1)^2 (x + 2) = x^3 - 3 x + 2, ascending coefficients.
    auto clusters = uni_roots({Cx(2), Cx(-3), Cx(0), Cx(1)});
    REQUIRE(clusters.size() == 2);
    bool saw_double = false, saw_simple = false;
    for (auto& c : clusters) {
        if (c.mult == 2) {
            saw_double = true;
            CHECK(std::abs(c.value - Cx(1)) < 1e-7);
        }
        if (c.mult == 1) {
            saw_simple = true;
            CHECK(std::abs(c.value - Cx(-2)) < 1e-9);
        }
    }
    CHECK(saw_double);
    CHECK(saw_simple);
}

TEST_CASE("exact root extraction verifies by deflation") {
    // (x - 1/2)^3 (x + 3) = x^4 + 3/2 x^3 - 15/4 x^2 + 17/8 x - 3/8
    std::vector<RatCx> c = {RatCx(Rat(-3, 8)), RatCx(Rat(17, 8)), RatCx(Rat(-15, 4)),
                            RatCx(Rat(3, 2)), RatCx(1)};
    auto clusters = uni_roots_exact(c);
    REQUIRE(clusters.size() == 2);
    bool saw_half = false, saw_minus3 = false;
    for (auto& rc : clusters) {
        if (rc.value == RatCx(Rat(1, 2))) {
            saw_half = true;
            CHECK(rc.mult == 3);
        }
        if (rc.value == RatCx(-3)) {
            saw_minus3 = true;
            CHECK(rc.mult == 1);
        }
    }
    CHECK(saw_half);
    CHECK(saw_minus3);

    // x^2 - 2 has no rational roots.
    CHECK_THROWS_AS(uni_roots_exact({RatCx(-2), RatCx(0), RatCx(1)}), IllConditioned);
}

TEST_CASE("resultant vanishes exactly at common solutions") {
    // p = w^2 - z, q = w - z: common solutions at z = 0 and z = 1.
    auto p = mono<RatCx>(0, 2, 1) - mono<RatCx>(1, 0, 1);
    auto q = mono<RatCx>(0, 1, 1) - mono<RatCx>(1, 0, 1);
    auto r = resultant(p, q, Var::w);
    REQUIRE(r.size() >= 3);
    auto eval_at = [&](long z0) {
        RatCx acc(0), zp(1), zv(z0);
        for (auto& ck : r) {
            acc += ck * zp;
            zp *= zv;
        }
        return acc;
    };
    CHECK(eval_at(0).is_zero());
    CHECK(eval_at(1).is_zero());
    CHECK(!eval_at(2).is_zero());

    // Same computation in floats.
    auto rf = resultant(bipoly_to_cx(p), bipoly_to_cx(q), Var::w);
    REQUIRE(rf.size() >= 3);
    Cx acc0(0), acc1(0), zp(1);
    for (auto& ck : rf) acc0 += ck;
    CHECK(std::abs(acc0) < 1e-10); // value at z = 1
    (void)acc1;
    (void)zp;
}

TEST_CASE("oversized exact coefficients are rejected") {
    mpz_class big = 1;
    big <<= (max_rat_bits + 16);
    RatCx huge{Rat(big), Rat(0)};
    CHECK_THROWS_AS(check_coeff_size(huge), CoefficientOverflow);
    CHECK_NOTHROW(check_coeff_size(RatCx(Rat(22, 7))));
}
