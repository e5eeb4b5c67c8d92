#pragma once

// The worked example maps used across tests and the CLI's --fixture flag.
// All have integer coefficients, so every fixture constructs in both the
// floating and exact-rational backends. Deep exceptional trees of `generic3`
// involve irrational preimages and are float-only.

#include <string>
#include <tuple>
#include <vector>

#include "bipoly.hpp"
#include "errors.hpp"
#include "gclass.hpp"
#include "scalars.hpp"

namespace infdyn {

namespace detail_fixtures {

template <class K>
BiPoly<K> bp(std::vector<std::tuple<int, int, long>> terms) {
    BiPoly<K> p;
    for (auto& [i, j, c] : terms) p.set(i, j, p.get(i, j) + scalar_traits<K>::from_int(c));
    p.prune();
    return p;
}

} // namespace detail_fixtures

// f = C (2z(z-w) + z, w(z-w)); degree 2, one indeterminacy point at [1:1:0].
template <class K>
GMap<K> example1(long C = 4) {
    using detail_fixtures::bp;
    PolyPair<K> f{bp<K>({{2, 0, 2 * C}, {1, 1, -2 * C}, {1, 0, C}}),
                  bp<K>({{1, 1, C}, {0, 2, -C}})};
    return from_polynomials(f);
}

// f = (2z(z-w)(z-2w) + z^2, w(z-w)(z-2w)); degree 3, indeterminacy points at
// [1:1:0] and [2:1:0], the first mapping onto the second at infinity.
template <class K>
GMap<K> example2() {
    using detail_fixtures::bp;
    PolyPair<K> f{bp<K>({{3, 0, 2}, {2, 1, -6}, {1, 2, 4}, {2, 0, 1}}),
                  bp<K>({{2, 1, 1}, {1, 2, -3}, {0, 3, 2}})};
    return from_polynomials(f);
}

// f = (z^3 + w^2, z w^2); degree 3, a single totally invariant indeterminacy
// point at [0:1:0].
template <class K>
GMap<K> example3() {
    using detail_fixtures::bp;
    PolyPair<K> f{bp<K>({{3, 0, 1}, {0, 2, 1}}), bp<K>({{1, 2, 1}})};
    return from_polynomials(f);
}

// f = (z^(n1+n) w^n2 + w^(D-1), z^n1 w^(n2+n) + z^(D-1)) with D = n1+n2+n;
// two totally invariant indeterminacy points [0:1:0] and [1:0:0] with
// multiplicities n1 and n2.
template <class K>
GMap<K> example4(int n1 = 1, int n2 = 1, int n = 1) {
    using detail_fixtures::bp;
    if (n1 < 1 || n2 < 1 || n < 1) throw DegenerateInput("family parameters must be >= 1");
    int D = n1 + n2 + n;
    PolyPair<K> f{bp<K>({{n1 + n, n2, 1}, {0, D - 1, 1}}),
                  bp<K>({{n1, n2 + n, 1}, {D - 1, 0, 1}})};
    return from_polynomials(f);
}

// f = (z(z^2+w^2) + w^2, z w^2 + z); degree 3 with a nonlinear restriction to
// the line at infinity (u -> u^2 + 1). Preimage trees beyond depth 1 have
// irrational nodes: use the floating backend for them.
template <class K>
GMap<K> generic3() {
    using detail_fixtures::bp;
    PolyPair<K> f{bp<K>({{3, 0, 1}, {1, 2, 1}, {0, 2, 1}}), bp<K>({{1, 2, 1}, {1, 0, 1}})};
    return from_polynomials(f);
}

template <class K>
GMap<K> fixture(const std::string& name) {
    if (name == "example1") return example1<K>();
    if (name == "example2") return example2<K>();
    if (name == "example3") return example3<K>();
    if (name == "example4") return example4<K>(1, 1, 1);
    if (name == "example4_213") return example4<K>(2, 1, 3);
    if (name == "example4_142") return example4<K>(1, 4, 2);
    if (name == "generic3") return generic3<K>();
    throw ParseError("unknown fixture: " + name);
}

inline std::vector<std::string> fixture_names() {
    return {"example1", "example2", "example3", "example4", "example4_213", "example4_142",
            "generic3"};
}

} // namespace infdyn
