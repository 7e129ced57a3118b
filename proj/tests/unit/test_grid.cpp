#include <doctest.h>

#include "avrsafe/grid.hpp"

#include <array>

using namespace avrsafe;

TEST_CASE("axis spacing and endpoints") {
    const GridAxis ax{-1.0, 5.0, 161};
    CHECK(ax.step() == doctest::Approx(6.0 / 160.0));
    CHECK(ax.coord(0) == -1.0);
    CHECK(ax.coord(160) == 5.0);
}

TEST_CASE("snap on a 1-D grid") {
    const GridSpec g({GridAxis{0.0, 1.0, 3}});
    const std::array<double, 1> a{0.26}, b{0.25}, c{7.0}, d{-3.0}, e{1.0};
    CHECK(g.snap(a) == 1);
    CHECK(g.snap(b) == 0);  // tie goes to the lower index
    CHECK(g.snap(c) == 2);
    CHECK(g.snap(d) == 0);
    CHECK(g.snap(e) == 2);
}

TEST_CASE("snap is the identity on grid points and matches brute force") {
    const std::array<std::size_t, 2> n{7, 5};
    const auto g = GridSpec::over(Box{{-1.0, -2.0}, {5.0, 3.0}}, n);
    for (StateId s = 0; s < g.size(); ++s) {
        const auto x = g.coord_of(s);
        CHECK(g.snap(x) == s);
        CHECK(g.flat_index(g.multi_index(s)) == s);
    }
    // brute-force nearest point oracle on off-grid probes
    for (double x = -2.0; x <= 6.0; x += 0.37) {
        for (double v = -3.0; v <= 4.0; v += 0.41) {
            const std::array<double, 2> p{x, v};
            const std::array<double, 2> clamped{std::clamp(x, -1.0, 5.0), std::clamp(v, -2.0, 3.0)};
            StateId best = 0;
            double bd = 1e300;
            for (StateId s = 0; s < g.size(); ++s) {
                const auto c = g.coord_of(s);
                const double d = (c[0] - clamped[0]) * (c[0] - clamped[0]) +
                                 (c[1] - clamped[1]) * (c[1] - clamped[1]);
                if (d < bd - 1e-12) {
                    bd = d;
                    best = s;
                }
            }
            CHECK(g.snap(p) == best);
        }
    }
}

TEST_CASE("row-major layout, last axis fastest") {
    const std::array<std::size_t, 2> n{3, 4};
    const auto g = GridSpec::over(Box{{0.0, 0.0}, {2.0, 3.0}}, n);
    const std::array<std::size_t, 2> idx{1, 2};
    CHECK(g.flat_index(idx) == 6);
    const auto c = g.coord_of(6);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 2.0);
}

TEST_CASE("neighbors stay on the grid") {
    const std::array<std::size_t, 2> n{3, 3};
    const auto g = GridSpec::over(Box{{0.0, 0.0}, {1.0, 1.0}}, n);
    CHECK(g.neighbors(0).size() == 2);
    CHECK(g.neighbors(4).size() == 4);
}

TEST_CASE("grid json round trip") {
    const std::array<std::size_t, 2> n{11, 9};
    const auto g = GridSpec::over(Box{{-0.5, -1.0}, {0.5, 1.0}}, n);
    CHECK(grid_from_json(to_json(g)) == g);
}

TEST_CASE("box containment") {
    const Box outer{{0.0, 0.0}, {4.0, 4.0}};
    const Box inner{{1.0, 1.0}, {2.0, 2.0}};
    CHECK(outer.contains(inner));
    CHECK_FALSE(inner.contains(outer));
    const std::array<double, 2> edge{4.0 + 1e-10, 0.0};
    CHECK(outer.contains(edge, 1e-9));
    CHECK_FALSE(outer.contains(edge));
}
