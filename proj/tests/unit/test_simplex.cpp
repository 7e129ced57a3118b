#include <doctest.h>

#include "avrsafe/lp.hpp"

using namespace avrsafe::lp;

TEST_CASE("single lower bound row") {
    LinearProgram p(Sense::Minimize);
    p.add_variable(1.0, -kInf, kInf);
    const auto r = p.add_row(RowSense::GreaterEqual, 3.0);
    p.add_coefficient(r, 0, 1.0);
    const auto sol = solve_lp(p);
    REQUIRE(sol.optimal());
    CHECK(sol.values[0] == doctest::Approx(3.0));
    CHECK(sol.objective == doctest::Approx(3.0));
    CHECK(sol.row_duals[0] == doctest::Approx(1.0));
}

TEST_CASE("zero objective over a nonempty polytope") {
    LinearProgram p(Sense::Maximize);
    p.add_variable(0.0, 0.0, 5.0);
    p.add_variable(0.0);
    const auto r = p.add_row(RowSense::LessEqual, 4.0);
    p.add_coefficient(r, 0, 1.0);
    p.add_coefficient(r, 1, 1.0);
    const auto sol = solve_lp(p);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == 0.0);
}

TEST_CASE("contradictory rows are infeasible") {
    LinearProgram p(Sense::Minimize);
    p.add_variable(1.0, -kInf, kInf);
    p.add_coefficient(p.add_row(RowSense::GreaterEqual, 1.0), 0, 1.0);
    p.add_coefficient(p.add_row(RowSense::LessEqual, 0.0), 0, 1.0);
    CHECK(solve_lp(p).status == Status::Infeasible);
}

TEST_CASE("unbounded ray") {
    LinearProgram p(Sense::Maximize);
    p.add_variable(1.0);
    p.add_variable(1.0);
    const auto r = p.add_row(RowSense::GreaterEqual, 1.0);
    p.add_coefficient(r, 0, 1.0);
    p.add_coefficient(r, 1, -1.0);
    CHECK(solve_lp(p).status == Status::Unbounded);
}

TEST_CASE("textbook maximisation with duals") {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36; duals (0, 1.5, 1)
    LinearProgram p(Sense::Maximize);
    p.add_variable(3.0);
    p.add_variable(5.0);
    p.add_coefficient(p.add_row(RowSense::LessEqual, 4.0), 0, 1.0);
    p.add_coefficient(p.add_row(RowSense::LessEqual, 12.0), 1, 2.0);
    const auto r = p.add_row(RowSense::LessEqual, 18.0);
    p.add_coefficient(r, 0, 3.0);
    p.add_coefficient(r, 1, 2.0);
    const auto sol = solve_lp(p);
    REQUIRE(sol.optimal());
    CHECK(sol.values[0] == doctest::Approx(2.0));
    CHECK(sol.values[1] == doctest::Approx(6.0));
    CHECK(sol.objective == doctest::Approx(36.0));
    CHECK(sol.row_duals[0] == doctest::Approx(0.0));
    CHECK(sol.row_duals[1] == doctest::Approx(1.5));
    CHECK(sol.row_duals[2] == doctest::Approx(1.0));
}

TEST_CASE("equality rows and free variables") {
    // min x - y, x + y = 2, x - y >= -4, x,y free, x >= -10 -> x=-1, y=3
    LinearProgram p(Sense::Minimize);
    p.add_variable(1.0, -10.0, kInf);
    p.add_variable(-1.0, -kInf, kInf);
    const auto e = p.add_row(RowSense::Equal, 2.0);
    p.add_coefficient(e, 0, 1.0);
    p.add_coefficient(e, 1, 1.0);
    const auto g = p.add_row(RowSense::GreaterEqual, -4.0);
    p.add_coefficient(g, 0, 1.0);
    p.add_coefficient(g, 1, -1.0);
    const auto sol = solve_lp(p);
    REQUIRE(sol.optimal());
    CHECK(sol.values[0] == doctest::Approx(-1.0));
    CHECK(sol.values[1] == doctest::Approx(3.0));
    CHECK(sol.objective == doctest::Approx(-4.0));
    CHECK(p.max_violation(sol.values) < 1e-9);
}
