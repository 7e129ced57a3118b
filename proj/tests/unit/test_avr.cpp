#include <doctest.h>

#include "avrsafe/avr.hpp"
#include "avrsafe/errors.hpp"
#include "avrsafe/rollout.hpp"
#include "avrsafe/simplex.hpp"
#include "fixtures.hpp"

#include <array>
#include <cmath>

using namespace avrsafe;

namespace {

const lp::RevisedSimplex kSimplex;

GainBiasSolution primal_gain(const DiscreteMdp& m, PrimalOptions opt = {}) {
    return extract_gain(m, lp::solve_lp(assemble_primal(m, opt), kSimplex));
}

}  // namespace

TEST_CASE("trivial single-state instances") {
    const auto safe = fixtures::single_state(true);
    const auto unsafe = fixtures::single_state(false);
    CHECK(primal_gain(safe).gain[0] == doctest::Approx(1.0));
    CHECK(primal_gain(unsafe).gain[0] == 0.0);

    const auto d = lp::solve_lp(assemble_dual(safe), kSimplex);
    REQUIRE(d.optimal());
    CHECK(d.objective == doctest::Approx(1.0));
    const auto occ = extract_occupation(safe, d);
    CHECK(occ.z_at(0, 0) == doctest::Approx(1.0));
    CHECK(lp::solve_lp(assemble_dual(unsafe), kSimplex).objective == doctest::Approx(0.0));
}

TEST_CASE("primal layout") {
    const auto m = fixtures::three_state_chain(true);
    const auto p = assemble_primal(m);
    CHECK(p.num_variables() == 6);
    CHECK(p.num_rows() == 2 * 3 * 2);
    CHECK(p.upper()[0] == 1.0);
    CHECK(std::isinf(p.lower()[3]));
    CHECK(assemble_primal(m, {true, true}).lower()[3] == 0.0);
    const auto d = assemble_dual(m);
    CHECK(d.num_variables() == 12);
    CHECK(d.num_rows() == 6);
}

TEST_CASE("three-state chain gain matches the absorption oracle") {
    const auto m = fixtures::three_state_chain();
    const auto g = primal_gain(m);
    const auto oracle = absorption_probabilities(m, Policy::deterministic(1, std::array<ActionId, 3>{0, 0, 0}));
    for (StateId s = 0; s < 3; ++s) CHECK(g.gain[s] == doctest::Approx(oracle[s]).epsilon(1e-9));
    CHECK(g.gain[0] == doctest::Approx(0.7));
    CHECK(g.gain[1] == doctest::Approx(1.0));
    CHECK(g.gain[2] == 0.0);
}

TEST_CASE("dual objective equals the weighted oracle gain") {
    const auto m = fixtures::three_state_chain();
    const auto d = lp::solve_lp(assemble_dual(m), kSimplex);
    REQUIRE(d.optimal());
    CHECK(d.objective == doctest::Approx((0.7 + 1.0 + 0.0) / 3.0).epsilon(1e-9));
    const auto gd = gain_from_dual(m, d);
    CHECK(gd.gain[0] == doctest::Approx(0.7));
    CHECK(balance_residual(m, extract_occupation(m, d)) < 1e-9);
}

TEST_CASE("policy construction branches") {
    OccupationSolution occ;
    occ.states = 3;
    occ.actions = 2;
    occ.z = {0.2, 0.0, 0.0, 0.0, 0.0, 0.0};
    occ.y = {0.0, 0.0, 0.0, 0.5, 0.0, 0.0};
    const auto pi = construct_policy(occ);
    CHECK(pi.probability(0, 0) == 1.0);
    CHECK(pi.probability(1, 1) == 1.0);
    CHECK(pi.probability(2, 0) == 1.0);  // both rows empty
    CHECK(pi.is_deterministic());

    occ.z[0] = 0.3;
    occ.z[1] = 0.1;
    const auto mixed = construct_policy(occ);
    CHECK(mixed.probability(0, 0) == doctest::Approx(0.75));
    CHECK_FALSE(mixed.is_deterministic());

    occ.y[5] = -1e-6;
    CHECK_THROWS_AS(construct_policy(occ), NumericalError);
}

TEST_CASE("policy avoids the sure-loss action") {
    const auto m = fixtures::three_state_chain(true);
    const auto r = solve_avr(m, kSimplex);
    CHECK(r.policy.is_deterministic());
    CHECK(r.policy.action(0) == 0);
    CHECK(r.gain.gain[0] == doctest::Approx(0.7));
    CHECK(exact_absorption_probability(m, r.policy, 0) == doctest::Approx(0.7));
    CHECK(r.duality_gap < 1e-9);
}

TEST_CASE("level sets on the chain") {
    const auto g = primal_gain(fixtures::three_state_chain());
    CHECK(extract_level_set(g, 0.0).size() == 3);
    CHECK(extract_level_set(g, 1.0).members == std::vector<StateId>{1});
    CHECK(extract_level_set(g, 0.5).members == std::vector<StateId>{0, 1});
    CHECK_THROWS_AS(extract_level_set(g, 1.5), ParameterError);

    const std::array<double, 2> alphas{1.0, 0.5};
    const auto curve = level_set_ratio_curve(g, alphas);
    CHECK(curve[0].ratio == 1.0);
    CHECK(curve[1].ratio == 2.0);
}

TEST_CASE("ratio curve needs a nonempty safe set") {
    const auto g = primal_gain(fixtures::single_state(false));
    const std::array<double, 1> alphas{0.5};
    CHECK_THROWS_AS(level_set_ratio_curve(g, alphas), EmptySafeSetError);
}

TEST_CASE("degenerate gain: ratio is one until alpha reaches zero") {
    GainBiasSolution g;
    g.gain = {1.0, 1.0, 0.0, 1.0};
    const std::array<double, 4> alphas{1.0, 0.6, 0.1, 0.0};
    const auto curve = level_set_ratio_curve(g, alphas);
    CHECK(curve[0].ratio == 1.0);
    CHECK(curve[1].ratio == 1.0);
    CHECK(curve[2].ratio == 1.0);
    CHECK(curve[3].ratio == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("level-set boundary uses grid adjacency") {
    const std::array<std::size_t, 2> n{3, 3};
    const auto grid = GridSpec::over(Box{{0.0, 0.0}, {2.0, 2.0}}, n);
    GainBiasSolution g;
    g.gain.assign(9, 0.0);
    for (StateId s : {0u, 1u, 3u, 4u}) g.gain[s] = 1.0;
    const auto k = extract_level_set(g, 1.0, &grid);
    CHECK(k.boundary == std::vector<StateId>{1, 3, 4});
}

TEST_CASE("deterministic safe loop has gain one") {
    const auto m = fixtures::safe_loop();
    const auto r = solve_avr(m, kSimplex);
    CHECK(r.gain.gain[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.gain.gain[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.gain.gain[2] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.gain.gain[3] == 0.0);
    CHECK(bellman_residual(m, r.gain.gain) < 1e-9);
}

TEST_CASE("extract_gain rejects values outside [0,1]") {
    const auto m = fixtures::three_state_chain();
    lp::Solution s;
    s.status = lp::Status::Optimal;
    s.values = {1.5, 1.0, 0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(extract_gain(m, s), NumericalError);
    s.values = {0.7, 1.0 + 5e-9, 0.0, 0.0, 0.0, 0.0};
    CHECK(extract_gain(m, s).gain[1] == 1.0);
    s.values = {0.7, 1.0, 0.5, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(extract_gain(m, s), NumericalError);
    s.status = lp::Status::Infeasible;
    CHECK_THROWS_AS(extract_gain(m, s), NumericalError);
}

TEST_CASE("assembly rejects invalid MDPs") {
    SparseTransitionTable t(2, 1);
    const std::vector<Transition> r0{{1, 1.0}}, r1{{0, 1.0}};
    t.append_row(r0);
    t.append_row(r1);
    const DiscreteMdp bad(std::move(t), ConstraintMask({true, false}), uniform_weights(2));
    CHECK_THROWS_AS(assemble_primal(bad), StructuralError);
    CHECK_THROWS_AS(assemble_dual(bad), StructuralError);
}

TEST_CASE("random instances: oracle, duality, literal bias mode") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        CAPTURE(seed);
        const auto m = random_small_mdp(seed);
        const auto r = solve_avr(m, kSimplex);
        const auto oracle = enumerate_policy_optima(m);
        const auto literal = primal_gain(m, {true, true});
        const auto exact = absorption_probabilities(m, r.policy);
        for (StateId s = 0; s < m.num_states(); ++s) {
            CHECK(std::abs(r.gain.gain[s] - oracle[s]) <= 1e-6);
            CHECK(std::abs(literal.gain[s] - r.gain.gain[s]) <= 1e-6);
            CHECK(std::abs(exact[s] - r.gain.gain[s]) <= 1e-6);
            if (!m.in_constraint(s)) CHECK(r.gain.gain[s] <= 1e-9);
        }
        CHECK(r.duality_gap <= 1e-6);
        CHECK(r.policy.is_deterministic());
        CHECK(bellman_residual(m, r.gain.gain) <= 1e-7);

        // transient states under the optimal policy: every C state with 0 < g < 1
        const auto chain = classify_chain(m, r.policy);
        for (StateId s = 0; s < m.num_states(); ++s) {
            if (m.in_constraint(s) && r.gain.gain[s] > 1e-9 && r.gain.gain[s] < 1 - 1e-9) {
                CHECK_FALSE(chain.recurrent[s]);
            }
        }
        // nesting
        const std::array<double, 5> ladder{1.0, 0.9, 0.5, 0.2, 0.0};
        for (std::size_t i = 1; i < ladder.size(); ++i) {
            const auto hi = extract_level_set(r.gain, ladder[i - 1]);
            const auto lo = extract_level_set(r.gain, ladder[i]);
            CHECK(std::includes(lo.members.begin(), lo.members.end(), hi.members.begin(), hi.members.end()));
        }
    }
}

TEST_CASE("certified and direct primal routes agree") {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        CAPTURE(seed);
        const auto m = random_small_mdp(seed);
        AvrOptions direct, certified;
        direct.route = PrimalRoute::Direct;
        certified.route = PrimalRoute::Certified;
        const auto a = solve_avr(m, kSimplex, direct);
        const auto b = solve_avr(m, kSimplex, certified);
        CHECK(a.route == PrimalRoute::Direct);
        CHECK(b.route == PrimalRoute::Certified);
        CHECK(b.primal_violation <= 1e-9);
        CHECK(std::abs(a.primal_objective - b.primal_objective) <= 1e-9);
        for (StateId s = 0; s < m.num_states(); ++s) {
            CHECK(std::abs(a.gain.gain[s] - b.gain.gain[s]) <= 1e-9);
        }
        certified.primal.nonnegative_bias = true;
        const auto c = solve_avr(m, kSimplex, certified);
        CHECK(*std::min_element(c.gain.bias.begin(), c.gain.bias.end()) >= 0.0);
        CHECK(c.primal_violation <= 1e-9);
    }
    CHECK(primal_route_from_string("certified") == PrimalRoute::Certified);
    CHECK_THROWS_AS(primal_route_from_string("fast"), ParameterError);
}
