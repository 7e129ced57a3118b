#include <doctest.h>

#include "avrsafe/errors.hpp"
#include "avrsafe/mdp.hpp"
#include "avrsafe/mdp_io.hpp"
#include "avrsafe/rollout.hpp"
#include "fixtures.hpp"

#include <sstream>

using namespace avrsafe;

namespace {

// Builds an MDP verbatim, bypassing the builder's row normalization.
DiscreteMdp raw_mdp(std::size_t S, std::size_t A, const std::vector<std::vector<Transition>>& rows,
                    std::vector<bool> mask) {
    SparseTransitionTable t(S, A);
    for (const auto& r : rows) t.append_row(r);
    return DiscreteMdp(std::move(t), ConstraintMask(std::move(mask)), uniform_weights(S));
}

}  // namespace

TEST_CASE("validate accepts an absorbing unsafe state") {
    const auto m = raw_mdp(2, 2, {{{0, 0.5}, {1, 0.5}}, {{0, 1.0}}, {{1, 1.0}}, {{1, 1.0}}},
                           {true, false});
    CHECK(validate(m).empty());
}

TEST_CASE("validate reports a broken absorbing rule once per state") {
    const auto m = raw_mdp(2, 1, {{{0, 1.0}}, {{0, 1.0}}}, {true, false});
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::AbsorbingRule);
    CHECK(v[0].state == 1);
    CHECK(v[0].whole_state);
    CHECK(v[0].message == "absorbing rule broken at (1,·)");
}

TEST_CASE("validate reports row mass") {
    const auto m = raw_mdp(2, 1, {{{0, 0.5}, {1, 0.47}}, {{1, 1.0}}}, {true, false});
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::RowMass);
    CHECK(v[0].message.find("row mass 0.97 ≠ 1") == 0);
    CHECK(v[0].state == 0);
    CHECK(v[0].action == 0);
}

TEST_CASE("validate reports duplicates, range and bad weights") {
    SparseTransitionTable t(2, 1);
    const std::vector<Transition> dup{{1, 0.5}, {1, 0.5}};
    const std::vector<Transition> self{{1, 1.0}};
    t.append_row(dup);
    t.append_row(self);
    const DiscreteMdp m(std::move(t), ConstraintMask({true, false}), {0.0, 1.0});
    const auto v = validate(m);
    auto has = [&](ViolationKind k) {
        return std::any_of(v.begin(), v.end(), [k](const Violation& x) { return x.kind == k; });
    };
    CHECK(has(ViolationKind::DuplicateSuccessor));
    CHECK(has(ViolationKind::InitialWeights));
    CHECK_FALSE(has(ViolationKind::RowMass));

    const auto bad = raw_mdp(1, 1, {{{3, 1.0}}}, {true});
    CHECK(validate(bad).front().kind == ViolationKind::SuccessorOutOfRange);
}

TEST_CASE("builder merges duplicates, prunes and renormalizes") {
    const auto m = MdpBuilder(3, 1)
                       .set_constraint(ConstraintMask({true, true, false}))
                       .set_row(0, 0, {{2, 0.25}, {1, 0.5}, {2, 0.25}, {0, 1e-14}})
                       .set_absorbing(1)
                       .set_absorbing(2)
                       .build();
    const auto row = m.row(0, 0);
    REQUIRE(row.size() == 2);
    CHECK(row[0] == Transition{1, 0.5});
    CHECK(row[1] == Transition{2, 0.5});
    CHECK(validate(m).empty());
}

TEST_CASE("make_absorbing rewrites only states outside C") {
    const auto m = raw_mdp(3, 1, {{{1, 0.4}, {2, 0.6}}, {{2, 1.0}}, {{2, 1.0}}}, {true, false, true});
    const auto a = make_absorbing(m);
    CHECK(a.row(1, 0).size() == 1);
    CHECK(a.row(1, 0)[0] == Transition{1, 1.0});
    CHECK(std::equal(a.row(0, 0).begin(), a.row(0, 0).end(), m.row(0, 0).begin(), m.row(0, 0).end()));
    CHECK(validate(a).empty());
    CHECK(make_absorbing(a) == a);
}

TEST_CASE("make_absorbing rejects a non-stochastic row") {
    const auto m = raw_mdp(2, 1, {{{1, 0.9}}, {{0, 1.0}}}, {true, false});
    CHECK_THROWS_AS(make_absorbing(m), StructuralError);
}

TEST_CASE("make_absorbing is idempotent and always valid on random kernels") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto base = random_small_mdp(seed);
        // Re-scramble the rows of unsafe states before re-absorbing.
        SparseTransitionTable t(base.num_states(), base.num_actions());
        for (StateId s = 0; s < base.num_states(); ++s) {
            for (ActionId a = 0; a < base.num_actions(); ++a) {
                if (base.in_constraint(s)) {
                    t.append_row(base.row(s, a));
                } else {
                    const Transition away{static_cast<StateId>((s + 1) % base.num_states()), 1.0};
                    t.append_row(std::span<const Transition>(&away, 1));
                }
            }
        }
        const DiscreteMdp scrambled(std::move(t), base.constraint(), base.initial_weights());
        const auto once = make_absorbing(scrambled);
        CHECK(make_absorbing(once) == once);
        CHECK(once == base);
        CHECK(validate(once).empty());
    }
}

TEST_CASE("reward is the indicator of the source state") {
    const auto m = fixtures::three_state_chain();
    for (StateId s = 0; s < 3; ++s) {
        for (StateId t = 0; t < 3; ++t) CHECK(m.reward(s, 0, t) == (s < 2 ? 1.0 : 0.0));
    }
}

TEST_CASE("binary dump round-trips bit-exactly") {
    const auto m = random_small_mdp(42);
    nlohmann::json meta = {{"note", "x"}};
    std::stringstream a;
    write_mdp(a, m, meta);
    const auto bytes = a.str();
    CHECK(bytes.substr(0, 8) == "AVRSMDP1");
    std::stringstream in(bytes);
    const auto back = read_mdp(in);
    CHECK(back.mdp == m);
    CHECK(back.metadata == meta);
    std::stringstream again;
    write_mdp(again, back.mdp, back.metadata);
    CHECK(again.str() == bytes);
}

TEST_CASE("binary dump rejects bad magic and truncation") {
    std::stringstream bad("NOTANMDPxxxxxxxx");
    CHECK_THROWS_AS(read_mdp(bad), Error);
    std::stringstream a;
    write_mdp(a, fixtures::three_state_chain());
    const auto bytes = a.str();
    std::stringstream cut(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_mdp(cut), Error);
}

TEST_CASE("mask run-length encoding") {
    const ConstraintMask m({false, false, true, true, true, false});
    const auto rle = encode_mask_rle(m);
    CHECK(rle["first"] == false);
    CHECK(rle["runs"] == nlohmann::json::array({2, 3, 1}));
    CHECK(decode_mask_rle(rle, 6) == m);
    CHECK_THROWS(decode_mask_rle(rle, 7));
}
