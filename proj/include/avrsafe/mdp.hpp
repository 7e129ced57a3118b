#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace avrsafe {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

/// Per-state admissibility flag. States outside the mask are absorbing and
/// earn no reward.
class ConstraintMask {
public:
    ConstraintMask() = default;
    explicit ConstraintMask(std::vector<bool> in_constraint) : in_(std::move(in_constraint)) {}

    static ConstraintMask all(std::size_t states, bool value) {
        return ConstraintMask(std::vector<bool>(states, value));
    }

    bool contains(StateId s) const { return in_[s]; }
    std::size_t size() const { return in_.size(); }
    std::size_t count() const;
    const std::vector<bool>& flags() const { return in_; }

    bool operator==(const ConstraintMask&) const = default;

private:
    std::vector<bool> in_;
};

struct Transition {
    StateId next;
    double probability;

    bool operator==(const Transition&) const = default;
};

/// Compressed (state, action) -> successor distribution table. Row k = s*A + a.
class SparseTransitionTable {
public:
    SparseTransitionTable() = default;
    SparseTransitionTable(std::size_t states, std::size_t actions);

    std::size_t states() const { return states_; }
    std::size_t actions() const { return actions_; }
    std::size_t nonzeros() const { return entries_.size(); }

    std::span<const Transition> row(StateId s, ActionId a) const {
        const std::size_t k = static_cast<std::size_t>(s) * actions_ + a;
        return {entries_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
    }

    // Rows must be appended in (s, a) order; entries are stored verbatim.
    void append_row(std::span<const Transition> entries);
    bool complete() const { return offsets_.size() == states_ * actions_ + 1; }

    bool operator==(const SparseTransitionTable&) const = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Transition> entries_;
};

/// Finite MDP for the safety reduction. Rewards are not stored: r(s,a,s') is
/// the indicator of s being admissible, so the mask is the single source of
/// truth. Instances are immutable once built.
class DiscreteMdp {
public:
    DiscreteMdp() = default;
    DiscreteMdp(SparseTransitionTable transitions, ConstraintMask constraint,
                std::vector<double> initial_weights);

    std::size_t num_states() const { return transitions_.states(); }
    std::size_t num_actions() const { return transitions_.actions(); }
    const SparseTransitionTable& transitions() const { return transitions_; }
    const ConstraintMask& constraint() const { return constraint_; }
    const std::vector<double>& initial_weights() const { return weights_; }

    std::span<const Transition> row(StateId s, ActionId a) const { return transitions_.row(s, a); }
    bool in_constraint(StateId s) const { return constraint_.contains(s); }

    double reward(StateId s, ActionId /*a*/, StateId /*next*/) const {
        return in_constraint(s) ? 1.0 : 0.0;
    }

    bool operator==(const DiscreteMdp&) const = default;

private:
    SparseTransitionTable transitions_;
    ConstraintMask constraint_;
    std::vector<double> weights_;
};

inline constexpr double kRowMassTolerance = 1e-12;
inline constexpr double kPruneThreshold = 1e-12;

/// Builds a DiscreteMdp row by row. Duplicate successors are merged by
/// summation, entries below kPruneThreshold are dropped and the row is
/// renormalized.
class MdpBuilder {
public:
    MdpBuilder(std::size_t states, std::size_t actions);

    MdpBuilder& set_constraint(ConstraintMask mask);
    MdpBuilder& set_initial_weights(std::vector<double> weights);
    MdpBuilder& set_row(StateId s, ActionId a, std::vector<Transition> entries);
    // Convenience for absorbing rows: every action self-loops.
    MdpBuilder& set_absorbing(StateId s);

    DiscreteMdp build() const;

private:
    std::size_t states_;
    std::size_t actions_;
    std::vector<std::vector<Transition>> rows_;
    ConstraintMask mask_;
    std::vector<double> weights_;
};

/// Merges duplicates, prunes tiny masses, renormalizes and sorts by successor.
std::vector<Transition> normalize_row(std::vector<Transition> entries);

std::vector<double> uniform_weights(std::size_t states);

enum class ViolationKind {
    RowMass,
    ProbabilityRange,
    DuplicateSuccessor,
    SuccessorOutOfRange,
    AbsorbingRule,
    InitialWeights,
    Dimensions,
};

struct Violation {
    ViolationKind kind;
    StateId state = 0;
    ActionId action = 0;
    bool whole_state = false;  // the rule concerns all actions of `state`
    std::string message;
};

/// Checks every structural invariant and reports each failure as data.
std::vector<Violation> validate(const DiscreteMdp& mdp);

/// Replaces every row of every state outside the constraint set by a
/// self-loop. Throws StructuralError if an input row is not stochastic.
DiscreteMdp make_absorbing(const DiscreteMdp& mdp);

}  // namespace avrsafe
