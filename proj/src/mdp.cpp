#include "avrsafe/mdp.hpp"

#include "avrsafe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace avrsafe {

std::size_t ConstraintMask::count() const {
    return static_cast<std::size_t>(std::count(in_.begin(), in_.end(), true));
}

SparseTransitionTable::SparseTransitionTable(std::size_t states, std::size_t actions)
    : states_(states), actions_(actions) {
    offsets_.reserve(states * actions + 1);
}

void SparseTransitionTable::append_row(std::span<const Transition> entries) {
    if (complete()) {
        throw StructuralError("transition table already has all rows");
    }
    entries_.insert(entries_.end(), entries.begin(), entries.end());
    offsets_.push_back(entries_.size());
}

DiscreteMdp::DiscreteMdp(SparseTransitionTable transitions, ConstraintMask constraint,
                         std::vector<double> initial_weights)
    : transitions_(std::move(transitions)),
      constraint_(std::move(constraint)),
      weights_(std::move(initial_weights)) {}

std::vector<double> uniform_weights(std::size_t states) {
    return std::vector<double>(states, states == 0 ? 0.0 : 1.0 / static_cast<double>(states));
}

std::vector<Transition> normalize_row(std::vector<Transition> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const Transition& a, const Transition& b) { return a.next < b.next; });
    std::vector<Transition> merged;
    merged.reserve(entries.size());
    for (const auto& e : entries) {
        if (!merged.empty() && merged.back().next == e.next) {
            merged.back().probability += e.probability;
        } else {
            merged.push_back(e);
        }
    }
    std::erase_if(merged, [](const Transition& e) { return e.probability < kPruneThreshold; });
    double mass = 0.0;
    for (const auto& e : merged) mass += e.probability;
    if (mass > 0.0 && mass != 1.0) {
        for (auto& e : merged) e.probability /= mass;
    }
    return merged;
}

MdpBuilder::MdpBuilder(std::size_t states, std::size_t actions)
    : states_(states),
      actions_(actions),
      rows_(states * actions),
      mask_(ConstraintMask::all(states, true)),
      weights_(uniform_weights(states)) {}

MdpBuilder& MdpBuilder::set_constraint(ConstraintMask mask) {
    if (mask.size() != states_) throw StructuralError("constraint mask size mismatch");
    mask_ = std::move(mask);
    return *this;
}

MdpBuilder& MdpBuilder::set_initial_weights(std::vector<double> weights) {
    if (weights.size() != states_) throw StructuralError("initial weight size mismatch");
    weights_ = std::move(weights);
    return *this;
}

MdpBuilder& MdpBuilder::set_row(StateId s, ActionId a, std::vector<Transition> entries) {
    if (s >= states_ || a >= actions_) throw StructuralError("row index out of range");
    rows_[static_cast<std::size_t>(s) * actions_ + a] = normalize_row(std::move(entries));
    return *this;
}

MdpBuilder& MdpBuilder::set_absorbing(StateId s) {
    for (ActionId a = 0; a < actions_; ++a) set_row(s, a, {{s, 1.0}});
    return *this;
}

DiscreteMdp MdpBuilder::build() const {
    SparseTransitionTable table(states_, actions_);
    for (const auto& row : rows_) table.append_row(row);
    return DiscreteMdp(std::move(table), mask_, weights_);
}

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

bool is_self_loop(std::span<const Transition> row, StateId s) {
    return row.size() == 1 && row[0].next == s && row[0].probability == 1.0;
}

}  // namespace

std::vector<Violation> validate(const DiscreteMdp& mdp) {
    std::vector<Violation> out;
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();

    if (!mdp.transitions().complete() || mdp.constraint().size() != S ||
        mdp.initial_weights().size() != S || S == 0 || A == 0) {
        out.push_back({ViolationKind::Dimensions, 0, 0, true,
                       "dimension mismatch between transitions, mask and weights"});
        return out;
    }

    double weight_sum = 0.0;
    for (StateId s = 0; s < S; ++s) {
        const double w = mdp.initial_weights()[s];
        weight_sum += w;
        if (!(w > 0.0)) {
            out.push_back({ViolationKind::InitialWeights, s, 0, true,
                           "initial weight at state " + std::to_string(s) + " is not positive"});
        }
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        out.push_back({ViolationKind::InitialWeights, 0, 0, true,
                       "initial weights sum to " + format_double(weight_sum) + " ≠ 1"});
    }

    for (StateId s = 0; s < S; ++s) {
        bool absorbing_ok = true;
        for (ActionId a = 0; a < A; ++a) {
            const auto row = mdp.row(s, a);
            const std::string where =
                "(" + std::to_string(s) + "," + std::to_string(a) + ")";
            double mass = 0.0;
            bool range_ok = true;
            for (std::size_t k = 0; k < row.size(); ++k) {
                const auto& e = row[k];
                mass += e.probability;
                if (!(e.probability >= 0.0 && e.probability <= 1.0)) range_ok = false;
                if (e.next >= S) {
                    out.push_back({ViolationKind::SuccessorOutOfRange, s, a, false,
                                   "successor " + std::to_string(e.next) + " out of range at " +
                                       where});
                }
                for (std::size_t j = 0; j < k; ++j) {
                    if (row[j].next == e.next) {
                        out.push_back({ViolationKind::DuplicateSuccessor, s, a, false,
                                       "duplicate successor " + std::to_string(e.next) + " at " +
                                           where});
                    }
                }
            }
            if (!range_ok) {
                out.push_back({ViolationKind::ProbabilityRange, s, a, false,
                               "probability outside [0,1] at " + where});
            }
            if (std::abs(mass - 1.0) > kRowMassTolerance) {
                out.push_back({ViolationKind::RowMass, s, a, false,
                               "row mass " + format_double(mass) + " ≠ 1 at " + where});
            }
            if (!mdp.in_constraint(s) && !is_self_loop(row, s)) absorbing_ok = false;
        }
        if (!absorbing_ok) {
            out.push_back({ViolationKind::AbsorbingRule, s, 0, true,
                           "absorbing rule broken at (" + std::to_string(s) + ",·)"});
        }
    }
    return out;
}

DiscreteMdp make_absorbing(const DiscreteMdp& mdp) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    SparseTransitionTable table(S, A);
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            const auto row = mdp.row(s, a);
            double mass = 0.0;
            for (const auto& e : row) {
                if (e.probability < 0.0 || e.probability > 1.0) {
                    throw StructuralError("probability outside [0,1] at (" + std::to_string(s) +
                                          "," + std::to_string(a) + ")");
                }
                mass += e.probability;
            }
            if (std::abs(mass - 1.0) > kRowMassTolerance) {
                throw StructuralError("row (" + std::to_string(s) + "," + std::to_string(a) +
                                      ") is not stochastic: mass " + format_double(mass));
            }
            if (mdp.in_constraint(s)) {
                table.append_row(row);
            } else {
                const Transition self{s, 1.0};
                table.append_row(std::span<const Transition>(&self, 1));
            }
        }
    }
    return DiscreteMdp(std::move(table), mdp.constraint(), mdp.initial_weights());
}

}  // namespace avrsafe
