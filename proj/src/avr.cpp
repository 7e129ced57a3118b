#include "avrsafe/avr.hpp"

#include "avrsafe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace avrsafe {

namespace {

void require_valid(const DiscreteMdp& mdp) {
    const auto violations = validate(mdp);
    if (!violations.empty()) {
        throw StructuralError("invalid MDP: " + violations.front().message + " (" +
                              std::to_string(violations.size()) + " violation(s))");
    }
}

std::string status_message(const char* which, const lp::Solution& sol) {
    std::ostringstream os;
    os << which << " LP not optimal: " << lp::to_string(sol.status);
    if (!sol.message.empty()) os << " (" << sol.message << ")";
    os << " after " << sol.iterations << " iterations";
    return os.str();
}

}  // namespace

lp::LinearProgram assemble_primal(const DiscreteMdp& mdp, const PrimalOptions& options) {
    require_valid(mdp);
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    lp::LinearProgram prog(lp::Sense::Minimize);
    for (StateId s = 0; s < S; ++s) {
        prog.add_variable(mdp.initial_weights()[s], 0.0, options.bound_gain ? 1.0 : lp::kInf);
    }
    for (StateId s = 0; s < S; ++s) {
        prog.add_variable(0.0, options.nonnegative_bias ? 0.0 : -lp::kInf, lp::kInf);
    }
    prog.reserve_coefficients(2 * (mdp.transitions().nonzeros() + 2 * S * A));

    // g(s) - sum p g(s') >= 0
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            const auto row = prog.add_row(lp::RowSense::GreaterEqual, 0.0);
            prog.add_coefficient(row, s, 1.0);
            for (const auto& e : mdp.row(s, a)) prog.add_coefficient(row, e.next, -e.probability);
        }
    }
    // g(s) + h(s) - sum p h(s') >= 1{s in C}
    for (StateId s = 0; s < S; ++s) {
        const double reward = mdp.in_constraint(s) ? 1.0 : 0.0;
        for (ActionId a = 0; a < A; ++a) {
            const auto row = prog.add_row(lp::RowSense::GreaterEqual, reward);
            prog.add_coefficient(row, s, 1.0);
            prog.add_coefficient(row, S + s, 1.0);
            for (const auto& e : mdp.row(s, a)) {
                prog.add_coefficient(row, S + e.next, -e.probability);
            }
        }
    }
    return prog;
}

lp::LinearProgram assemble_dual(const DiscreteMdp& mdp) {
    require_valid(mdp);
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    lp::LinearProgram prog(lp::Sense::Maximize);
    for (StateId s = 0; s < S; ++s) {
        const double reward = mdp.in_constraint(s) ? 1.0 : 0.0;
        for (ActionId a = 0; a < A; ++a) prog.add_variable(reward, 0.0, lp::kInf);
    }
    for (std::size_t k = 0; k < S * A; ++k) prog.add_variable(0.0, 0.0, lp::kInf);
    for (StateId s = 0; s < S; ++s) prog.add_row(lp::RowSense::Equal, 0.0);
    for (StateId s = 0; s < S; ++s) prog.add_row(lp::RowSense::Equal, mdp.initial_weights()[s]);
    prog.reserve_coefficients(2 * mdp.transitions().nonzeros() + 3 * S * A);

    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            const std::size_t z = s * A + a;
            const std::size_t y = S * A + z;
            // sum_a z(s',a) - sum z p = 0
            prog.add_coefficient(s, z, 1.0);
            for (const auto& e : mdp.row(s, a)) prog.add_coefficient(e.next, z, -e.probability);
            // sum_a y(s',a) - sum y p + sum_a z(s',a) = w(s')
            prog.add_coefficient(S + s, z, 1.0);
            prog.add_coefficient(S + s, y, 1.0);
            for (const auto& e : mdp.row(s, a)) {
                prog.add_coefficient(S + e.next, y, -e.probability);
            }
        }
    }
    return prog;
}

namespace {

GainBiasSolution checked_gain(const DiscreteMdp& mdp, std::vector<double> gain,
                              std::vector<double> bias, double objective, lp::Status status) {
    for (StateId s = 0; s < gain.size(); ++s) {
        double& g = gain[s];
        if (g < -kGainTolerance || g > 1.0 + kGainTolerance || !std::isfinite(g)) {
            std::ostringstream os;
            os << "gain " << g << " at state " << s << " outside [0,1]";
            throw NumericalError(os.str());
        }
        g = std::clamp(g, 0.0, 1.0);
        if (!mdp.in_constraint(s) && g > kGainTolerance) {
            std::ostringstream os;
            os << "positive gain " << g << " on inadmissible state " << s;
            throw NumericalError(os.str());
        }
    }
    return {std::move(gain), std::move(bias), objective, status};
}

}  // namespace

GainBiasSolution extract_gain(const DiscreteMdp& mdp, const lp::Solution& primal) {
    if (!primal.optimal()) throw NumericalError(status_message("primal", primal));
    const std::size_t S = mdp.num_states();
    if (primal.values.size() != 2 * S) throw StructuralError("primal solution size mismatch");
    std::vector<double> g(primal.values.begin(), primal.values.begin() + S);
    std::vector<double> h(primal.values.begin() + S, primal.values.end());
    return checked_gain(mdp, std::move(g), std::move(h), primal.objective, primal.status);
}

GainBiasSolution gain_from_dual(const DiscreteMdp& mdp, const lp::Solution& dual) {
    if (!dual.optimal()) throw NumericalError(status_message("dual", dual));
    const std::size_t S = mdp.num_states();
    if (dual.row_duals.size() != 2 * S) throw StructuralError("dual solution size mismatch");
    std::vector<double> h(dual.row_duals.begin(), dual.row_duals.begin() + S);
    std::vector<double> g(dual.row_duals.begin() + S, dual.row_duals.end());
    double objective = 0.0;
    for (StateId s = 0; s < S; ++s) objective += mdp.initial_weights()[s] * g[s];
    return checked_gain(mdp, std::move(g), std::move(h), objective, dual.status);
}

double balance_residual(const DiscreteMdp& mdp, const OccupationSolution& occ) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    std::vector<double> zr(S, 0.0), yr(S, 0.0);
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            const double z = occ.z_at(s, a);
            const double y = occ.y_at(s, a);
            zr[s] += z;
            yr[s] += y + z;
            for (const auto& e : mdp.row(s, a)) {
                zr[e.next] -= z * e.probability;
                yr[e.next] -= y * e.probability;
            }
        }
    }
    double worst = 0.0;
    for (StateId s = 0; s < S; ++s) {
        worst = std::max({worst, std::abs(zr[s]), std::abs(yr[s] - mdp.initial_weights()[s])});
    }
    return worst;
}

OccupationSolution extract_occupation(const DiscreteMdp& mdp, const lp::Solution& dual) {
    if (!dual.optimal()) throw NumericalError(status_message("dual", dual));
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    if (dual.values.size() != 2 * S * A) throw StructuralError("dual solution size mismatch");
    OccupationSolution occ;
    occ.states = S;
    occ.actions = A;
    occ.z.assign(dual.values.begin(), dual.values.begin() + S * A);
    occ.y.assign(dual.values.begin() + S * A, dual.values.end());
    occ.objective = dual.objective;
    occ.status = dual.status;
    for (std::size_t k = 0; k < S * A; ++k) {
        if (occ.z[k] < -kOccupationZero || occ.y[k] < -kOccupationZero) {
            throw NumericalError("negative occupation measure at pair " + std::to_string(k));
        }
    }
    const double residual = balance_residual(mdp, occ);
    if (residual > 1e-7) {
        std::ostringstream os;
        os << "dual balance residual " << residual << " exceeds 1e-7";
        throw NumericalError(os.str());
    }
    return occ;
}

Policy::Policy(std::size_t states, std::size_t actions, std::vector<double> probabilities)
    : states_(states), actions_(actions), p_(std::move(probabilities)) {
    if (p_.size() != states_ * actions_) throw StructuralError("policy table size mismatch");
}

Policy Policy::deterministic(std::size_t actions, std::span<const ActionId> choice) {
    std::vector<double> p(choice.size() * actions, 0.0);
    for (std::size_t s = 0; s < choice.size(); ++s) {
        if (choice[s] >= actions) throw StructuralError("policy action out of range");
        p[s * actions + choice[s]] = 1.0;
    }
    return Policy(choice.size(), actions, std::move(p));
}

ActionId Policy::action(StateId s) const {
    const auto r = row(s);
    return static_cast<ActionId>(std::max_element(r.begin(), r.end()) - r.begin());
}

bool Policy::is_deterministic() const {
    for (StateId s = 0; s < states_; ++s) {
        int ones = 0;
        for (double p : row(s)) {
            if (p == 1.0) {
                ++ones;
            } else if (p != 0.0) {
                return false;
            }
        }
        if (ones != 1) return false;
    }
    return true;
}

Policy construct_policy(const OccupationSolution& occ) {
    const std::size_t S = occ.states;
    const std::size_t A = occ.actions;
    std::vector<double> p(S * A, 0.0);
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            if (occ.z_at(s, a) < -kOccupationZero || occ.y_at(s, a) < -kOccupationZero) {
                throw NumericalError("negative occupation measure at state " + std::to_string(s));
            }
        }
        auto pick_row = [&](const std::vector<double>& v) -> bool {
            double total = 0.0;
            for (ActionId a = 0; a < A; ++a) {
                const double x = v[s * A + a];
                if (x > kOccupationZero) total += x;
            }
            if (total <= kOccupationZero) return false;
            for (ActionId a = 0; a < A; ++a) {
                const double x = v[s * A + a];
                p[s * A + a] = x > kOccupationZero ? x / total : 0.0;
            }
            return true;
        };
        if (!pick_row(occ.z) && !pick_row(occ.y)) p[s * A] = 1.0;
    }
    // Snap single-support rows to an exact unit mass.
    for (StateId s = 0; s < S; ++s) {
        std::size_t support = 0;
        ActionId last = 0;
        for (ActionId a = 0; a < A; ++a) {
            if (p[s * A + a] > 0.0) {
                ++support;
                last = a;
            }
        }
        if (support == 1) p[s * A + last] = 1.0;
    }
    return Policy(S, A, std::move(p));
}

bool SafetyLevelSet::contains(StateId s) const {
    return std::binary_search(members.begin(), members.end(), s);
}

SafetyLevelSet extract_level_set(const GainBiasSolution& gain, double alpha,
                                 const GridSpec* grid) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0,1]");
    SafetyLevelSet set;
    set.alpha = alpha;
    std::vector<bool> in(gain.size(), false);
    for (StateId s = 0; s < gain.size(); ++s) {
        if (gain.gain[s] >= alpha - kLevelTolerance) {
            set.members.push_back(s);
            in[s] = true;
        }
    }
    if (grid != nullptr) {
        if (grid->size() != gain.size()) throw StructuralError("grid does not match gain size");
        for (StateId s : set.members) {
            for (StateId nb : grid->neighbors(s)) {
                if (!in[nb]) {
                    set.boundary.push_back(s);
                    break;
                }
            }
        }
    }
    return set;
}

std::vector<RatioPoint> level_set_ratio_curve(const GainBiasSolution& gain,
                                              std::span<const double> alphas) {
    const auto safe = extract_level_set(gain, 1.0).size();
    if (safe == 0) throw EmptySafeSetError("no state has gain 1; ratio curve undefined");
    std::vector<RatioPoint> out;
    out.reserve(alphas.size());
    for (double alpha : alphas) {
        const auto n = extract_level_set(gain, alpha).size();
        out.push_back({alpha, n, static_cast<double>(n) / static_cast<double>(safe)});
    }
    return out;
}

double bellman_residual(const DiscreteMdp& mdp, std::span<const double> gain) {
    double worst = 0.0;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        for (ActionId a = 0; a < mdp.num_actions(); ++a) {
            double expect = 0.0;
            for (const auto& e : mdp.row(s, a)) expect += e.probability * gain[e.next];
            worst = std::max(worst, expect - gain[s]);
        }
    }
    return worst;
}

const char* to_string(PrimalRoute route) {
    switch (route) {
        case PrimalRoute::Direct: return "direct";
        case PrimalRoute::Certified: return "certified";
        case PrimalRoute::Auto: return "auto";
    }
    return "auto";
}

PrimalRoute primal_route_from_string(const std::string& name) {
    if (name == "direct") return PrimalRoute::Direct;
    if (name == "certified") return PrimalRoute::Certified;
    if (name == "auto") return PrimalRoute::Auto;
    throw ParameterError("unknown primal route '" + name + "' (direct, certified, auto)");
}

double primal_violation(const DiscreteMdp& mdp, const GainBiasSolution& gain,
                        const PrimalOptions& options) {
    const auto prog = assemble_primal(mdp, options);
    std::vector<double> x(gain.gain);
    x.insert(x.end(), gain.bias.begin(), gain.bias.end());
    return prog.max_violation(x);
}

AvrResult solve_avr(const DiscreteMdp& mdp, const lp::Backend& backend, const AvrOptions& options) {
    AvrResult result;

    const auto dual_lp = assemble_dual(mdp);
    const auto dual = lp::solve_lp(dual_lp, backend);
    result.occupation = extract_occupation(mdp, dual);
    result.policy = construct_policy(result.occupation);
    result.dual_objective = dual.objective;
    result.dual_iterations = dual.iterations;

    PrimalRoute route = options.route;
    if (route == PrimalRoute::Auto) {
        route = 2 * mdp.num_states() * mdp.num_actions() <= kDirectPrimalRowLimit
                    ? PrimalRoute::Direct
                    : PrimalRoute::Certified;
    }
    result.route = route;

    if (route == PrimalRoute::Direct) {
        const auto primal_lp = assemble_primal(mdp, options.primal);
        const auto primal = lp::solve_lp(primal_lp, backend);
        result.gain = extract_gain(mdp, primal);
        result.primal_objective = primal.objective;
        result.primal_iterations = primal.iterations;
        result.primal_violation = primal_lp.max_violation(primal.values);
    } else {
        result.gain = gain_from_dual(mdp, dual);
        if (options.primal.nonnegative_bias) {
            // A constant shift of h cancels in every bias row.
            const double lo = *std::min_element(result.gain.bias.begin(), result.gain.bias.end());
            if (lo < 0.0) {
                for (double& h : result.gain.bias) h -= lo;
            }
        }
        result.primal_violation = primal_violation(mdp, result.gain, options.primal);
        if (result.primal_violation > options.certificate_tol) {
            std::ostringstream os;
            os << "dual multipliers violate the primal LP by " << result.primal_violation;
            throw NumericalError(os.str());
        }
        result.primal_objective = result.gain.objective;
    }
    result.duality_gap = std::abs(result.primal_objective - result.dual_objective);
    return result;
}

}  // namespace avrsafe
