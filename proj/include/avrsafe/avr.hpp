#pragma once

#include "avrsafe/grid.hpp"
#include "avrsafe/lp.hpp"
#include "avrsafe/mdp.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace avrsafe {

inline constexpr double kGainTolerance = 1e-8;
inline constexpr double kLevelTolerance = 1e-9;
inline constexpr double kOccupationZero = 1e-10;

struct PrimalOptions {
    // Impose 0 <= g <= 1 as variable bounds; the upper bound should never be
    // active beyond kGainTolerance.
    bool bound_gain = true;
    // Literal h >= 0 instead of a free bias. Changes h, never g.
    bool nonnegative_bias = false;
};

// Variable layout: g(s) at s, h(s) at S + s.
// Rows: (s,a) gain rows at s*A + a, bias rows at S*A + s*A + a.
lp::LinearProgram assemble_primal(const DiscreteMdp& mdp, const PrimalOptions& options = {});

// Variable layout: z(s,a) at s*A + a, y(s,a) at S*A + s*A + a.
// Rows: z-balance for s' at s', y-balance for s' at S + s'.
lp::LinearProgram assemble_dual(const DiscreteMdp& mdp);

struct GainBiasSolution {
    std::vector<double> gain;
    std::vector<double> bias;
    double objective = 0.0;
    lp::Status status = lp::Status::NumericalFailure;

    std::size_t size() const { return gain.size(); }
};

struct OccupationSolution {
    std::size_t states = 0;
    std::size_t actions = 0;
    std::vector<double> z;  // z(s,a) at s*A + a
    std::vector<double> y;
    double objective = 0.0;
    lp::Status status = lp::Status::NumericalFailure;

    double z_at(StateId s, ActionId a) const { return z[s * actions + a]; }
    double y_at(StateId s, ActionId a) const { return y[s * actions + a]; }
};

/// Gain and bias from a solved primal. Gains within kGainTolerance of [0,1]
/// are clipped into it; anything further out throws NumericalError, as does a
/// positive gain on an inadmissible state.
GainBiasSolution extract_gain(const DiscreteMdp& mdp, const lp::Solution& primal);

/// Gain and bias read off the equality-row multipliers of a solved dual.
GainBiasSolution gain_from_dual(const DiscreteMdp& mdp, const lp::Solution& dual);

/// Occupation measures from a solved dual. Throws NumericalError when an entry
/// is below -kOccupationZero or a balance row misses by more than 1e-7.
OccupationSolution extract_occupation(const DiscreteMdp& mdp, const lp::Solution& dual);

/// Largest violation of the two dual balance families.
double balance_residual(const DiscreteMdp& mdp, const OccupationSolution& occ);

class Policy {
public:
    Policy() = default;
    Policy(std::size_t states, std::size_t actions, std::vector<double> probabilities);
    static Policy deterministic(std::size_t actions, std::span<const ActionId> choice);

    std::size_t num_states() const { return states_; }
    std::size_t num_actions() const { return actions_; }
    double probability(StateId s, ActionId a) const { return p_[s * actions_ + a]; }
    std::span<const double> row(StateId s) const { return {p_.data() + s * actions_, actions_}; }
    ActionId action(StateId s) const;  // most probable action, lowest index on ties
    bool is_deterministic() const;

    bool operator==(const Policy&) const = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> p_;
};

/// pi(s) proportional to z(s,.) where its row sum is positive, otherwise to
/// y(s,.). Entries at or below kOccupationZero count as zero; a state with
/// both rows zero gets action 0.
Policy construct_policy(const OccupationSolution& occ);

struct SafetyLevelSet {
    double alpha = 1.0;
    std::vector<StateId> members;   // sorted
    std::vector<StateId> boundary;  // members with a non-member grid neighbour

    bool contains(StateId s) const;
    std::size_t size() const { return members.size(); }
};

SafetyLevelSet extract_level_set(const GainBiasSolution& gain, double alpha,
                                 const GridSpec* grid = nullptr);

struct RatioPoint {
    double alpha;
    std::size_t members;
    double ratio;  // |K_alpha| / |K_1|
};

std::vector<RatioPoint> level_set_ratio_curve(const GainBiasSolution& gain,
                                              std::span<const double> alphas);

/// max_s (max_a sum_s' p g(s') - g(s))^+ ; zero for an exact optimal gain.
double bellman_residual(const DiscreteMdp& mdp, std::span<const double> gain);

enum class PrimalRoute {
    // Solve the primal LP on its own.
    Direct,
    // Take g, h from the dual's row multipliers and check them against every
    // primal constraint and bound. Feasible multipliers with equal objectives
    // certify optimality of both LPs.
    Certified,
    // Direct while the primal has at most kDirectPrimalRowLimit rows.
    Auto,
};

inline constexpr std::size_t kDirectPrimalRowLimit = 8000;

const char* to_string(PrimalRoute route);
PrimalRoute primal_route_from_string(const std::string& name);

struct AvrOptions {
    PrimalOptions primal;
    PrimalRoute route = PrimalRoute::Auto;
    // Largest primal constraint violation accepted on the certified route.
    double certificate_tol = 1e-7;
};

struct AvrResult {
    GainBiasSolution gain;
    OccupationSolution occupation;
    Policy policy;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double duality_gap = 0.0;
    std::size_t primal_iterations = 0;
    std::size_t dual_iterations = 0;
    PrimalRoute route = PrimalRoute::Direct;  // the route actually taken
    double primal_violation = 0.0;           // of the reported (g, h) in the primal LP
};

/// Largest violation of the primal constraints and bounds at (g, h).
double primal_violation(const DiscreteMdp& mdp, const GainBiasSolution& gain,
                        const PrimalOptions& options = {});

/// Full average-reward pipeline. Throws NumericalError when an LP does not
/// reach optimality (message carries the backend status).
AvrResult solve_avr(const DiscreteMdp& mdp, const lp::Backend& backend,
                    const AvrOptions& options = {});

}  // namespace avrsafe
