#pragma once

#include "avrsafe/avr.hpp"
#include "avrsafe/mdp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace avrsafe {

inline constexpr double kSupportThreshold = 1e-12;
inline constexpr std::size_t kEnumerationMaxStates = 8;
inline constexpr std::size_t kEnumerationMaxActions = 4;

struct RolloutReport {
    StateId start = 0;
    std::string policy_id;
    std::size_t horizon = 0;
    std::size_t trials = 0;
    std::size_t survivals = 0;
    double survival_rate = 0.0;
    double half_width = 0.0;  // 95% normal approximation
};

/// Simulates the chain induced by `policy`. A trial survives iff the start and
/// every state visited in `horizon` steps lie in C. Trial t draws from its own
/// generator seeded by (seed, start, t), so the result does not depend on the
/// thread count.
RolloutReport rollout_survival(const DiscreteMdp& mdp, const Policy& policy, StateId start,
                               std::size_t horizon, std::size_t trials, std::uint64_t seed,
                               std::size_t threads = 1, std::string policy_id = "policy");

/// Recurrent-class structure of the chain induced by a policy.
struct ChainClassification {
    std::vector<int> component;      // SCC id per state
    std::vector<bool> recurrent;     // state lies in a closed class
    std::vector<bool> safe_class;    // state lies in a closed class inside C
    std::size_t classes = 0;         // number of closed classes
};

ChainClassification classify_chain(const DiscreteMdp& mdp, const Policy& policy);

/// Probability, from every state, of ending in a closed class contained in C.
/// Throws NumericalError when the transient system is singular.
std::vector<double> absorption_probabilities(const DiscreteMdp& mdp, const Policy& policy);

double exact_absorption_probability(const DiscreteMdp& mdp, const Policy& policy, StateId start);

/// Best exact survival probability over all deterministic stationary policies,
/// per state. Throws GuardError beyond kEnumerationMaxStates/Actions.
std::vector<double> enumerate_policy_optima(const DiscreteMdp& mdp);
double enumerate_policy_optimum(const DiscreteMdp& mdp, StateId start);

struct RandomMdpOptions {
    std::size_t max_states = 6;
    std::size_t max_actions = 3;
    std::size_t max_support = 3;
};

/// Seeded random instance with at least two states, at least one of them
/// outside C, and out-of-C states made absorbing.
DiscreteMdp random_small_mdp(std::uint64_t seed, const RandomMdpOptions& options = {});

}  // namespace avrsafe
