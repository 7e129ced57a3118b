#include "avrsafe/rollout.hpp"

#include "avrsafe/dynamics.hpp"
#include "avrsafe/errors.hpp"
#include "avrsafe/parallel.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace avrsafe {

namespace {

constexpr double kZ975 = 1.959963984540054;

void check_policy(const DiscreteMdp& mdp, const Policy& policy) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
        throw StructuralError("policy dimensions do not match the MDP");
    }
}

StateId sample_successor(std::span<const Transition> row, double u) {
    double acc = 0.0;
    for (const auto& e : row) {
        acc += e.probability;
        if (u < acc) return e.next;
    }
    return row.back().next;
}

ActionId sample_action(std::span<const double> row, double u) {
    double acc = 0.0;
    for (ActionId a = 0; a < row.size(); ++a) {
        acc += row[a];
        if (u < acc) return a;
    }
    for (ActionId a = static_cast<ActionId>(row.size()); a-- > 0;) {
        if (row[a] > 0.0) return a;
    }
    return 0;
}

// Successor lists of the induced chain, restricted to p > kSupportThreshold.
std::vector<std::vector<std::pair<StateId, double>>> induced_chain(const DiscreteMdp& mdp,
                                                                   const Policy& policy) {
    const std::size_t S = mdp.num_states();
    std::vector<std::vector<std::pair<StateId, double>>> out(S);
    std::vector<double> dense(S, 0.0);
    std::vector<StateId> touched;
    for (StateId s = 0; s < S; ++s) {
        touched.clear();
        for (ActionId a = 0; a < mdp.num_actions(); ++a) {
            const double pa = policy.probability(s, a);
            if (pa == 0.0) continue;
            for (const auto& e : mdp.row(s, a)) {
                if (dense[e.next] == 0.0) touched.push_back(e.next);
                dense[e.next] += pa * e.probability;
            }
        }
        std::sort(touched.begin(), touched.end());
        for (StateId t : touched) {
            if (dense[t] > kSupportThreshold) out[s].emplace_back(t, dense[t]);
            dense[t] = 0.0;
        }
    }
    return out;
}

// Iterative Tarjan; component ids are assigned in completion order.
std::vector<int> strongly_connected(const std::vector<std::vector<std::pair<StateId, double>>>& g,
                                    int& count) {
    const std::size_t n = g.size();
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<StateId> stack;
    std::vector<std::pair<StateId, std::size_t>> call;
    int next_index = 0;
    count = 0;
    for (StateId root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.emplace_back(root, 0);
        while (!call.empty()) {
            auto& [v, edge] = call.back();
            if (edge == 0) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (edge < g[v].size()) {
                const StateId w = g[v][edge++].first;
                if (index[w] == -1) {
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                StateId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = count;
                } while (w != v);
                ++count;
            }
            const StateId done = v;
            call.pop_back();
            if (!call.empty()) {
                const StateId parent = call.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }
    return comp;
}

}  // namespace

RolloutReport rollout_survival(const DiscreteMdp& mdp, const Policy& policy, StateId start,
                               std::size_t horizon, std::size_t trials, std::uint64_t seed,
                               std::size_t threads, std::string policy_id) {
    check_policy(mdp, policy);
    if (horizon < 1 || trials < 1) throw ParameterError("horizon and trials must be at least 1");
    if (start >= mdp.num_states()) throw ParameterError("start state out of range");

    std::vector<unsigned char> survived(trials, 0);
    parallel_for(trials, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t t = begin; t < end; ++t) {
            std::mt19937_64 rng(pair_seed(seed, start, t));
            StateId s = start;
            bool alive = mdp.in_constraint(s);
            for (std::size_t k = 0; alive && k < horizon; ++k) {
                const ActionId a = sample_action(policy.row(s), unit(rng));
                s = sample_successor(mdp.row(s, a), unit(rng));
                alive = mdp.in_constraint(s);
            }
            survived[t] = alive ? 1 : 0;
        }
    });

    RolloutReport r;
    r.start = start;
    r.policy_id = std::move(policy_id);
    r.horizon = horizon;
    r.trials = trials;
    r.survivals = static_cast<std::size_t>(std::count(survived.begin(), survived.end(), 1));
    r.survival_rate = static_cast<double>(r.survivals) / static_cast<double>(trials);
    r.half_width = kZ975 * std::sqrt(r.survival_rate * (1.0 - r.survival_rate) /
                                     static_cast<double>(trials));
    return r;
}

ChainClassification classify_chain(const DiscreteMdp& mdp, const Policy& policy) {
    check_policy(mdp, policy);
    const auto chain = induced_chain(mdp, policy);
    const std::size_t S = mdp.num_states();
    int count = 0;
    ChainClassification c;
    c.component = strongly_connected(chain, count);

    std::vector<bool> closed(count, true), inside(count, true);
    for (StateId s = 0; s < S; ++s) {
        if (!mdp.in_constraint(s)) inside[c.component[s]] = false;
        for (const auto& [t, p] : chain[s]) {
            if (c.component[t] != c.component[s]) closed[c.component[s]] = false;
        }
    }
    c.recurrent.resize(S);
    c.safe_class.resize(S);
    for (StateId s = 0; s < S; ++s) {
        c.recurrent[s] = closed[c.component[s]];
        c.safe_class[s] = closed[c.component[s]] && inside[c.component[s]];
    }
    c.classes = static_cast<std::size_t>(std::count(closed.begin(), closed.end(), true));
    return c;
}

std::vector<double> absorption_probabilities(const DiscreteMdp& mdp, const Policy& policy) {
    const auto c = classify_chain(mdp, policy);
    const auto chain = induced_chain(mdp, policy);
    const std::size_t S = mdp.num_states();

    std::vector<double> u(S, 0.0);
    std::vector<int> transient_index(S, -1);
    int nt = 0;
    for (StateId s = 0; s < S; ++s) {
        if (c.recurrent[s]) {
            u[s] = c.safe_class[s] ? 1.0 : 0.0;
        } else {
            transient_index[s] = nt++;
        }
    }
    if (nt == 0) return u;

    // (I - Q) u_T = R 1_safe
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nt);
    for (StateId s = 0; s < S; ++s) {
        const int i = transient_index[s];
        if (i < 0) continue;
        trip.emplace_back(i, i, 1.0);
        for (const auto& [t, p] : chain[s]) {
            const int j = transient_index[t];
            if (j >= 0) {
                trip.emplace_back(i, j, -p);
            } else if (c.safe_class[t]) {
                rhs[i] += p;
            }
        }
    }
    Eigen::SparseMatrix<double> m(nt, nt);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("transient absorption system is singular");
    }
    const Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite() || (m * x - rhs).lpNorm<Eigen::Infinity>() > 1e-9) {
        throw NumericalError("transient absorption solve failed");
    }
    for (StateId s = 0; s < S; ++s) {
        if (transient_index[s] >= 0) u[s] = std::clamp(x[transient_index[s]], 0.0, 1.0);
    }
    return u;
}

double exact_absorption_probability(const DiscreteMdp& mdp, const Policy& policy, StateId start) {
    if (start >= mdp.num_states()) throw ParameterError("start state out of range");
    return absorption_probabilities(mdp, policy)[start];
}

std::vector<double> enumerate_policy_optima(const DiscreteMdp& mdp) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    if (S > kEnumerationMaxStates || A > kEnumerationMaxActions) {
        throw GuardError("policy enumeration limited to " + std::to_string(kEnumerationMaxStates) +
                         " states and " + std::to_string(kEnumerationMaxActions) + " actions");
    }
    std::vector<double> best(S, 0.0);
    std::vector<ActionId> choice(S, 0);
    while (true) {
        const auto u = absorption_probabilities(mdp, Policy::deterministic(A, choice));
        for (StateId s = 0; s < S; ++s) best[s] = std::max(best[s], u[s]);
        std::size_t k = 0;
        while (k < S && ++choice[k] == A) choice[k++] = 0;
        if (k == S) break;
    }
    return best;
}

double enumerate_policy_optimum(const DiscreteMdp& mdp, StateId start) {
    if (start >= mdp.num_states()) throw ParameterError("start state out of range");
    return enumerate_policy_optima(mdp)[start];
}

DiscreteMdp random_small_mdp(std::uint64_t seed, const RandomMdpOptions& options) {
    if (options.max_states < 2 || options.max_actions < 1 || options.max_support < 1) {
        throw ParameterError("random MDP needs at least 2 states, 1 action and support 1");
    }
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t S = pick(2, options.max_states);
    const std::size_t A = pick(1, options.max_actions);

    std::vector<bool> inside(S);
    for (std::size_t s = 0; s < S; ++s) inside[s] = pick(0, 1) == 1;
    inside[pick(0, S - 1)] = false;

    MdpBuilder b(S, A);
    b.set_constraint(ConstraintMask(inside));
    std::vector<StateId> states(S);
    std::iota(states.begin(), states.end(), 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (StateId s = 0; s < S; ++s) {
        if (!inside[s]) {
            b.set_absorbing(s);
            continue;
        }
        for (ActionId a = 0; a < A; ++a) {
            const std::size_t k = pick(1, std::min(options.max_support, S));
            std::shuffle(states.begin(), states.end(), rng);
            std::vector<Transition> row;
            double total = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double w = 0.05 + unit(rng);
                row.push_back({states[i], w});
                total += w;
            }
            for (auto& e : row) e.probability /= total;
            b.set_row(s, a, std::move(row));
        }
    }
    return b.build();
}

}  // namespace avrsafe
