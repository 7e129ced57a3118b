#include "avrsafe/dynamics.hpp"

#include "avrsafe/errors.hpp"
#include "avrsafe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace avrsafe {

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv(kThreadsEnv)) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void DisturbanceModel::validate() const {
    if (!(clamp_lo <= clamp_hi)) throw ParameterError("disturbance clamp_lo must be <= clamp_hi");
    if (!(std_dev >= 0.0)) throw ParameterError("disturbance std_dev must be >= 0");
}

double sample_disturbance(const DisturbanceModel& model, std::mt19937_64& rng) {
    double d = model.mean;
    if (model.std_dev > 0.0) {
        std::normal_distribution<double> normal(model.mean, model.std_dev);
        d = normal(rng);
    }
    return std::clamp(d, model.clamp_lo, model.clamp_hi);
}

std::string to_string(DynamicsKind kind) {
    switch (kind) {
        case DynamicsKind::DoubleIntegrator: return "double-integrator";
        case DynamicsKind::InvertedPendulum: return "inverted-pendulum";
        case DynamicsKind::Custom: return "custom";
    }
    return "unknown";
}

DynamicsKind dynamics_kind_from_string(const std::string& name) {
    if (name == "double-integrator") return DynamicsKind::DoubleIntegrator;
    if (name == "inverted-pendulum") return DynamicsKind::InvertedPendulum;
    if (name == "custom") return DynamicsKind::Custom;
    throw ParameterError("unknown dynamics kind '" + name + "'");
}

State2 step_double_integrator(State2 state, double u, double d, double dt) {
    const auto [x, v] = state;
    return {x + v * dt, v + (u + d) * dt};
}

State2 step_pendulum(State2 state, double u, double d, double dt, const PendulumParameters& p) {
    if (!(p.length > 0.0) || !(p.mass > 0.0)) {
        throw ParameterError("pendulum length and mass must be positive");
    }
    const auto [theta, omega] = state;
    const double accel =
        (p.gravity / p.length) * std::sin(theta) + u / (p.mass * p.length * p.length) + d;
    return {theta + omega * dt, omega + accel * dt};
}

void SystemSpec::validate() const {
    if (actions.empty()) throw ParameterError("action list is empty");
    if (!std::is_sorted(actions.begin(), actions.end())) {
        throw ParameterError("action list must be sorted");
    }
    if (state_box.dims() == 0 || state_box.hi.size() != state_box.dims()) {
        throw ParameterError("state box is malformed");
    }
    if (!state_box.contains(constraint_box)) {
        throw ParameterError("constraint box must lie inside the state box");
    }
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    disturbance.validate();
    switch (kind) {
        case DynamicsKind::DoubleIntegrator:
        case DynamicsKind::InvertedPendulum:
            if (state_box.dims() != 2) throw ParameterError(to_string(kind) + " is two-dimensional");
            if (kind == DynamicsKind::InvertedPendulum &&
                (!(pendulum.length > 0.0) || !(pendulum.mass > 0.0))) {
                throw ParameterError("pendulum length and mass must be positive");
            }
            break;
        case DynamicsKind::Custom:
            if (!custom_step) throw ParameterError("custom dynamics need a step map");
            break;
    }
}

void SystemSpec::step(std::span<const double> state, double u, double d,
                      std::span<double> next) const {
    switch (kind) {
        case DynamicsKind::DoubleIntegrator: {
            const auto s = step_double_integrator({state[0], state[1]}, u, d, dt);
            next[0] = s[0];
            next[1] = s[1];
            return;
        }
        case DynamicsKind::InvertedPendulum: {
            const auto s = step_pendulum({state[0], state[1]}, u, d, dt, pendulum);
            next[0] = s[0];
            next[1] = s[1];
            return;
        }
        case DynamicsKind::Custom:
            custom_step(state, u, d, dt, next);
            return;
    }
}

std::vector<double> uniform_actions(double lo, double hi, std::size_t count) {
    if (count == 0) throw ParameterError("action count must be positive");
    if (count == 1) return {0.5 * (lo + hi)};
    std::vector<double> out(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
    out.back() = hi;
    return out;
}

SystemSpec double_integrator_system(std::size_t action_count) {
    SystemSpec spec;
    spec.name = "double-integrator";
    spec.kind = DynamicsKind::DoubleIntegrator;
    spec.dt = 0.1;
    spec.actions = uniform_actions(-2.0, 2.0, action_count);
    spec.state_box = {{-1.0, -5.0}, {5.0, 5.0}};
    spec.constraint_box = {{0.0, -3.0}, {4.0, 3.0}};
    spec.disturbance = {0.0, 1.0, -1.0, 1.0};
    return spec;
}

SystemSpec inverted_pendulum_system(std::size_t action_count) {
    SystemSpec spec;
    spec.name = "inverted-pendulum";
    spec.kind = DynamicsKind::InvertedPendulum;
    spec.dt = 0.1;
    spec.actions = uniform_actions(-3.0, 3.0, action_count);
    spec.state_box = {{-0.5, -1.0}, {0.5, 1.0}};
    spec.constraint_box = {{-0.3, -0.6}, {0.3, 0.6}};
    spec.disturbance = {0.0, 1.0, -0.75, 0.75};
    return spec;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t pair_seed(std::uint64_t seed, std::uint64_t state, std::uint64_t action) {
    return splitmix64(splitmix64(splitmix64(seed) ^ state) ^ (action * 0x632be59bd9b4e019ULL));
}

ConstraintMask constraint_mask(const SystemSpec& spec, const GridSpec& grid) {
    std::vector<bool> in(grid.size());
    std::vector<double> x(grid.dims());
    for (StateId s = 0; s < grid.size(); ++s) {
        grid.coord_of(s, x);
        in[s] = spec.constraint_box.contains(x, kGridTolerance);
    }
    return ConstraintMask(std::move(in));
}

DiscreteMdp estimate_transitions(const SystemSpec& spec, const GridSpec& grid,
                                 std::size_t samples_per_pair, std::uint64_t seed,
                                 std::size_t threads) {
    spec.validate();
    if (samples_per_pair < 1) throw ParameterError("samples_per_pair must be at least 1");
    if (grid.dims() != spec.state_box.dims()) {
        throw ParameterError("grid dimension does not match the system");
    }
    const std::size_t S = grid.size();
    const std::size_t A = spec.actions.size();
    const auto mask = constraint_mask(spec, grid);

    std::vector<std::vector<Transition>> rows(S * A);
    parallel_for(S, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        std::vector<double> x(grid.dims());
        std::vector<double> next(grid.dims());
        std::vector<StateId> hits(samples_per_pair);
        for (std::size_t s = begin; s < end; ++s) {
            const auto sid = static_cast<StateId>(s);
            if (!mask.contains(sid)) {
                for (std::size_t a = 0; a < A; ++a) rows[s * A + a] = {{sid, 1.0}};
                continue;
            }
            grid.coord_of(sid, x);
            for (std::size_t a = 0; a < A; ++a) {
                std::mt19937_64 rng(pair_seed(seed, s, a));
                for (std::size_t k = 0; k < samples_per_pair; ++k) {
                    const double d = sample_disturbance(spec.disturbance, rng);
                    spec.step(x, spec.actions[a], d, next);
                    hits[k] = grid.snap(next);
                }
                std::sort(hits.begin(), hits.end());
                auto& row = rows[s * A + a];
                const double n = static_cast<double>(samples_per_pair);
                for (std::size_t k = 0; k < hits.size();) {
                    std::size_t j = k;
                    while (j < hits.size() && hits[j] == hits[k]) ++j;
                    row.push_back({hits[k], static_cast<double>(j - k) / n});
                    k = j;
                }
            }
        }
    });

    SparseTransitionTable table(S, A);
    for (auto& row : rows) {
        // count/n can leave the row mass a few ulps off 1; normalize_row fixes it
        // deterministically when it does.
        table.append_row(normalize_row(std::move(row)));
    }
    return DiscreteMdp(std::move(table), mask, uniform_weights(S));
}

}  // namespace avrsafe
