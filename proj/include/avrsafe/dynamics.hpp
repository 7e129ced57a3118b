#pragma once

#include "avrsafe/grid.hpp"
#include "avrsafe/mdp.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace avrsafe {

/// Gaussian disturbance clamped (not rejected) to [clamp_lo, clamp_hi], so
/// the clamp bounds carry point mass.
struct DisturbanceModel {
    double mean = 0.0;
    double std_dev = 1.0;
    double clamp_lo = -1.0;
    double clamp_hi = 1.0;

    void validate() const;
};

double sample_disturbance(const DisturbanceModel& model, std::mt19937_64& rng);

enum class DynamicsKind { DoubleIntegrator, InvertedPendulum, Custom };

std::string to_string(DynamicsKind kind);
DynamicsKind dynamics_kind_from_string(const std::string& name);

struct PendulumParameters {
    double gravity = 9.81;
    double length = 1.0;
    double mass = 1.0;
};

using State2 = std::array<double, 2>;

// x' = x + v dt,  v' = v + (u + d) dt
State2 step_double_integrator(State2 state, double u, double d, double dt);

// theta' = theta + omega dt,
// omega' = omega + ((g/l) sin theta + u / (m l^2) + d) dt
State2 step_pendulum(State2 state, double u, double d, double dt, const PendulumParameters& p);

/// Writes the successor of `state` into `next` (same dimension).
using StepMap = std::function<void(std::span<const double> state, double u, double d, double dt,
                                   std::span<double> next)>;

struct SystemSpec {
    std::string name;
    DynamicsKind kind = DynamicsKind::DoubleIntegrator;
    PendulumParameters pendulum;
    double dt = 0.1;
    std::vector<double> actions;
    Box state_box;
    Box constraint_box;
    DisturbanceModel disturbance;
    StepMap custom_step;  // only for DynamicsKind::Custom

    void validate() const;
    void step(std::span<const double> state, double u, double d, std::span<double> next) const;
};

std::vector<double> uniform_actions(double lo, double hi, std::size_t count);

// Benchmark systems with the published boxes, disturbances and time step.
SystemSpec double_integrator_system(std::size_t action_count = 81);
SystemSpec inverted_pendulum_system(std::size_t action_count = 81);

/// Counter-based seed for the random stream of one (state, action) pair.
std::uint64_t pair_seed(std::uint64_t seed, std::uint64_t state, std::uint64_t action);

ConstraintMask constraint_mask(const SystemSpec& spec, const GridSpec& grid);

/// Monte Carlo estimate of the transition kernel on `grid`. Every in-constraint
/// grid state and action draws `samples_per_pair` disturbances from its own
/// seeded stream, steps the dynamics and snaps each successor to the grid;
/// states outside the constraint box are absorbing. Output is a pure function
/// of the arguments (thread count included only for speed).
DiscreteMdp estimate_transitions(const SystemSpec& spec, const GridSpec& grid,
                                 std::size_t samples_per_pair, std::uint64_t seed,
                                 std::size_t threads = 1);

}  // namespace avrsafe
