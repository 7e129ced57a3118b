#pragma once

#include "avrsafe/avr.hpp"
#include "avrsafe/grid.hpp"
#include "avrsafe/mdp.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace avrsafe {

/// Axis-aligned box signed distance, min-over-axes convention: inside, the
/// smallest per-axis distance to a face; outside, minus the smallest excess
/// among the violated axes. Zero on a face, and zero for points outside by at
/// most `tol`.
double signed_distance(std::span<const double> x, const Box& constraint, double tol = 0.0);

/// Per grid point, with the same face tolerance as the constraint mask.
std::vector<double> signed_distance(const GridSpec& grid, const Box& constraint);

struct MdrOptions {
    double lambda = 0.0;   // discount rate, 1/s
    double dt = 0.1;
    double tol = 1e-6;
    std::size_t max_iter = 100000;
    std::size_t threads = 1;
    bool record_residuals = false;
};

enum class MdrStatus { Converged, MaxIterations };

const char* to_string(MdrStatus status);

struct MdrSolution {
    std::vector<double> value;
    double lambda = 0.0;
    double gamma = 1.0;
    std::size_t iterations = 0;
    double residual = 0.0;
    MdrStatus status = MdrStatus::MaxIterations;
    std::vector<double> residuals;  // per sweep, when requested
};

inline double discount_factor(double lambda, double dt) { return std::exp(-lambda * dt); }

/// V <- (1-gamma) l + gamma min(l, max_a E[V']) from V = l, Jacobi sweeps,
/// until the sup-norm change is at most tol or max_iter sweeps have run.
MdrSolution mdr_value_iteration(const DiscreteMdp& mdp, const std::vector<double>& l,
                                const MdrOptions& options = {});

/// {s : V(s) >= 0}, sorted.
std::vector<StateId> mdr_safe_set(const MdrSolution& solution);

struct SetComparison {
    std::size_t constraint_cells = 0;
    std::vector<StateId> only_first;
    std::vector<StateId> only_second;
    double ratio = 0.0;  // |symmetric difference| / |C|

    std::size_t disagreements() const { return only_first.size() + only_second.size(); }
};

SetComparison compare_safe_sets(const std::vector<StateId>& first, const std::vector<StateId>& second,
                                const ConstraintMask& constraint);
SetComparison compare_safe_sets(const SafetyLevelSet& avr, const std::vector<StateId>& mdr,
                                const ConstraintMask& constraint);

}  // namespace avrsafe
