#pragma once

#include "avrsafe/lp.hpp"

namespace avrsafe::lp {

struct SimplexOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    // relative to the largest entry of the entering column
    double pivot_tol = 1e-7;
    std::size_t refactor_interval = 100;
    std::size_t max_iterations = 0;  // 0: 50 * (rows + columns)
    // consecutive degenerate pivots before switching to Bland's rule
    std::size_t stall_limit = 200;
    // singular refactorizations survived by rolling back to the last good basis
    std::size_t max_recoveries = 8;
    bool verbose = false;
};

/// Bounded-variable primal revised simplex.
///
/// Every row gets a logical variable r_i with A x - r = 0 and the row bounds
/// moved onto r_i, so the initial basis is -I and no artificials are needed.
/// Phase 1 minimizes the sum of bound infeasibilities; phase 2 uses Dantzig
/// pricing with a Harris ratio test. The basis is factorized with a sparse LU
/// and updated in product form between refactorizations. A refactorization
/// that turns out singular rolls back to the last good basis and tightens the
/// pivot tolerance.
class RevisedSimplex final : public Backend {
public:
    explicit RevisedSimplex(SimplexOptions options = {}) : options_(options) {}

    std::string_view name() const override { return "simplex"; }
    Solution solve(const LinearProgram& lp) const override;

    const SimplexOptions& options() const { return options_; }

private:
    SimplexOptions options_;
};

}  // namespace avrsafe::lp
