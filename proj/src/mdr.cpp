#include "avrsafe/mdr.hpp"

#include "avrsafe/errors.hpp"
#include "avrsafe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace avrsafe {

double signed_distance(std::span<const double> x, const Box& c, double tol) {
    if (x.size() != c.dims()) throw StructuralError("point and box dimensions differ");
    double inside = std::numeric_limits<double>::infinity();
    double excess = std::numeric_limits<double>::infinity();
    bool outside = false;
    bool on_face = false;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double over = std::max(c.lo[d] - x[d], x[d] - c.hi[d]);
        if (over > tol) {
            outside = true;
            excess = std::min(excess, over);
        } else if (over > 0.0) {
            on_face = true;
        } else {
            inside = std::min(inside, -over);
        }
    }
    if (outside) return -excess;
    return on_face ? 0.0 : inside;
}

std::vector<double> signed_distance(const GridSpec& grid, const Box& constraint) {
    std::vector<double> l(grid.size());
    std::vector<double> x(grid.dims());
    for (StateId s = 0; s < grid.size(); ++s) {
        grid.coord_of(s, x);
        l[s] = signed_distance(x, constraint, kGridTolerance);
    }
    return l;
}

const char* to_string(MdrStatus status) {
    return status == MdrStatus::Converged ? "converged" : "max-iterations";
}

MdrSolution mdr_value_iteration(const DiscreteMdp& mdp, const std::vector<double>& l,
                                const MdrOptions& options) {
    if (!(options.lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");
    if (!(options.tol > 0.0)) throw ParameterError("tolerance must be positive");
    if (!(options.dt > 0.0)) throw ParameterError("dt must be positive");
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    if (l.size() != S) throw StructuralError("signed distance size does not match the MDP");

    MdrSolution sol;
    sol.lambda = options.lambda;
    sol.gamma = discount_factor(options.lambda, options.dt);
    const double gamma = sol.gamma;
    std::vector<double> v = l, next(S);
    const std::size_t threads = resolve_threads(options.threads);
    std::vector<double> chunk_residual(std::max<std::size_t>(threads, 1));
    std::vector<unsigned char> bad(S, 0);

    while (sol.iterations < options.max_iter) {
        const std::size_t chunk = (S + threads - 1) / std::max<std::size_t>(threads, 1);
        parallel_for(S, threads, [&](std::size_t begin, std::size_t end) {
            double worst = 0.0;
            for (std::size_t s = begin; s < end; ++s) {
                double best = -std::numeric_limits<double>::infinity();
                for (ActionId a = 0; a < A; ++a) {
                    double e = 0.0;
                    for (const auto& t : mdp.row(static_cast<StateId>(s), a)) e += t.probability * v[t.next];
                    best = std::max(best, e);
                }
                next[s] = (1.0 - gamma) * l[s] + gamma * std::min(l[s], best);
                if (!std::isfinite(next[s])) bad[s] = 1;
                worst = std::max(worst, std::abs(next[s] - v[s]));
            }
            chunk_residual[chunk == 0 ? 0 : begin / chunk] = worst;
        });
        if (std::find(bad.begin(), bad.end(), 1) != bad.end()) {
            throw NumericalError("non-finite value during MDR iteration");
        }
        double residual = 0.0;
        for (double r : chunk_residual) residual = std::max(residual, r);
        std::fill(chunk_residual.begin(), chunk_residual.end(), 0.0);
        v.swap(next);
        ++sol.iterations;
        sol.residual = residual;
        if (options.record_residuals) sol.residuals.push_back(residual);
        if (residual <= options.tol) {
            sol.status = MdrStatus::Converged;
            break;
        }
    }
    sol.value = std::move(v);
    return sol;
}

std::vector<StateId> mdr_safe_set(const MdrSolution& solution) {
    std::vector<StateId> out;
    for (StateId s = 0; s < solution.value.size(); ++s) {
        if (solution.value[s] >= 0.0) out.push_back(s);
    }
    return out;
}

SetComparison compare_safe_sets(const std::vector<StateId>& first, const std::vector<StateId>& second,
                                const ConstraintMask& constraint) {
    SetComparison c;
    c.constraint_cells = constraint.count();
    std::set_difference(first.begin(), first.end(), second.begin(), second.end(),
                        std::back_inserter(c.only_first));
    std::set_difference(second.begin(), second.end(), first.begin(), first.end(),
                        std::back_inserter(c.only_second));
    c.ratio = c.constraint_cells == 0
                  ? (c.disagreements() == 0 ? 0.0 : std::numeric_limits<double>::infinity())
                  : static_cast<double>(c.disagreements()) / static_cast<double>(c.constraint_cells);
    return c;
}

SetComparison compare_safe_sets(const SafetyLevelSet& avr, const std::vector<StateId>& mdr,
                                const ConstraintMask& constraint) {
    return compare_safe_sets(avr.members, mdr, constraint);
}

}  // namespace avrsafe
