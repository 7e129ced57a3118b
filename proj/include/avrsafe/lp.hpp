#pragma once

#include <Eigen/SparseCore>

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace avrsafe::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class RowSense { GreaterEqual, Equal, LessEqual };
enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure, IterationLimit };

std::string to_string(Status status);

/// Solver-neutral LP:  optimize c'x  s.t.  a_i'x (>=|=|<=) b_i,  l <= x <= u.
/// Coefficients are collected as triplets; duplicates are summed.
class LinearProgram {
public:
    using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

    explicit LinearProgram(Sense sense = Sense::Minimize) : sense_(sense) {}

    std::size_t add_variable(double cost, double lower = 0.0, double upper = kInf);
    std::size_t add_row(RowSense sense, double rhs);
    void add_coefficient(std::size_t row, std::size_t col, double value);
    void reserve_coefficients(std::size_t n) { triplets_.reserve(n); }

    Sense sense() const { return sense_; }
    std::size_t num_variables() const { return cost_.size(); }
    std::size_t num_rows() const { return rhs_.size(); }
    std::size_t num_coefficients() const { return triplets_.size(); }

    const std::vector<double>& objective() const { return cost_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    const std::vector<RowSense>& row_senses() const { return row_sense_; }
    const std::vector<double>& rhs() const { return rhs_; }

    /// Column-compressed constraint matrix (rows x variables).
    Matrix matrix() const;

    /// Throws StructuralError on non-finite data or inconsistent bounds.
    void validate() const;

    /// Objective value and largest constraint/bound violation of a point.
    double evaluate(const std::vector<double>& x) const;
    double max_violation(const std::vector<double>& x) const;

private:
    Sense sense_;
    std::vector<double> cost_, lower_, upper_;
    std::vector<RowSense> row_sense_;
    std::vector<double> rhs_;
    std::vector<Eigen::Triplet<double, int>> triplets_;
};

struct Solution {
    Status status = Status::NumericalFailure;
    double objective = 0.0;
    std::vector<double> values;          // one per variable
    std::vector<double> row_duals;       // d objective / d rhs
    std::vector<double> reduced_costs;   // one per variable, same sign convention
    std::vector<double> row_activity;
    std::size_t iterations = 0;
    std::string message;

    bool optimal() const { return status == Status::Optimal; }
};

/// Pluggable solver contract. Implementations must be deterministic: the same
/// LinearProgram yields the same Solution bit for bit.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string_view name() const = 0;
    virtual Solution solve(const LinearProgram& lp) const = 0;
};

/// Names accepted by make_backend ("simplex").
std::vector<std::string> backend_names();
std::unique_ptr<Backend> make_backend(std::string_view name);

Solution solve_lp(const LinearProgram& lp, const Backend& backend);
Solution solve_lp(const LinearProgram& lp);

}  // namespace avrsafe::lp
