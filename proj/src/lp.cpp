#include "avrsafe/lp.hpp"

#include "avrsafe/errors.hpp"
#include "avrsafe/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace avrsafe::lp {

std::string to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::NumericalFailure: return "numerical-failure";
        case Status::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

std::size_t LinearProgram::add_variable(double cost, double lower, double upper) {
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return cost_.size() - 1;
}

std::size_t LinearProgram::add_row(RowSense sense, double rhs) {
    row_sense_.push_back(sense);
    rhs_.push_back(rhs);
    return rhs_.size() - 1;
}

void LinearProgram::add_coefficient(std::size_t row, std::size_t col, double value) {
    if (row >= num_rows() || col >= num_variables()) {
        throw StructuralError("LP coefficient index out of range");
    }
    triplets_.emplace_back(static_cast<int>(row), static_cast<int>(col), value);
}

LinearProgram::Matrix LinearProgram::matrix() const {
    Matrix m(static_cast<int>(num_rows()), static_cast<int>(num_variables()));
    m.setFromTriplets(triplets_.begin(), triplets_.end());
    m.makeCompressed();
    return m;
}

void LinearProgram::validate() const {
    for (std::size_t j = 0; j < num_variables(); ++j) {
        if (!std::isfinite(cost_[j])) throw StructuralError("non-finite objective coefficient");
        if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j] ||
            lower_[j] == kInf || upper_[j] == -kInf) {
            throw StructuralError("inconsistent bounds on variable " + std::to_string(j));
        }
    }
    for (double b : rhs_) {
        if (!std::isfinite(b)) throw StructuralError("non-finite right-hand side");
    }
    for (const auto& t : triplets_) {
        if (!std::isfinite(t.value())) throw StructuralError("non-finite constraint coefficient");
    }
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t j = 0; j < num_variables(); ++j) v += cost_[j] * x[j];
    return v;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < num_variables(); ++j) {
        worst = std::max({worst, lower_[j] - x[j], x[j] - upper_[j]});
    }
    std::vector<double> activity(num_rows(), 0.0);
    for (const auto& t : triplets_) activity[t.row()] += t.value() * x[t.col()];
    for (std::size_t i = 0; i < num_rows(); ++i) {
        const double r = activity[i] - rhs_[i];
        switch (row_sense_[i]) {
            case RowSense::GreaterEqual: worst = std::max(worst, -r); break;
            case RowSense::LessEqual: worst = std::max(worst, r); break;
            case RowSense::Equal: worst = std::max(worst, std::abs(r)); break;
        }
    }
    return worst;
}

std::vector<std::string> backend_names() { return {"simplex"}; }

std::unique_ptr<Backend> make_backend(std::string_view name) {
    if (name == "simplex" || name.empty()) return std::make_unique<RevisedSimplex>();
    throw ParameterError("unknown LP backend '" + std::string(name) + "'");
}

Solution solve_lp(const LinearProgram& lp, const Backend& backend) {
    lp.validate();
    return backend.solve(lp);
}

Solution solve_lp(const LinearProgram& lp) {
    const RevisedSimplex simplex;
    return solve_lp(lp, simplex);
}

}  // namespace avrsafe::lp
