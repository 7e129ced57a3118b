#include "avrsafe/simplex.hpp"

#include "avrsafe/errors.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>

namespace avrsafe::lp {

namespace {

using Matrix = LinearProgram::Matrix;
using Vector = Eigen::VectorXd;

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, Free, Fixed };

struct Eta {
    int row;
    double pivot_inv;
    std::vector<int> index;
    std::vector<double> value;  // -alpha_i / alpha_r for i != row
};

class Engine {
public:
    Engine(const LinearProgram& lp, const SimplexOptions& opt);
    Solution run();

private:
    enum class Step { Continue, Optimal, Infeasible, Unbounded, Failure, NoBlocking };

    bool refactor();
    bool refactor_or_recover();
    void snapshot();
    void recompute_basics();
    void ftran(Vector& v) const;
    void btran(Vector& v) const;
    void load_column(int j, Vector& v) const;
    double column_dot(int j, const Vector& pi) const;
    bool is_phase1() const;
    Step iterate();
    Solution finish(Status status, std::string message);

    const LinearProgram& lp_;
    SimplexOptions opt_;
    int m_ = 0, n_ = 0, total_ = 0;
    double sign_ = 1.0;
    Matrix a_;
    std::vector<double> cost_, lo_, up_, x_;
    std::vector<int> head_, pos_;
    std::vector<VarState> state_;
    mutable Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu_;
    std::vector<Eta> etas_;
    bool fresh_ = false;
    bool bland_ = false;
    std::size_t degenerate_run_ = 0;
    std::size_t iterations_ = 0;
    std::size_t max_iterations_ = 0;
    Vector pi_, alpha_, cb_;

    struct Snapshot {
        std::vector<int> head, pos;
        std::vector<VarState> state;
        std::vector<double> x;
    } good_;
    double pivot_scale_ = 1.0;
    std::size_t recoveries_ = 0;
    std::size_t careful_until_ = 0;  // refactor after every pivot before this iteration
};

Engine::Engine(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
    m_ = static_cast<int>(lp.num_rows());
    n_ = static_cast<int>(lp.num_variables());
    total_ = n_ + m_;
    sign_ = lp.sense() == Sense::Minimize ? 1.0 : -1.0;
    a_ = lp.matrix();

    cost_.assign(total_, 0.0);
    lo_.resize(total_);
    up_.resize(total_);
    x_.assign(total_, 0.0);
    state_.resize(total_);
    pos_.assign(total_, -1);
    head_.resize(m_);

    for (int j = 0; j < n_; ++j) {
        cost_[j] = sign_ * lp.objective()[j];
        lo_[j] = lp.lower()[j];
        up_[j] = lp.upper()[j];
        if (lo_[j] == up_[j]) {
            state_[j] = VarState::Fixed;
            x_[j] = lo_[j];
        } else if (std::isfinite(lo_[j])) {
            state_[j] = VarState::AtLower;
            x_[j] = lo_[j];
        } else if (std::isfinite(up_[j])) {
            state_[j] = VarState::AtUpper;
            x_[j] = up_[j];
        } else {
            state_[j] = VarState::Free;
            x_[j] = 0.0;
        }
    }
    for (int i = 0; i < m_; ++i) {
        const int j = n_ + i;
        const double b = lp.rhs()[i];
        switch (lp.row_senses()[i]) {
            case RowSense::GreaterEqual: lo_[j] = b; up_[j] = kInf; break;
            case RowSense::LessEqual: lo_[j] = -kInf; up_[j] = b; break;
            case RowSense::Equal: lo_[j] = b; up_[j] = b; break;
        }
        state_[j] = VarState::Basic;
        head_[i] = j;
        pos_[j] = i;
    }
    max_iterations_ = opt_.max_iterations > 0 ? opt_.max_iterations
                                              : 50 * static_cast<std::size_t>(total_) + 1000;
    pi_.resize(m_);
    alpha_.resize(m_);
    cb_.resize(m_);
}

bool Engine::refactor() {
    etas_.clear();
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double, int>> t;
    t.reserve(static_cast<std::size_t>(m_) * 4);
    for (int i = 0; i < m_; ++i) {
        const int j = head_[i];
        if (j < n_) {
            for (Matrix::InnerIterator it(a_, j); it; ++it) t.emplace_back(it.row(), i, it.value());
        } else {
            t.emplace_back(j - n_, i, -1.0);
        }
    }
    Matrix b(m_, m_);
    b.setFromTriplets(t.begin(), t.end());
    b.makeCompressed();
    lu_.analyzePattern(b);
    lu_.factorize(b);
    return lu_.info() == Eigen::Success;
}

void Engine::snapshot() {
    good_.head = head_;
    good_.pos = pos_;
    good_.state = state_;
    good_.x = x_;
}

// A singular basis means an earlier pivot was numerically unsound. Return to
// the last basis that factorized and continue with a stricter pivot tolerance.
bool Engine::refactor_or_recover() {
    if (refactor()) {
        recompute_basics();
        snapshot();
        fresh_ = true;
        return true;
    }
    if (recoveries_ >= opt_.max_recoveries || good_.head.empty()) return false;
    ++recoveries_;
    pivot_scale_ = std::min(pivot_scale_ * 100.0, 1e4);
    careful_until_ = iterations_ + 2 * opt_.refactor_interval;
    head_ = good_.head;
    pos_ = good_.pos;
    state_ = good_.state;
    x_ = good_.x;
    if (opt_.verbose) {
        std::cerr << "simplex: singular basis at iteration " << iterations_
                  << ", rolled back (pivot scale " << pivot_scale_ << ")\n";
    }
    if (!refactor()) return false;
    recompute_basics();
    fresh_ = true;
    return true;
}

void Engine::ftran(Vector& v) const {
    if (m_ == 0) return;
    v = lu_.solve(v);
    for (const auto& e : etas_) {
        const double vr = v[e.row];
        if (vr == 0.0) continue;
        v[e.row] = vr * e.pivot_inv;
        for (std::size_t k = 0; k < e.index.size(); ++k) v[e.index[k]] += e.value[k] * vr;
    }
}

void Engine::btran(Vector& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double acc = v[it->row] * it->pivot_inv;
        for (std::size_t k = 0; k < it->index.size(); ++k) acc += it->value[k] * v[it->index[k]];
        v[it->row] = acc;
    }
    v = lu_.transpose().solve(v);
}

void Engine::load_column(int j, Vector& v) const {
    v.setZero();
    if (j < n_) {
        for (Matrix::InnerIterator it(a_, j); it; ++it) v[it.row()] = it.value();
    } else {
        v[j - n_] = -1.0;
    }
}

double Engine::column_dot(int j, const Vector& pi) const {
    if (j >= n_) return -pi[j - n_];
    double s = 0.0;
    for (Matrix::InnerIterator it(a_, j); it; ++it) s += it.value() * pi[it.row()];
    return s;
}

void Engine::recompute_basics() {
    if (m_ == 0) return;
    Vector rhs = Vector::Zero(m_);
    for (int j = 0; j < total_; ++j) {
        if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
        if (j < n_) {
            for (Matrix::InnerIterator it(a_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
        } else {
            rhs[j - n_] += x_[j];
        }
    }
    ftran(rhs);
    for (int i = 0; i < m_; ++i) x_[head_[i]] = rhs[i];
}

bool Engine::is_phase1() const {
    const double tol = opt_.feasibility_tol;
    for (int i = 0; i < m_; ++i) {
        const int j = head_[i];
        if (x_[j] < lo_[j] - tol || x_[j] > up_[j] + tol) return true;
    }
    return false;
}

Engine::Step Engine::iterate() {
    const double ftol = opt_.feasibility_tol;
    const double otol = opt_.optimality_tol;
    double ptol = 0.0;

    const bool phase1 = is_phase1();
    for (int i = 0; i < m_; ++i) {
        const int j = head_[i];
        if (phase1) {
            cb_[i] = x_[j] < lo_[j] - ftol ? -1.0 : (x_[j] > up_[j] + ftol ? 1.0 : 0.0);
        } else {
            cb_[i] = cost_[j];
        }
    }
    pi_ = cb_;
    btran(pi_);

    // pricing
    int entering = -1;
    double direction = 0.0;
    double best = 0.0;
    for (int j = 0; j < total_; ++j) {
        const VarState s = state_[j];
        if (s == VarState::Basic || s == VarState::Fixed) continue;
        const double d = (phase1 ? 0.0 : cost_[j]) - column_dot(j, pi_);
        double score = 0.0;
        double dir = 0.0;
        if ((s == VarState::AtLower || s == VarState::Free) && d < -otol) {
            score = -d;
            dir = 1.0;
        } else if ((s == VarState::AtUpper || s == VarState::Free) && d > otol) {
            score = d;
            dir = -1.0;
        }
        if (dir == 0.0) continue;
        if (bland_) {
            entering = j;
            direction = dir;
            break;
        }
        if (score > best) {
            best = score;
            entering = j;
            direction = dir;
        }
    }

    if (entering < 0) {
        if (!fresh_) return refactor_or_recover() ? Step::Continue : Step::Failure;
        return phase1 ? Step::Infeasible : Step::Optimal;
    }

    load_column(entering, alpha_);
    ftran(alpha_);
    ptol = opt_.pivot_tol * pivot_scale_ * std::max(1.0, alpha_.lpNorm<Eigen::Infinity>());

    // Harris two-pass ratio test. In phase 1 an infeasible basic variable
    // moving toward its violated bound blocks exactly at that bound.
    const double range = up_[entering] - lo_[entering];
    double theta_max = std::isfinite(range) ? range : kInf;
    auto exact_limit = [&](int i, double delta, bool relaxed, bool& to_lower) -> double {
        const int j = head_[i];
        const double xj = x_[j];
        const double slack = relaxed ? ftol : 0.0;
        if (phase1 && xj < lo_[j] - ftol) {
            if (delta <= 0.0) return kInf;
            to_lower = true;
            return (lo_[j] - xj) / delta;
        }
        if (phase1 && xj > up_[j] + ftol) {
            if (delta >= 0.0) return kInf;
            to_lower = false;
            return (xj - up_[j]) / -delta;
        }
        if (delta < 0.0 && std::isfinite(lo_[j])) {
            to_lower = true;
            return std::max(0.0, xj - lo_[j] + slack) / -delta;
        }
        if (delta > 0.0 && std::isfinite(up_[j])) {
            to_lower = false;
            return std::max(0.0, up_[j] - xj + slack) / delta;
        }
        return kInf;
    };

    if (!bland_) {
        for (int i = 0; i < m_; ++i) {
            const double delta = -direction * alpha_[i];
            if (std::abs(delta) < ptol) continue;
            bool to_lower = false;
            theta_max = std::min(theta_max, exact_limit(i, delta, true, to_lower));
        }
    }

    int leaving = -1;
    bool leave_lower = false;
    double theta = kInf;
    double best_pivot = 0.0;
    for (int i = 0; i < m_; ++i) {
        const double delta = -direction * alpha_[i];
        if (std::abs(delta) < ptol) continue;
        bool to_lower = false;
        const double ratio = exact_limit(i, delta, false, to_lower);
        if (!std::isfinite(ratio)) continue;
        if (bland_) {
            if (ratio < theta || (ratio == theta && leaving >= 0 && head_[i] < head_[leaving])) {
                theta = ratio;
                leaving = i;
                leave_lower = to_lower;
            }
        } else if (ratio <= theta_max && std::abs(delta) > best_pivot) {
            best_pivot = std::abs(delta);
            theta = ratio;
            leaving = i;
            leave_lower = to_lower;
        }
    }

    const bool flip = std::isfinite(range) && (leaving < 0 || range <= theta);
    if (flip) theta = range;

    if (leaving < 0 && !flip) {
        if (!fresh_) return refactor_or_recover() ? Step::Continue : Step::Failure;
        return phase1 ? Step::NoBlocking : Step::Unbounded;
    }

    ++iterations_;
    if (theta <= 1e-12) {
        if (++degenerate_run_ > opt_.stall_limit) bland_ = true;
    } else {
        degenerate_run_ = 0;
        bland_ = false;
    }

    if (theta > 0.0) {
        for (int i = 0; i < m_; ++i) {
            if (alpha_[i] != 0.0) x_[head_[i]] -= theta * direction * alpha_[i];
        }
    }

    if (flip) {
        if (direction > 0.0) {
            x_[entering] = up_[entering];
            state_[entering] = VarState::AtUpper;
        } else {
            x_[entering] = lo_[entering];
            state_[entering] = VarState::AtLower;
        }
        return Step::Continue;
    }

    x_[entering] += direction * theta;
    const int out = head_[leaving];
    x_[out] = leave_lower ? lo_[out] : up_[out];
    state_[out] = lo_[out] == up_[out] ? VarState::Fixed
                                       : (leave_lower ? VarState::AtLower : VarState::AtUpper);
    pos_[out] = -1;
    head_[leaving] = entering;
    pos_[entering] = leaving;
    state_[entering] = VarState::Basic;

    Eta eta;
    eta.row = leaving;
    eta.pivot_inv = 1.0 / alpha_[leaving];
    for (int i = 0; i < m_; ++i) {
        if (i == leaving || alpha_[i] == 0.0) continue;
        eta.index.push_back(i);
        eta.value.push_back(-alpha_[i] * eta.pivot_inv);
    }
    etas_.push_back(std::move(eta));
    fresh_ = false;

    const bool due = etas_.size() >= opt_.refactor_interval || iterations_ < careful_until_;
    if (due && !refactor_or_recover()) return Step::Failure;
    return Step::Continue;
}

Solution Engine::finish(Status status, std::string message) {
    Solution sol;
    sol.status = status;
    sol.iterations = iterations_;
    sol.message = std::move(message);
    sol.values.assign(x_.begin(), x_.begin() + n_);
    sol.row_activity.assign(x_.begin() + n_, x_.end());
    sol.objective = lp_.evaluate(sol.values);
    sol.row_duals.assign(m_, 0.0);
    sol.reduced_costs.assign(n_, 0.0);
    if (status == Status::Optimal) {
        for (int i = 0; i < m_; ++i) sol.row_duals[i] = sign_ * pi_[i];
        for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = sign_ * (cost_[j] - column_dot(j, pi_));
    }
    return sol;
}

Solution Engine::run() {
    if (!refactor_or_recover()) return finish(Status::NumericalFailure, "initial basis singular");
    while (true) {
        if (iterations_ >= max_iterations_) {
            return finish(Status::IterationLimit, "iteration limit reached");
        }
        const Step step = iterate();
        switch (step) {
            case Step::Continue: break;
            case Step::Optimal: {
                // pi_ holds the phase-2 multipliers of the fresh basis
                return finish(Status::Optimal, "");
            }
            case Step::Infeasible: return finish(Status::Infeasible, "phase 1 stalled with infeasibility");
            case Step::Unbounded: return finish(Status::Unbounded, "unbounded ray found");
            case Step::Failure: return finish(Status::NumericalFailure, "basis factorization failed");
            case Step::NoBlocking:
                return finish(Status::NumericalFailure, "phase 1 ratio test found no blocking variable");
        }
        if (opt_.verbose && iterations_ % 1000 == 0 && step == Step::Continue) {
            std::cerr << "simplex: iteration " << iterations_ << (is_phase1() ? " (phase 1)" : "")
                      << "\n";
        }
    }
}

}  // namespace

Solution RevisedSimplex::solve(const LinearProgram& lp) const {
    Engine engine(lp, options_);
    return engine.run();
}

}  // namespace avrsafe::lp
