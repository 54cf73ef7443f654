#pragma once

// Bounded-variable primal simplex over the parameter box of a constrained
// zonotope:  { xi : A_eq xi = b_eq, -1 <= xi <= 1 }.

#include "dsmf/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace dsmf {

struct LpOptions {
    /// Largest artificial residual still counted as feasible, relative to the
    /// largest of 1, |b| and magnitude on unit-scaled rows.
    double feasibility_tol = 1e-9;
    /// Size of the terms that cancelled in forming b (0 when b is exact data).
    double magnitude = 0.0;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    /// 0 selects 50 * (rows + columns) + 1000.
    long max_iterations = 0;
};

struct LpSolution {
    double objective = 0.0;
    Vector xi;
};

class BoxLp {
public:
    BoxLp(const Matrix& a_eq, const Vector& b_eq, LpOptions options = {}) : options_(options)
    {
        detail::require_dims(b_eq.size(), a_eq.rows(), "BoxLp right-hand side");
        g_ = a_eq.cols();
        setup(a_eq, b_eq);
        if (!trivially_infeasible_) {
            phase_one();
        }
    }

    bool feasible() const noexcept { return feasible_; }

    /// Largest remaining artificial after phase one (0 when feasible).
    double infeasibility() const noexcept { return infeasibility_; }

    long iterations() const noexcept { return iterations_; }

    Index num_variables() const noexcept { return g_; }

    /// A feasible parameter vector. Throws when the problem is infeasible.
    Vector witness() const
    {
        detail::require(feasible_, ErrorCode::empty_set, "BoxLp::witness on an infeasible problem");
        return structural_values();
    }

    /// Minimizes cost . xi, warm-starting from the current basis.
    std::optional<LpSolution> minimize(const Vector& cost)
    {
        detail::require_dims(cost.size(), g_, "BoxLp objective");
        if (!feasible_) {
            return std::nullopt;
        }
        if (m_ == 0) {
            LpSolution sol;
            sol.xi = Vector::Zero(g_);
            for (Index j = 0; j < g_; ++j) {
                sol.xi(j) = cost(j) > 0.0 ? -1.0 : (cost(j) < 0.0 ? 1.0 : 0.0);
            }
            sol.objective = cost.dot(sol.xi);
            return sol;
        }
        cost_.setZero();
        cost_.head(g_) = cost;
        run_simplex();
        polish();
        LpSolution sol;
        sol.xi = structural_values();
        sol.objective = cost.dot(sol.xi);
        return sol;
    }

    std::optional<LpSolution> maximize(const Vector& cost)
    {
        auto sol = minimize(-cost);
        if (sol) {
            sol->objective = -sol->objective;
        }
        return sol;
    }

private:
    enum State : char { basic, at_lower, at_upper };

    static constexpr double inf = std::numeric_limits<double>::infinity();

    void setup(const Matrix& a_eq, const Vector& b_eq)
    {
        std::vector<Index> keep;
        keep.reserve(static_cast<std::size_t>(a_eq.rows()));
        for (Index r = 0; r < a_eq.rows(); ++r) {
            const double scale = a_eq.cols() > 0 ? a_eq.row(r).cwiseAbs().maxCoeff() : 0.0;
            if (scale == 0.0) {
                if (std::abs(b_eq(r)) > options_.feasibility_tol) {
                    trivially_infeasible_ = true;
                    infeasibility_ = std::abs(b_eq(r));
                }
                continue;
            }
            keep.push_back(r);
        }
        m_ = static_cast<Index>(keep.size());
        a_.resize(m_, g_);
        b_.resize(m_);
        double size = 1.0;
        for (Index r = 0; r < m_; ++r) {
            const Index src = keep[static_cast<std::size_t>(r)];
            const double scale = a_eq.row(src).cwiseAbs().maxCoeff();
            a_.row(r) = a_eq.row(src) / scale;
            b_(r) = b_eq(src) / scale;
            size = std::max(size, std::max(std::abs(b_eq(src)), options_.magnitude) / scale);
        }
        feas_tol_ = options_.feasibility_tol * size;
        const Index nt = g_ + m_;
        lo_ = Vector::Constant(nt, -1.0);
        hi_ = Vector::Constant(nt, 1.0);
        lo_.tail(m_).setZero();
        hi_.tail(m_).setConstant(inf);
        state_.assign(static_cast<std::size_t>(nt), at_lower);
        cost_ = Vector::Zero(nt);
        if (options_.max_iterations <= 0) {
            options_.max_iterations = 50 * static_cast<long>(m_ + g_) + 1000;
        }
    }

    double nonbasic_value(Index j) const
    {
        return state_[static_cast<std::size_t>(j)] == at_upper ? hi_(j) : lo_(j);
    }

    Vector structural_values() const
    {
        Vector x(g_);
        for (Index j = 0; j < g_; ++j) {
            x(j) = nonbasic_value(j);
        }
        for (Index r = 0; r < m_; ++r) {
            const Index j = basis_[static_cast<std::size_t>(r)];
            if (j < g_) {
                x(j) = beta_(r);
            }
        }
        return x.cwiseMax(-1.0).cwiseMin(1.0);
    }

    // Unscaled-row residual of the structural part; artificials are included.
    double primal_residual() const
    {
        Vector x(g_ + m_);
        for (Index j = 0; j < g_ + m_; ++j) {
            x(j) = state_[static_cast<std::size_t>(j)] == basic ? 0.0 : nonbasic_value(j);
        }
        for (Index r = 0; r < m_; ++r) {
            x(basis_[static_cast<std::size_t>(r)]) = beta_(r);
        }
        Vector res = a_ * x.head(g_) - b_;
        res += sign_.cwiseProduct(x.tail(m_));
        return m_ > 0 ? res.cwiseAbs().maxCoeff() : 0.0;
    }

    void phase_one()
    {
        if (m_ == 0) {
            feasible_ = true;
            infeasibility_ = 0.0;
            return;
        }
        // Structurals start at their lower bound; each row gets an artificial
        // whose sign makes its initial value non-negative.
        const Vector residual = b_ + a_.rowwise().sum();
        sign_.resize(m_);
        for (Index r = 0; r < m_; ++r) {
            sign_(r) = residual(r) >= 0.0 ? 1.0 : -1.0;
        }
        tab_.resize(m_, g_ + m_);
        tab_.leftCols(g_) = sign_.asDiagonal() * a_;
        tab_.rightCols(m_).setIdentity();
        beta_ = residual.cwiseAbs();
        basis_.resize(static_cast<std::size_t>(m_));
        for (Index r = 0; r < m_; ++r) {
            basis_[static_cast<std::size_t>(r)] = g_ + r;
            state_[static_cast<std::size_t>(g_ + r)] = basic;
        }
        cost_.setZero();
        cost_.tail(m_).setOnes();
        run_simplex();

        infeasibility_ = 0.0;
        for (Index r = 0; r < m_; ++r) {
            if (basis_[static_cast<std::size_t>(r)] >= g_) {
                infeasibility_ = std::max(infeasibility_, beta_(r));
            }
        }
        if (infeasibility_ > feas_tol_) {
            // Rule out accumulated round-off before declaring infeasibility.
            reinvert();
            infeasibility_ = 0.0;
            for (Index r = 0; r < m_; ++r) {
                if (basis_[static_cast<std::size_t>(r)] >= g_) {
                    infeasibility_ = std::max(infeasibility_, beta_(r));
                }
            }
        }
        feasible_ = infeasibility_ <= feas_tol_;
        // Artificials are pinned to zero from here on; basic ones sit on
        // redundant rows.
        hi_.tail(m_).setZero();
        for (Index r = 0; r < m_; ++r) {
            if (basis_[static_cast<std::size_t>(r)] >= g_ && feasible_) {
                beta_(r) = 0.0;
            }
        }
        if (feasible_) {
            polish();
        }
    }

    void compute_reduced_costs()
    {
        Vector cb(m_);
        for (Index r = 0; r < m_; ++r) {
            cb(r) = cost_(basis_[static_cast<std::size_t>(r)]);
        }
        d_ = cost_;
        d_.noalias() -= tab_.transpose() * cb;
        for (Index r = 0; r < m_; ++r) {
            d_(basis_[static_cast<std::size_t>(r)]) = 0.0;
        }
    }

    bool eligible(Index j, double& dir) const
    {
        const auto s = state_[static_cast<std::size_t>(j)];
        if (s == basic || lo_(j) == hi_(j)) {
            return false;
        }
        if (j >= g_ && s == at_lower && hi_(j) == inf) {
            // Artificials never re-enter.
            return false;
        }
        if (s == at_lower && d_(j) < -options_.optimality_tol) {
            dir = 1.0;
            return true;
        }
        if (s == at_upper && d_(j) > options_.optimality_tol) {
            dir = -1.0;
            return true;
        }
        return false;
    }

    void run_simplex()
    {
        compute_reduced_costs();
        long degenerate_streak = 0;
        long since_check = 0;
        const double relax = options_.feasibility_tol;
        for (;;) {
            if (iterations_ > options_.max_iterations) {
                throw Error(ErrorCode::no_convergence,
                            "simplex exceeded " + std::to_string(options_.max_iterations) + " iterations");
            }
            const bool bland = degenerate_streak > 50;
            Index q = -1;
            double dir = 0.0;
            double best = 0.0;
            for (Index j = 0; j < g_ + m_; ++j) {
                double dj = 0.0;
                if (!eligible(j, dj)) {
                    continue;
                }
                if (bland) {
                    q = j;
                    dir = dj;
                    break;
                }
                if (std::abs(d_(j)) > best) {
                    best = std::abs(d_(j));
                    q = j;
                    dir = dj;
                }
            }
            if (q < 0) {
                return;
            }

            // Harris two-pass ratio test.
            const auto col = tab_.col(q);
            double theta_relaxed = inf;
            for (Index i = 0; i < m_; ++i) {
                const double alpha = dir * col(i);
                const Index bi = basis_[static_cast<std::size_t>(i)];
                if (alpha > options_.pivot_tol) {
                    theta_relaxed = std::min(theta_relaxed, (beta_(i) - lo_(bi) + relax) / alpha);
                } else if (alpha < -options_.pivot_tol && hi_(bi) != inf) {
                    theta_relaxed = std::min(theta_relaxed, (hi_(bi) - beta_(i) + relax) / -alpha);
                }
            }
            Index p = -1;
            double theta = inf;
            double best_alpha = 0.0;
            if (theta_relaxed < inf) {
                for (Index i = 0; i < m_; ++i) {
                    const double alpha = dir * col(i);
                    const Index bi = basis_[static_cast<std::size_t>(i)];
                    double ratio = inf;
                    if (alpha > options_.pivot_tol) {
                        ratio = (beta_(i) - lo_(bi)) / alpha;
                    } else if (alpha < -options_.pivot_tol && hi_(bi) != inf) {
                        ratio = (hi_(bi) - beta_(i)) / -alpha;
                    }
                    if (ratio <= theta_relaxed && std::abs(alpha) > best_alpha) {
                        best_alpha = std::abs(alpha);
                        p = i;
                        theta = std::max(ratio, 0.0);
                    }
                }
            }
            const double flip = hi_(q) - lo_(q);
            ++iterations_;
            if (flip <= theta) {
                if (flip == inf) {
                    throw Error(ErrorCode::ill_conditioned, "unbounded ray in a box-bounded LP");
                }
                beta_.noalias() -= (dir * flip) * col;
                state_[static_cast<std::size_t>(q)] = dir > 0 ? at_upper : at_lower;
                degenerate_streak = 0;
            } else {
                const Vector column = col;
                beta_.noalias() -= (dir * theta) * column;
                const Index leaving = basis_[static_cast<std::size_t>(p)];
                const double alpha = dir * column(p);
                state_[static_cast<std::size_t>(leaving)] = alpha > 0 ? at_lower : at_upper;
                if (leaving >= g_) {
                    // Artificial leaves for good.
                    state_[static_cast<std::size_t>(leaving)] = at_lower;
                    hi_(leaving) = 0.0;
                }
                beta_(p) = nonbasic_value(q) + dir * theta;
                state_[static_cast<std::size_t>(q)] = basic;
                basis_[static_cast<std::size_t>(p)] = q;
                pivot(p, q, column);
                degenerate_streak = theta < 1e-12 ? degenerate_streak + 1 : 0;
            }
            if (++since_check >= 64) {
                since_check = 0;
                if (primal_residual() > 1e-9) {
                    reinvert();
                    compute_reduced_costs();
                }
            }
        }
    }

    void pivot(Index p, Index q, const Vector& column)
    {
        const double piv = column(p);
        Eigen::RowVectorXd row = tab_.row(p) / piv;
        // Columns with a zero in the pivot row do not change.
        for (Index j = 0; j < tab_.cols(); ++j) {
            if (row(j) != 0.0) {
                tab_.col(j).noalias() -= row(j) * column;
            }
        }
        tab_.row(p) = row;
        const double dq = d_(q);
        d_.noalias() -= dq * row.transpose();
        d_(q) = 0.0;
    }

    Vector original_column(Index j) const
    {
        if (j < g_) {
            return a_.col(j);
        }
        Vector e = Vector::Zero(m_);
        e(j - g_) = sign_(j - g_);
        return e;
    }

    // Rebuilds the tableau and basic values from the original rows.
    void reinvert()
    {
        Matrix basis_matrix(m_, m_);
        for (Index r = 0; r < m_; ++r) {
            basis_matrix.col(r) = original_column(basis_[static_cast<std::size_t>(r)]);
        }
        Eigen::PartialPivLU<Matrix> lu(basis_matrix);
        const double rcond = lu.rcond();
        if (!(rcond > 1e-14)) {
            std::ostringstream msg;
            msg << "basis matrix is numerically singular (rcond=" << rcond << ", rows=" << m_ << ")";
            throw Error(ErrorCode::ill_conditioned, msg.str());
        }
        Matrix full(m_, g_ + m_);
        full.leftCols(g_) = a_;
        full.rightCols(m_) = sign_.asDiagonal().toDenseMatrix();
        tab_ = lu.solve(full);
        Vector rhs = b_;
        for (Index j = 0; j < g_ + m_; ++j) {
            if (state_[static_cast<std::size_t>(j)] != basic) {
                const double v = nonbasic_value(j);
                if (v != 0.0) {
                    rhs -= v * full.col(j);
                }
            }
        }
        beta_ = lu.solve(rhs);
    }

    // Recomputes basic values when drift exceeds the feasibility tolerance.
    void polish()
    {
        if (primal_residual() > 1e-10) {
            reinvert();
            compute_reduced_costs();
        }
        if (primal_residual() > 1e-7) {
            std::ostringstream msg;
            msg << "residual " << primal_residual() << " after reinversion (rows=" << m_ << ", cols=" << g_ << ")";
            throw Error(ErrorCode::ill_conditioned, msg.str());
        }
    }

    LpOptions options_;
    Index g_ = 0;
    Index m_ = 0;
    Matrix a_;
    Vector b_;
    Vector sign_;
    Matrix tab_;
    Vector beta_;
    Vector lo_;
    Vector hi_;
    Vector cost_;
    Vector d_;
    std::vector<Index> basis_;
    std::vector<State> state_;
    bool trivially_infeasible_ = false;
    bool feasible_ = false;
    double infeasibility_ = 0.0;
    double feas_tol_ = 0.0;
    long iterations_ = 0;
};

/// Feasibility of { xi : A_eq xi = b_eq, ||xi||_inf <= 1 }; returns a witness.
inline std::optional<Vector> lp_feasible(const Matrix& a_eq, const Vector& b_eq, LpOptions options = {})
{
    if (a_eq.rows() == 0) {
        return Vector::Zero(a_eq.cols());
    }
    BoxLp lp(a_eq, b_eq, options);
    if (!lp.feasible()) {
        return std::nullopt;
    }
    return lp.witness();
}

} // namespace dsmf
