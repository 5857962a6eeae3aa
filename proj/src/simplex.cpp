#include "bsmdp/simplex.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bsmdp {

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::Index;

constexpr double kTieTolerance = 1e-12;
constexpr double kOptimalityCheck = 1e-7;
constexpr std::size_t kBlandAfter = 5000;

class DenseSimplex {
public:
    DenseSimplex(const LinearProgram& lp, const SimplexOptions& options)
        : lp_(lp), opt_(options), m_(lp.A.rows()), n_(lp.A.cols()), rhs_(n_ + m_),
          tableau_(m_, n_ + m_ + 1), reduced_(n_ + m_), basis_(static_cast<std::size_t>(m_)),
          active_(static_cast<std::size_t>(m_), true) {
        tableau_.setZero();
        for (Index i = 0; i < m_; ++i) {
            const double sign = lp.b(i) < 0.0 ? -1.0 : 1.0;
            tableau_.row(i).head(n_) = sign * lp.A.row(i);
            tableau_(i, n_ + i) = 1.0;
            tableau_(i, rhs_) = sign * lp.b(i);
            basis_[static_cast<std::size_t>(i)] = static_cast<std::size_t>(n_ + i);
        }
    }

    SimplexResult run() {
        phase_one();
        phase_two();
        return finish();
    }

private:
    void phase_one() {
        // maximize -sum(artificials); artificials start basic.
        reduced_.setZero();
        reduced_.head(n_) = tableau_.leftCols(n_).colwise().sum().transpose();
        objective_ = -tableau_.col(rhs_).sum();
        iterate(n_ + m_);
        if (objective_ < -opt_.feasibility_tolerance) {
            throw LpError("linear program is infeasible (phase-one residual " +
                          std::to_string(-objective_) + ")");
        }
        evict_artificials();
    }

    void evict_artificials() {
        for (Index i = 0; i < m_; ++i) {
            if (!active_[static_cast<std::size_t>(i)] || !is_artificial(basis_[static_cast<std::size_t>(i)]))
                continue;
            Index q = -1;
            for (Index j = 0; j < n_; ++j) {
                if (std::abs(tableau_(i, j)) > opt_.pivot_tolerance) {
                    q = j;
                    break;
                }
            }
            if (q < 0) {
                active_[static_cast<std::size_t>(i)] = false;
                dropped_.push_back(static_cast<std::size_t>(i));
                tableau_.row(i).setZero();
            } else {
                pivot(i, q);
            }
        }
    }

    void phase_two() {
        reduced_.setConstant(0.0);
        reduced_.head(n_) = lp_.c;
        objective_ = 0.0;
        for (Index i = 0; i < m_; ++i) {
            if (!active_[static_cast<std::size_t>(i)]) continue;
            const double cb = lp_.c(static_cast<Index>(basis_[static_cast<std::size_t>(i)]));
            if (cb == 0.0) continue;
            reduced_.head(n_) -= cb * tableau_.row(i).head(n_).transpose();
            objective_ += cb * tableau_(i, rhs_);
        }
        iterate(n_);
    }

    void iterate(Index allowed_columns) {
        std::size_t degenerate_run = 0;
        for (;;) {
            // Dantzig pricing; Bland's rule while stalled on a degenerate vertex.
            const bool bland = degenerate_run >= kBlandAfter;
            Index q = -1;
            double best_rc = opt_.pivot_tolerance;
            for (Index j = 0; j < allowed_columns; ++j) {
                if (reduced_(j) > best_rc) {
                    q = j;
                    if (bland) break;
                    best_rc = reduced_(j);
                }
            }
            if (q < 0) return;

            Index p = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < m_; ++i) {
                if (!active_[static_cast<std::size_t>(i)]) continue;
                const double a = tableau_(i, q);
                if (a <= opt_.pivot_tolerance) continue;
                const double ratio = std::max(tableau_(i, rhs_), 0.0) / a;
                bool take = ratio < best - kTieTolerance;
                if (!take && p >= 0 && ratio <= best + kTieTolerance) {
                    take = bland ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(p)]
                                 : a > tableau_(p, q);
                }
                if (take) {
                    best = std::min(best, ratio);
                    p = i;
                }
            }
            if (p < 0) throw LpError("linear program is unbounded along column " + std::to_string(q));
            if (++iterations_ > opt_.max_iterations) {
                throw LpError("simplex iteration limit of " + std::to_string(opt_.max_iterations) +
                              " exceeded");
            }
            degenerate_run = best <= kTieTolerance ? degenerate_run + 1 : 0;
            pivot(p, q);
        }
    }

    void pivot(Index p, Index q) {
        const double pivot_value = tableau_(p, q);
        tableau_.row(p) /= pivot_value;
        const Eigen::RowVectorXd pivot_row = tableau_.row(p);
        for (Index i = 0; i < m_; ++i) {
            if (i == p) continue;
            const double f = tableau_(i, q);
            if (f != 0.0) tableau_.row(i) -= f * pivot_row;
        }
        const double rq = reduced_(q);
        reduced_ -= rq * pivot_row.head(n_ + m_).transpose();
        objective_ += rq * pivot_row(rhs_);
        basis_[static_cast<std::size_t>(p)] = static_cast<std::size_t>(q);
    }

    bool is_artificial(std::size_t column) const { return column >= static_cast<std::size_t>(n_); }

    SimplexResult finish() {
        SimplexResult result;
        result.x = Eigen::VectorXd::Zero(n_);
        result.iterations = iterations_;
        result.dropped_rows = dropped_;

        std::vector<Index> rows;
        for (Index i = 0; i < m_; ++i) {
            if (!active_[static_cast<std::size_t>(i)]) continue;
            rows.push_back(i);
            result.basis.push_back(basis_[static_cast<std::size_t>(i)]);
            result.x(static_cast<Index>(basis_[static_cast<std::size_t>(i)])) =
                std::max(tableau_(i, rhs_), 0.0);
        }

        // Recompute x_B = B^{-1} b from the original data.
        const auto k = static_cast<Index>(rows.size());
        Eigen::MatrixXd B(k, k);
        Eigen::VectorXd b(k);
        for (Index r = 0; r < k; ++r) {
            b(r) = lp_.b(rows[static_cast<std::size_t>(r)]);
            for (Index c = 0; c < k; ++c) {
                B(r, c) = lp_.A(rows[static_cast<std::size_t>(r)],
                                static_cast<Index>(result.basis[static_cast<std::size_t>(c)]));
            }
        }
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        const Eigen::VectorXd xb = lu.solve(b);
        if (xb.allFinite() && xb.minCoeff() > -1e3 * opt_.feasibility_tolerance) {
            for (Index c = 0; c < k; ++c) {
                result.x(static_cast<Index>(result.basis[static_cast<std::size_t>(c)])) =
                    std::max(xb(c), 0.0);
            }
        }
        result.objective = lp_.c.dot(result.x);

        // Optimality check against the original data.
        Eigen::VectorXd cb(k);
        Eigen::MatrixXd Ar(k, n_);
        for (Index r = 0; r < k; ++r) {
            cb(r) = lp_.c(static_cast<Index>(result.basis[static_cast<std::size_t>(r)]));
            Ar.row(r) = lp_.A.row(rows[static_cast<std::size_t>(r)]);
        }
        const Eigen::VectorXd y = lu.transpose().solve(cb);
        const double worst = (lp_.c - Ar.transpose() * y).maxCoeff();
        if (!std::isfinite(worst) || worst > kOptimalityCheck) {
            throw LpError("simplex stopped at a non-optimal basis (reduced cost " +
                          std::to_string(worst) + ")");
        }
        return result;
    }

    const LinearProgram& lp_;
    SimplexOptions opt_;
    Index m_;
    Index n_;
    Index rhs_;
    Tableau tableau_;
    Eigen::VectorXd reduced_;
    double objective_ = 0.0;
    std::vector<std::size_t> basis_;
    std::vector<bool> active_;
    std::vector<std::size_t> dropped_;
    std::size_t iterations_ = 0;
};

} // namespace

SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options) {
    if (lp.b.size() != lp.A.rows() || lp.c.size() != lp.A.cols()) {
        throw LpError("linear program dimensions do not agree");
    }
    if (!lp.A.allFinite() || !lp.b.allFinite() || !lp.c.allFinite()) {
        throw LpError("linear program data contains non-finite values");
    }
    return DenseSimplex(lp, options).run();
}

} // namespace bsmdp
