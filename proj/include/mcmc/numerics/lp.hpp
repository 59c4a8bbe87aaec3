#pragma once
//
// Linear programs of covering type:
//
//     minimize  c^T x   subject to  A x >= b,  x >= 0.
//
// solve_lp is a dense two-phase tableau simplex with Bland's anti-cycling
// rule, meant for problems with at most a few hundred rows.
//
// solve_staircase_lp handles the block lower-triangular instances produced by
// release scheduling, where the rows of block k only involve x_0..x_k. It
// builds the primal by forward substitution and certifies optimality with a
// dual solution obtained by back substitution (complementary slackness).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace mcmc::numerics {

enum class LpStatus {
    optimal,
    infeasible,
    unbounded,
    undecided,  ///< a specialised solver could not settle the instance
};

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;     ///< primal solution (empty unless optimal)
    std::vector<double> dual;  ///< one multiplier per row, >= 0
    double objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
};

/// Dense row-major matrix, just enough for the tableau.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace detail {

class Tableau {
public:
    // Columns: [structural n | surplus m | artificial m | rhs].
    Tableau(const DenseMatrix& a, std::span<const double> b)
        : m_(a.rows()), n_(a.cols()), t_(m_ + 1, n_ + 2 * m_ + 1), basis_(m_) {
        for (std::size_t r = 0; r < m_; ++r) {
            const double sign = b[r] < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n_; ++j) t_(r, j) = sign * a(r, j);
            t_(r, n_ + r) = -sign;
            t_(r, rhs_col()) = sign * b[r];
            if (sign < 0.0) {
                basis_[r] = n_ + r;  // surplus column is +e_r after the flip
            } else {
                t_(r, n_ + m_ + r) = 1.0;
                basis_[r] = n_ + m_ + r;
            }
        }
        double scale = 0.0;
        for (std::size_t r = 0; r < m_; ++r)
            for (std::size_t j = 0; j < n_; ++j) scale = std::max(scale, std::abs(a(r, j)));
        for (double v : b) scale = std::max(scale, std::abs(v));
        eps_ = 1e-11 * std::max(scale, 1.0);
    }

    std::size_t rhs_col() const { return n_ + 2 * m_; }
    bool is_artificial(std::size_t j) const { return j >= n_ + m_ && j < n_ + 2 * m_; }

    void set_objective(std::span<const double> cost_full) {
        auto z = t_.row(m_);
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t j = 0; j < cost_full.size(); ++j) z[j] = cost_full[j];
        for (std::size_t r = 0; r < m_; ++r) {
            const double cb = cost_full[basis_[r]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= rhs_col(); ++j) z[j] -= cb * t_(r, j);
        }
    }

    // Bland: lowest-index improving column, lowest-index basic variable on ties.
    // Returns false when unbounded.
    bool optimize(bool allow_artificial) {
        for (;;) {
            std::size_t enter = npos;
            for (std::size_t j = 0; j < rhs_col(); ++j) {
                if (!allow_artificial && is_artificial(j)) continue;
                if (t_(m_, j) < -eps_) {
                    enter = j;
                    break;
                }
            }
            if (enter == npos) return true;
            std::size_t leave = npos;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m_; ++r) {
                const double coef = t_(r, enter);
                if (coef <= eps_) continue;
                const double ratio = t_(r, rhs_col()) / coef;
                if (ratio < best - eps_ ||
                    (std::abs(ratio - best) <= eps_ && basis_[r] < basis_[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave == npos) return false;
            pivot(leave, enter);
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        const double p = t_(r, c);
        for (double& v : t_.row(r)) v /= p;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f == 0.0) continue;
            auto dst = t_.row(i);
            auto src = t_.row(r);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= f * src[j];
            dst[c] = 0.0;
        }
        basis_[r] = c;
    }

    // Pivot zero-level artificials out of the basis where possible.
    void expel_artificials() {
        for (std::size_t r = 0; r < m_; ++r) {
            if (!is_artificial(basis_[r])) continue;
            for (std::size_t j = 0; j < n_ + m_; ++j) {
                if (std::abs(t_(r, j)) > eps_) {
                    pivot(r, j);
                    break;
                }
            }
        }
    }

    double objective_value() const { return -t_(m_, rhs_col()); }
    double eps() const { return eps_; }
    std::size_t rows() const { return m_; }
    std::size_t structural() const { return n_; }
    const std::vector<std::size_t>& basis() const { return basis_; }
    double value(std::size_t r) const { return t_(r, rhs_col()); }
    double reduced_cost(std::size_t j) const { return t_(m_, j); }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t m_;
    std::size_t n_;
    DenseMatrix t_;
    std::vector<std::size_t> basis_;
    double eps_ = 1e-11;
};

}  // namespace detail

/// Dense two-phase simplex for min c^T x s.t. A x >= b, x >= 0.
inline LpResult solve_lp(std::span<const double> cost, const DenseMatrix& a,
                         std::span<const double> rhs) {
    if (cost.size() != a.cols() || rhs.size() != a.rows()) {
        throw std::invalid_argument("solve_lp: dimension mismatch");
    }
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    detail::Tableau tab(a, rhs);
    const std::size_t total = n + 2 * m;

    std::vector<double> phase1(total, 0.0);
    for (std::size_t r = 0; r < m; ++r) phase1[n + m + r] = 1.0;
    tab.set_objective(phase1);
    tab.optimize(true);

    LpResult out;
    double scale = 1.0;
    for (double v : rhs) scale = std::max(scale, std::abs(v));
    if (tab.objective_value() > 1e-9 * scale) {
        out.status = LpStatus::infeasible;
        return out;
    }
    tab.expel_artificials();

    std::vector<double> phase2(total, 0.0);
    std::copy(cost.begin(), cost.end(), phase2.begin());
    tab.set_objective(phase2);
    if (!tab.optimize(false)) {
        out.status = LpStatus::unbounded;
        return out;
    }

    out.status = LpStatus::optimal;
    out.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t j = tab.basis()[r];
        if (j < n) out.x[j] = tab.value(r);
    }
    // The multiplier of row r is the reduced cost of its surplus column.
    out.dual.resize(m);
    for (std::size_t r = 0; r < m; ++r) out.dual[r] = std::max(0.0, tab.reduced_cost(n + r));
    out.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) out.objective += cost[j] * out.x[j];
    out.dual_objective = 0.0;
    for (std::size_t r = 0; r < m; ++r) out.dual_objective += rhs[r] * out.dual[r];
    return out;
}

/// One covering constraint of a staircase LP; coeffs[i] multiplies x_i for
/// i <= block index, later variables do not appear.
struct StaircaseRow {
    std::vector<double> coeffs;
    double rhs = 0.0;
};

struct StaircaseLpResult {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    /// True when a dual-feasible complementary solution was found, i.e. the
    /// primal is provably optimal.
    bool certified = false;
    /// Largest violation of dual feasibility (reduced cost below zero), scaled by cost.
    double max_dual_violation = 0.0;
    /// Row (within each block) that determined x_k; -1 when x_k = 0.
    std::vector<int> binding_row;
};

/// Incremental form of the staircase solver: feed the blocks in order with
/// add_block(), then call finish(). Several instances can share one pass over
/// expensive rows (e.g. designs differing only in a scalar of the rows).
///
/// Each x_k is the smallest value satisfying block k given the earlier ones.
/// Optimality is then checked by solving the dual restricted to the binding
/// rows (triangular) and testing the remaining dual constraints.
class StaircaseLp {
public:
    explicit StaircaseLp(std::vector<double> cost, double tol = 1e-9) : cost_(std::move(cost)), tol_(tol) {
        for (double c : cost_) {
            if (!(c > 0.0)) throw std::invalid_argument("StaircaseLp: costs must be positive");
        }
        out_.x.reserve(cost_.size());
        out_.binding_row.reserve(cost_.size());
        binding_.reserve(cost_.size());
        binding_rhs_.reserve(cost_.size());
    }

    std::size_t blocks() const { return cost_.size(); }
    std::size_t added() const { return out_.x.size(); }
    /// The forward pass got stuck; the instance may still be feasible.
    bool failed() const { return failed_; }
    bool proven_infeasible() const { return proven_infeasible_; }
    std::span<const double> x() const { return out_.x; }

    /// Rows of the next block; every row has coeffs of length added() + 1.
    /// Returns false once the problem is known to be infeasible.
    bool add_block(const std::vector<StaircaseRow>& rows) {
        const std::size_t k = added();
        if (k >= blocks()) throw std::logic_error("StaircaseLp: too many blocks");
        if (failed_) {
            out_.x.push_back(0.0);
            out_.binding_row.push_back(-1);
            binding_.emplace_back();
            binding_rhs_.push_back(0.0);
            return false;
        }
        double need = 0.0;
        int arg = -1;
        std::vector<double> have(rows.size(), 0.0);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.coeffs.size() != k + 1) {
                throw std::invalid_argument("StaircaseLp: row length must be k+1");
            }
            for (std::size_t i = 0; i < k; ++i) have[r] += row.coeffs[i] * out_.x[i];
            const double deficit = row.rhs - have[r];
            if (deficit <= slack_tol(row.rhs)) continue;
            const double diag = row.coeffs[k];
            if (!(diag > 0.0)) {
                // x_k cannot help. Earlier variables might, but the forward
                // pass cannot revisit them; proven infeasible only when no
                // variable has a positive coefficient.
                failed_ = true;
                proven_infeasible_ = std::none_of(row.coeffs.begin(), row.coeffs.end(), [](double v) { return v > 0.0; });
                break;
            }
            const double xk = deficit / diag;
            if (xk > need) {
                need = xk;
                arg = static_cast<int>(r);
            }
        }
        // rows where x_k enters negatively may be broken by the choice
        for (std::size_t r = 0; r < rows.size() && !failed_; ++r) {
            if (have[r] + rows[r].coeffs[k] * need < rows[r].rhs - slack_tol(rows[r].rhs)) failed_ = true;
        }
        if (failed_) need = 0.0, arg = -1;
        out_.x.push_back(need);
        out_.binding_row.push_back(arg);
        if (arg >= 0) {
            binding_.push_back(rows[static_cast<std::size_t>(arg)].coeffs);
            binding_rhs_.push_back(rows[static_cast<std::size_t>(arg)].rhs);
        } else {
            binding_.emplace_back();
            binding_rhs_.push_back(0.0);
        }
        return !failed_;
    }

    StaircaseLpResult finish() {
        if (added() != blocks()) throw std::logic_error("StaircaseLp: not all blocks added");
        StaircaseLpResult out = std::move(out_);
        out_ = {};
        if (failed_) {
            out.status = proven_infeasible_ ? LpStatus::infeasible : LpStatus::undecided;
            out.x.clear();
            return out;
        }
        const std::size_t n = blocks();
        out.status = LpStatus::optimal;
        out.objective = 0.0;
        for (std::size_t k = 0; k < n; ++k) out.objective += cost_[k] * out.x[k];

        // Dual: y_k on the binding row of block k (zero when x_k = 0).
        //   sum_{k >= i, x_k > 0} binding[k][i] * y_k  = c_i   for x_i > 0
        //                                               <= c_i  for x_i = 0
        std::vector<double> y(n, 0.0);
        std::vector<double> load(n, 0.0);  // sum_{k > i} binding[k][i] y_k
        bool dual_ok = true;
        double worst = 0.0;
        for (std::size_t ii = n; ii-- > 0;) {
            if (out.binding_row[ii] >= 0) {
                const auto& b = binding_[ii];
                y[ii] = (cost_[ii] - load[ii]) / b[ii];
                if (y[ii] < -tol_ * cost_[ii] / b[ii]) {
                    dual_ok = false;
                    worst = std::max(worst, -y[ii] * b[ii] / cost_[ii]);
                }
                for (std::size_t i = 0; i < ii; ++i) load[i] += b[i] * y[ii];
            } else {
                const double excess = (load[ii] - cost_[ii]) / cost_[ii];
                if (excess > tol_) {
                    dual_ok = false;
                    worst = std::max(worst, excess);
                }
            }
        }
        out.dual_objective = 0.0;
        for (std::size_t k = 0; k < n; ++k) out.dual_objective += binding_rhs_[k] * y[k];
        out.certified = dual_ok;
        out.max_dual_violation = worst;
        binding_.clear();
        return out;
    }

private:
    double slack_tol(double rhs) const { return tol_ * std::max(1.0, std::abs(rhs)); }

    std::vector<double> cost_;
    double tol_;
    bool failed_ = false;
    bool proven_infeasible_ = false;
    StaircaseLpResult out_;
    std::vector<std::vector<double>> binding_;  // binding row of each block
    std::vector<double> binding_rhs_;
};

/// Solves min c^T x s.t. rows(k) hold for every block k, x >= 0, where every
/// row in block k only involves x_0..x_k.
///
/// block_rows(k, x_prefix) must return the rows of block k; x_prefix holds
/// the already-fixed x_0..x_{k-1} and may be ignored. Costs must be positive.
template <class BlockRows>
StaircaseLpResult solve_staircase_lp(std::size_t blocks, std::span<const double> cost,
                                     BlockRows&& block_rows, double tol = 1e-9) {
    if (cost.size() != blocks) throw std::invalid_argument("solve_staircase_lp: cost size");
    StaircaseLp lp(std::vector<double>(cost.begin(), cost.end()), tol);
    for (std::size_t k = 0; k < blocks; ++k) {
        if (!lp.add_block(block_rows(k, lp.x()))) {
            StaircaseLpResult out;
            out.status = lp.proven_infeasible() ? LpStatus::infeasible : LpStatus::undecided;
            return out;
        }
    }
    return lp.finish();
}

}  // namespace mcmc::numerics
