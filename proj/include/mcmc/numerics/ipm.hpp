#pragma once
//
// Primal-dual interior-point method (Mehrotra predictor-corrector) for
//   min c^T x  s.t.  A x >= b,  x >= 0
// with a dense A. Used when a problem is too large for the tableau simplex.
// The normal matrix A^T E^-1 A is accumulated in row chunks, and only over the
// leading columns a chunk touches, which pays off for lower-staircase A.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcmc/numerics/lp.hpp"

namespace mcmc::numerics {

struct IpmOptions {
    double tol = 1e-9;  ///< relative primal/dual residual and gap
    /// If the iteration stalls (round-off in the normal equations), the best
    /// iterate is accepted when its residuals and gap are below this.
    double stall_tol = 1e-5;
    int max_iterations = 200;
    /// Called once per iteration with (iteration, primal residual, dual residual, relative gap).
    std::function<void(int, double, double, double)> trace;
};

struct IpmResult {
    LpStatus status = LpStatus::undecided;
    std::vector<double> x;
    std::vector<double> dual;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
};

/// rows: indices of the rows of `a` that take part (all rows when empty).
/// support[r]: columns >= support[r] of row r are zero (optional; size a.rows()).
inline IpmResult solve_lp_interior(std::span<const double> cost, const DenseMatrix& a, std::span<const double> rhs,
                                   std::span<const std::size_t> rows = {}, std::span<const std::size_t> support = {},
                                   IpmOptions opt = {}) {
    using Vec = Eigen::VectorXd;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const std::size_t n = a.cols();
    if (cost.size() != n || rhs.size() != a.rows()) throw std::invalid_argument("solve_lp_interior: size mismatch");
    if (!support.empty() && support.size() != a.rows()) throw std::invalid_argument("solve_lp_interior: support size");

    std::vector<std::size_t> sel(rows.begin(), rows.end());
    if (sel.empty()) {
        sel.resize(a.rows());
        for (std::size_t r = 0; r < sel.size(); ++r) sel[r] = r;
    }
    // order rows by support so chunks stay narrow
    auto width = [&](std::size_t r) { return support.empty() ? n : std::min(n, support[r]); };
    std::stable_sort(sel.begin(), sel.end(), [&](std::size_t p, std::size_t q) { return width(p) < width(q); });

    IpmResult out;
    // drop empty rows; one with positive rhs is infeasible outright
    std::vector<std::size_t> keep;
    for (std::size_t r : sel) {
        double big = 0.0;
        for (std::size_t i = 0; i < width(r); ++i) big = std::max(big, std::abs(a(r, i)));
        if (big == 0.0) {
            if (rhs[r] > 0.0) {
                out.status = LpStatus::infeasible;
                return out;
            }
            continue;
        }
        keep.push_back(r);
    }
    const std::size_t m = keep.size();

    // Equilibrate: rows to unit max, then columns to unit max.
    RowMat A = RowMat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<std::size_t> wid(m);
    Vec b(m), c(n), rs(m), cs = Vec::Ones(n);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t r = keep[k];
        wid[k] = width(r);
        double big = 0.0;
        for (std::size_t i = 0; i < wid[k]; ++i) big = std::max(big, std::abs(a(r, i)));
        rs[k] = 1.0 / big;
        for (std::size_t i = 0; i < wid[k]; ++i) A(k, i) = a(r, i) * rs[k];
        b[k] = rhs[r] * rs[k];
    }
    {
        Vec colmax = A.cwiseAbs().colwise().maxCoeff().transpose();
        for (std::size_t i = 0; i < n; ++i) {
            if (colmax[i] > 0.0) cs[i] = 1.0 / colmax[i];
        }
        A = A * cs.asDiagonal();
        for (std::size_t i = 0; i < n; ++i) c[i] = cost[i] * cs[i];
    }

    Vec x = Vec::Ones(n), z = Vec::Ones(n), y = Vec::Ones(m), w = Vec::Ones(m);
    const double bnorm = 1.0 + b.lpNorm<Eigen::Infinity>();
    const double cnorm = 1.0 + c.lpNorm<Eigen::Infinity>();
    constexpr std::size_t chunk = 256;

    Eigen::MatrixXd M(n, n);
    RowMat scaled;
    auto max_step = [](const Vec& v, const Vec& dv) {
        double s = 1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (dv[i] < 0.0) s = std::min(s, -v[i] / dv[i]);
        }
        return s;
    };

    Vec best_x, best_y;
    double best_merit = std::numeric_limits<double>::infinity();
    int best_it = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        const Vec rp = b - A * x + w;
        const Vec rd = c - A.transpose() * y - z;
        const double gap = x.dot(z) + w.dot(y);
        const double mu = gap / static_cast<double>(n + m);
        const double pobj = c.dot(x), dobj = b.dot(y);
        const double pres = rp.lpNorm<Eigen::Infinity>() / bnorm;
        const double dres = rd.lpNorm<Eigen::Infinity>() / cnorm;
        const double rgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
        if (opt.trace) opt.trace(it, pres, dres, rgap);
        if (pres < opt.tol && dres < opt.tol && rgap < opt.tol) {
            out.status = LpStatus::optimal;
            break;
        }
        const double merit = std::max({pres, dres, rgap});
        if (merit < best_merit) {
            best_merit = merit;
            best_it = it;
            best_x = x;
            best_y = y;
        } else if (best_merit < 1e-3 && it - best_it >= 8) {
            break;  // stalled near the optimum; fall back to the best iterate
        }
        // Farkas rays: y >= 0 with A^T y <= 0 and b^T y > 0 proves primal
        // infeasibility; x >= 0 with A x >= 0 and c^T x < 0 proves unboundedness.
        if (dobj > 0.0 && (A.transpose() * y).maxCoeff() <= 1e-9 * dobj) {
            out.status = LpStatus::infeasible;
            return out;
        }
        if (pobj < 0.0 && x.lpNorm<Eigen::Infinity>() > 1e8 && (A * x).minCoeff() >= 1e-9 * pobj) {
            out.status = LpStatus::unbounded;
            return out;
        }

        const Vec d = z.cwiseQuotient(x);
        const Vec einv = y.cwiseQuotient(w);
        M.setZero();
        for (std::size_t r0 = 0; r0 < m; r0 += chunk) {
            const std::size_t r1 = std::min(m, r0 + chunk);
            const auto s = static_cast<Eigen::Index>(wid[r1 - 1]);
            const auto len = static_cast<Eigen::Index>(r1 - r0);
            scaled = einv.segment(static_cast<Eigen::Index>(r0), len).cwiseSqrt().asDiagonal() *
                     A.block(static_cast<Eigen::Index>(r0), 0, len, s);
            M.topLeftCorner(s, s).selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
        }
        M.diagonal() += d;
        M.diagonal().array() += 1e-14 * M.diagonal().maxCoeff();
        const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(M);
        if (llt.info() != Eigen::Success) break;
        if (!std::isfinite(mu) || mu <= 0.0) break;

        auto solve = [&](const Vec& rxz, const Vec& rwy, Vec& dx, Vec& dy, Vec& dz, Vec& dw) {
            const Vec r1 = rp + rwy.cwiseQuotient(y);
            const Vec r2 = rd - rxz.cwiseQuotient(x);
            const Vec rhs_n = A.transpose() * einv.cwiseProduct(r1) - r2;
            dx = llt.solve(rhs_n);
            // the dual equation is off by exactly the normal-equation residual
            for (int k = 0; k < 3; ++k) dx += llt.solve(rhs_n - M.selfadjointView<Eigen::Lower>() * dx);
            dy = einv.cwiseProduct(r1 - A * dx);
            dz = (rxz - z.cwiseProduct(dx)).cwiseQuotient(x);
            dw = (rwy - w.cwiseProduct(dy)).cwiseQuotient(y);
        };

        Vec dx, dy, dz, dw;
        solve(-x.cwiseProduct(z), -w.cwiseProduct(y), dx, dy, dz, dw);
        const double ap = std::min(max_step(x, dx), max_step(w, dw));
        const double ad = std::min(max_step(z, dz), max_step(y, dy));
        const double mu_aff = ((x + ap * dx).dot(z + ad * dz) + (w + ap * dw).dot(y + ad * dy)) /
                              static_cast<double>(n + m);
        const double sigma = std::pow(mu_aff / mu, 3);
        const Vec rxz = Vec::Constant(n, sigma * mu) - x.cwiseProduct(z) - dx.cwiseProduct(dz);
        const Vec rwy = Vec::Constant(m, sigma * mu) - w.cwiseProduct(y) - dw.cwiseProduct(dy);
        solve(rxz, rwy, dx, dy, dz, dw);
        const double sp = std::min(1.0, 0.995 * std::min(max_step(x, dx), max_step(w, dw)));
        const double sd = std::min(1.0, 0.995 * std::min(max_step(z, dz), max_step(y, dy)));
        x += sp * dx;
        w += sp * dw;
        y += sd * dy;
        z += sd * dz;
    }
    if (out.status != LpStatus::optimal) {
        if (!(best_merit <= opt.stall_tol)) return out;
        x = best_x;
        y = best_y;
        out.status = LpStatus::optimal;
    }

    out.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.x[i] = std::max(0.0, x[i] * cs[i]);
    out.dual.assign(a.rows(), 0.0);
    for (std::size_t k = 0; k < m; ++k) out.dual[keep[k]] = y[k] * rs[k];
    out.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.objective += cost[i] * out.x[i];
    out.dual_objective = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) out.dual_objective += rhs[r] * out.dual[r];
    return out;
}

}  // namespace mcmc::numerics
