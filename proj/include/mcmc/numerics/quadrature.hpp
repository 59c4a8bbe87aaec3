#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcmc/error.hpp"

namespace mcmc::numerics {

/// Tolerances and truncation for adaptive integration.
///
/// Semi-infinite integrals against a density are cut at
/// mean + truncation_sigma * std of that density.
struct QuadratureSpec {
    double abs_tol = 1e-30;
    double rel_tol = 1e-10;
    int max_subdivisions = 4000;
    double truncation_sigma = 10.0;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
            throw std::invalid_argument("QuadratureSpec: tolerances must be positive");
        }
        if (max_subdivisions < 1) {
            throw std::invalid_argument("QuadratureSpec: max_subdivisions must be >= 1");
        }
        if (!(truncation_sigma >= 6.0)) {
            throw std::invalid_argument("QuadratureSpec: truncation_sigma must be >= 6");
        }
    }
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    int intervals = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for kronrod_nodes[1], [3], [5] and the centre.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double lo;
    double hi;
    double value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double lo, double hi) {
    const double centre = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(centre);
    double kronrod = fc * kronrod_weights[7];
    double gauss = fc * gauss_weights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double sum = f(centre - dx) + f(centre + dx);
        kronrod += kronrod_weights[j] * sum;
        if (j % 2 == 1) gauss += gauss_weights[j / 2] * sum;
    }
    return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [lo, hi].
///
/// Optional breakpoints split the initial partition; points outside (lo, hi)
/// are ignored. Throws non_convergence when max_subdivisions panels are in use
/// and the summed error estimate still exceeds max(abs_tol, rel_tol * |I|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, double lo, double hi, const QuadratureSpec& spec,
                                    std::span<const double> breakpoints = {}) {
    spec.validate();
    QuadratureResult out;
    if (!(hi > lo)) return out;

    std::vector<double> cuts{lo};
    for (double b : breakpoints) {
        if (b > lo && b < hi) cuts.push_back(b);
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::Panel> heap;
    double total = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = detail::gauss_kronrod_15(f, cuts[i], cuts[i + 1]);
        out.evaluations += 15;
        total += p.value;
        error += p.error;
        heap.push(p);
    }

    // Panels too narrow to split are retired here.
    double frozen_value = 0.0;
    double frozen_error = 0.0;
    while (error + frozen_error > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
        if (heap.empty()) break;
        if (static_cast<int>(heap.size()) >= spec.max_subdivisions) {
            throw non_convergence("integrate_adaptive: " + std::to_string(heap.size()) +
                                  " panels, error estimate " + std::to_string(error + frozen_error));
        }
        const detail::Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        total -= worst.value;
        error -= worst.error;
        if (!(mid > worst.lo && mid < worst.hi)) {
            total += worst.value;
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        auto left = detail::gauss_kronrod_15(f, worst.lo, mid);
        auto right = detail::gauss_kronrod_15(f, mid, worst.hi);
        out.evaluations += 30;
        total += left.value + right.value;
        error += left.error + right.error;
        heap.push(left);
        heap.push(right);
    }
    // Recompute from the panels to shed accumulated rounding in the running sums.
    out.intervals = static_cast<int>(heap.size());
    double value = frozen_value;
    double err = frozen_error;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.value = value;
    out.abs_error = err;
    return out;
}

namespace detail {

inline constexpr std::array<double, 5> gl10_nodes = {
    0.14887433898163122, 0.43339539412924721, 0.67940956829902444, 0.86506336668898454,
    0.97390652851717174};
inline constexpr std::array<double, 5> gl10_weights = {
    0.29552422471475298, 0.26926671930999652, 0.21908636251598201, 0.14945134915058036,
    0.066671344308688069};

}  // namespace detail

/// Composite 10-point Gauss-Legendre on `panels` equal panels. No error
/// control; callers pick the panel count from the length scales involved.
template <class F>
double integrate_fixed(F&& f, double lo, double hi, int panels) {
    if (!(hi > lo) || panels < 1) return 0.0;
    const double width = (hi - lo) / panels;
    const double half = 0.5 * width;
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double centre = lo + (k + 0.5) * width;
        double s = 0.0;
        for (std::size_t j = 0; j < detail::gl10_nodes.size(); ++j) {
            const double dx = half * detail::gl10_nodes[j];
            s += detail::gl10_weights[j] * (f(centre - dx) + f(centre + dx));
        }
        total += s * half;
    }
    return total;
}

template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureSpec& spec,
                 std::span<const double> breakpoints = {}) {
    return integrate_adaptive(std::forward<F>(f), lo, hi, spec, breakpoints).value;
}

/// Integral of f over [0, inf) where f carries a weight density with the
/// given mean and standard deviation.
///
/// The domain is truncated at mean + truncation_sigma * std and the initial
/// partition has a cut at every whole standard deviation around the mean so
/// narrow weights are never stepped over.
template <class F>
double integrate_semi_infinite(F&& f, double weight_mean, double weight_std,
                               const QuadratureSpec& spec,
                               std::span<const double> extra_breakpoints = {}) {
    spec.validate();
    if (!(weight_std >= 0.0) || !std::isfinite(weight_mean)) {
        throw std::invalid_argument("integrate_semi_infinite: bad weight moments");
    }
    const double hi = weight_mean + spec.truncation_sigma * weight_std;
    if (!(hi > 0.0)) return 0.0;
    std::vector<double> cuts(extra_breakpoints.begin(), extra_breakpoints.end());
    if (weight_std > 0.0) {
        const int k = static_cast<int>(std::ceil(spec.truncation_sigma));
        for (int j = -k; j <= k; ++j) cuts.push_back(weight_mean + j * weight_std);
    }
    return integrate(std::forward<F>(f), 0.0, hi, spec, cuts);
}

}  // namespace mcmc::numerics
