#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "mcmc/error.hpp"

namespace mcmc::numerics {

struct RootBracket {
    double lo;
    double hi;

    void validate() const {
        if (!(lo < hi)) throw std::invalid_argument("RootBracket: lo must be < hi");
    }
    double width() const { return hi - lo; }
};

/// Brent's method on a sign-changing bracket.
///
/// Terminates when the bracket is narrower than tol or f hits zero exactly.
/// Every step keeps a valid bracket, falling back to bisection whenever the
/// interpolation step is not making progress.
template <class F>
double find_root(F&& f, RootBracket bracket, double tol) {
    bracket.validate();
    double a = bracket.lo;
    double b = bracket.hi;
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        throw bracket_error("find_root: f(lo) and f(hi) have the same sign");
    }
    if (std::abs(fa) < std::abs(fb)) {
        std::swap(a, b);
        std::swap(fa, fb);
    }
    double c = a;
    double fc = fa;
    double d = b - a;
    bool bisected = true;
    for (int iter = 0; iter < 500; ++iter) {
        if (std::abs(b - a) <= tol) break;
        double s;
        if (fa != fc && fb != fc) {
            s = a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) +
                c * fa * fb / ((fc - fa) * (fc - fb));
        } else {
            s = b - fb * (b - a) / (fb - fa);
        }
        const double lo3 = (3.0 * a + b) / 4.0;
        const bool outside = (s - lo3) * (s - b) > 0.0;
        const bool slow_after_bisect = bisected && std::abs(s - b) >= std::abs(b - c) / 2.0;
        const bool slow_after_interp = !bisected && std::abs(s - b) >= std::abs(c - d) / 2.0;
        const bool tiny_after_bisect = bisected && std::abs(b - c) < tol;
        const bool tiny_after_interp = !bisected && std::abs(c - d) < tol;
        if (outside || slow_after_bisect || slow_after_interp || tiny_after_bisect ||
            tiny_after_interp) {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        const double fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if ((fa > 0.0) != (fs > 0.0)) {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if (fs == 0.0) return s;
        if (std::abs(fa) < std::abs(fb)) {
            std::swap(a, b);
            std::swap(fa, fb);
        }
    }
    return b;
}

struct ScalarMinimum {
    double x;
    double fx;
};

/// Golden-section search for the minimizer of a convex (or unimodal)
/// function on [lo, hi]. The returned point is the best one evaluated.
template <class F>
ScalarMinimum minimize_scalar_convex(F&& f, RootBracket bracket, double tol) {
    bracket.validate();
    constexpr double inv_phi = 0.6180339887498948482;
    double a = bracket.lo;
    double b = bracket.hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    ScalarMinimum best = f1 <= f2 ? ScalarMinimum{x1, f1} : ScalarMinimum{x2, f2};
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            if (f1 < best.fx) best = {x1, f1};
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            if (f2 < best.fx) best = {x2, f2};
        }
        if (!(x1 > a && x2 < b)) break;
    }
    for (double edge : {bracket.lo, bracket.hi}) {
        if (std::abs(best.x - edge) <= 2.0 * tol) {
            const double fe = f(edge);
            if (fe < best.fx) best = {edge, fe};
        }
    }
    return best;
}

}  // namespace mcmc::numerics
