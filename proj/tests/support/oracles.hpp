#pragma once

// Test-side oracles, deliberately independent of the library's numeric
// machinery: a recursive adaptive Simpson integrator and small statistics
// helpers for the Monte Carlo checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int depth = 60) {
    if (!(b > a)) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

struct MomentStats {
    double mean = 0.0;
    double se_mean = 0.0;  // standard error of the mean
};

inline MomentStats sample_moment(std::span<const double> xs, int order) {
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
        double p = 1.0;
        for (int i = 0; i < order; ++i) p *= x;
        s += p;
        s2 += p * p;
    }
    const double n = static_cast<double>(xs.size());
    MomentStats out;
    out.mean = s / n;
    const double var = std::max(0.0, s2 / n - out.mean * out.mean);
    out.se_mean = std::sqrt(var / n);
    return out;
}

// Two-sided Kolmogorov-Smirnov distance of a sample against a cdf,
// restricted to the strictly positive (continuous) part.
inline double ks_distance_positive(std::vector<double> xs,
                                   const std::function<double(double)>& cdf) {
    std::erase_if(xs, [](double v) { return v <= 0.0; });
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    const double mass0 = cdf(0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        // conditional cdf of the positive part
        const double c = (cdf(xs[i]) - mass0) / (1.0 - mass0);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        worst = std::max({worst, std::fabs(c - lo), std::fabs(c - hi)});
    }
    return worst;
}

}  // namespace oracle
