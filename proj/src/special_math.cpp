#include "gridcast/special_math.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gridcast {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrt2Pi = 2.5066282746310005024;
}  // namespace

double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

double std_normal_sf(double z) {
    return 0.5 * std::erfc(z / kSqrt2);
}

namespace {

// Mills ratio sf(z)/pdf(z) for z >= ~4, by the classical continued fraction
// 1/(z + 1/(z + 2/(z + 3/(...)))), evaluated backward.
double mills_ratio_cf(double z) {
    double f = 0.0;
    for (int n = 60; n >= 1; --n) f = static_cast<double>(n) / (z + f);
    return 1.0 / (z + f);
}

}  // namespace

double std_normal_hazard(double z) {
    if (z <= 5.0) return std_normal_pdf(z) / std_normal_sf(z);
    return 1.0 / mills_ratio_cf(z);
}

double std_normal_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("std_normal_quantile: p must be in (0,1)");

    // Acklam's rational approximation, |relative error| < 1.2e-9.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley step on cdf(x) - p; skipped only where exp would overflow
    // (|x| > 37, where the result is already at the limit of the double range).
    if (0.5 * x * x < 700.0) {
        const double e = std_normal_cdf(x) - p;
        const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
    return std::lgamma(x);
}

namespace {

// Series for P(k,x), valid for x < k+1.
double gamma_p_series(double k, double x) {
    double ap = k;
    double sum = 1.0 / k;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17)
            return sum * std::exp(-x + k * std::log(x) - std::lgamma(k));
    }
    throw std::runtime_error("gamma_cdf: series failed to converge");
}

// Modified Lentz continued fraction for Q(k,x), valid for x >= k+1.
double gamma_q_contfrac(double k, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - k;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - k);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return h * std::exp(-x + k * std::log(x) - std::lgamma(k));
    }
    throw std::runtime_error("gamma_cdf: continued fraction failed to converge");
}

}  // namespace

double gamma_cdf(double shape, double x) {
    if (!(shape > 0.0)) throw std::domain_error("gamma_cdf: shape must be positive");
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < shape + 1.0) return gamma_p_series(shape, x);
    return 1.0 - gamma_q_contfrac(shape, x);
}

double gamma_pdf(double shape, double x) {
    if (!(shape > 0.0)) throw std::domain_error("gamma_pdf: shape must be positive");
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        if (shape > 1.0) return 0.0;
        if (shape == 1.0) return 1.0;
        return std::numeric_limits<double>::infinity();
    }
    return std::exp((shape - 1.0) * std::log(x) - x - std::lgamma(shape));
}

double gamma_quantile(double shape, double p) {
    if (!(shape > 0.0)) throw std::domain_error("gamma_quantile: shape must be positive");
    if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("gamma_quantile: p must be in [0,1)");
    if (p == 0.0) return 0.0;

    // Wilson-Hilferty start, with a small-shape correction near the origin.
    double x;
    const double z = std_normal_quantile(p);
    const double t = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * std::sqrt(shape));
    if (t > 0.0) {
        x = shape * t * t * t;
    } else {
        x = shape * 1e-3;
    }
    if (shape < 1.0 && p < 0.5) {
        // log-space start from P(k,x) ~ x^k / (k Gamma(k)) for small x
        const double lx = (std::log(p) + std::lgamma(shape + 1.0)) / shape;
        if (lx > -700.0) x = std::exp(lx);
    }
    if (!(x > 0.0)) x = shape * 1e-6;

    // Safeguarded Newton on gamma_cdf(shape, x) - p.
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double f = gamma_cdf(shape, x) - p;
        if (f > 0.0) hi = x; else lo = x;
        if (std::fabs(f) < 1e-15 * std::max(p, 1.0 - p) + 1e-300) break;
        const double df = gamma_pdf(shape, x);
        double step = (df > 0.0) ? f / df : 0.0;
        double xn = x - step;
        if (!(xn > lo) || !(xn < hi) || step == 0.0) {
            xn = std::isinf(hi) ? x * 2.0 : 0.5 * (lo + hi);
        }
        if (xn == x) break;
        x = xn;
    }
    return x;
}

double beta_fn(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("beta_fn: arguments must be positive");
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Asymptotic series ln(x) - 1/(2x) - sum B_2n / (2n x^{2n})
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return result;
}

double gamma_cdf_dshape(double shape, double x) {
    const double h = 1e-5 * std::max(1.0, shape);
    const double lo = std::max(shape - h, 0.5 * shape);
    const double hi = shape + h;
    return (gamma_cdf(hi, x) - gamma_cdf(lo, x)) / (hi - lo);
}

}  // namespace gridcast
