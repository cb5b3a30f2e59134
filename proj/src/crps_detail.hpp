#pragma once

// Closed-form CRPS for both families, written once over a generic scalar so
// the plain evaluation and the parameter-gradient evaluation (dual numbers)
// share the same expression tree.

#include <cmath>

#include "gridcast/special_math.hpp"

namespace gridcast::detail {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrtPi = 1.77245385090551602730;
constexpr double kSqrt2 = 1.41421356237309504880;

// Three-component forward-mode dual number.
struct Dual3 {
    double v = 0.0;
    double d0 = 0.0, d1 = 0.0, d2 = 0.0;
};

inline Dual3 make_dual(double v, int slot) {
    Dual3 d;
    d.v = v;
    if (slot == 0) d.d0 = 1.0;
    if (slot == 1) d.d1 = 1.0;
    if (slot == 2) d.d2 = 1.0;
    return d;
}

inline Dual3 operator+(Dual3 a, Dual3 b) { return {a.v + b.v, a.d0 + b.d0, a.d1 + b.d1, a.d2 + b.d2}; }
inline Dual3 operator+(Dual3 a, double b) { return {a.v + b, a.d0, a.d1, a.d2}; }
inline Dual3 operator+(double a, Dual3 b) { return b + a; }
inline Dual3 operator-(Dual3 a) { return {-a.v, -a.d0, -a.d1, -a.d2}; }
inline Dual3 operator-(Dual3 a, Dual3 b) { return {a.v - b.v, a.d0 - b.d0, a.d1 - b.d1, a.d2 - b.d2}; }
inline Dual3 operator-(Dual3 a, double b) { return {a.v - b, a.d0, a.d1, a.d2}; }
inline Dual3 operator-(double a, Dual3 b) { return {a - b.v, -b.d0, -b.d1, -b.d2}; }
inline Dual3 operator*(Dual3 a, Dual3 b) {
    return {a.v * b.v, a.d0 * b.v + a.v * b.d0, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + a.v * b.d2};
}
inline Dual3 operator*(Dual3 a, double b) { return {a.v * b, a.d0 * b, a.d1 * b, a.d2 * b}; }
inline Dual3 operator*(double a, Dual3 b) { return b * a; }
inline Dual3 operator/(Dual3 a, Dual3 b) {
    const double inv = 1.0 / b.v;
    const double q = a.v * inv;
    return {q, (a.d0 - q * b.d0) * inv, (a.d1 - q * b.d1) * inv, (a.d2 - q * b.d2) * inv};
}
inline Dual3 operator/(Dual3 a, double b) { return a * (1.0 / b); }
inline Dual3 operator/(double a, Dual3 b) { return Dual3{a, 0, 0, 0} / b; }

inline Dual3 chain(double value, double slope, const Dual3& x) {
    return {value, slope * x.d0, slope * x.d1, slope * x.d2};
}

// --- scalar primitives, double and dual flavours ---

inline double sm_normal_cdf(double z) { return std_normal_cdf(z); }
inline Dual3 sm_normal_cdf(const Dual3& z) { return chain(std_normal_cdf(z.v), std_normal_pdf(z.v), z); }

inline double sm_normal_sf(double z) { return std_normal_sf(z); }
inline Dual3 sm_normal_sf(const Dual3& z) { return chain(std_normal_sf(z.v), -std_normal_pdf(z.v), z); }

// hazard h(z) = pdf/sf; dh/dz = h (h - z)
inline double sm_hazard(double z) { return std_normal_hazard(z); }
inline Dual3 sm_hazard(const Dual3& z) {
    const double h = std_normal_hazard(z.v);
    return chain(h, h * (h - z.v), z);
}

namespace stable_tail {

inline double mills(double z) { return 1.0 / std_normal_hazard(z); }

// sf(upper)/sf(lower) for upper >= lower, without underflow. Beyond the
// direct range the exponential carries the tail difference explicitly.
inline double sf_ratio_value(double upper, double lower) {
    if (lower <= 5.0) {
        const double s = std_normal_sf(lower);
        return std_normal_sf(upper) / s;
    }
    const double e = 0.5 * (lower - upper) * (lower + upper);
    return mills(upper) / mills(lower) * std::exp(e);
}

// sf(sqrt(2) z) / sf(z)^2; the e^{-z^2} factors cancel exactly.
inline double q_term_value(double z) {
    if (z <= 5.0) {
        const double s = std_normal_sf(z);
        return std_normal_sf(kSqrt2 * z) / (s * s);
    }
    const double m = mills(z);
    return std::sqrt(2.0 * kPi) * mills(kSqrt2 * z) / (m * m);
}

}  // namespace stable_tail

// d(ratio) = ratio (h(lower) d lower - h(upper) d upper)
inline double sm_sf_ratio(double upper, double lower) {
    return stable_tail::sf_ratio_value(upper, lower);
}
inline Dual3 sm_sf_ratio(const Dual3& upper, const Dual3& lower) {
    const double r = stable_tail::sf_ratio_value(upper.v, lower.v);
    const double hu = std_normal_hazard(upper.v);
    const double hl = std_normal_hazard(lower.v);
    Dual3 out;
    out.v = r;
    out.d0 = r * (hl * lower.d0 - hu * upper.d0);
    out.d1 = r * (hl * lower.d1 - hu * upper.d1);
    out.d2 = r * (hl * lower.d2 - hu * upper.d2);
    return out;
}

// dQ/dz = Q (2 h(z) - sqrt(2) h(sqrt(2) z))
inline double sm_q_term(double z) { return stable_tail::q_term_value(z); }
inline Dual3 sm_q_term(const Dual3& z) {
    const double q = stable_tail::q_term_value(z.v);
    const double slope = q * (2.0 * std_normal_hazard(z.v) - kSqrt2 * std_normal_hazard(kSqrt2 * z.v));
    return chain(q, slope, z);
}

inline double sm_normal_pdf(double z) { return std_normal_pdf(z); }
inline Dual3 sm_normal_pdf(const Dual3& z) {
    const double p = std_normal_pdf(z.v);
    return chain(p, -z.v * p, z);
}

inline double sm_gamma_cdf(double k, double x) { return gamma_cdf(k, x); }
inline Dual3 sm_gamma_cdf(const Dual3& k, const Dual3& x) {
    const double g = gamma_cdf(k.v, x.v);
    const double dgdx = gamma_pdf(k.v, x.v);
    const double dgdk = gamma_cdf_dshape(k.v, x.v);
    return {g, dgdk * k.d0 + dgdx * x.d0, dgdk * k.d1 + dgdx * x.d1, dgdk * k.d2 + dgdx * x.d2};
}

// B(1/2, k + 1/2)
inline double sm_beta_half(double k) { return beta_fn(0.5, k + 0.5); }
inline Dual3 sm_beta_half(const Dual3& k) {
    const double b = beta_fn(0.5, k.v + 0.5);
    const double slope = b * (digamma(k.v + 0.5) - digamma(k.v + 1.0));
    return chain(b, slope, k);
}

// --- the closed forms ---

// GTCND: point mass `dry` at 0 plus a zero-truncated normal. The middle
// term is kept in its expanded form so dry == 1 evaluates cleanly.
// Survival-ratio form of the usual expression: with S the normal sf,
// h = pdf/S, rho = S(yt)/S(a) and Q = S(sqrt2 a)/S(a)^2,
//
//   crps = |y - y+| + loc dry^2 + (y+ - loc)(1 - 2(1-dry) rho)
//          + 2 scale (1-dry)(h(yt) rho - dry h(a))
//          - scale (1-dry)^2 Q / sqrt(pi)
//
// which stays finite and accurate however deep the truncation point
// a = -loc/scale sits in the upper tail.
template <typename T>
T crps_gtcnd_impl(const T& dry, const T& loc, const T& scale, double y) {
    const double yp = y > 0.0 ? y : 0.0;
    const T a = -loc / scale;
    const T yt = (yp - loc) / scale;
    const T wet = 1.0 - dry;
    const T rho = sm_sf_ratio(yt, a);

    T v = loc * dry * dry;
    v = v + (yp - loc) * (1.0 - 2.0 * wet * rho);
    v = v + 2.0 * scale * wet * (sm_hazard(yt) * rho - dry * sm_hazard(a));
    v = v - scale * wet * wet * sm_q_term(a) / kSqrtPi;
    return v + std::fabs(y - yp);
}

// CSGD: gamma with scale `scale`, shifted by `shift` < 0, censored at 0.
template <typename T>
T crps_csgd_impl(const T& shape, const T& scale, const T& shift, double y) {
    const double yp = y > 0.0 ? y : 0.0;
    const T c = -shift / scale;
    const T yt = (yp - shift) / scale;
    const T g_c = sm_gamma_cdf(shape, c);
    const T g1_c = sm_gamma_cdf(shape + 1.0, c);
    const T g_y = sm_gamma_cdf(shape, yt);
    const T g1_y = sm_gamma_cdf(shape + 1.0, yt);
    const T g2_2c = sm_gamma_cdf(2.0 * shape, 2.0 * c);
    const T bh = sm_beta_half(shape);

    T v = yt * (2.0 * g_y - 1.0) - c * g_c * g_c;
    v = v + shape * (1.0 + 2.0 * g_c * g1_c - g_c * g_c - 2.0 * g1_y);
    v = v - shape / kPi * bh * (1.0 - g2_2c);
    return scale * v + std::fabs(y - yp);
}

}  // namespace gridcast::detail
