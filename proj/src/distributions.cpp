#include "gridcast/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gridcast/special_math.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

GtcndParams::GtcndParams(double dry_mass_, double location_, double scale_)
    : dry_mass(dry_mass_), location(location_), scale(scale_) {
    if (!(dry_mass >= 0.0 && dry_mass <= 1.0))
        throw std::domain_error("GtcndParams: dry_mass must be in [0,1]");
    if (!(scale > 0.0)) throw std::domain_error("GtcndParams: scale must be positive");
    if (!std::isfinite(location)) throw std::domain_error("GtcndParams: location must be finite");
    if (!std::isfinite(scale)) throw std::domain_error("GtcndParams: scale must be finite");
}

CsgdParams::CsgdParams(double shape_, double scale_, double shift_)
    : shape(shape_), scale(scale_), shift(shift_) {
    if (!(shape > 0.0) || !std::isfinite(shape))
        throw std::domain_error("CsgdParams: shape must be positive and finite");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::domain_error("CsgdParams: scale must be positive and finite");
    if (!(shift < 0.0) || !std::isfinite(shift))
        throw std::domain_error("CsgdParams: shift must be negative and finite");
}

// ---------------------------------------------------------------- GTCND

double gtcnd_cdf(const GtcndParams& p, double z) {
    if (z < 0.0) return 0.0;
    const double lower_std = -p.location / p.scale;
    const double tail = std_normal_sf(lower_std);
    // survival form: both factors stay accurate however deep the truncation
    const double cont = 1.0 - std_normal_sf((z - p.location) / p.scale) / tail;
    const double v = p.dry_mass + (1.0 - p.dry_mass) * cont;
    return v < 1.0 ? v : 1.0;
}

double gtcnd_quantile(const GtcndParams& p, double prob) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::domain_error("gtcnd_quantile: prob must be in (0,1)");
    if (prob <= p.dry_mass) return 0.0;
    const double tail = std_normal_sf(-p.location / p.scale);
    // survival of the underlying normal at the requested level
    const double sf = tail * (1.0 - prob) / (1.0 - p.dry_mass);
    if (sf <= 0.0) return std::numeric_limits<double>::infinity();
    const double z = p.location - p.scale * std_normal_quantile(sf);
    return z > 0.0 ? z : 0.0;
}

namespace {

// Moments of the zero-truncated normal continuous part.
struct TruncatedMoments {
    double mean, var;
};

TruncatedMoments truncated_normal_moments(const GtcndParams& p) {
    const double a = -p.location / p.scale;  // standardized truncation point
    const double hazard = std_normal_hazard(a);
    const double mean = p.location + p.scale * hazard;
    const double var = p.scale * p.scale * (1.0 + a * hazard - hazard * hazard);
    return {mean, var > 0.0 ? var : 0.0};
}

}  // namespace

double gtcnd_mean(const GtcndParams& p) {
    if (p.dry_mass >= 1.0) return 0.0;
    const TruncatedMoments t = truncated_normal_moments(p);
    return (1.0 - p.dry_mass) * t.mean;
}

double gtcnd_variance(const GtcndParams& p) {
    if (p.dry_mass >= 1.0) return 0.0;
    const TruncatedMoments t = truncated_normal_moments(p);
    const double m1 = (1.0 - p.dry_mass) * t.mean;
    const double m2 = (1.0 - p.dry_mass) * (t.var + t.mean * t.mean);
    const double v = m2 - m1 * m1;
    return v > 0.0 ? v : 0.0;
}

double gtcnd_sample(const GtcndParams& p, std::mt19937_64& rng) {
    const double u = uniform_open(rng);
    if (u <= p.dry_mass) return 0.0;
    return gtcnd_quantile(p, u);
}

// ----------------------------------------------------------------- CSGD

double csgd_cdf(const CsgdParams& p, double z) {
    if (z < 0.0) return 0.0;
    return gamma_cdf(p.shape, (z - p.shift) / p.scale);
}

double csgd_dry_mass(const CsgdParams& p) {
    return gamma_cdf(p.shape, p.censor_point());
}

double csgd_quantile(const CsgdParams& p, double prob) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::domain_error("csgd_quantile: prob must be in (0,1)");
    const double z = p.shift + p.scale * gamma_quantile(p.shape, prob);
    return z > 0.0 ? z : 0.0;  // generalized inverse of the censored cdf
}

RawMoments3 csgd_moments(const CsgdParams& p) {
    const double k = p.shape, th = p.scale, de = p.shift;
    const double c = p.censor_point();
    // E[Z^i; Z > c] for a unit gamma Z rises through shifted-shape tails.
    const double t0 = 1.0 - gamma_cdf(k, c);
    const double t1 = 1.0 - gamma_cdf(k + 1.0, c);
    const double t2 = 1.0 - gamma_cdf(k + 2.0, c);
    const double t3 = 1.0 - gamma_cdf(k + 3.0, c);
    RawMoments3 m;
    m.m1 = k * th * t1 + de * t0;
    m.m2 = k * (k + 1.0) * th * th * t2 + 2.0 * de * k * th * t1 + de * de * t0;
    m.m3 = k * (k + 1.0) * (k + 2.0) * th * th * th * t3 +
           3.0 * de * k * (k + 1.0) * th * th * t2 + 3.0 * de * de * k * th * t1 +
           de * de * de * t0;
    if (m.m1 < 0.0) m.m1 = 0.0;
    if (m.m2 < 0.0) m.m2 = 0.0;
    return m;
}

double csgd_sample(const CsgdParams& p, std::mt19937_64& rng) {
    const double z = p.shift + p.scale * gamma_draw(p.shape, rng);
    return z > 0.0 ? z : 0.0;
}

// --------------------------------------------------------------- draws

double normal_draw(std::mt19937_64& rng) {
    return std_normal_quantile(uniform_open(rng));
}

namespace {

// Cheaper normal used inside the gamma rejection loop; one Box-Muller
// branch, no caching, so the draw stays a pure function of the state.
double normal_draw_bm(std::mt19937_64& rng) {
    const double u1 = uniform_open(rng);
    const double u2 = uniform_open(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace

double gamma_draw(double shape, std::mt19937_64& rng) {
    if (!(shape > 0.0)) throw std::domain_error("gamma_draw: shape must be positive");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back (Marsaglia-Tsang small-shape trick).
        const double u = uniform_open(rng);
        return gamma_draw(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal_draw_bm(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = uniform_open(rng);
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace gridcast
