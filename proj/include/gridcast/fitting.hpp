#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gridcast/distributions.hpp"
#include "gridcast/family.hpp"
#include "gridcast/quantile_forecast.hpp"

namespace gridcast {

// Raw sample moments of a quantile forecast, treating the values at the
// level grid as an equiprobable sample.
struct EmpiricalMoments {
    double dry_frac = 0.0;  // fraction of exactly-zero values
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
};

EmpiricalMoments empirical_moments(const QuantileForecast& q);

// Fit-failure is a per-point signal, not an error: callers fall back to the
// unmodified forecast.
template <typename Params>
struct FitResult {
    std::optional<Params> params;
    std::string reason;    // empty on success
    int iterations = 0;
    double residual = 0.0;  // max relative moment residual at the solution

    bool ok() const { return params.has_value(); }
};

// Moments-method fit of the GTCND: dry mass taken as-is, (location, scale)
// recovered from the mixture mean and second raw moment. When dry_frac is 1
// the forecast is the dry point mass; the continuous part is parked at the
// sentinel (location 0, scale 1).
FitResult<GtcndParams> fit_gtcnd(double dry_frac, double m1, double m2);

// Moments-method fit of the CSGD from the first three raw moments, by a
// damped Newton iteration in log-parameters.
FitResult<CsgdParams> fit_csgd(double m1, double m2, double m3);

struct TailConfig {
    Family family = Family::gtcnd;
    double activation_threshold = 5.0;  // mm
    double activation_prob = 0.05;
    // Indices into the level grid whose values may be raised; defaults to
    // the top 10 levels when empty.
    std::vector<std::size_t> update_levels;
};

std::vector<std::size_t> top_levels(std::size_t n_levels, std::size_t count);

struct TailExtendResult {
    QuantileForecast forecast;
    bool activated = false;
    bool fit_failed = false;
};

// Replaces the configured upper quantiles by the moments-fitted parametric
// quantiles where the fit is heavier-tailed than the input. Gated on the
// forecast probability of exceeding the activation threshold; on fit
// failure the input is returned unchanged with the flag set.
TailExtendResult tail_extend(const QuantileForecast& q, const TailConfig& cfg);

}  // namespace gridcast
