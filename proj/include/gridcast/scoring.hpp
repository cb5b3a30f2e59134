#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gridcast/distributions.hpp"
#include "gridcast/quantile_forecast.hpp"

namespace gridcast {

// A forecast reduced to callables, for the numeric CRPS routes. The
// quantile function is only used to bracket the integration.
struct NumericForecast {
    std::function<double(double)> cdf;
    std::function<double(double)> quantile;
};

NumericForecast numeric_forecast(const GtcndParams& p);
NumericForecast numeric_forecast(const CsgdParams& p);

// CRPS as the threshold (Brier) integral of (F(z) - 1{y<=z})^2, by adaptive
// quadrature split at the integrand's discontinuities. This is the oracle
// the closed forms are tested against. Throws if the tolerance cannot be met.
double crps_numeric(const NumericForecast& f, double y, double tol);

// CRPS as the pinball integral over quantile levels.
double crps_pinball_numeric(const NumericForecast& f, double y, double tol);

// CRPS as E|X-y| - E|X-X'|/2, both expectations via cdf integrals.
double crps_kernel_numeric(const NumericForecast& f, double y, double tol);

// Closed forms (see the appendix-style formulas in the implementation).
double crps_gtcnd(const GtcndParams& p, double y);
double crps_csgd(const CsgdParams& p, double y);

// Ensemble estimators. `fair` is unbiased for iid members (divisor m(m-1));
// `nrg` is the plain kernel estimate (divisor m^2, always >= fair).
double crps_ensemble_fair(std::span<const double> members, double y);
double crps_ensemble_nrg(std::span<const double> members, double y);

// 2 (1{y<=q} - alpha)(q - y); the integrand of the quantile representation.
double pinball(double q, double y, double alpha);

// Mean pinball over the forecast's level grid.
double crps_from_quantiles(const QuantileForecast& q, double y);

// (ref - s) / ref; empty when the reference score is zero.
std::optional<double> skill_score(double mean_score, double mean_score_ref);

// (F(t) - 1{y<=t})^2
double brier_exceedance(double cdf_at_t, double y, double t);

struct ScoreSummary {
    double mean_score = 0.0;
    std::size_t n = 0;
    std::vector<double> per_point;  // empty unless requested
};

ScoreSummary summarize_scores(std::span<const double> per_point, bool keep_per_point);

}  // namespace gridcast
