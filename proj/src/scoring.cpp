#include "gridcast/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcast/numeric.hpp"
#include "gridcast/util.hpp"
#include "crps_detail.hpp"

namespace gridcast {

NumericForecast numeric_forecast(const GtcndParams& p) {
    return {[p](double z) { return gtcnd_cdf(p, z); },
            [p](double prob) { return gtcnd_quantile(p, prob); }};
}

NumericForecast numeric_forecast(const CsgdParams& p) {
    return {[p](double z) { return csgd_cdf(p, z); },
            [p](double prob) { return csgd_quantile(p, prob); }};
}

namespace {

double upper_bracket(const NumericForecast& f, double y, double tail_prob) {
    return std::max(y, f.quantile(1.0 - tail_prob)) + 1.0;
}

}  // namespace

double crps_numeric(const NumericForecast& f, double y, double tol) {
    if (!(tol > 0.0)) throw std::domain_error("crps_numeric: tol must be positive");
    // Support starts at 0; the region z < 0 contributes exactly max(0,-y).
    double value = y < 0.0 ? -y : 0.0;
    const double hi = upper_bracket(f, y, 1e-9);
    auto integrand = [&](double z) {
        const double step = (y <= z) ? 1.0 : 0.0;
        const double d = f.cdf(z) - step;
        return d * d;
    };
    const double yp = y > 0.0 ? y : 0.0;
    if (yp > 0.0) {
        value += integrate_adaptive(integrand, 0.0, yp, 0.5 * tol).value;
        value += integrate_adaptive(integrand, yp, hi, 0.5 * tol).value;
    } else {
        value += integrate_adaptive(integrand, 0.0, hi, tol).value;
    }
    return value;
}

double crps_pinball_numeric(const NumericForecast& f, double y, double tol) {
    if (!(tol > 0.0)) throw std::domain_error("crps_pinball_numeric: tol must be positive");
    auto integrand = [&](double a) {
        const double q = f.quantile(a);
        const double ind = (y <= q) ? 1.0 : 0.0;
        return 2.0 * (ind - a) * (q - y);
    };
    const double eps = 1e-12;
    // Split at the dry mass (quantile kink) and at the level where the
    // indicator flips.
    const double mass0 = f.cdf(0.0);
    const double flip = y <= 0.0 ? 0.0 : f.cdf(y);
    std::vector<double> cuts = {eps, 1.0 - eps};
    if (mass0 > eps && mass0 < 1.0 - eps) cuts.push_back(mass0);
    if (flip > eps && flip < 1.0 - eps) cuts.push_back(flip);
    std::sort(cuts.begin(), cuts.end());
    double value = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] < eps) continue;
        value += integrate_adaptive(integrand, cuts[i], cuts[i + 1],
                                    tol / static_cast<double>(cuts.size()))
                     .value;
    }
    return value;
}

double crps_kernel_numeric(const NumericForecast& f, double y, double tol) {
    if (!(tol > 0.0)) throw std::domain_error("crps_kernel_numeric: tol must be positive");
    const double hi = upper_bracket(f, y, 1e-12);
    auto cdf = [&](double z) { return f.cdf(z); };
    auto survival = [&](double z) { return 1.0 - f.cdf(z); };
    auto product = [&](double z) {
        const double c = f.cdf(z);
        return c * (1.0 - c);
    };
    // E|X - y| over the nonnegative support; below 0 the forecast has no mass.
    double e_abs;
    const double piece_tol = tol / 4.0;
    if (y <= 0.0) {
        e_abs = integrate_adaptive(survival, 0.0, hi, piece_tol).value - y;
    } else {
        e_abs = integrate_adaptive(cdf, 0.0, y, piece_tol).value +
                integrate_adaptive(survival, y, hi, piece_tol).value;
    }
    const double e_pair = 2.0 * integrate_adaptive(product, 0.0, hi, piece_tol).value;
    return e_abs - 0.5 * e_pair;
}

double crps_gtcnd(const GtcndParams& p, double y) {
    if (!std::isfinite(y)) throw std::domain_error("crps_gtcnd: y must be finite");
    return detail::crps_gtcnd_impl<double>(p.dry_mass, p.location, p.scale, y);
}

double crps_csgd(const CsgdParams& p, double y) {
    if (!std::isfinite(y)) throw std::domain_error("crps_csgd: y must be finite");
    return detail::crps_csgd_impl<double>(p.shape, p.scale, p.shift, y);
}

namespace {

// Sum over ordered pairs of |x_i - x_j| after sorting: each sorted element
// x_(j) enters with weight (2j - (m-1)).
double pairwise_abs_sum(std::vector<double>& sorted) {
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        s += sorted[j] * (2.0 * static_cast<double>(j) - static_cast<double>(m - 1));
    return 2.0 * s;
}

double mean_abs_error(std::span<const double> members, double y) {
    double s = 0.0;
    for (double x : members) s += std::fabs(x - y);
    return s / static_cast<double>(members.size());
}

}  // namespace

double crps_ensemble_fair(std::span<const double> members, double y) {
    const std::size_t m = members.size();
    if (m < 2) throw std::domain_error("crps_ensemble_fair: needs at least 2 members");
    std::vector<double> sorted(members.begin(), members.end());
    const double pair_sum = pairwise_abs_sum(sorted);
    return mean_abs_error(members, y) -
           pair_sum / (2.0 * static_cast<double>(m) * static_cast<double>(m - 1));
}

double crps_ensemble_nrg(std::span<const double> members, double y) {
    const std::size_t m = members.size();
    if (m < 1) throw std::domain_error("crps_ensemble_nrg: empty ensemble");
    std::vector<double> sorted(members.begin(), members.end());
    const double pair_sum = pairwise_abs_sum(sorted);
    return mean_abs_error(members, y) -
           pair_sum / (2.0 * static_cast<double>(m) * static_cast<double>(m));
}

double pinball(double q, double y, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("pinball: alpha must be in (0,1)");
    const double ind = (y <= q) ? 1.0 : 0.0;
    return 2.0 * (ind - alpha) * (q - y);
}

double crps_from_quantiles(const QuantileForecast& q, double y) {
    const auto& levels = q.levels();
    const auto& values = q.values();
    std::vector<double> terms(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) terms[i] = pinball(values[i], y, levels[i]);
    return mean_of(terms);
}

std::optional<double> skill_score(double mean_score, double mean_score_ref) {
    if (mean_score_ref == 0.0) return std::nullopt;
    return (mean_score_ref - mean_score) / mean_score_ref;
}

double brier_exceedance(double cdf_at_t, double y, double t) {
    if (!(cdf_at_t >= 0.0 && cdf_at_t <= 1.0))
        throw std::domain_error("brier_exceedance: cdf value outside [0,1]");
    const double ind = (y <= t) ? 1.0 : 0.0;
    const double d = cdf_at_t - ind;
    return d * d;
}

ScoreSummary summarize_scores(std::span<const double> per_point, bool keep_per_point) {
    if (per_point.empty()) throw std::domain_error("summarize_scores: empty input");
    ScoreSummary s;
    s.n = per_point.size();
    s.mean_score = mean_of(per_point);
    if (keep_per_point) s.per_point.assign(per_point.begin(), per_point.end());
    return s;
}

}  // namespace gridcast
