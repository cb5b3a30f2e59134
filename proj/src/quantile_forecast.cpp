#include "gridcast/quantile_forecast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridcast {

QuantileForecast::QuantileForecast(Levels levels, std::vector<double> values)
    : levels_(std::move(levels)), values_(std::move(values)) {
    if (!levels_ || levels_->empty())
        throw std::domain_error("QuantileForecast: empty level grid");
    if (values_.size() != levels_->size())
        throw std::domain_error("QuantileForecast: values/levels size mismatch");
    double prev = -1.0;
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0)
            throw std::domain_error("QuantileForecast: values must be finite and >= 0");
        if (v < prev) throw std::domain_error("QuantileForecast: values must be nondecreasing");
        prev = v;
    }
}

QuantileForecast::Levels QuantileForecast::make_levels(std::vector<double> levels) {
    if (levels.empty()) throw std::domain_error("QuantileForecast: empty level grid");
    double prev = 0.0;
    for (double l : levels) {
        if (!(l > 0.0 && l < 1.0))
            throw std::domain_error("QuantileForecast: levels must lie in (0,1)");
        if (!(l > prev))
            throw std::domain_error("QuantileForecast: levels must be strictly increasing");
        prev = l;
    }
    return std::make_shared<const std::vector<double>>(std::move(levels));
}

const QuantileForecast::Levels& QuantileForecast::default_levels() {
    static const Levels levels = [] {
        std::vector<double> l(107);
        for (int i = 1; i <= 107; ++i) l[i - 1] = i / 108.0;
        return make_levels(std::move(l));
    }();
    return levels;
}

double interpolated_cdf(const QuantileForecast& q, double t) {
    const auto& v = q.values();
    const auto& l = q.levels();
    if (t < v.front()) return 0.0;
    if (t >= v.back()) return l.back();
    // upper_bound gives the first value strictly above t; ties collapse to
    // the highest level of the run.
    const auto it = std::upper_bound(v.begin(), v.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - v.begin());  // v[j] > t, v[j-1] <= t
    const double v0 = v[j - 1], v1 = v[j];
    const double l0 = l[j - 1], l1 = l[j];
    if (v0 == t) return l0;
    return l0 + (l1 - l0) * (t - v0) / (v1 - v0);
}

double exceedance_from_quantiles(const QuantileForecast& q, double t) {
    return 1.0 - interpolated_cdf(q, t);
}

}  // namespace gridcast
