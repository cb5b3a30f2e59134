#pragma once

#include <memory>
#include <vector>

namespace gridcast {

// A predictive distribution represented by its values at a fixed grid of
// quantile levels (107 by default, levels i/108). Levels are shared between
// forecasts; values are per forecast and must be nondecreasing and >= 0.
class QuantileForecast {
  public:
    using Levels = std::shared_ptr<const std::vector<double>>;

    QuantileForecast(Levels levels, std::vector<double> values);

    // The default level grid: i/108 for i = 1..107.
    static const Levels& default_levels();
    static Levels make_levels(std::vector<double> levels);  // validates

    const std::vector<double>& levels() const { return *levels_; }
    const Levels& levels_handle() const { return levels_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

  private:
    Levels levels_;
    std::vector<double> values_;
};

// Cdf induced by linear interpolation of the quantile function: 0 below the
// lowest quantile value, the top level at and above the highest, with flat
// (tied) value runs mapping to the run's upper level.
double interpolated_cdf(const QuantileForecast& q, double t);

// 1 - interpolated_cdf.
double exceedance_from_quantiles(const QuantileForecast& q, double t);

}  // namespace gridcast
