#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "gridcast/distributions.hpp"
#include "gridcast/quantile_forecast.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

// 18-class rank histogram: quantile-forecast ranks (1..108) are gathered
// six at a time; 17-member ensemble ranks (1..18) map one class each.
struct RankHistogram {
    static constexpr int kClasses = 18;
    std::array<std::uint64_t, kClasses> counts{};
    std::uint64_t n_total = 0;

    void merge(const RankHistogram& other);
};

RankHistogram rank_histogram_from_quantile_ranks(std::span<const int> ranks);  // 1..108
RankHistogram rank_histogram_from_member_ranks(std::span<const int> ranks);    // 1..18

// Rank of an observation among the 107 forecast quantile values, ties
// broken uniformly at random (point masses at zero make exact ties common).
int observation_rank(const QuantileForecast& q, double y, std::mt19937_64& rng);

// Rank among raw ensemble members (1..m+1), same tie policy.
int member_rank(std::span<const double> members, double y, std::mt19937_64& rng);

// Flatness test: the standardized deviation vector is projected onto
// orthonormal bias / dispersion / wave contrasts; each squared projection
// is chi-square(1) under flatness and the three p-values are combined by
// Bonferroni.
struct JpzResult {
    double bias_stat = 0.0, dispersion_stat = 0.0, wave_stat = 0.0;
    double bias_p = 1.0, dispersion_p = 1.0, wave_p = 1.0;
    bool reject_flatness = false;
};

JpzResult jpz_test(const RankHistogram& h, double alpha);

double exceedance_prob(const GtcndParams& p, double t);
double exceedance_prob(const CsgdParams& p, double t);
double exceedance_prob(const QuantileForecast& q, double t);

struct RocCurve {
    std::vector<double> false_alarm_rate;  // from 0 to 1
    std::vector<double> hit_rate;          // from 0 to 1
    double auc = 0.0;
};

// Threshold sweep over the distinct forecast probabilities; trapezoidal
// area. Throws if either class is empty.
RocCurve roc_curve(std::span<const double> probs, std::span<const std::uint8_t> events);

// Grid points kept when averaging scores (true = included).
struct CensorMask {
    int h = 0, w = 0;
    std::vector<std::uint8_t> keep;

    bool at(int y, int x) const { return keep[static_cast<std::size_t>(y) * w + x] != 0; }
    std::size_t count() const;
};

// Interior of a land mask: land cells at least `border` cells away from the
// grid edge.
CensorMask make_censor_mask(const Tensor4& land_mask, int border);

struct CrpssMap {
    Tensor4 skill;                      // per-point skill, NaN where undefined
    std::optional<double> masked_mean;  // skill of masked-mean scores
};

// Per-point skill of `scores` against `scores_ref` (both 1 x h x w x 1 mean
// score maps) plus the ratio-of-masked-means aggregate.
CrpssMap crpss_map(const Tensor4& scores, const Tensor4& scores_ref, const CensorMask& mask);

}  // namespace gridcast
