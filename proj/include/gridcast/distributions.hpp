#pragma once

#include <random>

// The two censored parametric families used for precipitation marginals:
// a zero-truncated normal with an extra point mass at zero (GTCND), and a
// shifted gamma censored at zero (CSGD). Parameters are validated at
// construction; operations are pure.

namespace gridcast {

struct GtcndParams {
    double dry_mass;  // probability of an exactly-dry outcome, in [0,1]
    double location;  // location of the underlying normal (mm)
    double scale;     // scale of the underlying normal (mm), > 0

    GtcndParams(double dry_mass_, double location_, double scale_);
};

struct CsgdParams {
    double shape;  // gamma shape, > 0
    double scale;  // gamma scale (mm), > 0
    double shift;  // left shift (mm), < 0; censoring point mass is G_shape(-shift/scale)

    CsgdParams(double shape_, double scale_, double shift_);

    // -shift/scale, the censoring threshold on the unit-scale gamma axis.
    double censor_point() const { return -shift / scale; }
};

double gtcnd_cdf(const GtcndParams& p, double z);
double gtcnd_quantile(const GtcndParams& p, double prob);
double gtcnd_mean(const GtcndParams& p);      // full mixture (point mass + continuous part)
double gtcnd_variance(const GtcndParams& p);  // full mixture
double gtcnd_sample(const GtcndParams& p, std::mt19937_64& rng);

double csgd_cdf(const CsgdParams& p, double z);
double csgd_quantile(const CsgdParams& p, double prob);
double csgd_dry_mass(const CsgdParams& p);  // point mass at zero

struct RawMoments3 {
    double m1, m2, m3;
};
RawMoments3 csgd_moments(const CsgdParams& p);
double csgd_sample(const CsgdParams& p, std::mt19937_64& rng);

// Standard normal / unit-scale gamma draws with pinned streams (inverse
// transform and Marsaglia-Tsang). Shared by samplers and the data generator.
double normal_draw(std::mt19937_64& rng);
double gamma_draw(double shape, std::mt19937_64& rng);

}  // namespace gridcast
