#pragma once

#include <cstdint>
#include <random>

#include "gridcast/family.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

// Synthetic gridded precipitation-like data with known per-day truth
// parameters: smooth latent Gaussian fields drive the truth, observations
// are exact draws from it, and the raw ensemble is a location-shifted,
// spread-scaled distortion of it.
struct SyntheticConfig {
    int height = 32, width = 32;
    int n_variables = 1;  // ensemble variables, 4 summary channels each
    int n_constants = 1;  // constant-field predictor channels (1..7)
    int n_days = 512;
    Family family = Family::gtcnd;
    int ensemble_size = 17;
    double bias = 0.0;               // additive location distortion (mm)
    double dispersion_factor = 1.0;  // spread multiplier in (0,1]
    double length_scale = 5.0;       // latent correlation length (cells)
    double train_fraction = 0.8;
    std::uint64_t seed = 0;

    int predictor_channels() const { return 4 * n_variables + n_constants; }
    int train_days() const;
    void validate() const;
};

// Unit-variance smooth Gaussian field (periodic separable smoothing of
// white noise), (1,h,w,1).
Tensor4 smooth_gaussian_field(int h, int w, double length_scale, std::mt19937_64& rng);

// The seven constant fields, (1,h,w,7): altitude, land_sea_mask,
// dist_to_sea, terrain_pc1..terrain_pc4. Altitude and the terrain
// components are unit-variance smooth fields; the mask thresholds an
// independent smooth field at its 30th percentile; the distance field is
// a grid BFS distance to the land/sea boundary.
Tensor4 gen_constant_fields(const SyntheticConfig& cfg);

// Truth parameter fields (1,h,w,3) from two latent fields and the constant
// fields. At zero latent and zero altitude the parameters sit at the
// documented baseline: GTCND (dry 0.40, location 1.2, scale 0.7), CSGD
// (shape 1.42, scale 0.8, shift -0.32).
Tensor4 gen_truth_params(const SyntheticConfig& cfg, const Tensor4& constants,
                         const Tensor4& latent1, const Tensor4& latent2);

Tensor4 sample_obs(const Tensor4& truth_params, Family family, std::mt19937_64& rng);

// Miscalibrated members: max(0, bias + mean + dispersion_factor * (x - mean))
// per draw x from the truth distribution.
Tensor4 sample_raw_ensemble(const Tensor4& truth_params, Family family,
                            const SyntheticConfig& cfg, std::mt19937_64& rng);

struct SyntheticDataset {
    SyntheticConfig cfg;
    Tensor4 predictors;    // (n_days, h, w, d)
    Tensor4 observations;  // (n_days, h, w, 1)
    Tensor4 truth_params;  // (n_days, h, w, 3)
    Tensor4 ensemble;      // (n_days, h, w, m)
    Tensor4 constants;     // (1, h, w, 7)
};

// Generates the full dataset, day-parallel with day-derived seed streams,
// so the result is identical for any worker count.
SyntheticDataset build_dataset(const SyntheticConfig& cfg);

}  // namespace gridcast
