#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridcast/gridnet.hpp"
#include "gridcast/quantile_forecast.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 8;
    int epochs = 50;
    std::uint64_t seed = 0;
    double clip_norm = 0.0;  // 0 disables clipping
    int n_models = 10;

    void validate() const;
};

struct TrainResult {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch
    int best_epoch = -1;             // epoch whose parameters were kept
    bool diverged = false;
    std::string divergence_note;
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-7) over shuffled mini-batches of the
// training days; the last eighth of the training days is held out for
// validation and the best-validation parameters are restored at the end.
// On a non-finite loss the last end-of-epoch parameters are restored and
// the result is flagged diverged.
TrainResult train(UNet& model, const Tensor4& inputs, const Tensor4& obs,
                  std::span<const int> train_days, const TrainConfig& cfg);

// Parameter fields for every batch entry, inference mode.
Tensor4 predict_params(UNet& model, const Tensor4& inputs);

// Level-wise average of the member quantile functions (one member per
// model), per grid point: (n, h, w, n_levels).
Tensor4 aggregate_quantiles(std::span<UNet* const> models, const Tensor4& inputs,
                            const QuantileForecast::Levels& levels);

}  // namespace gridcast
