#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridcast/family.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

enum class RunMode { train, infer };

// Flat learnable-parameter store with named views, plus non-learnable state
// (batch-norm running statistics). Gradients are laid out parallel to the
// values so an optimizer can walk them as plain vectors.
struct ParamStore {
    struct Entry {
        std::string name;
        std::size_t offset = 0, size = 0;
    };
    std::vector<double> values, grads;
    std::vector<double> state;
    std::vector<Entry> entries, state_entries;

    std::size_t add(const std::string& name, std::size_t size);
    std::size_t add_state(const std::string& name, std::size_t size);
    void zero_grads();
};

struct UNetConfig {
    int depth = 2;  // fixed at two down/up levels
    int base_channels = 8;
    Family family = Family::gtcnd;
    bool use_separable = true;
    std::uint64_t seed = 0;
    int in_channels = 1;

    void validate() const;
};

// --- standalone kernels (each checked against loop oracles in tests) ---

Tensor4 separable_conv2d(const Tensor4& x, std::span<const double> depthwise_3x3,
                         std::span<const double> pointwise, int out_channels);
Tensor4 conv2d_3x3(const Tensor4& x, std::span<const double> kernel, int out_channels);
Tensor4 relu(const Tensor4& x);
Tensor4 max_pool2d(const Tensor4& x);
Tensor4 bilinear_upsample2(const Tensor4& x);

// Maps raw 3-channel network output to valid distribution parameters:
// GTCND (logistic dry mass, free location, softplus-floored scale) or CSGD
// (softplus-floored shape/scale, negative softplus-floored shift).
Tensor4 link_params(const Tensor4& raw, Family family);

// Mean closed-form CRPS over unmasked grid points; `mask` (h*w, nonzero =
// keep) may be empty. Gradient w.r.t. the parameter fields is written to
// `grad_params` when given.
double crps_loss(const Tensor4& param_fields, const Tensor4& obs,
                 std::span<const std::uint8_t> mask, Family family,
                 Tensor4* grad_params = nullptr);

// Two-level distributional regression U-Net: two conv->BN->ReLU->pool
// blocks, a bottleneck, two upsample->concat->conv->BN->ReLU blocks, a
// final 1x1 conv, then the parameter link. Spatial dims are zero-padded to
// multiples of four and cropped back.
class UNet {
  public:
    explicit UNet(const UNetConfig& cfg);

    const UNetConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    // Linked parameter fields (n,h,w,3). Train mode normalizes by batch
    // statistics; running statistics move only when update_running is set.
    Tensor4 forward(const Tensor4& input, RunMode mode, bool update_running = false);

    // Forward + CRPS loss + full backward; gradients land in params().grads.
    double loss_and_gradients(const Tensor4& input, const Tensor4& obs,
                              std::span<const std::uint8_t> mask, RunMode mode = RunMode::train,
                              bool update_running = false);

    // Loss without touching gradients or running stats.
    double loss_only(const Tensor4& input, const Tensor4& obs,
                     std::span<const std::uint8_t> mask, RunMode mode = RunMode::train);

    std::size_t parameter_count() const { return store_.values.size(); }

  private:
    struct Impl;
    UNetConfig cfg_;
    ParamStore store_;
    std::shared_ptr<Impl> impl_;  // layer graph + forward caches

    friend void write_checkpoint(const std::string& path, const UNet& model);
};

// Self-describing checkpoint: text header (config, layer table), then
// little-endian 64-bit payload of values followed by state. Round-trips
// bit-exactly.
void write_checkpoint(const std::string& path, const UNet& model);
UNet read_checkpoint(const std::string& path);

}  // namespace gridcast
