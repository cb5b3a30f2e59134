#include "gridcast/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gridcast/distributions.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::domain_error("TrainConfig: learning_rate must be >= 0");
    if (batch_size < 1) throw std::domain_error("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw std::domain_error("TrainConfig: epochs must be >= 1");
    if (clip_norm < 0.0) throw std::domain_error("TrainConfig: clip_norm must be >= 0");
    if (n_models < 1) throw std::domain_error("TrainConfig: n_models must be >= 1");
}

namespace {

struct Adam {
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
    std::vector<double> m, v;
    long t = 0;

    explicit Adam(std::size_t n, double lr_) : lr(lr_), m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& values, const std::vector<double>& grads) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
            values[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

double batch_loss_backward(UNet& model, const Tensor4& inputs, const Tensor4& obs,
                           std::span<const int> days) {
    const Tensor4 bin = gather_batch(inputs, days);
    const Tensor4 bobs = gather_batch(obs, days);
    return model.loss_and_gradients(bin, bobs, {}, RunMode::train, true);
}

double eval_loss(UNet& model, const Tensor4& inputs, const Tensor4& obs,
                 std::span<const int> days, int chunk) {
    std::vector<double> losses;
    std::vector<double> weights;
    for (std::size_t start = 0; start < days.size(); start += chunk) {
        const std::size_t len = std::min<std::size_t>(chunk, days.size() - start);
        const Tensor4 bin = gather_batch(inputs, days.subspan(start, len));
        const Tensor4 bobs = gather_batch(obs, days.subspan(start, len));
        losses.push_back(model.loss_only(bin, bobs, {}, RunMode::infer) *
                         static_cast<double>(len));
        weights.push_back(static_cast<double>(len));
    }
    return pairwise_sum(losses) / pairwise_sum(weights);
}

void clip_to_norm(std::vector<double>& grads, double max_norm) {
    double s = 0.0;
    for (double g : grads) s += g * g;
    const double norm = std::sqrt(s);
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (double& g : grads) g *= f;
    }
}

}  // namespace

TrainResult train(UNet& model, const Tensor4& inputs, const Tensor4& obs,
                  std::span<const int> train_days, const TrainConfig& cfg) {
    cfg.validate();
    if (train_days.empty()) throw std::domain_error("train: empty training set");
    if (inputs.n != obs.n) throw std::domain_error("train: inputs/obs day count mismatch");

    // validation holdout: the trailing eighth (at least one day) of the
    // training days, fixed and disjoint from the shuffled optimization set
    const std::size_t n_val = std::max<std::size_t>(1, train_days.size() / 8);
    std::vector<int> fit_days(train_days.begin(), train_days.end() - n_val);
    std::vector<int> val_days(train_days.end() - n_val, train_days.end());
    if (fit_days.empty()) fit_days = val_days;

    Adam opt(model.params().values.size(), cfg.learning_rate);
    std::mt19937_64 shuffle_rng = make_rng(cfg.seed, 0x73687566);

    TrainResult res;
    std::vector<double> best_params = model.params().values;
    std::vector<double> best_state = model.params().state;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> last_finite_params = best_params;
    std::vector<double> last_finite_state = best_state;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the pinned index draw
        for (std::size_t i = fit_days.size(); i > 1; --i) {
            const std::size_t j = uniform_index(shuffle_rng, i);
            std::swap(fit_days[i - 1], fit_days[j]);
        }
        std::vector<double> losses, weights;
        bool finite = true;
        for (std::size_t start = 0; start < fit_days.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len =
                std::min<std::size_t>(cfg.batch_size, fit_days.size() - start);
            const double loss = batch_loss_backward(
                model, inputs, obs, std::span<const int>(fit_days).subspan(start, len));
            if (!std::isfinite(loss)) {
                finite = false;
                break;
            }
            if (cfg.clip_norm > 0.0) clip_to_norm(model.params().grads, cfg.clip_norm);
            opt.step(model.params().values, model.params().grads);
            losses.push_back(loss * static_cast<double>(len));
            weights.push_back(static_cast<double>(len));
        }
        if (!finite) {
            model.params().values = last_finite_params;
            model.params().state = last_finite_state;
            res.diverged = true;
            res.divergence_note = "non-finite loss at epoch " + std::to_string(epoch) +
                                  "; parameters restored from the previous epoch";
            return res;
        }
        res.train_loss.push_back(pairwise_sum(losses) / pairwise_sum(weights));
        const double vl = eval_loss(model, inputs, obs, val_days, cfg.batch_size);
        res.val_loss.push_back(vl);
        if (!std::isfinite(vl)) {
            model.params().values = last_finite_params;
            model.params().state = last_finite_state;
            res.diverged = true;
            res.divergence_note = "non-finite validation loss at epoch " + std::to_string(epoch);
            return res;
        }
        last_finite_params = model.params().values;
        last_finite_state = model.params().state;
        if (vl < best_val) {
            best_val = vl;
            best_params = model.params().values;
            best_state = model.params().state;
            res.best_epoch = epoch;
        }
    }
    model.params().values = best_params;
    model.params().state = best_state;
    return res;
}

Tensor4 predict_params(UNet& model, const Tensor4& inputs) {
    return model.forward(inputs, RunMode::infer, false);
}

Tensor4 aggregate_quantiles(std::span<UNet* const> models, const Tensor4& inputs,
                            const QuantileForecast::Levels& levels) {
    if (models.empty()) throw std::domain_error("aggregate_quantiles: no models");
    const auto& lv = *levels;
    Tensor4 out(inputs.n, inputs.h, inputs.w, static_cast<int>(lv.size()));
    for (UNet* model : models) {
        const Tensor4 params = predict_params(*model, inputs);
        const Family family = model->config().family;
        for (int i = 0; i < params.n; ++i)
            for (int y = 0; y < params.h; ++y)
                for (int x = 0; x < params.w; ++x) {
                    const auto pp = params.point(i, y, x);
                    auto dst = out.point(i, y, x);
                    if (family == Family::gtcnd) {
                        const GtcndParams p(pp[0], pp[1], pp[2]);
                        for (std::size_t l = 0; l < lv.size(); ++l)
                            dst[l] += gtcnd_quantile(p, lv[l]);
                    } else {
                        const CsgdParams p(pp[0], pp[1], pp[2]);
                        for (std::size_t l = 0; l < lv.size(); ++l)
                            dst[l] += csgd_quantile(p, lv[l]);
                    }
                }
    }
    const double inv = 1.0 / static_cast<double>(models.size());
    for (double& v : out.data) v *= inv;
    return out;
}

}  // namespace gridcast
