#include "gridcast/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "gridcast/distributions.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

int SyntheticConfig::train_days() const {
    const int t = static_cast<int>(std::floor(train_fraction * n_days));
    return std::clamp(t, 1, n_days - 1);
}

void SyntheticConfig::validate() const {
    if (height < 8 || width < 8) throw std::domain_error("SyntheticConfig: dims must be >= 8");
    if (n_variables < 1) throw std::domain_error("SyntheticConfig: n_variables must be >= 1");
    if (n_constants < 1 || n_constants > 7)
        throw std::domain_error("SyntheticConfig: n_constants must be in 1..7");
    if (n_days < 2) throw std::domain_error("SyntheticConfig: n_days must be >= 2");
    if (ensemble_size < 2) throw std::domain_error("SyntheticConfig: ensemble_size must be >= 2");
    if (!(dispersion_factor > 0.0 && dispersion_factor <= 1.0))
        throw std::domain_error("SyntheticConfig: dispersion_factor must be in (0,1]");
    if (!(length_scale > 0.0)) throw std::domain_error("SyntheticConfig: length_scale must be > 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::domain_error("SyntheticConfig: train_fraction must be in (0,1)");
    if (!std::isfinite(bias)) throw std::domain_error("SyntheticConfig: bias must be finite");
}

Tensor4 smooth_gaussian_field(int h, int w, double length_scale, std::mt19937_64& rng) {
    Tensor4 noise(1, h, w, 1);
    for (auto& v : noise.data) v = normal_draw(rng);

    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * length_scale)));
    std::vector<double> kernel(2 * radius + 1);
    double norm2 = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (length_scale * length_scale));
        norm2 += kernel[i + radius] * kernel[i + radius];
    }
    // unit output variance: white noise smoothed separably picks up the
    // squared kernel norm per axis
    const double scale = 1.0 / std::sqrt(norm2);
    for (double& k : kernel) k *= scale;

    // periodic convolution along rows then columns
    Tensor4 tmp(1, h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = ((x + i) % w + w) % w;
                s += kernel[i + radius] * noise.at(0, y, xx, 0);
            }
            tmp.at(0, y, x, 0) = s;
        }
    Tensor4 out(1, h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = ((y + i) % h + h) % h;
                s += kernel[i + radius] * tmp.at(0, yy, x, 0);
            }
            out.at(0, y, x, 0) = s;
        }
    return out;
}

namespace {

double nth_value(std::vector<double> v, std::size_t k) {
    std::nth_element(v.begin(), v.begin() + k, v.end());
    return v[k];
}

// BFS distance (4-neighbour) to the nearest cell with a neighbour of the
// opposite land/sea type; boundary cells sit at exactly zero.
Tensor4 boundary_distance(const Tensor4& mask) {
    const int h = mask.h, w = mask.w;
    Tensor4 dist(1, h, w, 1);
    const double unreached = static_cast<double>(h + w);
    for (auto& v : dist.data) v = unreached;
    std::deque<std::pair<int, int>> queue;
    auto land = [&](int y, int x) { return mask.at(0, y, x, 0) > 0.5; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool boundary = false;
            if (y > 0 && land(y, x) != land(y - 1, x)) boundary = true;
            if (y + 1 < h && land(y, x) != land(y + 1, x)) boundary = true;
            if (x > 0 && land(y, x) != land(y, x - 1)) boundary = true;
            if (x + 1 < w && land(y, x) != land(y, x + 1)) boundary = true;
            if (boundary) {
                dist.at(0, y, x, 0) = 0.0;
                queue.emplace_back(y, x);
            }
        }
    while (!queue.empty()) {
        const auto [y, x] = queue.front();
        queue.pop_front();
        const double d = dist.at(0, y, x, 0);
        const int ny[4] = {y - 1, y + 1, y, y};
        const int nx[4] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
            if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
            if (dist.at(0, ny[k], nx[k], 0) > d + 1.0) {
                dist.at(0, ny[k], nx[k], 0) = d + 1.0;
                queue.emplace_back(ny[k], nx[k]);
            }
        }
    }
    return dist;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor4 gen_constant_fields(const SyntheticConfig& cfg) {
    cfg.validate();
    Tensor4 out(1, cfg.height, cfg.width, 7);
    out.channel_names = {"altitude", "land_sea_mask", "dist_to_sea", "terrain_pc1",
                         "terrain_pc2", "terrain_pc3", "terrain_pc4"};
    std::mt19937_64 rng = make_rng(cfg.seed, 0x636f6e73);

    const Tensor4 altitude = smooth_gaussian_field(cfg.height, cfg.width, cfg.length_scale, rng);
    const Tensor4 sea_field = smooth_gaussian_field(cfg.height, cfg.width, cfg.length_scale, rng);
    const double sea_threshold =
        nth_value(sea_field.data, sea_field.data.size() * 3 / 10);  // ~30% sea

    Tensor4 mask(1, cfg.height, cfg.width, 1);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x)
            mask.at(0, y, x, 0) = sea_field.at(0, y, x, 0) > sea_threshold ? 1.0 : 0.0;
    const Tensor4 dist = boundary_distance(mask);

    std::vector<Tensor4> terrain;
    for (int i = 0; i < 4; ++i)
        terrain.push_back(smooth_gaussian_field(cfg.height, cfg.width, cfg.length_scale, rng));

    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            out.at(0, y, x, 0) = altitude.at(0, y, x, 0);
            out.at(0, y, x, 1) = mask.at(0, y, x, 0);
            out.at(0, y, x, 2) = dist.at(0, y, x, 0);
            for (int i = 0; i < 4; ++i) out.at(0, y, x, 3 + i) = terrain[i].at(0, y, x, 0);
        }
    return out;
}

Tensor4 gen_truth_params(const SyntheticConfig& cfg, const Tensor4& constants,
                         const Tensor4& latent1, const Tensor4& latent2) {
    if (constants.h != cfg.height || constants.w != cfg.width || constants.c < 1)
        throw std::domain_error("gen_truth_params: constants shape mismatch");
    if (latent1.h != cfg.height || latent1.w != cfg.width || latent2.h != cfg.height ||
        latent2.w != cfg.width)
        throw std::domain_error("gen_truth_params: latent shape mismatch");
    Tensor4 out(1, cfg.height, cfg.width, 3);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const double alt = constants.at(0, y, x, 0);
            const double z1 = latent1.at(0, y, x, 0);
            const double z2 = latent2.at(0, y, x, 0);
            if (cfg.family == Family::gtcnd) {
                out.at(0, y, x, 0) = sigmoid(-0.4 - 0.8 * z1 + 0.3 * alt);
                out.at(0, y, x, 1) = 1.2 + 0.9 * z1 + 0.4 * alt;
                out.at(0, y, x, 2) = 0.7 * std::exp(0.25 * z2);
            } else {
                const double scale = 0.8 * std::exp(0.3 * z2);
                out.at(0, y, x, 0) = std::exp(0.35 + 0.3 * z1 + 0.15 * alt);
                out.at(0, y, x, 1) = scale;
                out.at(0, y, x, 2) = -scale * (0.3 + 0.2 * sigmoid(z1));
            }
        }
    return out;
}

namespace {

double truth_draw(std::span<const double> p, Family family, std::mt19937_64& rng) {
    if (family == Family::gtcnd) return gtcnd_sample(GtcndParams(p[0], p[1], p[2]), rng);
    return csgd_sample(CsgdParams(p[0], p[1], p[2]), rng);
}

double truth_mean(std::span<const double> p, Family family) {
    if (family == Family::gtcnd) return gtcnd_mean(GtcndParams(p[0], p[1], p[2]));
    return csgd_moments(CsgdParams(p[0], p[1], p[2])).m1;
}

}  // namespace

Tensor4 sample_obs(const Tensor4& truth_params, Family family, std::mt19937_64& rng) {
    Tensor4 out(truth_params.n, truth_params.h, truth_params.w, 1);
    for (int i = 0; i < truth_params.n; ++i)
        for (int y = 0; y < truth_params.h; ++y)
            for (int x = 0; x < truth_params.w; ++x)
                out.at(i, y, x, 0) = truth_draw(truth_params.point(i, y, x), family, rng);
    return out;
}

Tensor4 sample_raw_ensemble(const Tensor4& truth_params, Family family,
                            const SyntheticConfig& cfg, std::mt19937_64& rng) {
    Tensor4 out(truth_params.n, truth_params.h, truth_params.w, cfg.ensemble_size);
    for (int i = 0; i < truth_params.n; ++i)
        for (int y = 0; y < truth_params.h; ++y)
            for (int x = 0; x < truth_params.w; ++x) {
                const auto p = truth_params.point(i, y, x);
                const double mean = truth_mean(p, family);
                auto dst = out.point(i, y, x);
                for (int m = 0; m < cfg.ensemble_size; ++m) {
                    const double draw = truth_draw(p, family, rng);
                    const double member =
                        cfg.bias + mean + cfg.dispersion_factor * (draw - mean);
                    dst[m] = member > 0.0 ? member : 0.0;
                }
            }
    return out;
}

namespace {

void ensemble_summaries(std::span<const double> members, double* mean, double* mn, double* mx,
                        double* sd) {
    double s = 0.0, lo = members[0], hi = members[0];
    for (double v : members) {
        s += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double m = s / static_cast<double>(members.size());
    double ss = 0.0;
    for (double v : members) ss += (v - m) * (v - m);
    *mean = m;
    *mn = lo;
    *mx = hi;
    *sd = std::sqrt(ss / static_cast<double>(members.size() - 1));
}

}  // namespace

SyntheticDataset build_dataset(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticDataset ds;
    ds.cfg = cfg;
    ds.constants = gen_constant_fields(cfg);
    ds.predictors = Tensor4(cfg.n_days, cfg.height, cfg.width, cfg.predictor_channels());
    ds.observations = Tensor4(cfg.n_days, cfg.height, cfg.width, 1);
    ds.truth_params = Tensor4(cfg.n_days, cfg.height, cfg.width, 3);
    ds.ensemble = Tensor4(cfg.n_days, cfg.height, cfg.width, cfg.ensemble_size);

    std::vector<std::string> names;
    for (int v = 0; v < cfg.n_variables; ++v) {
        const std::string base = v == 0 ? "precip" : "aux" + std::to_string(v);
        names.push_back(base + "_mean");
        names.push_back(base + "_min");
        names.push_back(base + "_max");
        names.push_back(base + "_sd");
    }
    for (int c = 0; c < cfg.n_constants; ++c) names.push_back(ds.constants.channel_names[c]);
    ds.predictors.channel_names = names;

    const std::size_t day_stride = static_cast<std::size_t>(cfg.height) * cfg.width;
    parallel_for(static_cast<std::size_t>(cfg.n_days), [&](std::size_t day) {
        std::mt19937_64 rng = make_rng(cfg.seed, 1000 + day);
        const Tensor4 z1 = smooth_gaussian_field(cfg.height, cfg.width, cfg.length_scale, rng);
        const Tensor4 z2 = smooth_gaussian_field(cfg.height, cfg.width, cfg.length_scale, rng);
        const Tensor4 truth = gen_truth_params(cfg, ds.constants, z1, z2);
        const Tensor4 obs = sample_obs(truth, cfg.family, rng);
        const Tensor4 members = sample_raw_ensemble(truth, cfg.family, cfg, rng);

        std::copy_n(truth.data.begin(), day_stride * 3,
                    ds.truth_params.data.begin() + day * day_stride * 3);
        std::copy_n(obs.data.begin(), day_stride,
                    ds.observations.data.begin() + day * day_stride);
        std::copy_n(members.data.begin(), day_stride * cfg.ensemble_size,
                    ds.ensemble.data.begin() + day * day_stride * cfg.ensemble_size);

        // auxiliary ensemble variables: latent-linked fields with their own
        // member noise, summarized exactly like the primary variable
        std::vector<Tensor4> aux_members;
        for (int v = 1; v < cfg.n_variables; ++v) {
            Tensor4 am(1, cfg.height, cfg.width, cfg.ensemble_size);
            const double a = 0.5 + 0.2 * v, b = 0.3, c = 0.2;
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x) {
                    const double base = a * z1.at(0, y, x, 0) + b * z2.at(0, y, x, 0) +
                                        c * ds.constants.at(0, y, x, 0);
                    auto dst = am.point(0, y, x);
                    for (int m = 0; m < cfg.ensemble_size; ++m)
                        dst[m] = base + 0.5 * normal_draw(rng);
                }
            aux_members.push_back(std::move(am));
        }

        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) {
                auto dst = ds.predictors.point(static_cast<int>(day), y, x);
                int ch = 0;
                double mean, mn, mx, sd;
                ensemble_summaries(members.point(0, y, x), &mean, &mn, &mx, &sd);
                dst[ch++] = mean;
                dst[ch++] = mn;
                dst[ch++] = mx;
                dst[ch++] = sd;
                for (const auto& am : aux_members) {
                    ensemble_summaries(am.point(0, y, x), &mean, &mn, &mx, &sd);
                    dst[ch++] = mean;
                    dst[ch++] = mn;
                    dst[ch++] = mx;
                    dst[ch++] = sd;
                }
                for (int c = 0; c < cfg.n_constants; ++c)
                    dst[ch++] = ds.constants.at(0, y, x, c);
            }
    });
    return ds;
}

}  // namespace gridcast
