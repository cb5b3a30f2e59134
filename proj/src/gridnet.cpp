#include "gridcast/gridnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gridcast/crps_grad.hpp"
#include "gridcast/distributions.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

// ------------------------------------------------------------ ParamStore

std::size_t ParamStore::add(const std::string& name, std::size_t size) {
    const std::size_t off = values.size();
    entries.push_back({name, off, size});
    values.resize(off + size, 0.0);
    grads.resize(off + size, 0.0);
    return off;
}

std::size_t ParamStore::add_state(const std::string& name, std::size_t size) {
    const std::size_t off = state.size();
    state_entries.push_back({name, off, size});
    state.resize(off + size, 0.0);
    return off;
}

void ParamStore::zero_grads() { std::fill(grads.begin(), grads.end(), 0.0); }

void UNetConfig::validate() const {
    if (depth != 2) throw std::domain_error("UNetConfig: depth is fixed at 2");
    if (base_channels < 1) throw std::domain_error("UNetConfig: base_channels must be >= 1");
    if (in_channels < 1) throw std::domain_error("UNetConfig: in_channels must be >= 1");
}

// ------------------------------------------------------- free kernels

Tensor4 separable_conv2d(const Tensor4& x, std::span<const double> depthwise_3x3,
                         std::span<const double> pointwise, int out_channels) {
    if (depthwise_3x3.size() != static_cast<std::size_t>(9) * x.c)
        throw std::domain_error("separable_conv2d: depthwise kernel size mismatch");
    if (pointwise.size() != static_cast<std::size_t>(x.c) * out_channels)
        throw std::domain_error("separable_conv2d: pointwise kernel size mismatch");

    // depthwise 3x3, same padding
    Tensor4 mid(x.n, x.h, x.w, x.c);
    for (int i = 0; i < x.n; ++i)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx)
                for (int ch = 0; ch < x.c; ++ch) {
                    double s = 0.0;
                    for (int dy = -1; dy <= 1; ++dy) {
                        const int yy = y + dy;
                        if (yy < 0 || yy >= x.h) continue;
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int xxx = xx + dx;
                            if (xxx < 0 || xxx >= x.w) continue;
                            s += x.at(i, yy, xxx, ch) *
                                 depthwise_3x3[((dy + 1) * 3 + (dx + 1)) * x.c + ch];
                        }
                    }
                    mid.at(i, y, xx, ch) = s;
                }
    // pointwise 1x1
    Tensor4 out(x.n, x.h, x.w, out_channels);
    for (int i = 0; i < x.n; ++i)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx) {
                const auto src = mid.point(i, y, xx);
                auto dst = out.point(i, y, xx);
                for (int co = 0; co < out_channels; ++co) {
                    double s = 0.0;
                    for (int ci = 0; ci < x.c; ++ci) s += src[ci] * pointwise[ci * out_channels + co];
                    dst[co] = s;
                }
            }
    return out;
}

Tensor4 conv2d_3x3(const Tensor4& x, std::span<const double> kernel, int out_channels) {
    if (kernel.size() != static_cast<std::size_t>(9) * x.c * out_channels)
        throw std::domain_error("conv2d_3x3: kernel size mismatch");
    Tensor4 out(x.n, x.h, x.w, out_channels);
    for (int i = 0; i < x.n; ++i)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx)
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= x.h) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xxx = xx + dx;
                        if (xxx < 0 || xxx >= x.w) continue;
                        const auto src = x.point(i, yy, xxx);
                        auto dst = out.point(i, y, xx);
                        const double* kk = kernel.data() +
                                           (((dy + 1) * 3 + (dx + 1)) * x.c) * out_channels;
                        for (int ci = 0; ci < x.c; ++ci)
                            for (int co = 0; co < out_channels; ++co)
                                dst[co] += src[ci] * kk[ci * out_channels + co];
                    }
                }
    return out;
}

Tensor4 relu(const Tensor4& x) {
    Tensor4 out = x;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor4 max_pool2d(const Tensor4& x) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw std::domain_error("max_pool2d: spatial dims must be even");
    Tensor4 out(x.n, x.h / 2, x.w / 2, x.c);
    for (int i = 0; i < x.n; ++i)
        for (int y = 0; y < out.h; ++y)
            for (int xx = 0; xx < out.w; ++xx)
                for (int ch = 0; ch < x.c; ++ch) {
                    double m = x.at(i, 2 * y, 2 * xx, ch);
                    m = std::max(m, x.at(i, 2 * y, 2 * xx + 1, ch));
                    m = std::max(m, x.at(i, 2 * y + 1, 2 * xx, ch));
                    m = std::max(m, x.at(i, 2 * y + 1, 2 * xx + 1, ch));
                    out.at(i, y, xx, ch) = m;
                }
    return out;
}

namespace {

struct LerpIndex {
    int i0, i1;
    double w0, w1;
};

// Half-pixel-centered source coordinates for a x2 upsample, clamped at the
// borders: out[i] samples in[(i + 0.5)/2 - 0.5].
std::vector<LerpIndex> upsample_map(int out_size, int in_size) {
    std::vector<LerpIndex> m(out_size);
    for (int i = 0; i < out_size; ++i) {
        const double src = 0.5 * (i + 0.5) - 0.5;
        double f = std::floor(src);
        double w1 = src - f;
        int i0 = static_cast<int>(f);
        int i1 = i0 + 1;
        i0 = std::clamp(i0, 0, in_size - 1);
        i1 = std::clamp(i1, 0, in_size - 1);
        m[i] = {i0, i1, 1.0 - w1, w1};
    }
    return m;
}

}  // namespace

Tensor4 bilinear_upsample2(const Tensor4& x) {
    Tensor4 out(x.n, 2 * x.h, 2 * x.w, x.c);
    const auto ym = upsample_map(out.h, x.h);
    const auto xm = upsample_map(out.w, x.w);
    for (int i = 0; i < x.n; ++i)
        for (int y = 0; y < out.h; ++y)
            for (int xx = 0; xx < out.w; ++xx) {
                const auto& my = ym[y];
                const auto& mx = xm[xx];
                for (int ch = 0; ch < x.c; ++ch)
                    out.at(i, y, xx, ch) = my.w0 * (mx.w0 * x.at(i, my.i0, mx.i0, ch) +
                                                    mx.w1 * x.at(i, my.i0, mx.i1, ch)) +
                                           my.w1 * (mx.w0 * x.at(i, my.i1, mx.i0, ch) +
                                                    mx.w1 * x.at(i, my.i1, mx.i1, ch));
            }
    return out;
}

// ------------------------------------------------------------- link

namespace {

double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr double kParamFloor = 1e-3;

}  // namespace

Tensor4 link_params(const Tensor4& raw, Family family) {
    if (raw.c != 3) throw std::domain_error("link_params: raw tensor must have 3 channels");
    Tensor4 out(raw.n, raw.h, raw.w, 3);
    for (std::size_t p = 0; p < raw.data.size(); p += 3) {
        const double r0 = raw.data[p], r1 = raw.data[p + 1], r2 = raw.data[p + 2];
        if (family == Family::gtcnd) {
            out.data[p] = sigmoid(r0);
            out.data[p + 1] = r1;
            out.data[p + 2] = softplus(r2) + kParamFloor;
        } else {
            out.data[p] = softplus(r0) + kParamFloor;
            out.data[p + 1] = softplus(r1) + kParamFloor;
            out.data[p + 2] = -softplus(r2) - kParamFloor;
        }
    }
    return out;
}

namespace {

// d(linked)/d(raw) for one point; diagonal by construction.
void link_backward_point(const double* raw, const double* dparam, double* draw, Family family) {
    if (family == Family::gtcnd) {
        const double s = sigmoid(raw[0]);
        draw[0] = dparam[0] * s * (1.0 - s);
        draw[1] = dparam[1];
        draw[2] = dparam[2] * sigmoid(raw[2]);
    } else {
        draw[0] = dparam[0] * sigmoid(raw[0]);
        draw[1] = dparam[1] * sigmoid(raw[1]);
        draw[2] = -dparam[2] * sigmoid(raw[2]);
    }
}

}  // namespace

// ------------------------------------------------------------- loss

double crps_loss(const Tensor4& param_fields, const Tensor4& obs,
                 std::span<const std::uint8_t> mask, Family family, Tensor4* grad_params) {
    if (param_fields.c != 3) throw std::domain_error("crps_loss: parameter fields must have 3 channels");
    if (obs.n != param_fields.n || obs.h != param_fields.h || obs.w != param_fields.w || obs.c != 1)
        throw std::domain_error("crps_loss: observation shape mismatch");
    if (!mask.empty() && mask.size() != static_cast<std::size_t>(param_fields.h) * param_fields.w)
        throw std::domain_error("crps_loss: mask size mismatch");

    if (grad_params) {
        *grad_params = Tensor4(param_fields.n, param_fields.h, param_fields.w, 3);
    }
    std::vector<double> scores;
    scores.reserve(param_fields.data.size() / 3);
    std::size_t kept = 0;
    for (int i = 0; i < param_fields.n; ++i)
        for (int y = 0; y < param_fields.h; ++y)
            for (int x = 0; x < param_fields.w; ++x) {
                if (!mask.empty() && mask[static_cast<std::size_t>(y) * param_fields.w + x] == 0)
                    continue;
                const auto pp = param_fields.point(i, y, x);
                const double yv = obs.at(i, y, x, 0);
                try {
                    if (family == Family::gtcnd) {
                        const GtcndParams p(pp[0], pp[1], pp[2]);
                        if (grad_params) {
                            const CrpsWithGrad g = crps_gtcnd_grad(p, yv);
                            scores.push_back(g.value);
                            auto gp = grad_params->point(i, y, x);
                            gp[0] = g.grad[0];
                            gp[1] = g.grad[1];
                            gp[2] = g.grad[2];
                        } else {
                            scores.push_back(crps_gtcnd_grad(p, yv).value);
                        }
                    } else {
                        const CsgdParams p(pp[0], pp[1], pp[2]);
                        const CrpsWithGrad g = crps_csgd_grad(p, yv);
                        scores.push_back(g.value);
                        if (grad_params) {
                            auto gp = grad_params->point(i, y, x);
                            gp[0] = g.grad[0];
                            gp[1] = g.grad[1];
                            gp[2] = g.grad[2];
                        }
                    }
                } catch (const std::domain_error& e) {
                    std::ostringstream msg;
                    msg << "crps_loss: invalid parameters at sample " << i << " point (" << y
                        << "," << x << "): " << e.what();
                    throw std::domain_error(msg.str());
                }
                ++kept;
            }
    if (kept == 0) throw std::domain_error("crps_loss: mask excludes every grid point");
    if (grad_params) {
        const double inv = 1.0 / static_cast<double>(kept);
        for (double& g : grad_params->data) g *= inv;
    }
    return mean_of(scores);
}

// ------------------------------------------------------------- layers

namespace {

struct BatchNorm {
    int channels = 0;
    std::size_t gamma_off = 0, beta_off = 0, rmean_off = 0, rvar_off = 0;
    // caches
    Tensor4 xhat;
    std::vector<double> inv_std;
    RunMode mode = RunMode::train;
    static constexpr double kEps = 1e-3;
    static constexpr double kMomentum = 0.99;

    void init(ParamStore& ps, const std::string& name, int ch) {
        channels = ch;
        gamma_off = ps.add(name + ".gamma", ch);
        beta_off = ps.add(name + ".beta", ch);
        rmean_off = ps.add_state(name + ".running_mean", ch);
        rvar_off = ps.add_state(name + ".running_var", ch);
        for (int i = 0; i < ch; ++i) {
            ps.values[gamma_off + i] = 1.0;
            ps.state[rvar_off + i] = 1.0;
        }
    }

    Tensor4 forward(const Tensor4& x, ParamStore& ps, RunMode m, bool update_running) {
        mode = m;
        const std::size_t count = x.data.size() / channels;
        xhat = Tensor4(x.n, x.h, x.w, x.c);
        inv_std.assign(channels, 0.0);
        Tensor4 out(x.n, x.h, x.w, x.c);
        for (int ch = 0; ch < channels; ++ch) {
            double mean, var;
            if (m == RunMode::train) {
                double s = 0.0;
                for (std::size_t p = ch; p < x.data.size(); p += channels) s += x.data[p];
                mean = s / static_cast<double>(count);
                double v = 0.0;
                for (std::size_t p = ch; p < x.data.size(); p += channels) {
                    const double d = x.data[p] - mean;
                    v += d * d;
                }
                var = v / static_cast<double>(count);
                if (update_running) {
                    ps.state[rmean_off + ch] =
                        kMomentum * ps.state[rmean_off + ch] + (1.0 - kMomentum) * mean;
                    ps.state[rvar_off + ch] =
                        kMomentum * ps.state[rvar_off + ch] + (1.0 - kMomentum) * var;
                }
            } else {
                mean = ps.state[rmean_off + ch];
                var = ps.state[rvar_off + ch];
            }
            const double is = 1.0 / std::sqrt(var + kEps);
            inv_std[ch] = is;
            const double g = ps.values[gamma_off + ch];
            const double b = ps.values[beta_off + ch];
            for (std::size_t p = ch; p < x.data.size(); p += channels) {
                const double xh = (x.data[p] - mean) * is;
                xhat.data[p] = xh;
                out.data[p] = g * xh + b;
            }
        }
        return out;
    }

    Tensor4 backward(const Tensor4& dy, ParamStore& ps) {
        const std::size_t count = dy.data.size() / channels;
        Tensor4 dx(dy.n, dy.h, dy.w, dy.c);
        for (int ch = 0; ch < channels; ++ch) {
            const double g = ps.values[gamma_off + ch];
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t p = ch; p < dy.data.size(); p += channels) {
                sum_dy += dy.data[p];
                sum_dy_xhat += dy.data[p] * xhat.data[p];
            }
            ps.grads[beta_off + ch] += sum_dy;
            ps.grads[gamma_off + ch] += sum_dy_xhat;
            if (mode == RunMode::train) {
                const double inv_n = 1.0 / static_cast<double>(count);
                const double mean_dy = sum_dy * inv_n;
                const double mean_dy_xhat = sum_dy_xhat * inv_n;
                for (std::size_t p = ch; p < dy.data.size(); p += channels)
                    dx.data[p] = g * inv_std[ch] *
                                 (dy.data[p] - mean_dy - xhat.data[p] * mean_dy_xhat);
            } else {
                for (std::size_t p = ch; p < dy.data.size(); p += channels)
                    dx.data[p] = g * inv_std[ch] * dy.data[p];
            }
        }
        return dx;
    }
};

// conv (separable or full 3x3) + batch norm + relu
struct ConvBlock {
    bool separable = true;
    int in_c = 0, out_c = 0;
    std::size_t dw_off = 0, pw_off = 0, k_off = 0;
    BatchNorm bn;
    // caches
    Tensor4 x_in, mid, out_act;

    void init(ParamStore& ps, const std::string& name, int in_channels, int out_channels,
              bool use_separable) {
        separable = use_separable;
        in_c = in_channels;
        out_c = out_channels;
        if (separable) {
            dw_off = ps.add(name + ".depthwise", static_cast<std::size_t>(9) * in_c);
            pw_off = ps.add(name + ".pointwise", static_cast<std::size_t>(in_c) * out_c);
        } else {
            k_off = ps.add(name + ".kernel", static_cast<std::size_t>(9) * in_c * out_c);
        }
        bn.init(ps, name + ".bn", out_c);
    }

    Tensor4 forward(const Tensor4& x, ParamStore& ps, RunMode m, bool update_running) {
        x_in = x;
        Tensor4 conv_out;
        if (separable) {
            std::span<const double> dw(ps.values.data() + dw_off, static_cast<std::size_t>(9) * in_c);
            std::span<const double> pw(ps.values.data() + pw_off,
                                       static_cast<std::size_t>(in_c) * out_c);
            conv_out = separable_forward(x, dw, pw);
        } else {
            std::span<const double> k(ps.values.data() + k_off,
                                      static_cast<std::size_t>(9) * in_c * out_c);
            conv_out = conv2d_3x3(x, k, out_c);
        }
        Tensor4 bn_out = bn.forward(conv_out, ps, m, update_running);
        out_act = relu(bn_out);
        return out_act;
    }

    Tensor4 separable_forward(const Tensor4& x, std::span<const double> dw,
                              std::span<const double> pw) {
        // depthwise into the cache, then pointwise
        mid = Tensor4(x.n, x.h, x.w, x.c);
        for (int i = 0; i < x.n; ++i)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx)
                    for (int ch = 0; ch < x.c; ++ch) {
                        double s = 0.0;
                        for (int dy = -1; dy <= 1; ++dy) {
                            const int yy = y + dy;
                            if (yy < 0 || yy >= x.h) continue;
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int xxx = xx + dx;
                                if (xxx < 0 || xxx >= x.w) continue;
                                s += x.at(i, yy, xxx, ch) * dw[((dy + 1) * 3 + (dx + 1)) * x.c + ch];
                            }
                        }
                        mid.at(i, y, xx, ch) = s;
                    }
        Tensor4 out(x.n, x.h, x.w, out_c);
        for (int i = 0; i < x.n; ++i)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) {
                    const auto src = mid.point(i, y, xx);
                    auto dst = out.point(i, y, xx);
                    for (int co = 0; co < out_c; ++co) {
                        double s = 0.0;
                        for (int ci = 0; ci < in_c; ++ci) s += src[ci] * pw[ci * out_c + co];
                        dst[co] = s;
                    }
                }
        return out;
    }

    Tensor4 backward(const Tensor4& dy_act, ParamStore& ps) {
        // relu
        Tensor4 dy = dy_act;
        for (std::size_t p = 0; p < dy.data.size(); ++p)
            if (out_act.data[p] <= 0.0) dy.data[p] = 0.0;
        // batch norm
        Tensor4 d_conv = bn.backward(dy, ps);
        // conv
        Tensor4 dx(x_in.n, x_in.h, x_in.w, in_c);
        if (separable) {
            std::span<const double> pw(ps.values.data() + pw_off,
                                       static_cast<std::size_t>(in_c) * out_c);
            Tensor4 d_mid(x_in.n, x_in.h, x_in.w, in_c);
            for (int i = 0; i < x_in.n; ++i)
                for (int y = 0; y < x_in.h; ++y)
                    for (int xx = 0; xx < x_in.w; ++xx) {
                        const auto dout = d_conv.point(i, y, xx);
                        const auto m = mid.point(i, y, xx);
                        auto dm = d_mid.point(i, y, xx);
                        for (int ci = 0; ci < in_c; ++ci) {
                            double s = 0.0;
                            for (int co = 0; co < out_c; ++co) {
                                s += pw[ci * out_c + co] * dout[co];
                                ps.grads[pw_off + ci * out_c + co] += m[ci] * dout[co];
                            }
                            dm[ci] = s;
                        }
                    }
            // depthwise backward
            for (int i = 0; i < x_in.n; ++i)
                for (int y = 0; y < x_in.h; ++y)
                    for (int xx = 0; xx < x_in.w; ++xx)
                        for (int ch = 0; ch < in_c; ++ch) {
                            const double g = d_mid.at(i, y, xx, ch);
                            if (g == 0.0) continue;
                            for (int dy2 = -1; dy2 <= 1; ++dy2) {
                                const int yy = y + dy2;
                                if (yy < 0 || yy >= x_in.h) continue;
                                for (int dx2 = -1; dx2 <= 1; ++dx2) {
                                    const int xxx = xx + dx2;
                                    if (xxx < 0 || xxx >= x_in.w) continue;
                                    const std::size_t ki = ((dy2 + 1) * 3 + (dx2 + 1)) * in_c + ch;
                                    ps.grads[dw_off + ki] += x_in.at(i, yy, xxx, ch) * g;
                                    dx.at(i, yy, xxx, ch) +=
                                        ps.values[dw_off + ki] * g;
                                }
                            }
                        }
        } else {
            std::span<const double> k(ps.values.data() + k_off,
                                      static_cast<std::size_t>(9) * in_c * out_c);
            for (int i = 0; i < x_in.n; ++i)
                for (int y = 0; y < x_in.h; ++y)
                    for (int xx = 0; xx < x_in.w; ++xx) {
                        const auto dout = d_conv.point(i, y, xx);
                        for (int dy2 = -1; dy2 <= 1; ++dy2) {
                            const int yy = y + dy2;
                            if (yy < 0 || yy >= x_in.h) continue;
                            for (int dx2 = -1; dx2 <= 1; ++dx2) {
                                const int xxx = xx + dx2;
                                if (xxx < 0 || xxx >= x_in.w) continue;
                                const std::size_t kbase =
                                    (((dy2 + 1) * 3 + (dx2 + 1)) * in_c) * out_c;
                                const auto src = x_in.point(i, yy, xxx);
                                auto dxp = dx.point(i, yy, xxx);
                                for (int ci = 0; ci < in_c; ++ci)
                                    for (int co = 0; co < out_c; ++co) {
                                        ps.grads[k_off + kbase + ci * out_c + co] +=
                                            src[ci] * dout[co];
                                        dxp[ci] += k[kbase + ci * out_c + co] * dout[co];
                                    }
                            }
                        }
                    }
        }
        return dx;
    }
};

struct MaxPool {
    std::vector<std::size_t> argmax;  // per output element, index into input
    int in_n = 0, in_h = 0, in_w = 0, in_c = 0;

    Tensor4 forward(const Tensor4& x) {
        in_n = x.n;
        in_h = x.h;
        in_w = x.w;
        in_c = x.c;
        Tensor4 out(x.n, x.h / 2, x.w / 2, x.c);
        argmax.assign(out.data.size(), 0);
        for (int i = 0; i < x.n; ++i)
            for (int y = 0; y < out.h; ++y)
                for (int xx = 0; xx < out.w; ++xx)
                    for (int ch = 0; ch < x.c; ++ch) {
                        std::size_t best = x.index(i, 2 * y, 2 * xx, ch);
                        double bv = x.data[best];
                        const std::size_t cands[3] = {x.index(i, 2 * y, 2 * xx + 1, ch),
                                                      x.index(i, 2 * y + 1, 2 * xx, ch),
                                                      x.index(i, 2 * y + 1, 2 * xx + 1, ch)};
                        for (std::size_t cand : cands)
                            if (x.data[cand] > bv) {
                                bv = x.data[cand];
                                best = cand;
                            }
                        const std::size_t oi = out.index(i, y, xx, ch);
                        out.data[oi] = bv;
                        argmax[oi] = best;
                    }
        return out;
    }

    Tensor4 backward(const Tensor4& dy) const {
        Tensor4 dx(in_n, in_h, in_w, in_c);
        for (std::size_t oi = 0; oi < dy.data.size(); ++oi) dx.data[argmax[oi]] += dy.data[oi];
        return dx;
    }
};

struct Upsample {
    int in_h = 0, in_w = 0;

    Tensor4 forward(const Tensor4& x) {
        in_h = x.h;
        in_w = x.w;
        return bilinear_upsample2(x);
    }

    Tensor4 backward(const Tensor4& dy) const {
        Tensor4 dx(dy.n, in_h, in_w, dy.c);
        const auto ym = upsample_map(dy.h, in_h);
        const auto xm = upsample_map(dy.w, in_w);
        for (int i = 0; i < dy.n; ++i)
            for (int y = 0; y < dy.h; ++y)
                for (int xx = 0; xx < dy.w; ++xx) {
                    const auto& my = ym[y];
                    const auto& mx = xm[xx];
                    for (int ch = 0; ch < dy.c; ++ch) {
                        const double g = dy.at(i, y, xx, ch);
                        dx.at(i, my.i0, mx.i0, ch) += my.w0 * mx.w0 * g;
                        dx.at(i, my.i0, mx.i1, ch) += my.w0 * mx.w1 * g;
                        dx.at(i, my.i1, mx.i0, ch) += my.w1 * mx.w0 * g;
                        dx.at(i, my.i1, mx.i1, ch) += my.w1 * mx.w1 * g;
                    }
                }
        return dx;
    }
};

struct HeadConv {  // 1x1 with bias
    int in_c = 0, out_c = 0;
    std::size_t w_off = 0, b_off = 0;
    Tensor4 x_in;

    void init(ParamStore& ps, const std::string& name, int in_channels, int out_channels) {
        in_c = in_channels;
        out_c = out_channels;
        w_off = ps.add(name + ".kernel", static_cast<std::size_t>(in_c) * out_c);
        b_off = ps.add(name + ".bias", out_c);
    }

    Tensor4 forward(const Tensor4& x, ParamStore& ps) {
        x_in = x;
        Tensor4 out(x.n, x.h, x.w, out_c);
        for (int i = 0; i < x.n; ++i)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) {
                    const auto src = x.point(i, y, xx);
                    auto dst = out.point(i, y, xx);
                    for (int co = 0; co < out_c; ++co) {
                        double s = ps.values[b_off + co];
                        for (int ci = 0; ci < in_c; ++ci)
                            s += src[ci] * ps.values[w_off + ci * out_c + co];
                        dst[co] = s;
                    }
                }
        return out;
    }

    Tensor4 backward(const Tensor4& dy, ParamStore& ps) {
        Tensor4 dx(x_in.n, x_in.h, x_in.w, in_c);
        for (int i = 0; i < dy.n; ++i)
            for (int y = 0; y < dy.h; ++y)
                for (int xx = 0; xx < dy.w; ++xx) {
                    const auto dout = dy.point(i, y, xx);
                    const auto src = x_in.point(i, y, xx);
                    auto dxp = dx.point(i, y, xx);
                    for (int co = 0; co < out_c; ++co) {
                        ps.grads[b_off + co] += dout[co];
                        for (int ci = 0; ci < in_c; ++ci) {
                            ps.grads[w_off + ci * out_c + co] += src[ci] * dout[co];
                            dxp[ci] += ps.values[w_off + ci * out_c + co] * dout[co];
                        }
                    }
                }
        return dx;
    }
};

}  // namespace

// --------------------------------------------------------------- UNet

struct UNet::Impl {
    ConvBlock down1, down2, bottleneck, up1, up2;
    MaxPool pool1, pool2;
    Upsample ups1, ups2;
    HeadConv head;
    // wiring caches
    Tensor4 skip1, skip2, raw;
    int in_h = 0, in_w = 0, pad_h = 0, pad_w = 0;
};

namespace {

int round_up(int v, int mult) { return (v + mult - 1) / mult * mult; }

}  // namespace

namespace {

void fill_uniform(std::span<double> w, std::size_t fan_in, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : w) v = limit * (2.0 * uniform_open(rng) - 1.0);
}

void init_conv_block(ConvBlock& blk, ParamStore& ps, std::mt19937_64& rng) {
    if (blk.separable) {
        fill_uniform({ps.values.data() + blk.dw_off, static_cast<std::size_t>(9) * blk.in_c}, 9,
                     rng);
        fill_uniform({ps.values.data() + blk.pw_off,
                      static_cast<std::size_t>(blk.in_c) * blk.out_c},
                     blk.in_c, rng);
    } else {
        fill_uniform({ps.values.data() + blk.k_off,
                      static_cast<std::size_t>(9) * blk.in_c * blk.out_c},
                     static_cast<std::size_t>(9) * blk.in_c, rng);
    }
}

}  // namespace

UNet::UNet(const UNetConfig& cfg) : cfg_(cfg), impl_(std::make_shared<Impl>()) {
    cfg_.validate();
    const int c = cfg_.base_channels;
    impl_->down1.init(store_, "down1", cfg_.in_channels, c, cfg_.use_separable);
    impl_->down2.init(store_, "down2", c, 2 * c, cfg_.use_separable);
    impl_->bottleneck.init(store_, "bottleneck", 2 * c, 4 * c, cfg_.use_separable);
    impl_->up1.init(store_, "up1", 4 * c + 2 * c, 2 * c, cfg_.use_separable);
    impl_->up2.init(store_, "up2", 2 * c + c, c, cfg_.use_separable);
    impl_->head.init(store_, "head", c, 3);

    // fan-in-scaled uniform init, seed-derived; biases and batch-norm keep
    // their zero/one defaults
    std::mt19937_64 rng = make_rng(cfg_.seed, 0x6e657477);
    init_conv_block(impl_->down1, store_, rng);
    init_conv_block(impl_->down2, store_, rng);
    init_conv_block(impl_->bottleneck, store_, rng);
    init_conv_block(impl_->up1, store_, rng);
    init_conv_block(impl_->up2, store_, rng);
    fill_uniform({store_.values.data() + impl_->head.w_off,
                  static_cast<std::size_t>(impl_->head.in_c) * impl_->head.out_c},
                 impl_->head.in_c, rng);
}

Tensor4 UNet::forward(const Tensor4& input, RunMode mode, bool update_running) {
    Impl& im = *impl_;
    if (input.c != cfg_.in_channels)
        throw std::domain_error("UNet::forward: input channel count mismatch");
    im.in_h = input.h;
    im.in_w = input.w;
    im.pad_h = round_up(input.h, 4);
    im.pad_w = round_up(input.w, 4);
    const Tensor4 x0 = pad_spatial(input, im.pad_h, im.pad_w);

    im.skip1 = im.down1.forward(x0, store_, mode, update_running);
    const Tensor4 p1 = im.pool1.forward(im.skip1);
    im.skip2 = im.down2.forward(p1, store_, mode, update_running);
    const Tensor4 p2 = im.pool2.forward(im.skip2);
    const Tensor4 b = im.bottleneck.forward(p2, store_, mode, update_running);
    const Tensor4 u1 = im.ups1.forward(b);
    const Tensor4 c1 = concat_channels(u1, im.skip2);
    const Tensor4 a3 = im.up1.forward(c1, store_, mode, update_running);
    const Tensor4 u2 = im.ups2.forward(a3);
    const Tensor4 c2 = concat_channels(u2, im.skip1);
    const Tensor4 a4 = im.up2.forward(c2, store_, mode, update_running);
    const Tensor4 r = im.head.forward(a4, store_);
    im.raw = crop_spatial(r, im.in_h, im.in_w);
    return link_params(im.raw, cfg_.family);
}

double UNet::loss_and_gradients(const Tensor4& input, const Tensor4& obs,
                                std::span<const std::uint8_t> mask, RunMode mode,
                                bool update_running) {
    store_.zero_grads();
    const Tensor4 params = forward(input, mode, update_running);
    Tensor4 dparams;
    const double loss = crps_loss(params, obs, mask, cfg_.family, &dparams);

    Impl& im = *impl_;
    // chain through the link, then pad the raw gradient back up
    Tensor4 draw(dparams.n, dparams.h, dparams.w, 3);
    for (std::size_t p = 0; p < draw.data.size(); p += 3)
        link_backward_point(im.raw.data.data() + p, dparams.data.data() + p,
                            draw.data.data() + p, cfg_.family);
    const Tensor4 dr = pad_spatial(draw, im.pad_h, im.pad_w);

    Tensor4 da4 = im.head.backward(dr, store_);
    Tensor4 dc2 = im.up2.backward(da4, store_);
    // split concat(u2, skip1)
    Tensor4 du2(dc2.n, dc2.h, dc2.w, dc2.c - cfg_.base_channels);
    Tensor4 dskip1(dc2.n, dc2.h, dc2.w, cfg_.base_channels);
    for (int i = 0; i < dc2.n; ++i)
        for (int y = 0; y < dc2.h; ++y)
            for (int x = 0; x < dc2.w; ++x) {
                const auto src = dc2.point(i, y, x);
                auto a = du2.point(i, y, x);
                auto s = dskip1.point(i, y, x);
                std::copy(src.begin(), src.begin() + du2.c, a.begin());
                std::copy(src.begin() + du2.c, src.end(), s.begin());
            }
    Tensor4 da3 = im.ups2.backward(du2);
    Tensor4 dc1 = im.up1.backward(da3, store_);
    Tensor4 du1(dc1.n, dc1.h, dc1.w, dc1.c - 2 * cfg_.base_channels);
    Tensor4 dskip2(dc1.n, dc1.h, dc1.w, 2 * cfg_.base_channels);
    for (int i = 0; i < dc1.n; ++i)
        for (int y = 0; y < dc1.h; ++y)
            for (int x = 0; x < dc1.w; ++x) {
                const auto src = dc1.point(i, y, x);
                auto a = du1.point(i, y, x);
                auto s = dskip2.point(i, y, x);
                std::copy(src.begin(), src.begin() + du1.c, a.begin());
                std::copy(src.begin() + du1.c, src.end(), s.begin());
            }
    Tensor4 db = im.ups1.backward(du1);
    Tensor4 dp2 = im.bottleneck.backward(db, store_);
    Tensor4 da2 = im.pool2.backward(dp2);
    for (std::size_t p = 0; p < da2.data.size(); ++p) da2.data[p] += dskip2.data[p];
    Tensor4 dp1 = im.down2.backward(da2, store_);
    Tensor4 da1 = im.pool1.backward(dp1);
    for (std::size_t p = 0; p < da1.data.size(); ++p) da1.data[p] += dskip1.data[p];
    im.down1.backward(da1, store_);
    return loss;
}

double UNet::loss_only(const Tensor4& input, const Tensor4& obs,
                       std::span<const std::uint8_t> mask, RunMode mode) {
    const Tensor4 params = forward(input, mode, false);
    return crps_loss(params, obs, mask, cfg_.family, nullptr);
}

// --------------------------------------------------------- checkpoints

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; big-endian hosts need a swap pass");

void write_checkpoint(const std::string& path, const UNet& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_checkpoint: cannot open " + path);
    const UNetConfig& cfg = model.config();
    const ParamStore& ps = model.params();
    out << "GCKPT1\n";
    out << "family " << family_name(cfg.family) << "\n";
    out << "depth " << cfg.depth << "\n";
    out << "base_channels " << cfg.base_channels << "\n";
    out << "use_separable " << (cfg.use_separable ? 1 : 0) << "\n";
    out << "seed " << cfg.seed << "\n";
    out << "in_channels " << cfg.in_channels << "\n";
    out << "params " << ps.entries.size() << "\n";
    for (const auto& e : ps.entries) out << e.name << " " << e.offset << " " << e.size << "\n";
    out << "state " << ps.state_entries.size() << "\n";
    for (const auto& e : ps.state_entries) out << e.name << " " << e.offset << " " << e.size << "\n";
    out << "payload_doubles " << ps.values.size() + ps.state.size() << "\n";
    out << "end_header\n";
    out.write(reinterpret_cast<const char*>(ps.values.data()),
              static_cast<std::streamsize>(ps.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(ps.state.data()),
              static_cast<std::streamsize>(ps.state.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write_checkpoint: write failed for " + path);
}

namespace {

std::string expect_key(std::istream& in, const std::string& key) {
    std::string k, v;
    if (!(in >> k >> v) || k != key)
        throw std::runtime_error("read_checkpoint: malformed header, expected '" + key + "'");
    return v;
}

}  // namespace

UNet read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_checkpoint: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "GCKPT1") throw std::runtime_error("read_checkpoint: bad magic in " + path);
    UNetConfig cfg;
    cfg.family = family_from_name(expect_key(in, "family"));
    cfg.depth = std::stoi(expect_key(in, "depth"));
    cfg.base_channels = std::stoi(expect_key(in, "base_channels"));
    cfg.use_separable = expect_key(in, "use_separable") == "1";
    cfg.seed = std::stoull(expect_key(in, "seed"));
    cfg.in_channels = std::stoi(expect_key(in, "in_channels"));

    UNet model(cfg);
    ParamStore& ps = model.params();

    const std::size_t n_params = std::stoull(expect_key(in, "params"));
    if (n_params != ps.entries.size())
        throw std::runtime_error("read_checkpoint: layer table size mismatch");
    for (const auto& e : ps.entries) {
        std::string name;
        std::size_t off, size;
        in >> name >> off >> size;
        if (name != e.name || off != e.offset || size != e.size)
            throw std::runtime_error("read_checkpoint: layer table mismatch at " + e.name);
    }
    const std::size_t n_state = std::stoull(expect_key(in, "state"));
    if (n_state != ps.state_entries.size())
        throw std::runtime_error("read_checkpoint: state table size mismatch");
    for (const auto& e : ps.state_entries) {
        std::string name;
        std::size_t off, size;
        in >> name >> off >> size;
        if (name != e.name || off != e.offset || size != e.size)
            throw std::runtime_error("read_checkpoint: state table mismatch at " + e.name);
    }
    const std::size_t payload = std::stoull(expect_key(in, "payload_doubles"));
    if (payload != ps.values.size() + ps.state.size())
        throw std::runtime_error("read_checkpoint: payload size mismatch");
    std::string tail;
    in >> tail;
    if (tail != "end_header") throw std::runtime_error("read_checkpoint: missing end_header");
    in.get();  // the newline before the payload
    in.read(reinterpret_cast<char*>(ps.values.data()),
            static_cast<std::streamsize>(ps.values.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(ps.state.data()),
            static_cast<std::streamsize>(ps.state.size() * sizeof(double)));
    if (!in || in.gcount() != static_cast<std::streamsize>(ps.state.size() * sizeof(double)))
        throw std::runtime_error("read_checkpoint: truncated payload in " + path);
    return model;
}

}  // namespace gridcast
