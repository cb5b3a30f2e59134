#include "gridcast/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace gridcast {

Tensor4::Tensor4(int n_, int h_, int w_, int c_) : n(n_), h(h_), w(w_), c(c_) {
    if (n < 1 || h < 1 || w < 1 || c < 1) throw std::domain_error("Tensor4: dims must be >= 1");
    data.assign(static_cast<std::size_t>(n) * h * w * c, 0.0);
}

Tensor4 gather_batch(const Tensor4& t, std::span<const int> batch_indices) {
    Tensor4 out(static_cast<int>(batch_indices.size()), t.h, t.w, t.c);
    out.channel_names = t.channel_names;
    const std::size_t stride = static_cast<std::size_t>(t.h) * t.w * t.c;
    for (std::size_t b = 0; b < batch_indices.size(); ++b) {
        const int i = batch_indices[b];
        if (i < 0 || i >= t.n) throw std::domain_error("gather_batch: index out of range");
        std::copy_n(t.data.begin() + i * stride, stride, out.data.begin() + b * stride);
    }
    return out;
}

Tensor4 pad_spatial(const Tensor4& t, int new_h, int new_w) {
    if (new_h < t.h || new_w < t.w) throw std::domain_error("pad_spatial: target smaller than input");
    if (new_h == t.h && new_w == t.w) return t;
    Tensor4 out(t.n, new_h, new_w, t.c);
    out.channel_names = t.channel_names;
    for (int i = 0; i < t.n; ++i)
        for (int y = 0; y < t.h; ++y)
            std::copy_n(t.data.begin() + t.index(i, y, 0, 0), static_cast<std::size_t>(t.w) * t.c,
                        out.data.begin() + out.index(i, y, 0, 0));
    return out;
}

Tensor4 crop_spatial(const Tensor4& t, int new_h, int new_w) {
    if (new_h > t.h || new_w > t.w) throw std::domain_error("crop_spatial: target larger than input");
    if (new_h == t.h && new_w == t.w) return t;
    Tensor4 out(t.n, new_h, new_w, t.c);
    out.channel_names = t.channel_names;
    for (int i = 0; i < t.n; ++i)
        for (int y = 0; y < new_h; ++y)
            std::copy_n(t.data.begin() + t.index(i, y, 0, 0), static_cast<std::size_t>(new_w) * t.c,
                        out.data.begin() + out.index(i, y, 0, 0));
    return out;
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::domain_error("concat_channels: spatial/batch dims differ");
    Tensor4 out(a.n, a.h, a.w, a.c + b.c);
    for (int i = 0; i < a.n; ++i)
        for (int y = 0; y < a.h; ++y)
            for (int x = 0; x < a.w; ++x) {
                const auto pa = a.point(i, y, x);
                const auto pb = b.point(i, y, x);
                auto po = out.point(i, y, x);
                std::copy(pa.begin(), pa.end(), po.begin());
                std::copy(pb.begin(), pb.end(), po.begin() + a.c);
            }
    return out;
}

}  // namespace gridcast
