#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gridcast {

// Dense (batch, height, width, channels) grid of 64-bit reals, row-major
// with channels fastest. Also serves as the on-disk grid tensor; channel
// names ride along when known.
struct Tensor4 {
    int n = 0, h = 0, w = 0, c = 0;
    std::vector<double> data;
    std::vector<std::string> channel_names;  // empty or size c

    Tensor4() = default;
    Tensor4(int n_, int h_, int w_, int c_);

    std::size_t size() const { return data.size(); }

    std::size_t index(int i, int y, int x, int ch) const {
        return ((static_cast<std::size_t>(i) * h + y) * w + x) * c + ch;
    }
    double& at(int i, int y, int x, int ch) { return data[index(i, y, x, ch)]; }
    double at(int i, int y, int x, int ch) const { return data[index(i, y, x, ch)]; }

    // channel-contiguous view of one grid point
    std::span<double> point(int i, int y, int x) {
        return {data.data() + index(i, y, x, 0), static_cast<std::size_t>(c)};
    }
    std::span<const double> point(int i, int y, int x) const {
        return {data.data() + index(i, y, x, 0), static_cast<std::size_t>(c)};
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && h == o.h && w == o.w && c == o.c;
    }
};

// Gathers the listed batch entries into a new tensor (dataset -> mini-batch).
Tensor4 gather_batch(const Tensor4& t, std::span<const int> batch_indices);

// Zero-pads spatial dims up to (new_h, new_w); crop undoes it.
Tensor4 pad_spatial(const Tensor4& t, int new_h, int new_w);
Tensor4 crop_spatial(const Tensor4& t, int new_h, int new_w);

// Stacks channels of a after b (same n/h/w).
Tensor4 concat_channels(const Tensor4& a, const Tensor4& b);

using GridTensor = Tensor4;

}  // namespace gridcast
