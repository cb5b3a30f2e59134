#include "gridcast/gridnet.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

#include "gridcast/distributions.hpp"
#include "gridcast/scoring.hpp"
#include "gridcast/tensor.hpp"
#include "gridcast/util.hpp"

using namespace gridcast;

namespace {

Tensor4 random_tensor(int n, int h, int w, int c, std::mt19937_64& rng) {
    Tensor4 t(n, h, w, c);
    for (double& v : t.data) v = 2.0 * uniform_open(rng) - 1.0;
    return t;
}

// plain quadruple-loop reference for the separable convolution
Tensor4 separable_reference(const Tensor4& x, std::span<const double> dw,
                            std::span<const double> pw, int out_c) {
    Tensor4 out(x.n, x.h, x.w, out_c);
    for (int i = 0; i < x.n; ++i)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx)
                for (int co = 0; co < out_c; ++co) {
                    double acc = 0.0;
                    for (int ci = 0; ci < x.c; ++ci) {
                        double mid = 0.0;
                        for (int dy = 0; dy < 3; ++dy)
                            for (int dx = 0; dx < 3; ++dx) {
                                const int yy = y + dy - 1, xxx = xx + dx - 1;
                                if (yy < 0 || yy >= x.h || xxx < 0 || xxx >= x.w) continue;
                                mid += x.at(i, yy, xxx, ci) * dw[(dy * 3 + dx) * x.c + ci];
                            }
                        acc += mid * pw[ci * out_c + co];
                    }
                    out.at(i, y, xx, co) = acc;
                }
    return out;
}

}  // namespace

TEST_CASE("tensor basics") {
    CHECK_THROWS_AS(Tensor4(0, 1, 1, 1), std::domain_error);
    Tensor4 t(2, 3, 4, 5);
    CHECK(t.size() == 2u * 3 * 4 * 5);
    t.at(1, 2, 3, 4) = 7.0;
    CHECK(t.data.back() == 7.0);

    const int idx[] = {1, 0};
    const Tensor4 g = gather_batch(t, idx);
    CHECK(g.n == 2);
    CHECK(g.at(0, 2, 3, 4) == 7.0);
    const int bad[] = {5};
    CHECK_THROWS_AS(gather_batch(t, bad), std::domain_error);
}

TEST_CASE("pad and crop round-trip") {
    std::mt19937_64 rng = make_rng(61);
    const Tensor4 t = random_tensor(2, 5, 6, 3, rng);
    const Tensor4 p = pad_spatial(t, 8, 8);
    CHECK(p.h == 8);
    CHECK(p.w == 8);
    CHECK(p.at(1, 4, 5, 2) == t.at(1, 4, 5, 2));
    CHECK(p.at(1, 7, 7, 0) == 0.0);
    const Tensor4 c = crop_spatial(p, 5, 6);
    CHECK(c.data == t.data);
    CHECK_THROWS_AS(pad_spatial(t, 4, 8), std::domain_error);
    CHECK_THROWS_AS(crop_spatial(t, 8, 8), std::domain_error);
}

TEST_CASE("concat_channels") {
    std::mt19937_64 rng = make_rng(62);
    const Tensor4 a = random_tensor(1, 2, 2, 3, rng);
    const Tensor4 b = random_tensor(1, 2, 2, 2, rng);
    const Tensor4 c = concat_channels(a, b);
    CHECK(c.c == 5);
    CHECK(c.at(0, 1, 1, 2) == a.at(0, 1, 1, 2));
    CHECK(c.at(0, 1, 1, 4) == b.at(0, 1, 1, 1));
    const Tensor4 d = random_tensor(1, 3, 2, 1, rng);
    CHECK_THROWS_AS(concat_channels(a, d), std::domain_error);
}

TEST_CASE("separable_conv2d: identity, zero, loop oracle") {
    std::mt19937_64 rng = make_rng(63);
    const Tensor4 x = random_tensor(1, 4, 4, 2, rng);

    // centered-delta depthwise kernel + identity pointwise = identity
    std::vector<double> dw(9 * 2, 0.0);
    dw[4 * 2 + 0] = 1.0;
    dw[4 * 2 + 1] = 1.0;
    std::vector<double> pw = {1.0, 0.0, 0.0, 1.0};
    const Tensor4 id = separable_conv2d(x, dw, pw, 2);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(id.data[i] == x.data[i]);

    // all-zero kernels give all-zero output
    std::vector<double> zero_dw(9 * 2, 0.0), zero_pw(2 * 3, 0.0);
    const Tensor4 z = separable_conv2d(x, zero_dw, zero_pw, 3);
    for (double v : z.data) CHECK(v == 0.0);

    // random small case against the nested-loop reference, exact match
    for (int rep = 0; rep < 10; ++rep) {
        const Tensor4 xr = random_tensor(1, 4, 4, 2, rng);
        std::vector<double> dwr(9 * 2), pwr(2 * 3);
        for (double& v : dwr) v = 2.0 * uniform_open(rng) - 1.0;
        for (double& v : pwr) v = 2.0 * uniform_open(rng) - 1.0;
        const Tensor4 got = separable_conv2d(xr, dwr, pwr, 3);
        const Tensor4 want = separable_reference(xr, dwr, pwr, 3);
        for (std::size_t i = 0; i < got.data.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-14));
    }
    CHECK_THROWS_AS(separable_conv2d(x, std::vector<double>(5, 0.0), pw, 2), std::domain_error);
}

TEST_CASE("conv2d_3x3 against a direct loop") {
    std::mt19937_64 rng = make_rng(64);
    const Tensor4 x = random_tensor(2, 5, 4, 3, rng);
    std::vector<double> k(9 * 3 * 2);
    for (double& v : k) v = 2.0 * uniform_open(rng) - 1.0;
    const Tensor4 got = conv2d_3x3(x, k, 2);
    for (int i = 0; i < x.n; ++i)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx)
                for (int co = 0; co < 2; ++co) {
                    double want = 0.0;
                    for (int dy = 0; dy < 3; ++dy)
                        for (int dx = 0; dx < 3; ++dx)
                            for (int ci = 0; ci < 3; ++ci) {
                                const int yy = y + dy - 1, xxx = xx + dx - 1;
                                if (yy < 0 || yy >= x.h || xxx < 0 || xxx >= x.w) continue;
                                want += x.at(i, yy, xxx, ci) * k[((dy * 3 + dx) * 3 + ci) * 2 + co];
                            }
                    CHECK(got.at(i, y, xx, co) == doctest::Approx(want).epsilon(1e-13));
                }
}

TEST_CASE("relu and max_pool2d") {
    Tensor4 x(1, 2, 2, 1);
    x.data = {-1.0, 2.0, 0.0, -3.5};
    const Tensor4 r = relu(x);
    CHECK(r.data[0] == 0.0);
    CHECK(r.data[1] == 2.0);
    CHECK(r.data[2] == 0.0);
    CHECK(r.data[3] == 0.0);

    // pooling a constant field keeps the constant
    Tensor4 c(1, 4, 4, 2);
    for (double& v : c.data) v = 3.25;
    const Tensor4 pc = max_pool2d(c);
    CHECK(pc.h == 2);
    CHECK(pc.w == 2);
    for (double v : pc.data) CHECK(v == 3.25);

    Tensor4 odd(1, 3, 4, 1);
    CHECK_THROWS_AS(max_pool2d(odd), std::domain_error);

    std::mt19937_64 rng = make_rng(65);
    const Tensor4 xr = random_tensor(2, 4, 6, 3, rng);
    const Tensor4 p = max_pool2d(xr);
    for (int i = 0; i < p.n; ++i)
        for (int y = 0; y < p.h; ++y)
            for (int xx = 0; xx < p.w; ++xx)
                for (int ch = 0; ch < p.c; ++ch) {
                    const double want = std::max({xr.at(i, 2 * y, 2 * xx, ch),
                                                  xr.at(i, 2 * y, 2 * xx + 1, ch),
                                                  xr.at(i, 2 * y + 1, 2 * xx, ch),
                                                  xr.at(i, 2 * y + 1, 2 * xx + 1, ch)});
                    CHECK(p.at(i, y, xx, ch) == want);
                }
}

TEST_CASE("bilinear_upsample2: hand-computed 2x2 checkerboard") {
    Tensor4 x(1, 2, 2, 1);
    x.data = {1.0, 0.0, 0.0, 1.0};
    const Tensor4 u = bilinear_upsample2(x);
    REQUIRE(u.h == 4);
    REQUIRE(u.w == 4);
    // half-pixel centers with edge clamping: row weights (1, .75/.25, .25/.75, 1)
    const double want[4][4] = {{1.0, 0.75, 0.25, 0.0},
                               {0.75, 0.625, 0.375, 0.25},
                               {0.25, 0.375, 0.625, 0.75},
                               {0.0, 0.25, 0.75, 1.0}};
    for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 4; ++xx)
            CHECK(u.at(0, y, xx, 0) == doctest::Approx(want[y][xx]).epsilon(1e-14));

    // upsample(pool(x)) restores the spatial dims
    std::mt19937_64 rng = make_rng(66);
    const Tensor4 t = random_tensor(1, 6, 8, 2, rng);
    const Tensor4 back = bilinear_upsample2(max_pool2d(t));
    CHECK(back.h == t.h);
    CHECK(back.w == t.w);
}

TEST_CASE("link_params: definition points and validity fuzz") {
    Tensor4 raw(1, 1, 1, 3);
    raw.data = {0.0, 0.0, 0.0};
    const Tensor4 g = link_params(raw, Family::gtcnd);
    CHECK(g.data[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.data[1] == 0.0);
    CHECK(g.data[2] == doctest::Approx(std::log(2.0) + 1e-3).epsilon(1e-12));

    const Tensor4 c = link_params(raw, Family::csgd);
    CHECK(c.data[0] == doctest::Approx(std::log(2.0) + 1e-3).epsilon(1e-12));
    CHECK(c.data[2] == doctest::Approx(-std::log(2.0) - 1e-3).epsilon(1e-12));

    std::mt19937_64 rng = make_rng(67);
    for (int rep = 0; rep < 2000; ++rep) {
        Tensor4 r(1, 1, 1, 3);
        for (double& v : r.data) v = 2000.0 * (uniform_open(rng) - 0.5);
        for (Family fam : {Family::gtcnd, Family::csgd}) {
            const Tensor4 p = link_params(r, fam);
            for (double v : p.data) CHECK(std::isfinite(v));
            if (fam == Family::gtcnd) {
                CHECK_NOTHROW(GtcndParams(p.data[0], p.data[1], p.data[2]));
            } else {
                CHECK_NOTHROW(CsgdParams(p.data[0], p.data[1], p.data[2]));
            }
        }
    }
    Tensor4 wrong(1, 1, 1, 2);
    CHECK_THROWS_AS(link_params(wrong, Family::gtcnd), std::domain_error);
}

TEST_CASE("crps_loss: degenerate dry forecast, consistency, mask") {
    // dry point-mass forecast everywhere, all-zero observations: loss 0
    Tensor4 params(1, 2, 2, 3);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            auto p = params.point(0, y, x);
            p[0] = 1.0;  // dry mass 1
            p[1] = 0.0;
            p[2] = 1.0;
        }
    Tensor4 obs(1, 2, 2, 1);
    CHECK(crps_loss(params, obs, {}, Family::gtcnd) == doctest::Approx(0.0).epsilon(1e-12));

    // a single grid point reduces to the closed form
    Tensor4 one(1, 1, 1, 3);
    one.data = {0.25, 1.0, 0.8};
    Tensor4 yobs(1, 1, 1, 1);
    yobs.data = {1.7};
    CHECK(crps_loss(one, yobs, {}, Family::gtcnd) ==
          doctest::Approx(crps_gtcnd(GtcndParams(0.25, 1.0, 0.8), 1.7)).epsilon(1e-14));

    // masked points contribute nothing, to the value or the gradient
    Tensor4 two(1, 1, 2, 3);
    two.data = {0.25, 1.0, 0.8, 0.9, -3.0, 5.0};
    Tensor4 obs2(1, 1, 2, 1);
    obs2.data = {1.7, 0.0};
    const std::uint8_t mask[2] = {1, 0};
    Tensor4 grad;
    const double masked = crps_loss(two, obs2, mask, Family::gtcnd, &grad);
    CHECK(masked == doctest::Approx(crps_gtcnd(GtcndParams(0.25, 1.0, 0.8), 1.7)).epsilon(1e-14));
    CHECK(grad.at(0, 0, 1, 0) == 0.0);
    CHECK(grad.at(0, 0, 1, 1) == 0.0);
    CHECK(grad.at(0, 0, 1, 2) == 0.0);

    const std::uint8_t none[2] = {0, 0};
    CHECK_THROWS_AS(crps_loss(two, obs2, none, Family::gtcnd), std::domain_error);

    // invalid parameters name the offending point
    Tensor4 badp(1, 1, 1, 3);
    badp.data = {1.5, 0.0, 1.0};
    try {
        crps_loss(badp, yobs, {}, Family::gtcnd);
        CHECK(false);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("(0,0)") != std::string::npos);
    }
}
