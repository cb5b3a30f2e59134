#include "gridcast/verification.hpp"

#include <doctest.h>

#include <cmath>

#include "gridcast/util.hpp"

using namespace gridcast;

namespace {

QuantileForecast forecast_of_gtcnd(const GtcndParams& p) {
    const auto levels = QuantileForecast::default_levels();
    std::vector<double> v(levels->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = gtcnd_quantile(p, (*levels)[i]);
    return {levels, std::move(v)};
}

}  // namespace

TEST_CASE("observation_rank extremes and tie randomization") {
    const auto levels = QuantileForecast::default_levels();
    std::vector<double> v(levels->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + static_cast<double>(i);
    const QuantileForecast q(levels, v);
    std::mt19937_64 rng = make_rng(81);
    CHECK(observation_rank(q, 0.5, rng) == 1);
    CHECK(observation_rank(q, 1e9, rng) == 108);

    // all quantiles zero and a zero observation: rank uniform over 1..108
    const QuantileForecast dry(levels, std::vector<double>(107, 0.0));
    const int reps = 100'000;
    std::array<std::uint64_t, 108> counts{};
    for (int r = 0; r < reps; ++r) counts[observation_rank(dry, 0.0, rng) - 1] += 1;
    const double expected = static_cast<double>(reps) / 108.0;
    double chi2 = 0.0;
    for (auto cgot : counts) {
        const double d = static_cast<double>(cgot) - expected;
        chi2 += d * d / expected;
    }
    // chi-square(107): far tails only
    CHECK(chi2 > 60.0);
    CHECK(chi2 < 170.0);
}

TEST_CASE("rank_histogram grouping") {
    std::vector<int> ranks = {1, 6, 7, 108};
    const RankHistogram h = rank_histogram_from_quantile_ranks(ranks);
    CHECK(h.counts[0] == 2);  // ranks 1..6
    CHECK(h.counts[1] == 1);  // ranks 7..12
    CHECK(h.counts[17] == 1);
    CHECK(h.n_total == 4);
    std::vector<int> bad = {0};
    CHECK_THROWS_AS(rank_histogram_from_quantile_ranks(bad), std::domain_error);
    std::vector<int> bad2 = {109};
    CHECK_THROWS_AS(rank_histogram_from_quantile_ranks(bad2), std::domain_error);

    std::vector<int> member_ranks = {1, 18, 18};
    const RankHistogram hm = rank_histogram_from_member_ranks(member_ranks);
    CHECK(hm.counts[0] == 1);
    CHECK(hm.counts[17] == 2);
    std::vector<int> bad3 = {19};
    CHECK_THROWS_AS(rank_histogram_from_member_ranks(bad3), std::domain_error);

    // uniform ranks give near-uniform counts and preserve n_total
    std::mt19937_64 rng = make_rng(82);
    std::vector<int> uni(108'000);
    for (int& r : uni) r = 1 + static_cast<int>(uniform_index(rng, 108));
    const RankHistogram hu = rank_histogram_from_quantile_ranks(uni);
    CHECK(hu.n_total == uni.size());
    for (auto c : hu.counts) {
        CHECK(c > 5400);
        CHECK(c < 6600);
    }
}

TEST_CASE("jpz_test: exact uniform counts, guards") {
    RankHistogram h;
    for (auto& c : h.counts) c = 100;
    h.n_total = 1800;
    const JpzResult r = jpz_test(h, 0.05);
    CHECK(r.bias_stat == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.dispersion_stat == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.wave_stat == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(!r.reject_flatness);

    RankHistogram tiny;
    tiny.n_total = 50;
    CHECK_THROWS_AS(jpz_test(tiny, 0.05), std::domain_error);
    CHECK_THROWS_AS(jpz_test(h, 0.0), std::domain_error);
}

TEST_CASE("jpz_test: type-I error near alpha for uniform ranks") {
    std::mt19937_64 rng = make_rng(83);
    const int histograms = 4000, n = 1000;
    int rejects = 0;
    for (int rep = 0; rep < histograms; ++rep) {
        std::vector<int> ranks(n);
        for (int& r : ranks) r = 1 + static_cast<int>(uniform_index(rng, 108));
        const RankHistogram h = rank_histogram_from_quantile_ranks(ranks);
        if (jpz_test(h, 0.05).reject_flatness) ++rejects;
    }
    const double rate = static_cast<double>(rejects) / histograms;
    CHECK(rate > 0.030);
    CHECK(rate < 0.068);
}

TEST_CASE("jpz_test: u-shape trips the dispersion component") {
    // underdispersed: both extreme classes overloaded
    RankHistogram h;
    for (auto& c : h.counts) c = 80;
    h.counts[0] = 280;
    h.counts[17] = 280;
    h.n_total = 16 * 80 + 2 * 280;
    const JpzResult r = jpz_test(h, 0.05);
    CHECK(r.reject_flatness);
    CHECK(r.dispersion_p < 0.05 / 3.0);
    CHECK(r.dispersion_stat > r.bias_stat);

    // biased: monotone-ish slope trips the linear component
    RankHistogram hb;
    std::uint64_t total = 0;
    for (int i = 0; i < 18; ++i) {
        hb.counts[i] = 180 - 8 * i;
        total += hb.counts[i];
    }
    hb.n_total = total;
    const JpzResult rb = jpz_test(hb, 0.05);
    CHECK(rb.reject_flatness);
    CHECK(rb.bias_p < 0.05 / 3.0);
    CHECK(rb.bias_stat > rb.dispersion_stat);
}

TEST_CASE("calibrated forecasts pass the flatness test at roughly 1 - alpha") {
    std::mt19937_64 rng = make_rng(84);
    const int histograms = 300, n = 500;
    int rejects = 0;
    for (int rep = 0; rep < histograms; ++rep) {
        const GtcndParams p(0.2 + 0.4 * uniform_open(rng), 0.5 + uniform_open(rng),
                            0.5 + uniform_open(rng));
        const QuantileForecast q = forecast_of_gtcnd(p);
        std::vector<int> ranks(n);
        for (int& r : ranks) r = observation_rank(q, gtcnd_sample(p, rng), rng);
        if (jpz_test(rank_histogram_from_quantile_ranks(ranks), 0.05).reject_flatness)
            ++rejects;
    }
    CHECK(static_cast<double>(rejects) / histograms < 0.12);
}

TEST_CASE("exceedance_prob") {
    const GtcndParams g(0.3, 1.0, 1.0);
    CHECK(exceedance_prob(g, 0.0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(exceedance_prob(g, 1e6) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(exceedance_prob(g, -1.0), std::domain_error);

    const CsgdParams c(2.0, 1.5, -0.7);
    CHECK(exceedance_prob(c, 0.0) == doctest::Approx(1.0 - csgd_dry_mass(c)).epsilon(1e-12));

    // interpolated quantile-forecast exceedance within 2 percent
    const auto levels = QuantileForecast::default_levels();
    std::vector<double> v(levels->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = csgd_quantile(c, (*levels)[i]);
    const QuantileForecast q(levels, v);
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        const double want = exceedance_prob(c, t);
        if (want > 0.02) CHECK(exceedance_prob(q, t) == doctest::Approx(want).epsilon(0.02));
    }
}

TEST_CASE("roc_curve: separable, constant, identical-to-events") {
    const double sep[] = {0.9, 0.8, 0.2, 0.1};
    const std::uint8_t ev[] = {1, 1, 0, 0};
    const RocCurve r = roc_curve(sep, ev);
    CHECK(r.auc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.false_alarm_rate.front() == 0.0);
    CHECK(r.hit_rate.front() == 0.0);
    CHECK(r.false_alarm_rate.back() == 1.0);
    CHECK(r.hit_rate.back() == 1.0);

    const double exact[] = {1.0, 1.0, 0.0, 0.0};
    const RocCurve re = roc_curve(exact, ev);
    bool through_corner = false;
    for (std::size_t i = 0; i < re.hit_rate.size(); ++i)
        if (re.false_alarm_rate[i] == 0.0 && re.hit_rate[i] == 1.0) through_corner = true;
    CHECK(through_corner);

    const std::uint8_t none[] = {0, 0, 0, 0};
    CHECK_THROWS_AS(roc_curve(sep, none), std::domain_error);
    const double short_p[] = {0.5};
    CHECK_THROWS_AS(roc_curve(short_p, ev), std::domain_error);
}

TEST_CASE("roc_curve: monotone points, random-guess AUC, transform invariance") {
    std::mt19937_64 rng = make_rng(85);
    const int n = 10'000;
    std::vector<double> probs(n);
    std::vector<std::uint8_t> events(n);
    for (int i = 0; i < n; ++i) {
        probs[i] = uniform_open(rng);
        events[i] = uniform_open(rng) < 0.3 ? 1 : 0;
    }
    const RocCurve r = roc_curve(probs, events);
    CHECK(r.auc == doctest::Approx(0.5).epsilon(0.04));
    for (std::size_t i = 1; i < r.hit_rate.size(); ++i) {
        CHECK(r.false_alarm_rate[i] >= r.false_alarm_rate[i - 1]);
        CHECK(r.hit_rate[i] >= r.hit_rate[i - 1]);
    }

    // strictly increasing transform leaves the curve unchanged
    std::vector<double> squashed(n);
    for (int i = 0; i < n; ++i) squashed[i] = std::atan(3.0 * probs[i]);
    const RocCurve rt = roc_curve(squashed, events);
    CHECK(rt.auc == doctest::Approx(r.auc).epsilon(1e-12));
}

TEST_CASE("censor mask and crpss_map") {
    Tensor4 land(1, 6, 6, 1);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) land.at(0, y, x, 0) = x >= 3 ? 1.0 : 0.0;
    const CensorMask mask = make_censor_mask(land, 1);
    CHECK(mask.count() == 8);  // interior land cells only
    CHECK(!mask.at(0, 3));     // border row excluded
    CHECK(!mask.at(2, 2));     // sea excluded
    CHECK(mask.at(2, 3));

    Tensor4 s(1, 6, 6, 1), r(1, 6, 6, 1);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) {
            r.at(0, y, x, 0) = 2.0;
            s.at(0, y, x, 0) = 2.0;
        }
    const CrpssMap same = crpss_map(s, r, mask);
    for (double v : same.skill.data) CHECK(v == 0.0);
    REQUIRE(same.masked_mean.has_value());
    CHECK(*same.masked_mean == 0.0);

    // single-point mask reproduces that point's skill
    CensorMask one;
    one.h = 6;
    one.w = 6;
    one.keep.assign(36, 0);
    one.keep[3 * 6 + 4] = 1;
    s.at(0, 3, 4, 0) = 1.0;
    const CrpssMap single = crpss_map(s, r, one);
    CHECK(*single.masked_mean == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(single.skill.at(0, 3, 4, 0) == doctest::Approx(0.5).epsilon(1e-12));

    // zero reference flagged as undefined, not a crash
    Tensor4 rz(1, 6, 6, 1);
    const CrpssMap undef = crpss_map(s, rz, mask);
    CHECK(std::isnan(undef.skill.at(0, 0, 0, 0)));
    CHECK(!undef.masked_mean.has_value());
}
