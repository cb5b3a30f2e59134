#include "gridcast/scoring.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gridcast/util.hpp"

using namespace gridcast;

namespace {

GtcndParams random_gtcnd(std::mt19937_64& rng) {
    return GtcndParams(0.9 * uniform_open(rng), -2.0 + 6.0 * uniform_open(rng),
                       0.2 + 2.8 * uniform_open(rng));
}

CsgdParams random_csgd(std::mt19937_64& rng) {
    const double shape = 0.4 + 5.0 * uniform_open(rng);
    const double scale = 0.3 + 2.5 * uniform_open(rng);
    const double censor = 0.05 + 1.4 * uniform_open(rng);
    return CsgdParams(shape, scale, -censor * scale);
}

}  // namespace

TEST_CASE("crps_numeric on degenerate point forecasts") {
    // forecast: all mass at zero (GTCND with dry = 1) scored at y = 2
    const GtcndParams dry(1.0, 0.0, 1.0);
    CHECK(crps_numeric(numeric_forecast(dry), 2.0, 1e-10) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(crps_gtcnd(dry, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(crps_numeric(numeric_forecast(dry), 1.0, -1.0), std::domain_error);
}

TEST_CASE("gtcnd closed form: untruncated-normal limit at the mean") {
    // mu = 10 sigma = 1: truncation negligible, CRPS(N(mu,1), mu) = (sqrt2-1)/sqrt(pi)
    const GtcndParams p(0.0, 10.0, 1.0);
    const double expected = 0.23369497725510907;
    CHECK(crps_gtcnd(p, 10.0) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(crps_numeric(numeric_forecast(p), 10.0, 1e-10) ==
          doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("closed forms match the quadrature oracle") {
    std::mt19937_64 rng = make_rng(41);
    for (int rep = 0; rep < 300; ++rep) {
        const double y = -1.0 + 10.0 * uniform_open(rng);
        const GtcndParams g = random_gtcnd(rng);
        const double cf = crps_gtcnd(g, y);
        const double oracle = crps_numeric(numeric_forecast(g), y, 1e-9);
        CHECK(std::fabs(cf - oracle) <= 1e-6 * (1.0 + oracle));
        CHECK(cf >= 0.0);

        const CsgdParams c = random_csgd(rng);
        const double cf2 = crps_csgd(c, y);
        const double oracle2 = crps_numeric(numeric_forecast(c), y, 1e-9);
        CHECK(std::fabs(cf2 - oracle2) <= 1e-6 * (1.0 + oracle2));
        CHECK(cf2 >= 0.0);
    }
}

TEST_CASE("csgd closed form: exponential limit") {
    // shape 1, scale 1, shift -> 0: CRPS(Exp(1), y) = y + 2 e^-y - 3/2
    const CsgdParams p(1.0, 1.0, -1e-12);
    const double y = 1.3;
    CHECK(crps_csgd(p, y) == doctest::Approx(y + 2.0 * std::exp(-y) - 1.5).epsilon(1e-9));
    // deep censoring: near-certain dry forecast scored at 0
    const CsgdParams deep(0.5, 0.1, -10.0);
    CHECK(crps_csgd(deep, 0.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("representation equivalence: threshold, pinball, kernel routes") {
    std::mt19937_64 rng = make_rng(42);
    for (int rep = 0; rep < 25; ++rep) {
        const double y = -0.5 + 8.0 * uniform_open(rng);
        const GtcndParams g = random_gtcnd(rng);
        const double closed = crps_gtcnd(g, y);
        const NumericForecast f = numeric_forecast(g);
        CHECK(crps_numeric(f, y, 1e-9) == doctest::Approx(closed).epsilon(1e-4));
        CHECK(crps_pinball_numeric(f, y, 1e-7) == doctest::Approx(closed).epsilon(1e-4));
        CHECK(crps_kernel_numeric(f, y, 1e-9) == doctest::Approx(closed).epsilon(1e-4));

        const CsgdParams c = random_csgd(rng);
        const double closed2 = crps_csgd(c, y);
        const NumericForecast f2 = numeric_forecast(c);
        CHECK(crps_numeric(f2, y, 1e-9) == doctest::Approx(closed2).epsilon(1e-4));
        CHECK(crps_pinball_numeric(f2, y, 1e-7) == doctest::Approx(closed2).epsilon(1e-4));
        CHECK(crps_kernel_numeric(f2, y, 1e-9) == doctest::Approx(closed2).epsilon(1e-4));
    }
}

TEST_CASE("ensemble estimators: hand values and degenerate cases") {
    const double two[] = {0.0, 2.0};
    CHECK(crps_ensemble_fair(two, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(crps_ensemble_nrg(two, 1.0) == doctest::Approx(0.5).epsilon(1e-15));

    const double equal[] = {1.5, 1.5, 1.5};
    CHECK(crps_ensemble_fair(equal, 4.0) == doctest::Approx(2.5).epsilon(1e-15));

    const double single[] = {3.0};
    CHECK(crps_ensemble_nrg(single, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(crps_ensemble_fair(single, 1.0), std::domain_error);
    CHECK_THROWS_AS(crps_ensemble_nrg(std::span<const double>{}, 1.0), std::domain_error);
}

TEST_CASE("fair <= nrg, nrg >= 0") {
    std::mt19937_64 rng = make_rng(43);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t m = 2 + uniform_index(rng, 30);
        std::vector<double> members(m);
        for (double& v : members) v = 5.0 * uniform_open(rng);
        const double y = 6.0 * uniform_open(rng) - 0.5;
        const double fair = crps_ensemble_fair(members, y);
        const double nrg = crps_ensemble_nrg(members, y);
        CHECK(fair <= nrg + 1e-12);
        CHECK(nrg >= -1e-12);
    }
}

TEST_CASE("fair estimator is unbiased for the closed form") {
    const GtcndParams p(0.2, 1.5, 1.0);
    const double y = 2.2;
    const double truth = crps_gtcnd(p, y);
    std::mt19937_64 rng = make_rng(44);
    const int reps = 10'000, m = 1000;
    std::vector<double> vals(reps);
    std::vector<double> members(m);
    for (int r = 0; r < reps; ++r) {
        for (double& v : members) v = gtcnd_sample(p, rng);
        vals[r] = crps_ensemble_fair(members, y);
    }
    const double mean = mean_of(vals);
    CHECK(mean == doctest::Approx(truth).epsilon(0.02));
}

TEST_CASE("pinball") {
    CHECK(pinball(1.0, 1.0, 0.3) == 0.0);
    CHECK(pinball(2.5, 1.0, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(pinball(1.0, 2.5, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(pinball(1.0, 3.0, 0.9) == doctest::Approx(3.6).epsilon(1e-15));
    CHECK_THROWS_AS(pinball(1.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(pinball(1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("crps_from_quantiles") {
    const auto levels = QuantileForecast::default_levels();
    std::vector<double> flat(levels->size(), 2.0);
    CHECK(crps_from_quantiles(QuantileForecast(levels, flat), 2.0) == 0.0);

    // single-level grid at alpha = 1/2 reduces to absolute error
    const auto median_only = QuantileForecast::make_levels({0.5});
    CHECK(crps_from_quantiles(QuantileForecast(median_only, {1.0}), 3.0) ==
          doctest::Approx(2.0).epsilon(1e-15));

    // quantiles of a known GTCND: discretization error within 2 percent
    std::mt19937_64 rng = make_rng(45);
    for (int rep = 0; rep < 40; ++rep) {
        const GtcndParams p = random_gtcnd(rng);
        std::vector<double> q(levels->size());
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = gtcnd_quantile(p, (*levels)[i]);
        const QuantileForecast qf(levels, q);
        const double y = gtcnd_sample(p, rng) + 0.3 * uniform_open(rng);
        const double approx = crps_from_quantiles(qf, y);
        const double exact = crps_gtcnd(p, y);
        CHECK(std::fabs(approx - exact) <= 0.02 * (exact + 0.05));
    }

    CHECK_THROWS_AS(QuantileForecast(levels, std::vector<double>(107, -1.0)), std::domain_error);
    std::vector<double> decreasing(levels->size(), 1.0);
    decreasing[50] = 0.5;
    CHECK_THROWS_AS(QuantileForecast(levels, decreasing), std::domain_error);
}

TEST_CASE("skill_score") {
    CHECK(*skill_score(0.5, 0.5) == 0.0);
    CHECK(*skill_score(0.0, 0.7) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(!skill_score(0.4, 0.0).has_value());
    CHECK(*skill_score(0.28492, 0.3725) == doctest::Approx(0.23511409395973154).epsilon(1e-9));
}

TEST_CASE("brier_exceedance") {
    CHECK(brier_exceedance(1.0, 0.5, 1.0) == 0.0);
    CHECK(brier_exceedance(0.5, 3.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(brier_exceedance(0.5, 0.2, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(brier_exceedance(1.2, 0.5, 1.0), std::domain_error);

    // integrating the Brier integrand over thresholds approximates the CRPS
    const GtcndParams p(0.25, 1.0, 0.8);
    const double y = 1.7;
    const int n = 200'000;
    const double hi = 12.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) * hi / n;
        sum += brier_exceedance(gtcnd_cdf(p, t), y, t);
    }
    CHECK(sum * hi / n == doctest::Approx(crps_gtcnd(p, y)).epsilon(1e-4));
}

TEST_CASE("summarize_scores") {
    const double xs[] = {1.0, 2.0, 3.0};
    const ScoreSummary s = summarize_scores(xs, true);
    CHECK(s.mean_score == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.n == 3);
    CHECK(s.per_point.size() == 3);
    CHECK(summarize_scores(xs, false).per_point.empty());
    CHECK_THROWS_AS(summarize_scores({}, false), std::domain_error);
}

TEST_CASE("batch scoring is order-independent to 1e-12") {
    std::mt19937_64 rng = make_rng(46);
    std::vector<double> xs(10'000);
    for (double& v : xs) v = uniform_open(rng) * 3.0;
    const double a = mean_of(xs);
    std::reverse(xs.begin(), xs.end());
    const double b = mean_of(xs);
    CHECK(std::fabs(a - b) <= 1e-12);
}
