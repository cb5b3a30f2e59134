#include "gridcast/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gridcast/special_math.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

void RankHistogram::merge(const RankHistogram& other) {
    for (int i = 0; i < kClasses; ++i) counts[i] += other.counts[i];
    n_total += other.n_total;
}

RankHistogram rank_histogram_from_quantile_ranks(std::span<const int> ranks) {
    RankHistogram h;
    for (int r : ranks) {
        if (r < 1 || r > 108)
            throw std::domain_error("rank_histogram: quantile rank outside 1..108");
        h.counts[(r - 1) / 6] += 1;
    }
    h.n_total = ranks.size();
    return h;
}

RankHistogram rank_histogram_from_member_ranks(std::span<const int> ranks) {
    RankHistogram h;
    for (int r : ranks) {
        if (r < 1 || r > RankHistogram::kClasses)
            throw std::domain_error("rank_histogram: member rank outside 1..18");
        h.counts[r - 1] += 1;
    }
    h.n_total = ranks.size();
    return h;
}

namespace {

int rank_among(std::span<const double> values, double y, std::mt19937_64& rng) {
    std::size_t below = 0, tied = 0;
    for (double v : values) {
        if (v < y) ++below;
        else if (v == y) ++tied;
    }
    return static_cast<int>(below + 1 + uniform_index(rng, tied + 1));
}

}  // namespace

int observation_rank(const QuantileForecast& q, double y, std::mt19937_64& rng) {
    return rank_among(q.values(), y, rng);
}

int member_rank(std::span<const double> members, double y, std::mt19937_64& rng) {
    return rank_among(members, y, rng);
}

namespace {

// Orthonormal contrasts over the 18 classes: linear, symmetric V, and a
// one-period cosine, Gram-Schmidt'ed in that order (the V and cosine are
// both symmetric and not orthogonal to each other as drawn).
struct Contrasts {
    std::array<std::array<double, RankHistogram::kClasses>, 3> u;
};

const Contrasts& jpz_contrasts() {
    static const Contrasts c = [] {
        constexpr int n = RankHistogram::kClasses;
        std::array<std::array<double, n>, 3> raw{};
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i + 1) - 0.5 * (n + 1);
            raw[0][i] = t;
            raw[1][i] = std::fabs(t);
            raw[2][i] = std::cos(2.0 * 3.14159265358979323846 * (i + 0.5) / n);
        }
        Contrasts out{};
        for (int k = 0; k < 3; ++k) {
            std::array<double, n> v = raw[k];
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= n;
            for (double& x : v) x -= mean;
            for (int j = 0; j < k; ++j) {
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += v[i] * out.u[j][i];
                for (int i = 0; i < n; ++i) v[i] -= dot * out.u[j][i];
            }
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            for (int i = 0; i < n; ++i) out.u[k][i] = v[i] / norm;
        }
        return out;
    }();
    return c;
}

double chi2_1_sf(double stat) {
    // survival of chi-square with one degree of freedom
    return 1.0 - gamma_cdf(0.5, 0.5 * stat);
}

}  // namespace

JpzResult jpz_test(const RankHistogram& h, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("jpz_test: alpha must be in (0,1)");
    constexpr int n = RankHistogram::kClasses;
    if (h.n_total < 5ULL * n)
        throw std::domain_error("jpz_test: needs at least 5 expected counts per class (n >= 90)");
    const double expected = static_cast<double>(h.n_total) / n;
    std::array<double, n> dev{};
    for (int i = 0; i < n; ++i)
        dev[i] = (static_cast<double>(h.counts[i]) - expected) / std::sqrt(expected);

    const Contrasts& c = jpz_contrasts();
    auto project = [&](int k) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += c.u[k][i] * dev[i];
        return dot * dot;
    };
    JpzResult r;
    r.bias_stat = project(0);
    r.dispersion_stat = project(1);
    r.wave_stat = project(2);
    r.bias_p = chi2_1_sf(r.bias_stat);
    r.dispersion_p = chi2_1_sf(r.dispersion_stat);
    r.wave_p = chi2_1_sf(r.wave_stat);
    const double adj = 3.0;  // Bonferroni over the three components
    r.reject_flatness = std::min({r.bias_p, r.dispersion_p, r.wave_p}) * adj < alpha;
    return r;
}

double exceedance_prob(const GtcndParams& p, double t) {
    if (!(t >= 0.0)) throw std::domain_error("exceedance_prob: t must be >= 0");
    return 1.0 - gtcnd_cdf(p, t);
}

double exceedance_prob(const CsgdParams& p, double t) {
    if (!(t >= 0.0)) throw std::domain_error("exceedance_prob: t must be >= 0");
    return 1.0 - csgd_cdf(p, t);
}

double exceedance_prob(const QuantileForecast& q, double t) {
    if (!(t >= 0.0)) throw std::domain_error("exceedance_prob: t must be >= 0");
    return exceedance_from_quantiles(q, t);
}

RocCurve roc_curve(std::span<const double> probs, std::span<const std::uint8_t> events) {
    if (probs.size() != events.size())
        throw std::domain_error("roc_curve: probs/events length mismatch");
    std::size_t n_event = 0;
    for (auto e : events) n_event += e ? 1 : 0;
    const std::size_t n_non = events.size() - n_event;
    if (n_event == 0 || n_non == 0)
        throw std::domain_error("roc_curve: needs at least one event and one non-event");

    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b;
    });

    RocCurve roc;
    roc.false_alarm_rate.push_back(0.0);
    roc.hit_rate.push_back(0.0);
    std::size_t hits = 0, fas = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double p = probs[order[i]];
        // group ties: one curve point per distinct predicted probability
        while (i < order.size() && probs[order[i]] == p) {
            if (events[order[i]]) ++hits;
            else ++fas;
            ++i;
        }
        roc.false_alarm_rate.push_back(static_cast<double>(fas) / static_cast<double>(n_non));
        roc.hit_rate.push_back(static_cast<double>(hits) / static_cast<double>(n_event));
    }
    double auc = 0.0;
    for (std::size_t k = 1; k < roc.hit_rate.size(); ++k)
        auc += 0.5 * (roc.hit_rate[k] + roc.hit_rate[k - 1]) *
               (roc.false_alarm_rate[k] - roc.false_alarm_rate[k - 1]);
    roc.auc = auc;
    return roc;
}

std::size_t CensorMask::count() const {
    std::size_t n = 0;
    for (auto k : keep) n += k ? 1 : 0;
    return n;
}

CensorMask make_censor_mask(const Tensor4& land_mask, int border) {
    if (land_mask.n != 1 || land_mask.c != 1)
        throw std::domain_error("make_censor_mask: expected a 1 x h x w x 1 mask field");
    if (border < 0) throw std::domain_error("make_censor_mask: border must be >= 0");
    CensorMask m;
    m.h = land_mask.h;
    m.w = land_mask.w;
    m.keep.assign(static_cast<std::size_t>(m.h) * m.w, 0);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
            const bool interior =
                y >= border && y < m.h - border && x >= border && x < m.w - border;
            if (interior && land_mask.at(0, y, x, 0) > 0.5)
                m.keep[static_cast<std::size_t>(y) * m.w + x] = 1;
        }
    return m;
}

CrpssMap crpss_map(const Tensor4& scores, const Tensor4& scores_ref, const CensorMask& mask) {
    if (!scores.same_shape(scores_ref) || scores.n != 1 || scores.c != 1)
        throw std::domain_error("crpss_map: expected matching 1 x h x w x 1 score maps");
    if (mask.h != scores.h || mask.w != scores.w)
        throw std::domain_error("crpss_map: mask dims mismatch");

    CrpssMap out;
    out.skill = Tensor4(1, scores.h, scores.w, 1);
    std::vector<double> kept, kept_ref;
    for (int y = 0; y < scores.h; ++y)
        for (int x = 0; x < scores.w; ++x) {
            const double s = scores.at(0, y, x, 0);
            const double r = scores_ref.at(0, y, x, 0);
            out.skill.at(0, y, x, 0) =
                r == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (r - s) / r;
            if (mask.at(y, x)) {
                kept.push_back(s);
                kept_ref.push_back(r);
            }
        }
    if (!kept.empty()) {
        const double mean_ref = mean_of(kept_ref);
        if (mean_ref != 0.0) out.masked_mean = (mean_ref - mean_of(kept)) / mean_ref;
    }
    return out;
}

}  // namespace gridcast
