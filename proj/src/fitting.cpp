#include "gridcast/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcast/special_math.hpp"
#include "gridcast/util.hpp"

namespace gridcast {

EmpiricalMoments empirical_moments(const QuantileForecast& q) {
    const auto& v = q.values();
    EmpiricalMoments m;
    std::size_t zeros = 0;
    std::vector<double> p1(v.size()), p2(v.size()), p3(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0.0) ++zeros;
        p1[i] = v[i];
        p2[i] = v[i] * v[i];
        p3[i] = v[i] * v[i] * v[i];
    }
    m.dry_frac = static_cast<double>(zeros) / static_cast<double>(v.size());
    m.m1 = mean_of(p1);
    m.m2 = mean_of(p2);
    m.m3 = mean_of(p3);
    return m;
}

namespace {

double inverse_mills(double a) { return std_normal_hazard(a); }

// var/mean^2 of the zero-truncated normal as a function of the standardized
// truncation point; strictly increasing from ~0 to ~1 on the search box.
double truncated_ratio(double a) {
    const double r = inverse_mills(a);
    return (1.0 + a * r - r * r) / ((r - a) * (r - a));
}

constexpr double kAlphaLo = -37.0;
constexpr double kAlphaHi = 37.0;

}  // namespace

FitResult<GtcndParams> fit_gtcnd(double dry_frac, double m1, double m2) {
    FitResult<GtcndParams> out;
    if (!(dry_frac >= 0.0 && dry_frac <= 1.0)) {
        out.reason = "dry_frac outside [0,1]";
        return out;
    }
    if (dry_frac >= 1.0) {
        out.params = GtcndParams(1.0, 0.0, 1.0);  // sentinel continuous part
        return out;
    }
    const double wet = 1.0 - dry_frac;
    const double mean_t = m1 / wet;       // continuous-part mean
    const double m2_t = m2 / wet;         // continuous-part second raw moment
    const double var_t = m2_t - mean_t * mean_t;
    if (!(mean_t > 0.0)) {
        out.reason = "nonpositive continuous-part mean";
        return out;
    }
    if (!(var_t > 0.0)) {
        out.reason = "degenerate variance";
        return out;
    }
    const double rho = var_t / (mean_t * mean_t);
    if (!(rho > truncated_ratio(kAlphaLo)) || !(rho < truncated_ratio(kAlphaHi))) {
        out.reason = "variance/mean^2 outside attainable range";
        return out;
    }
    double lo = kAlphaLo, hi = kAlphaHi;
    int it = 0;
    while (hi - lo > 1e-13 * std::max(1.0, std::fabs(lo) + std::fabs(hi)) && it < 200) {
        const double mid = 0.5 * (lo + hi);
        if (truncated_ratio(mid) < rho) lo = mid;
        else hi = mid;
        ++it;
    }
    const double a = 0.5 * (lo + hi);
    const double scale = mean_t / (inverse_mills(a) - a);
    const double location = -a * scale;
    if (!(scale > 0.0) || !std::isfinite(location)) {
        out.reason = "solver left the parameter box";
        return out;
    }
    out.params = GtcndParams(dry_frac, location, scale);
    out.iterations = it;
    const GtcndParams& p = *out.params;
    const double m1_fit = gtcnd_mean(p);
    const double m2_fit = gtcnd_variance(p) + m1_fit * m1_fit;
    out.residual = std::max(std::fabs(m1_fit - m1) / std::max(m1, 1e-300),
                            std::fabs(m2_fit - m2) / std::max(m2, 1e-300));
    return out;
}

namespace {

struct Vec3 {
    double x[3];
};

// Moment residuals scaled by the targets, in log-parameter space
// (shape, scale, -shift all positive).
Vec3 csgd_residual(const double* logp, const double* target, const double* scale) {
    const CsgdParams p(std::exp(logp[0]), std::exp(logp[1]), -std::exp(logp[2]));
    const RawMoments3 m = csgd_moments(p);
    return {{(m.m1 - target[0]) / scale[0], (m.m2 - target[1]) / scale[1],
             (m.m3 - target[2]) / scale[2]}};
}

double norm3(const Vec3& v) {
    return std::sqrt(v.x[0] * v.x[0] + v.x[1] * v.x[1] + v.x[2] * v.x[2]);
}

bool solve3(double a[3][3], const double b[3], double out[3]) {
    // Gaussian elimination with partial pivoting.
    int idx[3] = {0, 1, 2};
    double rhs[3] = {b[0], b[1], b[2]};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(a[idx[r]][col]) > std::fabs(a[idx[piv]][col])) piv = r;
        std::swap(idx[col], idx[piv]);
        const double d = a[idx[col]][col];
        if (std::fabs(d) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[idx[r]][col] / d;
            for (int c = col; c < 3; ++c) a[idx[r]][c] -= f * a[idx[col]][c];
            rhs[idx[r]] -= f * rhs[idx[col]];
        }
    }
    for (int row = 2; row >= 0; --row) {
        double s = rhs[idx[row]];
        for (int c = row + 1; c < 3; ++c) s -= a[idx[row]][c] * out[c];
        out[row] = s / a[idx[row]][row];
    }
    return true;
}

}  // namespace

FitResult<CsgdParams> fit_csgd(double m1, double m2, double m3) {
    FitResult<CsgdParams> out;
    const double var = m2 - m1 * m1;
    if (!(m1 > 0.0)) {
        out.reason = "nonpositive mean";
        return out;
    }
    if (!(var > 0.0)) {
        out.reason = "infeasible variance (m2 <= m1^2)";
        return out;
    }
    if (!std::isfinite(m3)) {
        out.reason = "non-finite third moment";
        return out;
    }

    // Uncensored shifted-gamma start: mean = k*th + de, var = k*th^2,
    // third central moment = 2*k*th^3.
    const double mu3c = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
    double th0 = mu3c > 0.0 ? mu3c / (2.0 * var) : std::sqrt(var);
    th0 = std::clamp(th0, 1e-6, 1e6);
    double k0 = std::clamp(var / (th0 * th0), 1e-3, 1e9);
    double de0 = std::min(m1 - k0 * th0, -1e-3);

    const double target[3] = {m1, m2, m3};
    const double scale[3] = {std::max(m1, 1e-12), std::max(m2, 1e-12), std::max(std::fabs(m3), 1e-12)};
    double x[3] = {std::log(k0), std::log(th0), std::log(-de0)};

    const int max_iter = 200;
    const double fd_step = 1e-6;
    Vec3 f = csgd_residual(x, target, scale);
    double fn = norm3(f);
    int it = 0;
    for (; it < max_iter && fn > 1e-12; ++it) {
        double jac[3][3];
        for (int j = 0; j < 3; ++j) {
            double xp[3] = {x[0], x[1], x[2]};
            double xm[3] = {x[0], x[1], x[2]};
            xp[j] += fd_step;
            xm[j] -= fd_step;
            const Vec3 fp = csgd_residual(xp, target, scale);
            const Vec3 fm = csgd_residual(xm, target, scale);
            for (int i = 0; i < 3; ++i) jac[i][j] = (fp.x[i] - fm.x[i]) / (2.0 * fd_step);
        }
        double step[3];
        const double rhs[3] = {-f.x[0], -f.x[1], -f.x[2]};
        if (!solve3(jac, rhs, step)) break;
        // Damped update with simple backtracking; cap the log-step so a wild
        // Jacobian cannot jump out of double range.
        const double cap = 4.0;
        for (double& s : step) s = std::clamp(s, -cap, cap);
        double t = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            double xn[3] = {x[0] + t * step[0], x[1] + t * step[1], x[2] + t * step[2]};
            const Vec3 fnn = csgd_residual(xn, target, scale);
            if (norm3(fnn) < fn) {
                x[0] = xn[0];
                x[1] = xn[1];
                x[2] = xn[2];
                f = fnn;
                fn = norm3(f);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;
    }
    out.iterations = it;
    out.residual = fn;
    if (fn > 1e-6) {
        out.reason = "moment equations did not converge";
        return out;
    }
    out.params = CsgdParams(std::exp(x[0]), std::exp(x[1]), -std::exp(x[2]));
    return out;
}

std::vector<std::size_t> top_levels(std::size_t n_levels, std::size_t count) {
    count = std::min(count, n_levels);
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = n_levels - count + i;
    return idx;
}

namespace {

// One fit-and-raise pass; returns false on fit failure. Only suffix update
// sets are allowed, so max-ing against a common quantile function keeps the
// vector nondecreasing.
bool tail_update_pass(std::vector<double>& values, const std::vector<double>& grid,
                      const std::vector<std::size_t>& levels, Family family,
                      const QuantileForecast::Levels& levels_handle) {
    const QuantileForecast current(levels_handle, values);
    const EmpiricalMoments em = empirical_moments(current);
    if (family == Family::gtcnd) {
        const FitResult<GtcndParams> fit = fit_gtcnd(em.dry_frac, em.m1, em.m2);
        if (!fit.ok()) return false;
        for (std::size_t i : levels)
            values[i] = std::max(values[i], gtcnd_quantile(*fit.params, grid[i]));
    } else {
        const FitResult<CsgdParams> fit = fit_csgd(em.m1, em.m2, em.m3);
        if (!fit.ok()) return false;
        for (std::size_t i : levels)
            values[i] = std::max(values[i], csgd_quantile(*fit.params, grid[i]));
    }
    return true;
}

}  // namespace

TailExtendResult tail_extend(const QuantileForecast& q, const TailConfig& cfg) {
    if (!(cfg.activation_threshold >= 0.0))
        throw std::domain_error("tail_extend: activation_threshold must be >= 0");
    if (!(cfg.activation_prob > 0.0 && cfg.activation_prob < 1.0))
        throw std::domain_error("tail_extend: activation_prob must be in (0,1)");

    std::vector<std::size_t> levels =
        cfg.update_levels.empty() ? top_levels(q.size(), 10) : cfg.update_levels;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (std::size_t j = 0; j < levels.size(); ++j) {
        // The update set must be a suffix of the level grid; otherwise the
        // raised values could break monotonicity against untouched levels.
        if (levels[j] != q.size() - levels.size() + j)
            throw std::domain_error("tail_extend: update levels must be the top of the grid");
    }

    TailExtendResult out{q, false, false};
    const double exceed = exceedance_from_quantiles(q, cfg.activation_threshold);
    if (exceed < cfg.activation_prob) return out;
    out.activated = true;

    // Iterate fit-and-raise to a fixed point: raising quantiles feeds back
    // into the moments, and stopping only when nothing moves makes a second
    // tail_extend call an exact no-op.
    std::vector<double> values = q.values();
    const auto& grid = q.levels();
    for (int pass = 0; pass < 100; ++pass) {
        std::vector<double> before = values;
        if (!tail_update_pass(values, grid, levels, cfg.family, q.levels_handle())) {
            out.fit_failed = true;
            out.forecast = q;  // unchanged on failure
            return out;
        }
        if (values == before) break;
    }
    out.forecast = QuantileForecast(q.levels_handle(), std::move(values));
    return out;
}

}  // namespace gridcast
