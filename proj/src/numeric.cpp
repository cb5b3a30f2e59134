#include "gridcast/numeric.hpp"

#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gridcast {

namespace {

// 15-point Kronrod nodes/weights on [-1,1] with the embedded 7-point Gauss rule.
constexpr double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                            0.741531185599394, 0.586087235467691, 0.405845151377397,
                            0.207784955007898, 0.000000000000000};
constexpr double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                            0.140653259715525, 0.169004726639267, 0.190350578064785,
                            0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469};

struct Panel {
    double a, b, value, err;
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);
    double kronrod = kWgk[7] * fv[7];
    double gauss = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kronrod += kWgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) gauss += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    kronrod *= h;
    gauss *= h;
    return {a, b, kronrod, std::fabs(kronrod - gauss)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int max_intervals) {
    if (!(b > a)) return {0.0, 0.0, 0};
    auto worse = [](const Panel& p, const Panel& q) { return p.err < q.err; };
    std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> heap(worse);
    heap.push(eval_panel(f, a, b));
    double total_err = heap.top().err;
    int n = 1;
    while (total_err > abs_tol && n < max_intervals) {
        Panel p = heap.top();
        heap.pop();
        const double mid = 0.5 * (p.a + p.b);
        Panel left = eval_panel(f, p.a, mid);
        Panel right = eval_panel(f, mid, p.b);
        total_err += left.err + right.err - p.err;
        heap.push(left);
        heap.push(right);
        n += 1;
    }
    double value = 0.0, err = 0.0;
    // Drain smallest-error first so the sum order is deterministic.
    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    for (auto it = panels.rbegin(); it != panels.rend(); ++it) {
        value += it->value;
        err += it->err;
    }
    if (err > abs_tol) {
        std::ostringstream msg;
        msg << "integrate_adaptive: tolerance " << abs_tol << " not reached; achieved " << err
            << " with " << n << " intervals";
        throw std::runtime_error(msg.str());
    }
    return {value, err, n};
}

}  // namespace gridcast
