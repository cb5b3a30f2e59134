#pragma once

#include <functional>

namespace gridcast {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int intervals = 0;
};

// Adaptive Gauss-Kronrod (7/15) integration of f over [a, b] to the given
// absolute tolerance. Throws std::runtime_error carrying the achieved
// error estimate if the interval budget is exhausted first.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int max_intervals = 20000);

}  // namespace gridcast
