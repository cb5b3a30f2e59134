#pragma once

#include <array>

#include "gridcast/distributions.hpp"

namespace gridcast {

// CRPS value and its gradient with respect to the three distribution
// parameters, evaluated with forward-mode duals over the same closed form
// as the scalar path. Gradient order matches the parameter struct order.
struct CrpsWithGrad {
    double value;
    std::array<double, 3> grad;
};

CrpsWithGrad crps_gtcnd_grad(const GtcndParams& p, double y);  // d/(dry_mass, location, scale)
CrpsWithGrad crps_csgd_grad(const CsgdParams& p, double y);    // d/(shape, scale, shift)

}  // namespace gridcast
