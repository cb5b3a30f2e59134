#include "gridcast/crps_grad.hpp"

#include "crps_detail.hpp"

namespace gridcast {

CrpsWithGrad crps_gtcnd_grad(const GtcndParams& p, double y) {
    using detail::Dual3;
    const Dual3 dry = detail::make_dual(p.dry_mass, 0);
    const Dual3 loc = detail::make_dual(p.location, 1);
    const Dual3 scale = detail::make_dual(p.scale, 2);
    const Dual3 r = detail::crps_gtcnd_impl<Dual3>(dry, loc, scale, y);
    return {r.v, {r.d0, r.d1, r.d2}};
}

CrpsWithGrad crps_csgd_grad(const CsgdParams& p, double y) {
    using detail::Dual3;
    const Dual3 shape = detail::make_dual(p.shape, 0);
    const Dual3 scale = detail::make_dual(p.scale, 1);
    const Dual3 shift = detail::make_dual(p.shift, 2);
    const Dual3 r = detail::crps_csgd_impl<Dual3>(shape, scale, shift, y);
    return {r.v, {r.d0, r.d1, r.d2}};
}

}  // namespace gridcast
