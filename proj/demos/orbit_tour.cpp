// Follows one horocycle on the modular surface: cusp data of its lift, the
// height profile, and closed-horocycle approximations of a few windows.

#include "horolab/orbit_dynamics.hpp"

#include <cmath>
#include <cstdio>

using namespace horolab;

int main()
{
    // bottom row (1e-3, -0.2): apex at t = 200, height 10^6
    const GroupElement g{-5.0, 0.0, 1e-3, -0.2};
    const CuspOrbitData data = cusp_orbit_data(g);
    std::printf("apex t=%.6g  W=%.6g  R=%.6g  alpha=%.6g\n", data.t_apex, data.W, data.R, data.alpha);

    std::printf("\n%12s %14s %14s\n", "t", "height", "y0 in X");
    for (double t : {0.0, 100.0, 190.0, 200.0, 210.0, 1e3, 1e4, 1e5}) {
        const SurfacePoint q(g * unit_h(t));
        std::printf("%12.6g %14.6g %14.6g\n", t, height_profile(data, t), q.y0());
    }

    std::printf("\n%12s %8s %14s %12s %12s\n", "t0", "K", "period", "frame angle", "max dev");
    for (double t0 : {1e3, 1e4, 1e5}) {
        const double K = std::cbrt(t0);
        const ClosedHorocycleApprox a = closed_approx(data, t0, K, 0.1);
        std::printf("%12.6g %8.3g %14.6g %12.4g %12.4g\n", t0, K, a.period, a.frame_angle, a.max_deviation);
    }
}
