#pragma once

// Dynamical quantities on X: flows, the equidistribution parameter r(q, K),
// cusp coordinates of a horocycle, closed-horocycle approximation, the
// function G(t) with its derivative, exclusion sets, and the case split.

#include "horolab/modular_surface.hpp"
#include "horolab/psl2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace horolab {

/// Raised when a horocycle is already a closed horocycle about the cusp at
/// infinity (bottom-left entry c = 0), so it has no apex.
class PeriodicHorocycleError : public std::domain_error {
public:
    PeriodicHorocycleError() : std::domain_error("periodic cusp horocycle (c = 0)") {}
};

/// g_t(p) = p a(e^t).
inline SurfacePoint geodesic_flow(const SurfacePoint& p, double t) { return p.translate(unit_a(std::exp(t))); }

/// h_t(p) = p h(t).
inline SurfacePoint horocycle_flow(const SurfacePoint& p, double t) { return p.translate(unit_h(t)); }

/// r(q, K) = K exp(-dist(g_{log K} q)) = K / max(y0(q a(K)), 1).
inline double r_param(const SurfacePoint& q, double K)
{
    if (!(K >= 1.0))
        throw std::domain_error("r_param: K must be at least 1");
    return K / std::max(q.translate(unit_a(K)).y0(), 1.0);
}

struct ObsFormula {
    double value = 0.0;
    bool valid = false;
};

/// max(T^2 c^2, d^2), flagged valid when it is at most c0 T.
inline ObsFormula obs_r_formula(double c, double d, double T, double c0 = 0.05)
{
    if (c == 0.0 && d == 0.0)
        throw std::domain_error("obs_r_formula: (c, d) must not both vanish");
    const double v = std::max(T * T * c * c, d * d);
    return {v, v <= c0 * T};
}

/// The representative g of q for which g a(K) is reduced; its bottom row
/// (c, d) is the one entering r(q, K) ~ max(K^2 c^2, d^2).
inline GroupElement cusp_representative(const SurfacePoint& q, double K)
{
    return q.translate(unit_a(K)).reduced() * unit_a(1.0 / K);
}

/// Cusp coordinates of the horocycle t -> g h(t).
struct CuspOrbitData {
    GroupElement rep;    ///< the representative g the numbers refer to
    double c = 0.0;
    double d = 0.0;
    double t_apex = 0.0; ///< -d/c, time of the highest point
    double W = 0.0;      ///< |d/c|
    double R = 0.0;      ///< 1/c^2, height of the apex
    double alpha = 0.0;  ///< real part of the apex
};

/// Arithmetic on the bottom row of the given representative.
inline CuspOrbitData cusp_orbit_data(const GroupElement& g)
{
    const double scale = std::max({std::abs(g.a()), std::abs(g.b()), std::abs(g.c()), std::abs(g.d())});
    if (std::abs(g.c()) <= 1e-15 * scale)
        throw PeriodicHorocycleError();
    // g and -g are the same element; report the bottom row with c > 0.
    const double sign = g.c() > 0.0 ? 1.0 : -1.0;
    CuspOrbitData out;
    out.rep = g;
    out.c = sign * g.c();
    out.d = sign * g.d();
    out.t_apex = -g.d() / g.c();
    out.W = std::abs(out.t_apex);
    out.R = 1.0 / (g.c() * g.c());
    out.alpha = g.a() / g.c();
    return out;
}

namespace detail {

/// True when x is within 1e-9/q of some p/q with q <= 1e4.
inline bool near_cusp(double x)
{
    double p0 = 1.0, q0 = 0.0, p1 = std::floor(x), q1 = 1.0, rem = x - p1;
    while (q1 <= 1e4) {
        if (std::abs(q1 * x - p1) <= 1e-9 / q1)
            return true;
        if (rem <= 0.0)
            return false;
        const double z = 1.0 / rem, a = std::floor(z);
        rem = z - a;
        const double p2 = a * p1 + p0, q2 = a * q1 + q0;
        p0 = p1, q0 = q1, p1 = p2, q1 = q2;
    }
    return false;
}

} // namespace detail

/// Representative of q chosen by climbing: reduce the apex of the current
/// horocycle lift until the reduction is a pure translation.
///
/// The orbit is closed exactly when g(inf) = a/c is a cusp, i.e. rational;
/// forward endpoints within 1e-9/q of p/q, q <= 1e4, count as closed.
inline CuspOrbitData cusp_orbit_data(const SurfacePoint& q)
{
    GroupElement g = q.reduced();
    for (int it = 0; it < 64; ++it) {
        const CuspOrbitData data = cusp_orbit_data(g);
        if (detail::near_cusp(data.alpha))
            throw PeriodicHorocycleError();
        const Reduction r = reduce(g * unit_h(data.t_apex));
        if (r.word.c() == 0.0)
            return cusp_orbit_data(r.word * g);
        g = r.word * g;
    }
    return cusp_orbit_data(g);
}

/// Cusp data for the representative relevant at orbit scale K.
inline CuspOrbitData cusp_orbit_data(const SurfacePoint& q, double K)
{
    return cusp_orbit_data(cusp_representative(q, K));
}

/// NAK coordinates of g h(t_apex + s):
/// x = alpha - R s/(s^2+1), y = R/(s^2+1), theta = arccot(s) in (0, pi).
///
/// With k(theta) = [[cos, -sin], [sin, cos]] the frame angle is +arccot s;
/// the opposite rotation convention writes the same element as k(-arccot s).
inline FrameCoordinates parametrize_orbit(const CuspOrbitData& data, double s)
{
    const double q = s * s + 1.0;
    return {data.alpha - data.R * s / q, data.R / q, reduce_angle_pi(std::atan2(1.0, s))};
}

/// Height profile of the horocycle: R / ((t - t_apex)^2 + 1).
inline double height_profile(const CuspOrbitData& data, double t)
{
    const double s = t - data.t_apex;
    return data.R / (s * s + 1.0);
}

struct ClosedHorocycleApprox {
    SurfacePoint xi;            ///< start of the approximating closed horocycle segment
    double period = 0.0;        ///< 1 / height
    double height = 0.0;
    double window = 0.0;        ///< K
    double t0 = 0.0;
    double frame_angle = 0.0;   ///< angle between the two frames at the window center
    double max_deviation = 0.0; ///< measured sup of d_X over the window grid
    double delta_target = 0.0;
    bool within_target = false;
};

/// Approximates {p h(t0 + t), 0 <= t <= K} by a segment of the closed
/// horocycle through the frame-flattened point at the window center.
///
/// With (x, y) from parametrize_orbit at the center s = t0 + K/2 - t_apex,
/// xi = Gamma h(x) a(y) h(-K/2); its h-orbit has period exactly 1/y since
/// h(1) lies in the lattice. The deviation is sampled on samples + 1 points.
inline ClosedHorocycleApprox closed_approx(const CuspOrbitData& data, double t0, double K, double delta,
                                           int samples = 1000)
{
    if (!(K >= 0.0))
        throw std::domain_error("closed_approx: K must be non-negative");
    if (samples < 1)
        throw std::domain_error("closed_approx: need at least one sample interval");
    const double s_mid = t0 + 0.5 * K - data.t_apex;
    const FrameCoordinates fc = parametrize_orbit(data, s_mid);
    const GroupElement xi_rep = unit_h(fc.x) * unit_a(fc.y) * unit_h(-0.5 * K);

    ClosedHorocycleApprox out{SurfacePoint(xi_rep)};
    out.height = fc.y;
    out.period = 1.0 / fc.y;
    out.window = K;
    out.t0 = t0;
    out.frame_angle = std::min(fc.theta, std::numbers::pi - fc.theta);
    out.delta_target = delta;
    double worst = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double t = K * static_cast<double>(i) / samples;
        const SurfacePoint orbit(data.rep * unit_h(t0 + t));
        const SurfacePoint closed(xi_rep * unit_h(t));
        worst = std::max(worst, dX(orbit, closed).value);
    }
    out.max_deviation = worst;
    out.within_target = worst <= delta;
    return out;
}

inline ClosedHorocycleApprox closed_approx(const SurfacePoint& p, double t0, double K, double delta,
                                           int samples = 1000)
{
    return closed_approx(cusp_orbit_data(p), t0, K, delta, samples);
}

/// G(t) = t^gamma R / ((t^{1+gamma} - W)^2 + 1). W is the signed apex time.
inline double g_function(double t, double gamma, double R, double W)
{
    if (!(t > 0.0))
        throw std::domain_error("g_function: t must be positive");
    const double u = std::pow(t, 1.0 + gamma);
    const double e = u - W;
    return std::pow(t, gamma) * R / (e * e + 1.0);
}

/// G'(t) = y t^{gamma-1} (gamma - 2(1+gamma) u (u - W) / ((u - W)^2 + 1)),
/// with u = t^{1+gamma} and y = R / ((u - W)^2 + 1).
inline double g_derivative(double t, double gamma, double R, double W)
{
    if (!(t > 0.0))
        throw std::domain_error("g_derivative: t must be positive");
    const double u = std::pow(t, 1.0 + gamma);
    const double e = u - W;
    const double q = e * e + 1.0;
    const double y = R / q;
    return y * std::pow(t, gamma - 1.0) * (gamma - 2.0 * (1.0 + gamma) * u * e / q);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double length() const noexcept { return std::max(0.0, hi - lo); }
    [[nodiscard]] bool empty() const noexcept { return !(hi > lo); }
    [[nodiscard]] bool contains(double t) const noexcept { return t >= lo && t <= hi; }
};

/// Total length of a union of intervals.
inline double union_measure(std::vector<Interval> v)
{
    std::erase_if(v, [](const Interval& i) { return i.empty(); });
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    double total = 0.0;
    double cur_lo = 0.0, cur_hi = 0.0;
    bool open = false;
    for (const Interval& i : v) {
        if (open && i.lo <= cur_hi) {
            cur_hi = std::max(cur_hi, i.hi);
            continue;
        }
        if (open)
            total += cur_hi - cur_lo;
        cur_lo = i.lo;
        cur_hi = i.hi;
        open = true;
    }
    if (open)
        total += cur_hi - cur_lo;
    return total;
}

struct ExclusionParams {
    double T = 0.0;
    double delta = 0.1;
    double gamma = 0.0;
    double W = 0.0;     ///< signed apex, in the time variable u = t^{1+gamma}
    double K = -1.0;    ///< apex window; defaults to T^{1/3}
    double eta = 0.05;
};

/// Excluded parts of [0, T] in the variable t (orbit time u = t^{1+gamma}).
struct ExclusionSet {
    Interval J0;                ///< window around the apex
    std::vector<Interval> J1;   ///< [0, delta T] and |W/u - 1| < delta
    std::vector<Interval> J2;   ///< near-cancellation of G'; empty for gamma = 0
    double T = 0.0;
    double delta = 0.0;
    double eta = 0.0;

    [[nodiscard]] std::vector<Interval> all() const
    {
        std::vector<Interval> v{J0};
        v.insert(v.end(), J1.begin(), J1.end());
        v.insert(v.end(), J2.begin(), J2.end());
        return v;
    }
    [[nodiscard]] bool contains(double t) const
    {
        for (const Interval& i : all())
            if (!i.empty() && i.lo < t && t < i.hi)
                return true;
        return false;
    }
    [[nodiscard]] double measure() const { return union_measure(all()); }
    [[nodiscard]] double measure_J1() const { return union_measure(J1); }
    /// measure <= (4 delta + eta) T.
    [[nodiscard]] bool within_budget() const { return measure() <= (4.0 * delta + eta) * T; }
};

/// The zero of the leading-order bracket gamma + 2(1+gamma)/(W/u - 1):
/// W/u = -(2+gamma)/gamma.
inline double cancellation_ratio(double gamma) { return -(2.0 + gamma) / gamma; }

inline ExclusionSet exclusion_intervals(const ExclusionParams& prm)
{
    if (!(prm.delta > 0.0 && prm.delta < 1.0))
        throw std::domain_error("exclusion_intervals: delta must lie in (0, 1)");
    if (!(prm.T > 0.0) || prm.gamma < 0.0)
        throw std::domain_error("exclusion_intervals: need T > 0 and gamma >= 0");
    const double T = prm.T;
    const double e = 1.0 + prm.gamma;
    const double K = prm.K > 0.0 ? prm.K : std::cbrt(T);
    auto root = [e](double u) { return u > 0.0 ? std::pow(u, 1.0 / e) : 0.0; };
    auto clip = [T](Interval i) { return Interval{std::clamp(i.lo, 0.0, T), std::clamp(i.hi, 0.0, T)}; };

    ExclusionSet out;
    out.T = T;
    out.delta = prm.delta;
    out.eta = prm.eta;

    const double L = std::max(K * K / prm.delta, prm.eta * std::pow(T, e));
    if (prm.W + 0.5 * L > 0.0)
        out.J0 = clip({root(prm.W - 0.5 * L), root(prm.W + 0.5 * L)});

    out.J1.push_back({0.0, prm.delta * T});
    if (prm.W > 0.0)
        out.J1.push_back(clip({root(prm.W / (1.0 + prm.delta)), root(prm.W / (1.0 - prm.delta))}));

    if (prm.gamma > 0.0 && prm.W < 0.0) {
        const double v = cancellation_ratio(prm.gamma); // negative
        const double lo = prm.W / (v - prm.delta);
        const double hi = prm.W / (v + prm.delta);
        if (v + prm.delta < 0.0)
            out.J2.push_back(clip({root(lo), root(hi)}));
    }
    return out;
}

enum class CaseLabel { good, short_w, mid_w, prop31 };

inline std::string to_string(CaseLabel l)
{
    switch (l) {
    case CaseLabel::good: return "GOOD";
    case CaseLabel::short_w: return "SHORT_W";
    case CaseLabel::mid_w: return "MID_W";
    case CaseLabel::prop31: return "PROP31";
    }
    return "?";
}

struct CaseBlock {
    double t0 = 0.0;
    double r = 0.0;        ///< r(q, T^{1/6})
    double W = 0.0;        ///< W_q (infinite when q lies on a closed horocycle about the cusp)
    CaseLabel label = CaseLabel::good;
    double deviation = 0.0; ///< |log(r / max(K^2 c^2, d^2))|: distance from the coordinate formula
};

struct CaseReport {
    double T = 0.0;
    double gamma = 0.0;
    double epsilon = 0.0;
    double r_p = 0.0;  ///< r(p, T^{1+gamma})
    double W_p = 0.0;
    bool prop31_hypotheses = false; ///< r_p <= T^{4 eps} and W_p >= T^{1-eps}
    std::vector<CaseBlock> blocks;

    [[nodiscard]] std::size_t count(CaseLabel l) const
    {
        return static_cast<std::size_t>(
            std::count_if(blocks.begin(), blocks.end(), [l](const CaseBlock& b) { return b.label == l; }));
    }
};

/// W = |d/c| for the representative g, or +inf when c = 0.
inline double w_of(const GroupElement& g)
{
    const double scale = std::max({std::abs(g.a()), std::abs(g.b()), std::abs(g.c()), std::abs(g.d())});
    if (std::abs(g.c()) <= 1e-15 * scale)
        return std::numeric_limits<double>::infinity();
    return std::abs(g.d() / g.c());
}

/// Labels a grid of t0 in (0, T] by which branch of the argument applies:
/// GOOD when r(q, T^{1/6}) >= T^eps for q = p h(t0^{1+gamma}), otherwise by
/// the size of W_q against T^{1/6} and T^{1-eps}.
inline CaseReport classify_case(const SurfacePoint& p, double T, double gamma, double eps,
                                int grid_per_decade = 200)
{
    if (!(T >= 10.0) || gamma < 0.0 || !(eps > 0.0 && eps < 1.0))
        throw std::domain_error("classify_case: need T >= 10, gamma >= 0, 0 < eps < 1");
    CaseReport rep;
    rep.T = T;
    rep.gamma = gamma;
    rep.epsilon = eps;
    const double Tg = std::pow(T, 1.0 + gamma);
    rep.r_p = r_param(p, Tg);
    rep.W_p = w_of(cusp_representative(p, Tg));
    rep.prop31_hypotheses = rep.r_p <= std::pow(T, 4.0 * eps) && rep.W_p >= std::pow(T, 1.0 - eps);

    const double K = std::pow(T, 1.0 / 6.0);
    const double good_threshold = std::pow(T, eps);
    const double mid_threshold = std::pow(T, 1.0 - eps);
    const int n = std::max(1, static_cast<int>(std::ceil(grid_per_decade * std::log10(T))));
    rep.blocks.reserve(n);
    for (int i = 0; i < n; ++i) {
        CaseBlock b;
        b.t0 = T * (i + 0.5) / n;
        const SurfacePoint q = horocycle_flow(p, std::pow(b.t0, 1.0 + gamma));
        b.r = r_param(q, K);
        const GroupElement g = cusp_representative(q, K);
        b.W = w_of(g);
        const double formula = std::max(K * K * g.c() * g.c(), g.d() * g.d());
        b.deviation = std::abs(std::log(b.r / formula));
        if (b.r >= good_threshold)
            b.label = CaseLabel::good;
        else if (b.W <= K)
            b.label = CaseLabel::short_w;
        else if (b.W <= mid_threshold)
            b.label = CaseLabel::mid_w;
        else
            b.label = CaseLabel::prop31;
        rep.blocks.push_back(b);
    }
    return rep;
}

struct RLawSample {
    double K = 0.0;
    double r = 0.0;
    double predicted = 0.0; ///< d^2 for K <= W, d^2 K^2 / W^2 for K >= W
    bool applicable = false; ///< r <= c0 K and max(K^2 c^2, d^2) <= c0 K
    [[nodiscard]] double ratio() const { return r / predicted; }
};

/// Piecewise law of r(q, K) in K for a fixed cusp representative of q.
inline std::vector<RLawSample> r_law_check(const SurfacePoint& q, const GroupElement& rep, std::span<const double> Ks,
                                        double c0 = 0.05)
{
    const double c = rep.c();
    const double d = rep.d();
    const double W = w_of(rep);
    std::vector<RLawSample> out;
    out.reserve(Ks.size());
    for (double K : Ks) {
        RLawSample s;
        s.K = K;
        s.r = r_param(q, K);
        s.predicted = K <= W ? d * d : d * d * K * K / (W * W);
        s.applicable = s.r <= c0 * K && obs_r_formula(c, d, K, c0).valid;
        out.push_back(s);
    }
    return out;
}

} // namespace horolab
