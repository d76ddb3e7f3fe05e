#pragma once

// PSL2(R) kernel: group law, Mobius action, the one-parameter subgroups
// h(x), a(y), k(theta), NAK coordinates and a left-invariant quasi-metric.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace horolab {

using Complex = std::complex<double>;

/// A unimodular 2x2 real matrix modulo sign.
///
/// Values are kept with det = 1 and with the first nonzero entry of
/// (a, b, c, d) positive, so that g and -g have the same stored form.
class GroupElement {
public:
    constexpr GroupElement() = default;

    /// Builds from raw entries, rescaling to det 1. Throws if det <= 0.
    GroupElement(double a, double b, double c, double d) : m_{a, b, c, d}
    {
        normalize();
    }

    static constexpr GroupElement identity() { return GroupElement{}; }

    /// Stores the entries verbatim (no rescaling, no sign fix). Used for
    /// negative controls that need a matrix violating the invariants.
    static GroupElement unchecked(double a, double b, double c, double d)
    {
        GroupElement g;
        g.m_ = {a, b, c, d};
        return g;
    }

    [[nodiscard]] constexpr double a() const noexcept { return m_[0]; }
    [[nodiscard]] constexpr double b() const noexcept { return m_[1]; }
    [[nodiscard]] constexpr double c() const noexcept { return m_[2]; }
    [[nodiscard]] constexpr double d() const noexcept { return m_[3]; }
    [[nodiscard]] constexpr const std::array<double, 4>& entries() const noexcept { return m_; }

    [[nodiscard]] constexpr double det() const noexcept { return m_[0] * m_[3] - m_[1] * m_[2]; }

    /// Inverse in PSL2: [[d, -b], [-c, a]].
    [[nodiscard]] GroupElement inverse() const { return GroupElement{m_[3], -m_[1], -m_[2], m_[0]}; }

private:
    void normalize()
    {
        const double dt = det();
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw std::domain_error("GroupElement: determinant must be positive and finite");
        if (dt != 1.0) {
            const double s = 1.0 / std::sqrt(dt);
            for (double& e : m_)
                e *= s;
        }
        for (double e : m_) {
            if (e != 0.0) {
                if (e < 0.0)
                    for (double& f : m_)
                        f = -f;
                break;
            }
        }
        for (double& e : m_)
            if (e == 0.0)
                e = 0.0; // drop negative zeros
    }

    std::array<double, 4> m_{1.0, 0.0, 0.0, 1.0};
};

/// Matrix product g1 * g2, re-normalized to det 1 with canonical sign.
inline GroupElement compose(const GroupElement& g1, const GroupElement& g2)
{
    return GroupElement{g1.a() * g2.a() + g1.b() * g2.c(), g1.a() * g2.b() + g1.b() * g2.d(),
                        g1.c() * g2.a() + g1.d() * g2.c(), g1.c() * g2.b() + g1.d() * g2.d()};
}

inline GroupElement operator*(const GroupElement& g1, const GroupElement& g2) { return compose(g1, g2); }

inline GroupElement invert(const GroupElement& g) { return g.inverse(); }

/// Entrywise comparison in PSL2, i.e. up to the global sign.
inline bool approx_equal(const GroupElement& g, const GroupElement& h, double tol)
{
    double plus = 0.0;
    double minus = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        plus = std::max(plus, std::abs(g.entries()[i] - h.entries()[i]));
        minus = std::max(minus, std::abs(g.entries()[i] + h.entries()[i]));
    }
    return std::min(plus, minus) <= tol;
}

/// h(t) = [[1, t], [0, 1]].
inline GroupElement unit_h(double t) { return GroupElement{1.0, t, 0.0, 1.0}; }

/// a(y) = diag(y^{1/2}, y^{-1/2}).
inline GroupElement unit_a(double y)
{
    if (!(y > 0.0))
        throw std::domain_error("unit_a: y must be positive");
    const double r = std::sqrt(y);
    return GroupElement{r, 0.0, 0.0, 1.0 / r};
}

/// k(theta) = [[cos, -sin], [sin, cos]]; k(pi/2) is the inversion S.
inline GroupElement unit_k(double theta)
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return GroupElement{c, -s, s, c};
}

/// The inversion z -> -1/z.
inline GroupElement inversion_s() { return GroupElement{0.0, -1.0, 1.0, 0.0}; }

/// (az + b) / (cz + d). The imaginary part is recomputed as Im z / |cz + d|^2
/// so it never picks up cancellation error.
inline Complex mobius(const GroupElement& g, Complex z)
{
    if (!(z.imag() > 0.0))
        throw std::domain_error("mobius: point must lie in the upper half-plane");
    const Complex den = g.c() * z + g.d();
    const Complex w = (g.a() * z + g.b()) / den;
    return {w.real(), z.imag() / std::norm(den)};
}

/// Im(g . i) = 1 / (c^2 + d^2).
inline double im_part(const GroupElement& g) { return 1.0 / (g.c() * g.c() + g.d() * g.d()); }

/// Re(g . i) = (ac + bd) / (c^2 + d^2).
inline double re_part(const GroupElement& g)
{
    return (g.a() * g.c() + g.b() * g.d()) / (g.c() * g.c() + g.d() * g.d());
}

/// Coordinates in the decomposition g = h(x) a(y) k(theta).
struct FrameCoordinates {
    double x = 0.0;
    double y = 1.0;
    double theta = 0.0; ///< in [0, pi)
};

/// Reduces an angle into [0, pi).
inline double reduce_angle_pi(double theta)
{
    double t = std::fmod(theta, std::numbers::pi);
    if (t < 0.0)
        t += std::numbers::pi;
    if (t >= std::numbers::pi)
        t = 0.0;
    return t;
}

/// The bottom row of h(x)a(y)k(theta) is y^{-1/2} (sin theta, cos theta),
/// which gives theta directly.
inline FrameCoordinates nak(const GroupElement& g)
{
    return {re_part(g), im_part(g), reduce_angle_pi(std::atan2(g.c(), g.d()))};
}

inline GroupElement nak_inv(const FrameCoordinates& fc)
{
    return unit_h(fc.x) * unit_a(fc.y) * unit_k(fc.theta);
}

/// Hyperbolic distance d(i, g.i), via cosh d = (a^2+b^2+c^2+d^2)/2 written
/// in the cancellation-free form 2 asinh(sqrt((a-d)^2 + (b+c)^2) / 2).
inline double displacement(const GroupElement& g)
{
    const double u = g.a() - g.d();
    const double v = g.b() + g.c();
    return 2.0 * std::asinh(0.5 * std::hypot(u, v));
}

/// Hyperbolic distance between two points of the upper half-plane.
inline double hyperbolic_distance(Complex z, Complex w)
{
    const double num = std::abs(z - w);
    return 2.0 * std::asinh(0.5 * num / std::sqrt(z.imag() * w.imag()));
}

/// rho(g) = d(i, g.i) + circle distance of the NAK angle of g to 0 on R/piZ.
inline double quasi_norm(const GroupElement& g)
{
    const double theta = reduce_angle_pi(std::atan2(g.c(), g.d()));
    return displacement(g) + std::min(theta, std::numbers::pi - theta);
}

/// Left-invariant quasi-metric (rho(g1^{-1} g2) + rho(g2^{-1} g1)) / 2.
/// The symmetrization makes it a symmetric function of its arguments.
inline double quasi_metric(const GroupElement& g1, const GroupElement& g2)
{
    const GroupElement forward = g1.inverse() * g2;
    return 0.5 * (quasi_norm(forward) + quasi_norm(forward.inverse()));
}

} // namespace horolab
