#pragma once

// Test functions on X with controlled norm surrogates and known mu_X-means.

#include "horolab/modular_surface.hpp"
#include "horolab/numerics.hpp"
#include "horolab/psl2.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace horolab {

/// Upper-bound surrogates for the three pieces of the norm
/// ||f|| = ||f||_{W^4} + ||f||_{inf,1} + ||f||_{inf,0}.
struct NormParts {
    double sobolev4 = 0.0;
    double sup_d1 = 0.0;
    double sup_d0 = 0.0;

    [[nodiscard]] double total() const noexcept { return sobolev4 + sup_d1 + sup_d0; }
};

/// An immutable, PSL2(Z)-invariant function on X.
class Observable {
public:
    using Evaluator = std::function<double(const SurfacePoint&)>;

    Observable(Evaluator eval, NormParts norm, double mean, double mean_error, std::string descriptor)
        : eval_(std::make_shared<const Evaluator>(std::move(eval))), norm_(norm), mean_(mean),
          mean_error_(mean_error), descriptor_(std::move(descriptor))
    {
    }

    double operator()(const SurfacePoint& p) const { return scale_ * (*eval_)(p); }

    [[nodiscard]] const NormParts& norm_parts() const noexcept { return norm_; }
    [[nodiscard]] double norm() const noexcept { return norm_.total(); }
    [[nodiscard]] double mean() const noexcept { return mean_; }
    /// Accuracy of mean(): quadrature or Monte-Carlo error estimate.
    [[nodiscard]] double mean_error() const noexcept { return mean_error_; }
    [[nodiscard]] const std::string& descriptor() const noexcept { return descriptor_; }

    /// Returns alpha * f.
    [[nodiscard]] Observable scaled(double alpha) const
    {
        Observable out = *this;
        out.scale_ *= alpha;
        const double a = std::abs(alpha);
        out.norm_ = {a * norm_.sobolev4, a * norm_.sup_d1, a * norm_.sup_d0};
        out.mean_ *= alpha;
        out.mean_error_ *= a;
        return out;
    }

    /// Rescales so that the norm surrogate equals 1.
    [[nodiscard]] Observable normalized() const
    {
        const double n = norm();
        if (!(n > 0.0))
            throw std::domain_error("Observable::normalized: zero norm");
        return scaled(1.0 / n);
    }

private:
    std::shared_ptr<const Evaluator> eval_;
    double scale_ = 1.0;
    NormParts norm_;
    double mean_ = 0.0;
    double mean_error_ = 0.0;
    std::string descriptor_;
};

inline Observable constant_observable(double value)
{
    std::ostringstream os;
    os << "constant(" << value << ")";
    return Observable([value](const SurfacePoint&) { return value; }, {0.0, 0.0, std::abs(value)},
                      value, 0.0, os.str());
}

/// alpha * f + beta * g, with norm parts combined by the triangle inequality.
inline Observable linear_combination(double alpha, const Observable& f, double beta, const Observable& g)
{
    const Observable fa = f.scaled(alpha);
    const Observable gb = g.scaled(beta);
    const NormParts n{fa.norm_parts().sobolev4 + gb.norm_parts().sobolev4,
                      fa.norm_parts().sup_d1 + gb.norm_parts().sup_d1,
                      fa.norm_parts().sup_d0 + gb.norm_parts().sup_d0};
    return Observable([fa, gb](const SurfacePoint& p) { return fa(p) + gb(p); }, n,
                      fa.mean() + gb.mean(), fa.mean_error() + gb.mean_error(),
                      "sum(" + f.descriptor() + "," + g.descriptor() + ")");
}

namespace detail {

inline const std::vector<double>& kernel_sups()
{
    static const std::vector<double> s = bump_kernel_derivative_sups();
    return s;
}

/// Unnormalized Haar integral of k(rho_sym(g) / radius) over G, in h(x)a(e^v)k(theta)
/// coordinates, by composite 4-point Gauss-Legendre with `panels` panels per axis.
inline double radial_bump_mass(double radius, int panels)
{
    const auto [gx, gw] = gauss_legendre(4);
    const double xmax = 2.0 * std::sinh(0.5 * radius) * std::exp(0.5 * radius);
    const double vmax = radius;
    const double pi = std::numbers::pi;
    auto axis = [&](double lo, double hi) {
        std::vector<std::pair<double, double>> nodes;
        const double h = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = lo + (p + 0.5) * h;
            for (std::size_t i = 0; i < gx.size(); ++i)
                nodes.emplace_back(mid + 0.5 * h * gx[i], 0.5 * h * gw[i]);
        }
        return nodes;
    };
    const auto xs = axis(-xmax, xmax);
    const auto vs = axis(-vmax, vmax);
    auto ts = axis(0.0, 0.5 * pi);
    for (const auto& t : axis(0.5 * pi, pi))
        ts.push_back(t);
    CompensatedSum total;
    for (const auto& [v, wv] : vs) {
        const GroupElement av = unit_a(std::exp(v));
        const double jac = std::exp(-v); // dy / y^2 with y = e^v
        for (const auto& [x, wx] : xs) {
            const GroupElement hx = unit_h(x) * av;
            CompensatedSum inner;
            for (const auto& [t, wt] : ts) {
                const GroupElement g = hx * unit_k(t);
                const double u = 0.5 * (quasi_norm(g) + quasi_norm(g.inverse())) / radius;
                if (u < 1.0)
                    inner += wt * bump_kernel(u);
            }
            total += wv * wx * jac * inner.value();
        }
    }
    return total.value();
}

} // namespace detail

/// Automorphized radial bump f(Gamma g) = sum_gamma k(quasi_metric(gamma g, center) / radius),
/// normalized to ||f|| = 1. Requires radius in (0, 1] and y0(center) <= 4 so
/// that the short-word orbit of the center covers every contributing term.
inline Observable bump_observable(const SurfacePoint& center, double radius)
{
    if (!(radius > 0.0 && radius <= 1.0))
        throw std::domain_error("bump_observable: radius must lie in (0, 1]");
    if (center.y0() > 4.0)
        throw std::domain_error("bump_observable: center too deep in the cusp");

    // Translates gamma^{-1} c whose base point can lie within `radius` of F.
    struct Term {
        GroupElement element;
        Complex base;
    };
    std::vector<Term> terms;
    const double ymin = std::sqrt(3.0) / 2.0 * std::exp(-radius);
    const double spread = 2.0 * std::exp(0.5 * radius) * std::sinh(0.5 * radius);
    for (const GroupElement& w : short_words()) {
        const GroupElement cg = w * center.reduced();
        const Complex z{re_part(cg), im_part(cg)};
        if (z.imag() < ymin || std::abs(z.real()) > 0.5 + spread * z.imag())
            continue;
        terms.push_back({cg, z});
    }
    auto eval = [terms = std::move(terms), radius](const SurfacePoint& p) {
        const Complex zp = p.base_point();
        double s = 0.0;
        for (const Term& t : terms) {
            if (hyperbolic_distance(zp, t.base) >= radius)
                continue;
            s += bump_kernel(quasi_metric(p.reduced(), t.element) / radius);
        }
        return s;
    };

    const double coarse = detail::radial_bump_mass(radius, 24);
    const double fine = detail::radial_bump_mass(radius, 32);
    const double mean = fine / kSurfaceVolume;
    const double mean_error = std::abs(fine - coarse) / kSurfaceVolume;

    const auto& s = detail::kernel_sups();
    const double box = 4.0 * std::sinh(0.5 * radius) * std::exp(0.5 * radius) * 2.0 * std::sinh(radius)
                     * std::numbers::pi / kSurfaceVolume;
    double w4 = 0.0;
    for (int j = 0; j <= 4; ++j)
        w4 += std::pow(s[j] * std::pow(radius, -j), 2);
    const NormParts norm{std::sqrt(w4 * box), s[1] / radius, s[0]};

    std::ostringstream os;
    const FrameCoordinates fc = nak(center.reduced());
    os << "bump(x=" << fc.x << ",y=" << fc.y << ",theta=" << fc.theta << ",radius=" << radius << ")";
    return Observable(std::move(eval), norm, mean, mean_error, os.str()).normalized();
}

/// f(p) = phi(y0(p)) with phi the kernel bump rescaled to [y_low, y_high],
/// normalized to ||f|| = 1. The mean is the cusp integral (3/pi) int phi(y) y^-2 dy.
inline Observable height_observable(double y_low, double y_high)
{
    if (!(y_low > 1.0 && y_high > y_low))
        throw std::domain_error("height_observable: need 1 < y_low < y_high");
    const double mid = 0.5 * (y_low + y_high);
    const double half = 0.5 * (y_high - y_low);
    auto phi = [mid, half](double y) { return bump_kernel((y - mid) / half); };
    const double mass = adaptive_simpson([&](double y) { return phi(y) / (y * y); }, y_low, y_high, 1e-14);
    const double mean = mass / kFundamentalDomainArea;

    const auto& s = detail::kernel_sups();
    const double scale = y_high / half; // (y d/dy) picks up y <= y_high
    double w4 = 0.0;
    for (int j = 0; j <= 4; ++j)
        w4 += std::pow(s[j] * std::pow(scale, j), 2);
    const double support = (1.0 / y_low - 1.0 / y_high) / kFundamentalDomainArea;
    const NormParts norm{std::sqrt(w4 * support), s[1] * scale, s[0]};

    std::ostringstream os;
    os << "height(" << y_low << "," << y_high << ")";
    return Observable([phi](const SurfacePoint& p) { return phi(p.y0()); }, norm, mean, 1e-13, os.str())
        .normalized();
}

} // namespace horolab
