#pragma once

// Small numerical helpers shared by the modules: compensated summation,
// quadrature, and a portable seeded uniform generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace horolab {

/// Neumaier compensated accumulator. Summation order is the call order, so
/// results are reproducible bit-for-bit for a fixed sequence of inputs.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Uniform doubles in [0, 1) from a 64-bit Mersenne twister. The mapping from
/// raw bits is fixed here (std::uniform_real_distribution is implementation
/// defined), so streams are identical across standard libraries.
class UniformRng {
public:
    explicit UniformRng(std::uint64_t seed) : engine_(seed) {}

    double operator()() noexcept
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * (*this)(); }
    std::uint64_t bits() noexcept { return engine_(); }

private:
    std::mt19937_64 engine_;
};

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
         + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Simpson quadrature on [a, b]. The interval is pre-split into
/// `pieces` panels so that features narrower than (b - a) are not skipped.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int pieces = 64, int max_depth = 40)
{
    if (!(b > a))
        return 0.0;
    CompensatedSum total;
    const double h = (b - a) / pieces;
    for (int i = 0; i < pieces; ++i) {
        const double lo = a + i * h;
        const double hi = (i + 1 == pieces) ? b : lo + h;
        const double fa = f(lo);
        const double fb = f(hi);
        const double fm = f(0.5 * (lo + hi));
        const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += detail::simpson_step(f, lo, hi, fa, fm, fb, whole, tol / pieces, max_depth);
    }
    return total.value();
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n)
{
    if (n < 1)
        throw std::invalid_argument("gauss_legendre: n must be positive");
    std::vector<double> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15)
                break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Polynomial kernel k(u) = (1 - u^2)^5 on [0, 1], zero outside. It is C^4
/// across u = 1, which is the smoothness the observables need.
inline double bump_kernel(double u) noexcept
{
    const double au = std::abs(u);
    if (au >= 1.0)
        return 0.0;
    const double v = 1.0 - au * au;
    const double v2 = v * v;
    return v2 * v2 * v;
}

/// sup_{|u|<=1} |k^{(j)}(u)| for j = 0..4, computed from the expanded
/// polynomial on a dense grid.
inline std::vector<double> bump_kernel_derivative_sups()
{
    // (1 - u^2)^5 = sum_k C(5,k) (-1)^k u^{2k}
    std::vector<double> coeff(11, 0.0);
    const double binom[6] = {1, 5, 10, 10, 5, 1};
    for (int k = 0; k <= 5; ++k)
        coeff[2 * k] = (k % 2 == 0 ? 1.0 : -1.0) * binom[k];
    std::vector<double> sups;
    for (int j = 0; j <= 4; ++j) {
        double s = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            const double u = -1.0 + i / 2000.0;
            double val = 0.0;
            double pw = 1.0;
            for (std::size_t m = 0; m < coeff.size(); ++m) {
                val += coeff[m] * pw;
                pw *= u;
            }
            s = std::max(s, std::abs(val));
        }
        sups.push_back(s);
        std::vector<double> d(coeff.size() > 1 ? coeff.size() - 1 : 1, 0.0);
        for (std::size_t m = 1; m < coeff.size(); ++m)
            d[m - 1] = coeff[m] * static_cast<double>(m);
        coeff = d;
    }
    return sups;
}

} // namespace horolab
