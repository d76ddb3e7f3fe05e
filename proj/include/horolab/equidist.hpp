#pragma once

// Birkhoff averages along horocycle sequences, discrepancy reports, the
// sparse-sequence bound check, Taylor blocks for n^{1+gamma}, and detection
// of closed horocycles.

#include "horolab/modular_surface.hpp"
#include "horolab/numerics.hpp"
#include "horolab/observable.hpp"
#include "horolab/orbit_dynamics.hpp"

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace horolab {

struct SequenceSpec {
    enum class Kind { continuous, integer, power, arithmetic };

    Kind kind = Kind::integer;
    std::size_t N = 1;
    double T = 0.0;      ///< continuous: length of the time interval
    double gamma = 0.0;  ///< power: a_n = n^{1+gamma}
    double step = 1.0;   ///< arithmetic: a_n = offset + step * n
    double offset = 0.0;

    static SequenceSpec continuous(double T) { return {Kind::continuous, 1, T}; }
    static SequenceSpec integer(std::size_t N) { return {Kind::integer, N}; }
    static SequenceSpec power(double gamma, std::size_t N) { return {Kind::power, N, 0.0, gamma}; }
    static SequenceSpec arithmetic(double step, double offset, std::size_t N)
    {
        return {Kind::arithmetic, N, 0.0, 0.0, step, offset};
    }

    void validate() const
    {
        if (N < 1)
            throw std::invalid_argument("SequenceSpec: N must be at least 1");
        if (kind == Kind::power && gamma < 0.0)
            throw std::invalid_argument("SequenceSpec: gamma must be non-negative");
        if (kind == Kind::arithmetic && !(step > 0.0))
            throw std::invalid_argument("SequenceSpec: step must be positive");
        if (kind == Kind::continuous && !(T > 0.0))
            throw std::invalid_argument("SequenceSpec: T must be positive");
    }

    /// a_n for the discrete kinds.
    [[nodiscard]] double term(std::size_t n) const
    {
        const double x = static_cast<double>(n);
        switch (kind) {
        case Kind::integer: return x;
        case Kind::power: return gamma == 0.0 ? x : std::pow(x, 1.0 + gamma);
        case Kind::arithmetic: return offset + step * x;
        case Kind::continuous: break;
        }
        throw std::logic_error("SequenceSpec::term: continuous sequences have no terms");
    }
};

/// (1/N) sum_{n<N} f(p h(a_n)); the continuous kind is (1/T) int_0^T f(p h(t)) dt
/// by the trapezoid rule with step <= 0.1.
template <class F>
double birkhoff_average(const F& f, const SurfacePoint& p, const SequenceSpec& seq)
{
    seq.validate();
    CompensatedSum sum;
    if (seq.kind == SequenceSpec::Kind::continuous) {
        const auto m = static_cast<std::size_t>(std::ceil(seq.T / 0.1));
        const double h = seq.T / static_cast<double>(m);
        for (std::size_t i = 0; i <= m; ++i) {
            const double w = (i == 0 || i == m) ? 0.5 : 1.0;
            sum += w * f(horocycle_flow(p, h * static_cast<double>(i)));
        }
        return sum.value() * h / seq.T;
    }
    for (std::size_t n = 0; n < seq.N; ++n)
        sum += f(horocycle_flow(p, seq.term(n)));
    return sum.value() / static_cast<double>(seq.N);
}

struct DiscrepancyReport {
    double T = 0.0;
    double gamma = 0.0;
    std::size_t N = 0;
    double average = 0.0;
    double mean = 0.0;
    double discrepancy = 0.0; ///< |average - mean|
    double r = 0.0;           ///< T^{1+gamma} / max(y0(g_{log T^{1+gamma}} p), 1)
    double predicted = 0.0;   ///< r^{-beta/4}
    double beta = 0.0;
};

inline constexpr const char* kDiscrepancyCsvHeader = "T,gamma,N,average,mean,discrepancy,r,predicted,beta";

inline std::string to_csv_row(const DiscrepancyReport& d)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", d.T, d.gamma, d.N,
                  d.average, d.mean, d.discrepancy, d.r, d.predicted, d.beta);
    return buf;
}

inline DiscrepancyReport discrepancy_report(const Observable& f, const SurfacePoint& p, double gamma, double T,
                                            double beta = 0.10)
{
    if (!(T >= 10.0))
        throw std::domain_error("discrepancy_report: T must be at least 10");
    DiscrepancyReport d;
    d.T = T;
    d.gamma = gamma;
    d.N = static_cast<std::size_t>(std::floor(T));
    d.average = birkhoff_average(f, p, SequenceSpec::power(gamma, d.N));
    d.mean = f.mean();
    d.discrepancy = std::abs(d.average - d.mean);
    d.r = r_param(p, std::pow(T, 1.0 + gamma));
    d.predicted = std::pow(d.r, -beta / 4.0);
    d.beta = beta;
    return d;
}

struct VenkateshReport {
    double s = 0.0;
    double T = 0.0;
    double lhs = 0.0; ///< |(s/T) sum_{1<=j<=T/s} f(p h(sj)) - mean|
    double rhs = 0.0; ///< s^{1/2} r^{-beta/2} ||f||
    double r = 0.0;
    bool within = false; ///< lhs <= C_cal rhs
};

inline VenkateshReport venkatesh_check(const Observable& f, const SurfacePoint& p, double s, double T,
                                       double beta = 0.10, double C_cal = 10.0)
{
    if (!(s >= 1.0 && s < T))
        throw std::domain_error("venkatesh_check: need 1 <= s < T");
    VenkateshReport v;
    v.s = s;
    v.T = T;
    const auto J = static_cast<std::size_t>(std::floor(T / s));
    CompensatedSum sum;
    for (std::size_t j = 1; j <= J; ++j)
        sum += f(horocycle_flow(p, s * static_cast<double>(j)));
    v.lhs = std::abs(s / T * sum.value() - f.mean());
    v.r = r_param(p, T);
    v.rhs = std::sqrt(s) * std::pow(v.r, -beta / 2.0) * f.norm();
    v.within = v.lhs <= C_cal * v.rhs;
    return v;
}

struct TaylorBlock {
    double T0 = 0.0;
    double length = 0.0;
    double slope = 0.0;           ///< (1+gamma) T0^gamma
    double max_remainder = 0.0;   ///< max over the block of |t^{1+gamma} - linearization|
    double remainder_bound = 0.0; ///< C_cal T^{-1/6}
};

/// Splits [T^{5/6}, T] into consecutive blocks of length T^{1/3} (the last one
/// truncated). The remainder t^{1+gamma} - T0^{1+gamma} - slope (t - T0) is
/// convex and increasing in t, so its maximum sits at the right endpoint.
inline std::vector<TaylorBlock> linearize_power_seq(double T, double gamma, double C_cal = 10.0)
{
    if (!(T >= 10.0) || gamma < 0.0)
        throw std::domain_error("linearize_power_seq: need T >= 10 and gamma >= 0");
    const double start = std::pow(T, 5.0 / 6.0);
    const double L = std::cbrt(T);
    const double bound = C_cal * std::pow(T, -1.0 / 6.0);
    std::vector<TaylorBlock> out;
    for (double T0 = start; T0 < T;) {
        TaylorBlock b;
        b.T0 = T0;
        b.length = std::min(L, T - T0);
        b.slope = (1.0 + gamma) * std::pow(T0, gamma);
        if (gamma != 0.0) {
            const double u = b.length / T0;
            b.max_remainder = std::pow(T0, 1.0 + gamma)
                            * (std::expm1((1.0 + gamma) * std::log1p(u)) - (1.0 + gamma) * u);
        }
        b.remainder_bound = bound;
        out.push_back(b);
        T0 = (b.length < L) ? T : T0 + L;
    }
    return out;
}

/// Smallest t in (0, Pmax] with d_X(p h(t), p) < tol, or nothing.
///
/// Coarse scan with step min(0.01, Pmax / 1e5), then golden-section
/// refinement inside each dip. Periods below ten scan steps are not resolved.
inline std::optional<double> periodic_detect(const SurfacePoint& p, double Pmax, double tol = 1e-6)
{
    if (!(Pmax > 0.0))
        throw std::domain_error("periodic_detect: Pmax must be positive");
    const double step = std::min(0.01, Pmax / 1e5);
    const double threshold = 3.0 * step;
    auto d = [&](double t) { return dX(horocycle_flow(p, t), p).value; };

    auto refine = [&](double lo, double hi) {
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lo, b = hi;
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = d(x1), f2 = d(x2);
        while (b - a > 1e-11 * std::max(1.0, b)) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = d(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = d(x2);
            }
        }
        const double t = 0.5 * (a + b);
        return std::pair{t, d(t)};
    };

    bool armed = false;
    const auto n = static_cast<std::size_t>(std::ceil(Pmax / step));
    for (std::size_t i = 1; i <= n; ++i) {
        const double t = std::min(Pmax, step * static_cast<double>(i));
        const double v = d(t);
        if (!armed) {
            armed = v > threshold;
            continue;
        }
        if (v < threshold) {
            // walk to the bottom of the dip
            double tb = t, vb = v;
            while (tb + step <= Pmax) {
                const double vn = d(tb + step);
                if (vn >= vb)
                    break;
                tb += step;
                vb = vn;
            }
            const auto [tm, dm] = refine(std::max(step, tb - step), std::min(Pmax, tb + step));
            if (dm < tol)
                return tm;
            armed = false;
            i = static_cast<std::size_t>(std::ceil(tb / step));
        }
    }
    return std::nullopt;
}

} // namespace horolab
