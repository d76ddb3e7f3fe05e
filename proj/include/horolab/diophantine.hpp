#pragma once

// Rational approximation side of the argument: Dirichlet approximants, the
// problem-interval set E, the large-q averaging bound, the derivative
// measure lemma, and the scan of {t : (1+gamma) G(t) in E}.

#include "horolab/equidist.hpp"
#include "horolab/numerics.hpp"
#include "horolab/observable.hpp"
#include "horolab/orbit_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace horolab {

struct RationalApprox {
    std::int64_t a = 0;
    std::int64_t q = 1;
    double err = 0.0; ///< |x - a/q|
};

/// |x - a/q| as every membership test in this module computes it.
inline double fraction_error(double x, std::int64_t a, std::int64_t q)
{
    return std::abs(x - static_cast<double>(a) / static_cast<double>(q));
}

namespace detail {

/// Continued-fraction expansion of x, one partial quotient at a time.
class ContinuedFraction {
public:
    explicit ContinuedFraction(double x) : rem_(x) {}

    /// Next partial quotient, or nothing once the expansion has terminated.
    std::optional<std::int64_t> next()
    {
        if (done_)
            return std::nullopt;
        if (first_) {
            first_ = false;
            const double a0 = std::floor(rem_);
            rem_ -= a0;
            done_ = rem_ == 0.0;
            return static_cast<std::int64_t>(a0);
        }
        const double z = 1.0 / rem_;
        if (!(z < 9e15)) {
            done_ = true;
            return std::nullopt;
        }
        const double ak = std::floor(z);
        rem_ = z - ak;
        done_ = rem_ <= 1e-15;
        return static_cast<std::int64_t>(ak);
    }

private:
    double rem_;
    bool first_ = true;
    bool done_ = false;
};

} // namespace detail

/// Last continued-fraction convergent a/q of x with q <= Q. It satisfies
/// |x - a/q| <= 1/(qQ); the check runs on every call and throws
/// std::logic_error if rounding ever breaks it.
inline RationalApprox dirichlet_approx(double x, double Q)
{
    if (!(Q >= 1.0))
        throw std::domain_error("dirichlet_approx: Q must be at least 1");
    detail::ContinuedFraction cf(x);
    std::int64_t p2 = 0, q2 = 1; // p_{k-2}, q_{k-2}
    std::int64_t p1 = 1, q1 = 0; // p_{k-1}, q_{k-1}
    RationalApprox best;
    bool have = false;
    while (auto ak = cf.next()) {
        const double qn = static_cast<double>(*ak) * static_cast<double>(q1) + static_cast<double>(q2);
        if (qn > Q)
            break;
        const std::int64_t p = *ak * p1 + p2;
        const std::int64_t q = *ak * q1 + q2;
        p2 = p1;
        q2 = q1;
        p1 = p;
        q1 = q;
        best = {p, q, fraction_error(x, p, q)};
        have = true;
        if (best.err == 0.0)
            break;
    }
    if (!have)
        throw std::logic_error("dirichlet_approx: no convergent found");
    if (!(best.err <= 1.0 / (static_cast<double>(best.q) * Q) * (1.0 + 1e-9)) || static_cast<double>(best.q) > Q)
        throw std::logic_error("dirichlet_approx: approximation bound violated");
    return best;
}

/// E = union of [a/q - width, a/q + width] over q <= floor(rmax^3), (a, q) = 1.
struct ProblemIntervalSet {
    double rmax = 1.0;
    double width = 0.0;
    double T = 0.0;
    double gamma = 0.0;

    /// width = r T^{-1/3 + gamma}.
    static ProblemIntervalSet from_report(double r, double T, double gamma)
    {
        return {r, r * std::pow(T, -1.0 / 3.0 + gamma), T, gamma};
    }

    [[nodiscard]] std::int64_t qmax() const
    {
        return static_cast<std::int64_t>(std::floor(rmax * rmax * rmax * (1.0 + 1e-12)));
    }
    /// Lower bound on the distance between distinct centers: 1 / qmax^2.
    [[nodiscard]] double center_gap() const
    {
        const double q = static_cast<double>(std::max<std::int64_t>(1, qmax()));
        return 1.0 / (q * q);
    }
    /// width < 0.05 * center_gap, the smallness the gap argument needs.
    [[nodiscard]] bool width_ok() const { return width < 0.05 * center_gap(); }

    /// The intervals meeting [lo, hi], merged where they overlap, sorted.
    [[nodiscard]] std::vector<Interval> materialize(double lo, double hi) const
    {
        std::vector<Interval> out;
        const std::int64_t Q = qmax();
        for (std::int64_t q = 1; q <= Q; ++q) {
            const auto a_lo = static_cast<std::int64_t>(std::floor((lo - width) * static_cast<double>(q)));
            const auto a_hi = static_cast<std::int64_t>(std::ceil((hi + width) * static_cast<double>(q)));
            for (std::int64_t a = a_lo; a <= a_hi; ++a) {
                if (std::gcd(a, q) != 1)
                    continue;
                const double c = static_cast<double>(a) / static_cast<double>(q);
                if (c + width < lo || c - width > hi)
                    continue;
                out.push_back({c - width, c + width});
            }
        }
        std::sort(out.begin(), out.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
        std::vector<Interval> merged;
        for (const Interval& i : out) {
            if (!merged.empty() && i.lo <= merged.back().hi)
                merged.back().hi = std::max(merged.back().hi, i.hi);
            else
                merged.push_back(i);
        }
        return merged;
    }
};

struct Membership {
    std::int64_t q = 0;
    std::int64_t a = 0;
};

/// The (q, a) with smallest q such that |v - a/q| <= E.width, q <= qmax.
///
/// The minimal-q witness beats every fraction with smaller denominator, so
/// it is a best approximation of the first kind and therefore a convergent
/// or an intermediate fraction of v. Those are enumerated in increasing q.
inline std::optional<Membership> in_problem_set(double v, const ProblemIntervalSet& E)
{
    const std::int64_t Q = E.qmax();
    if (Q < 1)
        return std::nullopt;
    const double w = E.width;
    detail::ContinuedFraction cf(v);
    const auto a0 = cf.next();
    // q = 1: floor and ceiling
    if (fraction_error(v, *a0, 1) <= w)
        return Membership{1, *a0};
    if (fraction_error(v, *a0 + 1, 1) <= w)
        return Membership{1, *a0 + 1};
    std::int64_t pm = 1, qm = 0;   // p_{n-1}, q_{n-1}
    std::int64_t pn = *a0, qn = 1; // p_n, q_n
    while (auto an = cf.next()) {
        // intermediates (p_{n-1} + j p_n) / (q_{n-1} + j q_n), j = 1..a_{n+1}
        for (std::int64_t j = 1; j <= *an; ++j) {
            const std::int64_t q = qm + j * qn;
            if (q > Q)
                return std::nullopt;
            const std::int64_t p = pm + j * pn;
            if (fraction_error(v, p, q) <= w)
                return Membership{q, p};
        }
        const std::int64_t p_next = pm + *an * pn;
        const std::int64_t q_next = qm + *an * qn;
        pm = pn;
        qm = qn;
        pn = p_next;
        qn = q_next;
    }
    return std::nullopt;
}

struct QbigReport {
    double average = 0.0;        ///< (s/K) sum_{sn <= K} F(nsy)
    double integral = 0.0;       ///< int_0^1 F
    double observed_error = 0.0;
    RationalApprox approx;       ///< of s y with Q = y K / s
    double term_lipschitz_drift = 0.0; ///< y^{-2} / q
    double term_tail = 0.0;            ///< q s / K
    double term_riemann = 0.0;         ///< y^{-1} / q
    bool q_big = false;                ///< q >= y^{-3}
    bool lipschitz_ok = false;         ///< L <= y^{-1}

    [[nodiscard]] double bound() const { return term_lipschitz_drift + term_tail + term_riemann; }
    [[nodiscard]] std::string dichotomy() const { return q_big ? "q_big" : "small_q"; }
};

/// Sparse average of a one-periodic F at the points n s y against its
/// integral, with the rational approximation a/q of s y for Q = y K / s.
inline QbigReport qbig_oracle(const std::function<double(double)>& F, double L, double s, double y, double K)
{
    if (!(s > 0.0 && y > 0.0 && K > 0.0))
        throw std::domain_error("qbig_oracle: s, y and K must be positive");
    const double Q = y * K / s;
    if (!(Q >= 1.0))
        throw std::domain_error("qbig_oracle: y K / s must be at least 1");
    QbigReport rep;
    const auto N = static_cast<std::int64_t>(std::floor(K / s));
    CompensatedSum sum;
    for (std::int64_t n = 1; n <= N; ++n) {
        const double x = static_cast<double>(n) * s * y;
        sum += F(x - std::floor(x));
    }
    rep.average = s / K * sum.value();
    rep.integral = adaptive_simpson(F, 0.0, 1.0, 1e-12, 256);
    rep.observed_error = std::abs(rep.average - rep.integral);
    rep.approx = dirichlet_approx(s * y, Q);
    const double q = static_cast<double>(rep.approx.q);
    rep.term_lipschitz_drift = 1.0 / (y * y * q);
    rep.term_tail = q * s / K;
    rep.term_riemann = 1.0 / (y * q);
    rep.q_big = q >= 1.0 / (y * y * y);
    rep.lipschitz_ok = L <= (1.0 / y) * (1.0 + 1e-12);
    return rep;
}

struct ClosedOrbitReport {
    double sparse_average = 0.0;  ///< (s/K) sum_{sn <= K} f(xi h(sn))
    double period_integral = 0.0; ///< y int_0^{1/y} f(xi h(t)) dt
    double mean = 0.0;            ///< mu_X-mean of f
    double gap_sparse_period = 0.0;
    double gap_period_mean = 0.0;
    double gap_sparse_mean = 0.0;
    RationalApprox approx; ///< of s y with Q = y K / s (when Q >= 1)
    bool q_big = false;
};

inline ClosedOrbitReport closed_orbit_check(const Observable& f, const ClosedHorocycleApprox& approx, double s,
                                            double K)
{
    if (!(s > 0.0 && K > 0.0))
        throw std::domain_error("closed_orbit_check: s and K must be positive");
    ClosedOrbitReport rep;
    const auto N = static_cast<std::int64_t>(std::floor(K / s));
    CompensatedSum sum;
    for (std::int64_t n = 1; n <= N; ++n)
        sum += f(horocycle_flow(approx.xi, s * static_cast<double>(n)));
    rep.sparse_average = s / K * sum.value();
    const double P = approx.period;
    // composite Simpson, step <= 0.05
    const auto m = 2 * std::max<std::int64_t>(32, static_cast<std::int64_t>(std::ceil(P / 0.1)));
    const double h = P / static_cast<double>(m);
    CompensatedSum per;
    for (std::int64_t i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        per += w * f(horocycle_flow(approx.xi, h * static_cast<double>(i)));
    }
    rep.period_integral = per.value() * h / 3.0 / P;
    rep.mean = f.mean();
    rep.gap_sparse_period = std::abs(rep.sparse_average - rep.period_integral);
    rep.gap_period_mean = std::abs(rep.period_integral - rep.mean);
    rep.gap_sparse_mean = std::abs(rep.sparse_average - rep.mean);
    const double y = approx.height;
    const double Q = y * K / s;
    if (Q >= 1.0) {
        rep.approx = dirichlet_approx(s * y, Q);
        rep.q_big = static_cast<double>(rep.approx.q) >= 1.0 / (y * y * y);
    }
    return rep;
}

struct DerhelpReport {
    double estimate = 0.0;       ///< |{t in I : G(t) in E}| by midpoint sampling
    double sampling_error = 0.0; ///< |I|/n times the number of membership changes
    std::size_t crossings = 0;
    double theta = 0.0;          ///< max (b_i - a_i) / (a_{i+1} - b_i)
    double bound = 0.0;          ///< 2 theta C c^{-1} |I|
    bool hypothesis_ok = false;  ///< |I| >= theta C / c
};

/// Membership of x in a sorted list of disjoint open intervals.
inline bool in_open_union(const std::vector<Interval>& E, double x)
{
    auto it = std::upper_bound(E.begin(), E.end(), x, [](double v, const Interval& i) { return v < i.lo; });
    if (it == E.begin())
        return false;
    --it;
    return x > it->lo && x < it->hi;
}

/// Measure of the preimage of E under G on I, compared with the bound
/// 2 theta C c^{-1} |I| for c <= |G'| <= C. E must be sorted and disjoint.
inline DerhelpReport derhelp_measure(const std::function<double(double)>& G, const Interval& I,
                                     const std::vector<Interval>& E, std::size_t n, double c, double C)
{
    if (!(c > 0.0) || !(C >= c))
        throw std::domain_error("derhelp_measure: need 0 < c <= C");
    if (n == 0 || I.empty())
        throw std::domain_error("derhelp_measure: need n >= 1 and a non-empty interval");
    DerhelpReport rep;
    rep.theta = E.size() < 2 ? std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t i = 0; i + 1 < E.size(); ++i)
        rep.theta = std::max(rep.theta, E[i].length() / (E[i + 1].lo - E[i].hi));
    const double len = I.length();
    rep.bound = 2.0 * rep.theta * C / c * len;
    rep.hypothesis_ok = len >= rep.theta * C / c;

    const double h = len / static_cast<double>(n);
    std::size_t count = 0;
    bool prev = false;
    for (std::size_t k = 0; k < n; ++k) {
        const bool in = in_open_union(E, G(I.lo + (static_cast<double>(k) + 0.5) * h));
        count += in ? 1 : 0;
        if (k > 0 && in != prev)
            ++rep.crossings;
        prev = in;
    }
    rep.estimate = h * static_cast<double>(count);
    rep.sampling_error = h * static_cast<double>(rep.crossings);
    return rep;
}

/// Same, with E = the problem intervals met by G(I). G is assumed monotone on
/// I, so its range is spanned by the endpoint values.
inline DerhelpReport derhelp_measure(const std::function<double(double)>& G, const Interval& I,
                                     const ProblemIntervalSet& E, std::size_t n, double c, double C)
{
    const double a = G(I.lo), b = G(I.hi);
    return derhelp_measure(G, I, E.materialize(std::min(a, b), std::max(a, b)), n, c, C);
}

struct DernormalOptions {
    std::size_t grid = 100'000;
    double K = -1.0;      ///< defaults to T^{1/3}
    double eta = 0.05;
    double width = -1.0;  ///< defaults to rmax T^{-1/3 + gamma}
    double C_cal = 10.0;
};

struct DernormalReport {
    double T = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double rmax = 0.0;
    double width = 0.0;
    bool width_ok = false;
    std::size_t grid = 0;
    std::size_t excluded = 0;
    std::size_t members = 0;
    double fraction = 0.0;          ///< members / grid, members counted off the exclusions
    double excluded_fraction = 0.0;
    double bound = 0.0;             ///< delta + delta^{-5} r^7 T^{-1/3 + gamma}
    bool within = false;            ///< fraction <= C_cal bound
};

/// One grid point of the scan: t, G(t), and the witnessing (q, a) if any.
struct DernormalSample {
    double t = 0.0;
    double G = 0.0;
    bool excluded = false;
    std::optional<Membership> member;
};

inline std::vector<DernormalSample> dernormal_trace(double T, double gamma, const CuspOrbitData& data, double delta,
                                                    double rmax, const DernormalOptions& opt = {})
{
    if (!(T > 0.0) || !(rmax >= 1.0) || opt.grid == 0)
        throw std::domain_error("dernormal_scan: need T > 0, rmax >= 1 and a non-empty grid");
    const ExclusionSet ex = exclusion_intervals({T, delta, gamma, data.t_apex, opt.K, opt.eta});
    ProblemIntervalSet E = ProblemIntervalSet::from_report(rmax, T, gamma);
    if (opt.width > 0.0)
        E.width = opt.width;
    std::vector<DernormalSample> out;
    out.reserve(opt.grid);
    for (std::size_t k = 0; k < opt.grid; ++k) {
        DernormalSample s;
        s.t = T * (static_cast<double>(k) + 0.5) / static_cast<double>(opt.grid);
        s.G = g_function(s.t, gamma, data.R, data.t_apex);
        s.excluded = ex.contains(s.t);
        if (!s.excluded)
            s.member = in_problem_set((1.0 + gamma) * s.G, E);
        out.push_back(s);
    }
    return out;
}

/// Proportion of t <= T off the exclusion sets where (1+gamma) G(t) falls in
/// E, against delta + delta^{-5} r^7 T^{-1/3+gamma} with r = rmax.
inline DernormalReport dernormal_scan(double T, double gamma, const CuspOrbitData& data, double delta, double rmax,
                                      const DernormalOptions& opt = {})
{
    const auto trace = dernormal_trace(T, gamma, data, delta, rmax, opt);
    DernormalReport rep;
    rep.T = T;
    rep.gamma = gamma;
    rep.delta = delta;
    rep.rmax = rmax;
    ProblemIntervalSet E = ProblemIntervalSet::from_report(rmax, T, gamma);
    if (opt.width > 0.0)
        E.width = opt.width;
    rep.width = E.width;
    rep.width_ok = E.width_ok();
    rep.grid = trace.size();
    for (const auto& s : trace) {
        rep.excluded += s.excluded ? 1 : 0;
        rep.members += s.member ? 1 : 0;
    }
    const double n = static_cast<double>(rep.grid);
    rep.fraction = static_cast<double>(rep.members) / n;
    rep.excluded_fraction = static_cast<double>(rep.excluded) / n;
    rep.bound = delta + std::pow(delta, -5.0) * std::pow(rmax, 7.0) * std::pow(T, -1.0 / 3.0 + gamma);
    rep.within = rep.fraction <= opt.C_cal * rep.bound;
    return rep;
}

} // namespace horolab
