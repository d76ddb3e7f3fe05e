#pragma once

// The modular surface X = PSL2(Z)\PSL2(R): reduction to the standard
// fundamental domain, excursion height, distance proxies and mu_X sampling.

#include "horolab/numerics.hpp"
#include "horolab/psl2.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace horolab {

/// Hyperbolic area of the standard fundamental domain F.
inline constexpr double kFundamentalDomainArea = std::numbers::pi / 3.0;
/// Haar volume of X in the h(x)a(y)k(theta) parametrization, theta in [0, pi).
inline constexpr double kSurfaceVolume = std::numbers::pi * std::numbers::pi / 3.0;

enum class LatticeName { psl2z };

/// Cusp bookkeeping for the lattice. Only PSL2(Z) ships: one cusp at
/// infinity, sigma = identity, parabolic generator h(1).
struct LatticeDescriptor {
    LatticeName name = LatticeName::psl2z;
    int cusp_count = 1;
    GroupElement sigma = GroupElement::identity();
    GroupElement parabolic = unit_h(1.0);
    double c0 = 0.05; ///< Observation-2.1 regime constant
    double C = 2.0;   ///< cusp neighbourhood threshold on y0

    void validate() const
    {
        if (!(c0 > 0.0) || !(C > 0.0))
            throw std::invalid_argument("LatticeDescriptor: c0 and C must be positive");
        if (cusp_count != 1)
            throw std::invalid_argument("LatticeDescriptor: only one-cusp lattices are supported");
    }
};

struct Reduction {
    GroupElement reduced; ///< word * g, base point in F
    GroupElement word;    ///< element of PSL2(Z)
    int steps = 0;
};

/// Translate-and-invert reduction of g.i into the closed fundamental domain
/// {|Re z| <= 1/2, |z| >= 1}. Throws std::runtime_error after 10^6 steps.
inline Reduction reduce(const GroupElement& g)
{
    constexpr int kMaxSteps = 1'000'000;
    Complex z{re_part(g), im_part(g)};
    // Integer bookkeeping for the word; entries stay exact in doubles.
    double wa = 1, wb = 0, wc = 0, wd = 1;
    int steps = 0;
    while (true) {
        if (++steps > kMaxSteps)
            throw std::runtime_error("reduce: no convergence (numerically degenerate element)");
        const double n = std::nearbyint(z.real());
        if (n != 0.0) {
            z = {z.real() - n, z.imag()};
            wa -= n * wc;
            wb -= n * wd;
        }
        const double r2 = std::norm(z);
        if (r2 < 1.0 - 1e-12) {
            z = {-z.real() / r2, z.imag() / r2};
            const double ta = wa, tb = wb;
            wa = -wc;
            wb = -wd;
            wc = ta;
            wd = tb;
        } else {
            break;
        }
    }
    const GroupElement word{wa, wb, wc, wd};
    return {word * g, word, steps};
}

/// A coset PSL2(Z) g with a cached reduced representative and its
/// excursion height y0 = max over the coset of Im(gamma g . i).
class SurfacePoint {
public:
    SurfacePoint() : SurfacePoint(GroupElement::identity()) {}

    explicit SurfacePoint(const GroupElement& rep) : rep_(rep)
    {
        const Reduction r = reduce(rep);
        reduced_ = r.reduced;
        word_ = r.word;
        y0_ = im_part(reduced_);
    }

    [[nodiscard]] const GroupElement& rep() const noexcept { return rep_; }
    [[nodiscard]] const GroupElement& reduced() const noexcept { return reduced_; }
    [[nodiscard]] const GroupElement& word() const noexcept { return word_; }
    [[nodiscard]] double y0() const noexcept { return y0_; }
    [[nodiscard]] Complex base_point() const { return {re_part(reduced_), y0_}; }

    /// p . g, i.e. right translation of the coset.
    [[nodiscard]] SurfacePoint translate(const GroupElement& g) const { return SurfacePoint(reduced_ * g); }

private:
    GroupElement rep_;
    GroupElement reduced_;
    GroupElement word_;
    double y0_ = 1.0;
};

inline double y0(const SurfacePoint& p) { return p.y0(); }

/// dist(p) := log max(y0(p), 1).
inline double dist(const SurfacePoint& p) { return std::log(std::max(p.y0(), 1.0)); }

inline bool in_cusp_neighbourhood(const SurfacePoint& p, const LatticeDescriptor& lattice)
{
    return p.y0() >= lattice.C;
}

/// The elements of PSL2(Z) reachable by words of length <= 8 in {S, h(1),
/// h(-1)}, deduplicated. Built once.
inline const std::vector<GroupElement>& short_words()
{
    static const std::vector<GroupElement> words = [] {
        const std::array<GroupElement, 3> gens{inversion_s(), unit_h(1.0), unit_h(-1.0)};
        std::set<std::array<double, 4>> seen;
        std::vector<GroupElement> out{GroupElement::identity()};
        seen.insert(out.front().entries());
        std::vector<GroupElement> frontier = out;
        for (int depth = 0; depth < 8; ++depth) {
            std::vector<GroupElement> next;
            for (const auto& w : frontier)
                for (const auto& s : gens) {
                    const GroupElement g = s * w;
                    if (seen.insert(g.entries()).second) {
                        next.push_back(g);
                        out.push_back(g);
                    }
                }
            frontier = std::move(next);
        }
        return out;
    }();
    return words;
}

struct SurfaceDistance {
    double value = 0.0;
    GroupElement gamma;            ///< minimizing element
    bool lower_bound_only = false; ///< set when value >= 2; the enumeration is not exhaustive there
};

/// d_X(p, q) = inf over gamma of quasi_metric(p, gamma q), minimized over
/// h(n) w for w in the short-word set and every integer n that can still
/// beat the running minimum. Exact for values below 1; values of 2 or more
/// are flagged lower_bound_only.
inline SurfaceDistance dX(const SurfacePoint& p, const SurfacePoint& q)
{
    const GroupElement& gp = p.reduced();
    const GroupElement& gq = q.reduced();
    const Complex zp = p.base_point();
    const Complex zq = q.base_point();
    SurfaceDistance best{quasi_metric(gp, gq), GroupElement::identity(), false};
    for (const GroupElement& w : short_words()) {
        // pure translations are covered by the identity's n-scan
        if (w.c() == 0.0 && w.b() != 0.0)
            continue;
        const Complex wz = mobius(w, zq);
        // quasi_metric dominates the base-point distance, which grows with
        // |n - n0|; walk outwards until it exceeds the best value so far, or
        // 2, past which results are only flagged
        const double n0 = std::nearbyint(zp.real() - wz.real());
        for (double dir : {1.0, -1.0}) {
            for (double n = dir > 0 ? n0 : n0 - 1.0;; n += dir) {
                const Complex shifted{wz.real() + n, wz.imag()};
                if (hyperbolic_distance(zp, shifted) >= std::min(best.value, 2.0))
                    break;
                const GroupElement gamma = unit_h(n) * w;
                const double v = quasi_metric(gp, gamma * gq);
                if (v < best.value)
                    best = {v, gamma, false};
            }
        }
    }
    best.lower_bound_only = best.value >= 2.0;
    return best;
}

/// I.i.d. samples from the probability measure mu_X: x uniform on
/// [-1/2, 1/2], y with density ~ y^-2, rejection to |z| >= 1, theta uniform.
inline std::vector<SurfacePoint> sample_muX(std::uint64_t seed, std::size_t n)
{
    if (n == 0)
        throw std::invalid_argument("sample_muX: n must be at least 1");
    UniformRng rng(seed);
    const double y_min = std::sqrt(3.0) / 2.0;
    std::vector<SurfacePoint> out;
    out.reserve(n);
    while (out.size() < n) {
        const double x = rng() - 0.5;
        const double y = y_min / (1.0 - rng());
        const double theta = std::numbers::pi * rng();
        if (x * x + y * y < 1.0)
            continue;
        out.emplace_back(nak_inv({x, y, theta}));
    }
    return out;
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo estimate of the mu_X-integral of f.
template <class F>
MonteCarloEstimate integrate_muX(const F& f, std::size_t n, std::uint64_t seed = 1)
{
    const auto samples = sample_muX(seed, n);
    CompensatedSum s1;
    CompensatedSum s2;
    for (const auto& p : samples) {
        const double v = f(p);
        s1 += v;
        s2 += v * v;
    }
    const double dn = static_cast<double>(n);
    const double mean = s1.value() / dn;
    const double var = n > 1 ? std::max(0.0, (s2.value() - dn * mean * mean) / (dn - 1.0)) : 0.0;
    return {mean, std::sqrt(var / dn)};
}

} // namespace horolab
