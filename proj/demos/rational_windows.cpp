// Dirichlet approximants and problem-interval membership for a few values,
// then the sparse-average dichotomy on one Lipschitz function.

#include "horolab/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

using namespace horolab;

int main()
{
    std::printf("%-10s %8s %10s %10s %12s\n", "x", "Q", "a", "q", "|x - a/q|");
    for (double x : {std::numbers::pi, std::sqrt(2.0), std::numbers::e, 0.1234})
        for (double Q : {10.0, 1e3, 1e6}) {
            const RationalApprox r = dirichlet_approx(x, Q);
            std::printf("%-10.6f %8.0e %10lld %10lld %12.3e\n", x, Q, static_cast<long long>(r.a),
                        static_cast<long long>(r.q), r.err);
        }

    const ProblemIntervalSet E{3.0, 1e-4, 1.0, 0.0};
    std::printf("\nproblem set: q <= %lld, width %.0e\n", static_cast<long long>(E.qmax()), E.width);
    for (double v : {0.5, 0.50005, 0.3334, 0.7071, 0.1429}) {
        if (const auto m = in_problem_set(v, E))
            std::printf("  %.5f in I(%lld, %lld)\n", v, static_cast<long long>(m->q), static_cast<long long>(m->a));
        else
            std::printf("  %.5f avoids E\n", v);
    }

    // tent of width 0.2 at 1/2, Lipschitz constant 10 <= 1/y
    auto F = [](double x) { return std::max(0.0, 1.0 - 10.0 * std::abs(x - std::floor(x) - 0.5)); };
    std::printf("\n%8s %8s %10s %12s %8s\n", "y", "s", "q", "error", "case");
    for (double s : {1.0 / 0.3, 2.718281828, 1.41421356}) {
        const QbigReport r = qbig_oracle(F, 10.0, s, 0.05, 1e6 * s);
        std::printf("%8.3f %8.4f %10lld %12.3e %8s\n", 0.05, s, static_cast<long long>(r.approx.q), r.observed_error,
                    r.dichotomy().c_str());
    }
}
