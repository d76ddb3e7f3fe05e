#include "horolab/orbit_dynamics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace horolab;

namespace {

/// Gamma [[phi, psi], [1, 1]] with psi = -1/phi: its geodesic runs between the
/// conjugate quadratic irrationals psi and phi, a closed geodesic.
SurfacePoint golden_point()
{
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    return SurfacePoint(GroupElement{phi, -1.0 / phi, 1.0, 1.0});
}

/// Gamma [[1/d, 0], [c, d]]: bottom row (c, d).
GroupElement bottom_row(double c, double d) { return GroupElement{1.0 / d, 0.0, c, d}; }

} // namespace

TEST(Flows, Examples)
{
    const SurfacePoint e;
    EXPECT_LT(dX(horocycle_flow(e, 1.0), e).value, 1e-12);
    const SurfacePoint g = geodesic_flow(e, std::log(4.0));
    EXPECT_NEAR(g.y0(), 4.0, 1e-12);
    EXPECT_LT(dX(g, SurfacePoint(unit_a(4.0))).value, 1e-12);
}

TEST(Flows, Composition)
{
    oracle::Gen gen(31);
    for (int i = 0; i < 500; ++i) {
        const SurfacePoint p(gen.element());
        const double s = gen.u(-3, 3), t = gen.u(-3, 3);
        EXPECT_LT(dX(geodesic_flow(geodesic_flow(p, s), t), geodesic_flow(p, s + t)).value, 1e-9);
        EXPECT_LT(dX(horocycle_flow(horocycle_flow(p, s), t), horocycle_flow(p, s + t)).value, 1e-9);
    }
}

TEST(RParam, Examples)
{
    EXPECT_NEAR(r_param(SurfacePoint(), 1e3), 1.0, 1e-12);
    oracle::Gen gen(32);
    for (int i = 0; i < 100; ++i) {
        const SurfacePoint q(gen.element(1.0, 3.0));
        EXPECT_DOUBLE_EQ(r_param(q, 1.0), 1.0 / std::max(q.y0(), 1.0));
        EXPECT_LE(r_param(q, 1.0), 1.0);
    }
    EXPECT_THROW(r_param(SurfacePoint(), 0.5), std::domain_error);
}

TEST(RParam, CompactGeodesicStaysLarge)
{
    const SurfacePoint q = golden_point();
    const double C = LatticeDescriptor{}.C;
    const GroupElement g = q.rep();
    for (double lk = 0.0; lk <= 6.0; lk += 0.05) {
        const double K = std::pow(10.0, lk);
        // reference height by the point-only reduction
        const oracle::Mat m = oracle::mul(g.entries(), unit_a(K).entries());
        const double y = oracle::reduce_point(oracle::mobius(m, {0.0, 1.0})).imag();
        EXPECT_LE(y, C);
        EXPECT_NEAR(r_param(q, K), K / std::max(y, 1.0), 1e-8 * K);
        EXPECT_GE(r_param(q, K), K / C);
    }
}

TEST(ObsRFormula, Examples)
{
    const ObsFormula a = obs_r_formula(0.0, 1.0, 1e6);
    EXPECT_DOUBLE_EQ(a.value, 1.0);
    EXPECT_TRUE(a.valid);
    const double T = 1e4;
    const ObsFormula b = obs_r_formula(1.0 / T, 0.0, T);
    EXPECT_NEAR(b.value, 1.0, 1e-15);
    EXPECT_TRUE(b.valid);
    EXPECT_FALSE(obs_r_formula(1.0, 1.0, 10.0).valid);
    EXPECT_THROW(obs_r_formula(0.0, 0.0, 10.0), std::domain_error);
}

TEST(ObsRFormula, AgreesWithRParamInValidRegime)
{
    oracle::Gen gen(33);
    for (int i = 0; i < 200; ++i) {
        const double T = std::pow(10.0, gen.u(2.0, 6.0));
        const double lim = std::sqrt(0.05 * T);
        const double c = gen.u(0.05, 1.0) * lim / T;
        const double d = (gen.u(0, 1) < 0.5 ? -1 : 1) * gen.u(0.05, 1.0) * lim;
        const ObsFormula f = obs_r_formula(c, d, T);
        ASSERT_TRUE(f.valid);
        const double ratio = r_param(SurfacePoint(bottom_row(c, d)), T) / f.value;
        EXPECT_GE(ratio, 1.0 / 64.0);
        EXPECT_LE(ratio, 64.0);
    }
}

TEST(CuspOrbitData, Examples)
{
    // Gamma S = Gamma e is itself a closed horocycle; the data refers to the lift S
    EXPECT_THROW(cusp_orbit_data(SurfacePoint(inversion_s())), PeriodicHorocycleError);
    const CuspOrbitData s = cusp_orbit_data(inversion_s());
    EXPECT_NEAR(s.c, 1.0, 1e-15);
    EXPECT_NEAR(s.d, 0.0, 1e-15);
    EXPECT_NEAR(s.W, 0.0, 1e-15);
    EXPECT_NEAR(s.R, 1.0, 1e-15);
    EXPECT_NEAR(s.alpha, 0.0, 1e-15);

    const CuspOrbitData m = cusp_orbit_data(GroupElement{2.0, 1.0, 3.0, 2.0});
    EXPECT_NEAR(m.W, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.R, 1.0 / 9.0, 1e-15);
    // that matrix lies in PSL2(Z), so as a point of X its horocycle is closed
    EXPECT_THROW(cusp_orbit_data(SurfacePoint(GroupElement{2.0, 1.0, 3.0, 2.0})), PeriodicHorocycleError);
    EXPECT_THROW(cusp_orbit_data(SurfacePoint(unit_a(3.0))), PeriodicHorocycleError);
}

TEST(CuspOrbitData, InvariantsAndHeightProfile)
{
    oracle::Gen gen(34);
    for (int i = 0; i < 100; ++i) {
        const SurfacePoint q(gen.element(3.0, 3.0));
        const CuspOrbitData data = cusp_orbit_data(q);
        EXPECT_NEAR(data.R * data.c * data.c, 1.0, 1e-10);
        EXPECT_EQ(data.W, std::abs(data.t_apex));
        EXPECT_GT(data.c, 0.0);
        // the representative describes the same coset
        EXPECT_LT(dX(SurfacePoint(data.rep), q).value, 1e-8);
        // selection is stable: the apex already reduces by a translation, so
        // no other lift is higher at that time
        const GroupElement apex = data.rep * unit_h(data.t_apex);
        EXPECT_NEAR(reduce(apex).word.c(), 0.0, 1e-12);
        const oracle::Mat m = apex.entries();
        const double y = oracle::reduce_point(oracle::mobius(m, {0.0, 1.0})).imag();
        EXPECT_NEAR(data.R, y, 1e-9 * y);
        for (int k = 0; k < 100; ++k) {
            const double t = data.t_apex + gen.u(-50.0, 50.0);
            const oracle::Mat h = oracle::mul(data.rep.entries(), {1.0, t, 0.0, 1.0});
            const double ref = 1.0 / (h[2] * h[2] + h[3] * h[3]);
            EXPECT_NEAR(height_profile(data, t), ref, 1e-9 * ref);
        }
    }
}

TEST(ParametrizeOrbit, ExamplesFromS)
{
    const CuspOrbitData s = cusp_orbit_data(inversion_s());
    const FrameCoordinates f0 = parametrize_orbit(s, 0.0);
    EXPECT_NEAR(f0.x, 0.0, 1e-15);
    EXPECT_NEAR(f0.y, 1.0, 1e-15);
    EXPECT_NEAR(f0.theta, 0.5 * std::numbers::pi, 1e-15);

    // S h(1) = [[0, -1], [1, 1]]: base point -1/(1+i) and angle atan2(1, 1)
    const FrameCoordinates f1 = parametrize_orbit(s, 1.0);
    const oracle::Nak ref = oracle::nak({0.0, -1.0, 1.0, 1.0});
    EXPECT_NEAR(f1.x, -0.5, 1e-15);
    EXPECT_NEAR(f1.y, 0.5, 1e-15);
    EXPECT_NEAR(ref.x, -0.5, 1e-15);
    EXPECT_NEAR(f1.theta, ref.theta, 1e-15);
    EXPECT_NEAR(f1.theta, 0.25 * std::numbers::pi, 1e-15);
}

TEST(ParametrizeOrbit, MatchesNakOfOrbitPoint)
{
    oracle::Gen gen(35);
    for (int i = 0; i < 1000; ++i) {
        const double c = std::pow(10.0, gen.u(-3.0, 3.0));
        const double d = gen.u(-5.0, 5.0);
        const double a = gen.u(-2.0, 2.0);
        const GroupElement rep{a, (a * d - 1.0) / c, c, d};
        const CuspOrbitData data = cusp_orbit_data(rep);
        const double s = gen.u(-20.0, 20.0);
        const FrameCoordinates p = parametrize_orbit(data, s);
        const oracle::Nak ref = oracle::nak(oracle::mul(rep.entries(), {1.0, data.t_apex + s, 0.0, 1.0}));
        const double scale = std::max(1.0, std::abs(ref.x));
        EXPECT_NEAR(p.x, ref.x, 1e-9 * scale);
        EXPECT_NEAR(p.y, ref.y, 1e-9 * std::max(1.0, ref.y));
        EXPECT_LT(oracle::angle_gap(p.theta, ref.theta), 1e-9);
    }
}

TEST(ClosedApprox, PeriodAndPeriodicity)
{
    const CuspOrbitData s = cusp_orbit_data(inversion_s());
    const ClosedHorocycleApprox a = closed_approx(s, 100.0, 10.0, 0.1);
    // centered at s = t0 + K/2 - t_apex = 105
    EXPECT_NEAR(a.period, 105.0 * 105.0 + 1.0, 1e-8);
    EXPECT_NEAR(a.height * a.period, 1.0, 1e-15);
    EXPECT_LE(dX(horocycle_flow(a.xi, a.period), a.xi).value, 1e-6);

    oracle::Gen gen(36);
    for (int i = 0; i < 50; ++i) {
        const SurfacePoint p(gen.element(2.0, 2.0));
        const double t0 = gen.u(-200.0, 200.0);
        const ClosedHorocycleApprox c = closed_approx(p, t0, gen.u(0.0, 5.0), 0.1, 200);
        EXPECT_NEAR(c.height * c.period, 1.0, 1e-15);
        EXPECT_LE(dX(horocycle_flow(c.xi, c.period), c.xi).value, 1e-6);
    }
}

TEST(ClosedApprox, DegenerateWindowMeasuresTheFrameAngle)
{
    const CuspOrbitData s = cusp_orbit_data(inversion_s());
    const ClosedHorocycleApprox a = closed_approx(s, 100.0, 0.0, 0.1);
    const double direct = dX(horocycle_flow(SurfacePoint(inversion_s()), 100.0), a.xi).value;
    EXPECT_NEAR(a.max_deviation, direct, 1e-15);
    EXPECT_NEAR(a.max_deviation, a.frame_angle, 1e-9);
    EXPECT_NEAR(a.frame_angle, std::atan(1.0 / 100.0), 1e-12);
}

TEST(ClosedApprox, DeviationTracksFrameAngleTimesWindow)
{
    oracle::Gen gen(37);
    for (int i = 0; i < 40; ++i) {
        const SurfacePoint p(gen.element(2.0, 2.0));
        const CuspOrbitData data = cusp_orbit_data(p);
        const double t0 = data.t_apex + gen.u(50.0, 2000.0) * (gen.u(0, 1) < 0.5 ? -1.0 : 1.0);
        const double K = gen.u(1.0, 10.0);
        const ClosedHorocycleApprox c = closed_approx(data, t0, K, 0.1, 1000);
        // h(-tau) k(theta) h(tau) moves by about theta (1 + tau^2) for |tau| <= K/2
        EXPECT_LE(c.max_deviation, 2.0 * c.frame_angle * (1.0 + 0.25 * K * K) + 1e-12);
        EXPECT_GE(c.max_deviation, c.frame_angle * (1.0 - 1e-9) - 1e-12);
    }
}

TEST(GFunction, Examples)
{
    EXPECT_DOUBLE_EQ(g_function(7.0, 0.0, 3.0, 7.0), 3.0);
    EXPECT_DOUBLE_EQ(g_function(1.0, 0.0, 1.0, 0.0), 0.5);
    EXPECT_THROW(g_function(0.0, 0.0, 1.0, 0.0), std::domain_error);
    EXPECT_THROW(g_derivative(-1.0, 0.0, 1.0, 0.0), std::domain_error);
}

TEST(GFunction, DerivativeMatchesFiniteDifferences)
{
    oracle::Gen gen(38);
    for (int i = 0; i < 1000; ++i) {
        const double t = std::pow(10.0, gen.u(0.0, 3.0));
        const double gamma = gen.u(0.0, 0.05);
        const double R = std::pow(10.0, gen.u(-1.0, 3.0));
        const double W = gen.u(-1e3, 1e3);
        // resolve the apex bump, whose width in t is about (|u - W| + 1) / u'
        const double width = (std::abs(std::pow(t, 1.0 + gamma) - W) + 1.0) / ((1.0 + gamma) * std::pow(t, gamma));
        const double h = 1e-4 * std::min(t, width);
        const double fd = (g_function(t + h, gamma, R, W) - g_function(t - h, gamma, R, W)) / (2.0 * h);
        const double an = g_derivative(t, gamma, R, W);
        const double scale = std::abs(an) + g_function(t, gamma, R, W) / t;
        EXPECT_NEAR(an, fd, 1e-6 * scale);
    }
}

TEST(GFunction, SingleApexSignStructure)
{
    oracle::Gen gen(39);
    for (int i = 0; i < 1000; ++i) {
        const double W = gen.u(10.0, 1e4), R = gen.u(0.1, 10.0);
        const double t = gen.u(1.0, 2e4);
        if (std::abs(t - W) < 1e-9)
            continue;
        const double d = g_derivative(t, 0.0, R, W);
        if (t < W) {
            EXPECT_GT(d, 0.0);
        } else {
            EXPECT_LT(d, 0.0);
        }
    }
}

TEST(Exclusions, GammaZeroHasNoJ2)
{
    const ExclusionSet e = exclusion_intervals({1e6, 0.1, 0.0, -3e5});
    EXPECT_TRUE(e.J2.empty());
    const ExclusionSet f = exclusion_intervals({1e6, 0.1, 0.0, 3e5});
    EXPECT_TRUE(f.J2.empty());
    EXPECT_THROW(exclusion_intervals({1e6, 0.0, 0.0, 1.0}), std::domain_error);
}

TEST(Exclusions, J1MatchesClosedFormEndpoints)
{
    const double T = 1e6, delta = 0.1, gamma = 0.02, W = std::pow(10.0, 5.5);
    const ExclusionSet e = exclusion_intervals({T, delta, gamma, W});
    const double lo = std::pow(W / (1.0 + delta), 1.0 / (1.0 + gamma));
    const double hi = std::pow(W / (1.0 - delta), 1.0 / (1.0 + gamma));
    const double ref = delta * T + (hi - std::max(lo, delta * T));
    EXPECT_NEAR(e.measure_J1(), ref, 1e-9 * T);
    EXPECT_LE(e.measure_J1() / T, 2.0 * delta);
    EXPECT_LE(e.measure(), (4.0 * delta + e.eta) * T);
    EXPECT_TRUE(e.within_budget());
}

TEST(Exclusions, J2SitsOnTheCancellationPoint)
{
    const double T = 1e6, delta = 0.1;
    for (double gamma : {0.01, 0.02, 0.05}) {
        const double Tg = std::pow(T, 1.0 + gamma);
        const double W = -0.5 * Tg * gamma; // puts the zero of G' inside [0, T]
        const ExclusionSet e = exclusion_intervals({T, delta, gamma, W});
        ASSERT_EQ(e.J2.size(), 1u);
        // G' changes sign inside J2 and nowhere else off J0 and J1
        const Interval j = e.J2.front();
        const double a = g_derivative(j.lo, gamma, 1e12, W), b = g_derivative(j.hi, gamma, 1e12, W);
        EXPECT_LT(a * b, 0.0);
        const double u0 = W / cancellation_ratio(gamma);
        const double t0 = std::pow(u0, 1.0 / (1.0 + gamma));
        EXPECT_TRUE(j.contains(t0));
    }
}

TEST(Exclusions, DerivativeTwoSidedBoundOffExclusions)
{
    oracle::Gen gen(40);
    const double T = 1e6, delta = 0.1, C_cal = 10.0;
    for (double gamma : {0.0, 0.01, 0.02}) {
        for (int inst = 0; inst < 10; ++inst) {
            const double Tg = std::pow(T, 1.0 + gamma);
            const double W = (inst % 2 ? -1.0 : 1.0) * gen.u(0.2, 3.0) * Tg;
            const double R = gen.u(0.2, 0.8) * (Tg * Tg + W * W);
            const double r = (Tg * Tg + W * W) / R; // max(T^2 c^2, d^2) up to a factor 2
            const ExclusionSet e = exclusion_intervals({T, delta, gamma, W});
            const double base = std::pow(T, gamma - 1.0) / r;
            for (int k = 0; k < 1000; ++k) {
                const double t = T * (k + 0.5) / 1000.0;
                if (e.contains(t))
                    continue;
                const double gp = std::abs(g_derivative(t, gamma, R, W));
                EXPECT_GE(gp, delta * base / C_cal);
                EXPECT_LE(gp, std::pow(delta, -4.0) * base * C_cal);
            }
        }
    }
}

TEST(ClassifyCase, CompactOrbitLabelsFollowTheRParamOracle)
{
    const SurfacePoint p = golden_point();
    const double T = 1e6, eps = 0.01;
    const CaseReport rep = classify_case(p, T, 0.0, eps);
    ASSERT_EQ(rep.blocks.size(), 1200u);
    const double K = std::pow(T, 1.0 / 6.0);
    for (const CaseBlock& b : rep.blocks) {
        const SurfacePoint q = horocycle_flow(p, b.t0);
        const oracle::Mat m = oracle::mul(q.reduced().entries(), unit_a(K).entries());
        const double y = oracle::reduce_point(oracle::mobius(m, {0.0, 1.0})).imag();
        const double r = K / std::max(y, 1.0);
        EXPECT_NEAR(b.r, r, 1e-8 * r);
        EXPECT_EQ(b.label == CaseLabel::good, b.r >= std::pow(T, eps));
    }
    EXPECT_GE(static_cast<double>(rep.count(CaseLabel::good)) / rep.blocks.size(), 0.8);
    EXPECT_FALSE(rep.prop31_hypotheses);
}

TEST(ClassifyCase, DeepExcursionProducesNonGoodBlock)
{
    const double T = 1e6;
    const int n = 1200;
    const double apex = T * (600 + 0.5) / n; // exactly on a grid point
    const double c = 1e-3;
    const SurfacePoint p(bottom_row(c, -c * apex));
    const CaseReport rep = classify_case(p, T, 0.0, 0.01);
    EXPECT_GE(rep.blocks.size() - rep.count(CaseLabel::good), 1u);
    EXPECT_NE(rep.blocks[600].label, CaseLabel::good);
    EXPECT_LT(rep.blocks[600].deviation, std::log(64.0));
}

TEST(ClassifyCase, RLawInsideShortBlocks)
{
    oracle::Gen gen(41);
    for (int i = 0; i < 100; ++i) {
        const double c = std::pow(10.0, gen.u(-4.0, -2.0));
        const double d = (gen.u(0, 1) < 0.5 ? -1.0 : 1.0) * gen.u(0.05, 0.2);
        const GroupElement g = bottom_row(c, d);
        std::vector<double> Ks;
        for (double k = 0.0; k <= 6.0; k += 0.25)
            Ks.push_back(std::pow(10.0, k));
        for (const RLawSample& s : r_law_check(SurfacePoint(g), g, Ks)) {
            if (!s.applicable)
                continue;
            EXPECT_GE(s.ratio(), 1.0 / 64.0);
            EXPECT_LE(s.ratio(), 64.0);
        }
    }
}

TEST(ClassifyCase, RejectsBadArguments)
{
    EXPECT_THROW(classify_case(SurfacePoint(), 5.0, 0.0, 0.01), std::domain_error);
    EXPECT_THROW(classify_case(SurfacePoint(), 1e3, -0.1, 0.01), std::domain_error);
    EXPECT_THROW(classify_case(SurfacePoint(), 1e3, 0.0, 1.5), std::domain_error);
}
