#pragma once

// Bodies of the horolab commands, plus the seeded instance generators they
// share with the acceptance run. Each command returns its rendered output and
// an exit code (0 pass, 1 invariant or bound violation).

#include "horolab/config.hpp"
#include "horolab/diophantine.hpp"
#include "horolab/equidist.hpp"
#include "horolab/modular_surface.hpp"
#include "horolab/numerics.hpp"
#include "horolab/observable.hpp"
#include "horolab/orbit_dynamics.hpp"
#include "horolab/psl2.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace horolab {

struct CommandResult {
    int exit_code = 0;
    std::string output;
    std::string trace; ///< optional secondary CSV (dernormal)
};

/// Rows of mixed numbers and strings, rendered as CSV or JSON.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;
};

namespace detail {

inline std::string format_cell(const nlohmann::json& v)
{
    if (v.is_string()) {
        const std::string text = v.get<std::string>();
        if (text.find_first_of(",\"\n") == std::string::npos)
            return text;
        std::string quoted = "\"";
        for (char ch : text)
            quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return quoted + "\"";
    }
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer() || v.is_number_unsigned())
        return v.dump();
    if (v.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    return v.dump();
}

/// Non-finite doubles become strings so that the JSON stays valid.
inline nlohmann::json num(double x)
{
    if (std::isfinite(x))
        return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

inline std::string csv_preamble(const std::string& command, const ExperimentConfig& cfg)
{
    return "# schema_version: " + std::string(kSchemaVersion) + "\n# command: " + command
         + "\n# config: " + cfg.to_json().dump() + "\n";
}

inline std::string render_csv(const std::string& command, const ExperimentConfig& cfg, const Table& t)
{
    std::string out = csv_preamble(command, cfg);
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + format_cell(row[i]);
        out += '\n';
    }
    return out;
}

inline nlohmann::json json_envelope(const std::string& command, const ExperimentConfig& cfg)
{
    return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", cfg.to_json()}};
}

inline std::string render_table(const std::string& command, const ExperimentConfig& cfg, const Table& t)
{
    if (cfg.output_format == "csv")
        return render_csv(command, cfg, t);
    nlohmann::json j = json_envelope(command, cfg);
    j["columns"] = t.columns;
    j["rows"] = t.rows;
    return j.dump(2) + "\n";
}

} // namespace detail

// ---------------------------------------------------------------- points

struct NamedPoint {
    std::string name;
    SurfacePoint point;
};

/// The two standard non-periodic points and the periodic control Gamma e.
inline std::vector<NamedPoint> standard_points()
{
    return {
        {"a(sqrt2)k(1)", SurfacePoint(unit_a(std::sqrt(2.0)) * unit_k(1.0))},
        {"h(sqrt3-1)a(2)k(1/2)", SurfacePoint(unit_h(std::sqrt(3.0) - 1.0) * unit_a(2.0) * unit_k(0.5))},
        {"identity", SurfacePoint()},
    };
}

/// The fixed bump used for discrepancy runs.
inline Observable standard_bump()
{
    return bump_observable(SurfacePoint(unit_h(0.1) * unit_a(1.8) * unit_k(0.3)), 0.75);
}

/// Random elements h(x) a(y) k(theta), x in [-2, 2], log y in [-2, 2].
inline GroupElement random_element(UniformRng& rng)
{
    const double x = rng.uniform(-2.0, 2.0);
    const double y = std::exp(rng.uniform(-2.0, 2.0));
    const double t = rng.uniform(0.0, std::numbers::pi);
    return nak_inv({x, y, t});
}

// ---------------------------------------------------------------- identities

struct SuiteTally {
    std::string name;
    std::size_t cases = 0;
    std::size_t passed = 0;
};

struct IdentityRun {
    std::vector<SuiteTally> suites;
    nlohmann::json failures = nlohmann::json::array();
    [[nodiscard]] bool ok() const
    {
        for (const auto& s : suites)
            if (s.passed != s.cases)
                return false;
        return true;
    }
};

/// Algebraic identity suites on `n` random cases each. `extra_det` is
/// appended to the determinant suite (the fault-injection hook).
inline IdentityRun run_identity_suites(std::uint64_t seed, std::size_t n, double tol,
                                       const std::vector<GroupElement>& extra_det = {})
{
    IdentityRun run;
    UniformRng rng(seed);
    auto suite = [&](const std::string& name, const std::function<bool(std::size_t, std::string&)>& check,
                     std::size_t count) {
        SuiteTally t{name, count, 0};
        for (std::size_t i = 0; i < count; ++i) {
            std::string why;
            if (check(i, why))
                ++t.passed;
            else if (run.failures.size() < 20)
                run.failures.push_back({{"suite", name}, {"case", i}, {"detail", why}});
        }
        run.suites.push_back(t);
    };

    suite("group_axioms", [&](std::size_t, std::string& why) {
        const GroupElement g = random_element(rng), h = random_element(rng), k = random_element(rng);
        const bool ok = approx_equal((g * h) * k, g * (h * k), tol)
                     && approx_equal(g * GroupElement::identity(), g, tol)
                     && approx_equal(g * g.inverse(), GroupElement::identity(), tol);
        if (!ok)
            why = "associativity, identity or inverse";
        return ok;
    }, n);

    suite("commutation", [&](std::size_t, std::string& why) {
        const double x = rng.uniform(-5.0, 5.0);
        const double y = std::exp(rng.uniform(-2.0, 2.0));
        const bool ok = approx_equal(unit_a(y) * unit_h(x), unit_h(x * y) * unit_a(y), tol);
        if (!ok)
            why = "a(y) h(x) != h(xy) a(y)";
        return ok;
    }, n);

    suite("flow_additivity", [&](std::size_t, std::string& why) {
        const double s = rng.uniform(-3.0, 3.0), t = rng.uniform(-3.0, 3.0);
        const SurfacePoint p(random_element(rng));
        const bool group = approx_equal(unit_h(s) * unit_h(t), unit_h(s + t), tol)
                        && approx_equal(unit_a(std::exp(s)) * unit_a(std::exp(t)), unit_a(std::exp(s + t)), tol);
        const double dh = dX(horocycle_flow(horocycle_flow(p, s), t), horocycle_flow(p, s + t)).value;
        const double dg = dX(geodesic_flow(geodesic_flow(p, s), t), geodesic_flow(p, s + t)).value;
        const bool ok = group && dh <= 1e-8 && dg <= 1e-8;
        if (!ok)
            why = "flow composition, dX = " + std::to_string(std::max(dh, dg));
        return ok;
    }, n);

    suite("nak_roundtrip", [&](std::size_t, std::string& why) {
        const GroupElement g = random_element(rng);
        const FrameCoordinates fc{rng.uniform(-5.0, 5.0), std::exp(rng.uniform(-2.0, 2.0)),
                                  rng.uniform(0.0, std::numbers::pi)};
        const FrameCoordinates back = nak(nak_inv(fc));
        const double dtheta = std::abs(back.theta - fc.theta);
        const bool ok = approx_equal(nak_inv(nak(g)), g, tol) && std::abs(back.x - fc.x) <= tol
                     && std::abs(back.y - fc.y) <= tol * fc.y && std::min(dtheta, std::numbers::pi - dtheta) <= tol;
        if (!ok)
            why = "nak / nak_inv mismatch";
        return ok;
    }, n);

    suite("reduction", [&](std::size_t, std::string& why) {
        const GroupElement g = random_element(rng) * unit_h(rng.uniform(-50.0, 50.0));
        const Reduction r = reduce(g);
        const double x = re_part(r.reduced), y = im_part(r.reduced);
        bool integral = true;
        for (double e : r.word.entries())
            integral = integral && e == std::nearbyint(e);
        const bool ok = std::abs(x) <= 0.5 + 1e-9 && x * x + y * y >= 1.0 - 1e-9 && integral
                     && std::abs(r.word.det() - 1.0) == 0.0 && approx_equal(r.word * g, r.reduced, 1e-9);
        if (!ok)
            why = "reduced point outside F or word not in PSL2(Z)";
        return ok;
    }, n);

    std::vector<GroupElement> det_cases;
    for (std::size_t i = 0; i < n; ++i)
        det_cases.push_back(random_element(rng) * random_element(rng));
    det_cases.insert(det_cases.end(), extra_det.begin(), extra_det.end());
    suite("determinant", [&](std::size_t i, std::string& why) {
        const double d = det_cases[i].det();
        const bool ok = std::abs(d - 1.0) <= tol;
        if (!ok)
            why = "det = " + std::to_string(d);
        return ok;
    }, det_cases.size());

    return run;
}

inline CommandResult cmd_identities(const ExperimentConfig& cfg, std::size_t cases_per_suite = 1000)
{
    std::vector<GroupElement> planted;
    if (cfg.inject_det_violation)
        planted.push_back(GroupElement::unchecked(2.0, 0.0, 0.0, 1.0));
    nlohmann::json suites = nlohmann::json::array();
    nlohmann::json failures = nlohmann::json::array();
    std::vector<SuiteTally> total;
    for (std::uint64_t seed : cfg.seeds) {
        const IdentityRun run = run_identity_suites(seed, cases_per_suite, 1e-10, planted);
        for (std::size_t i = 0; i < run.suites.size(); ++i) {
            if (total.size() <= i)
                total.push_back({run.suites[i].name, 0, 0});
            total[i].cases += run.suites[i].cases;
            total[i].passed += run.suites[i].passed;
        }
        for (auto f : run.failures) {
            f["seed"] = seed;
            failures.push_back(f);
        }
    }
    bool ok = true;
    for (const auto& t : total) {
        suites.push_back({{"name", t.name}, {"cases", t.cases}, {"passed", t.passed}});
        ok = ok && t.passed == t.cases;
    }
    nlohmann::json j = detail::json_envelope("identities", cfg);
    j["suites"] = suites;
    j["failures"] = failures;
    j["status"] = ok ? "pass" : "fail";
    return {ok ? 0 : 1, j.dump(2) + "\n", {}};
}

// ---------------------------------------------------------------- discrepancy

inline CommandResult cmd_discrepancy(const ExperimentConfig& cfg)
{
    std::vector<NamedPoint> points = standard_points();
    for (std::uint64_t seed : cfg.seeds)
        points.push_back({"random_seed_" + std::to_string(seed), sample_muX(seed, 1).front()});
    const Observable f = standard_bump();

    Table t;
    t.columns = {"point", "observable", "T", "gamma", "N", "average", "mean", "discrepancy", "r", "predicted",
                 "beta", "within"};
    bool ok = true;
    for (const auto& [name, p] : points)
        for (double gamma : cfg.gamma_list)
            for (double T : cfg.T_grid) {
                const DiscrepancyReport d = discrepancy_report(f, p, gamma, T, cfg.beta);
                const bool within = d.discrepancy <= cfg.C_cal * d.predicted * f.norm();
                ok = ok && within;
                t.rows.push_back({name, f.descriptor(), d.T, d.gamma, d.N, d.average, d.mean, d.discrepancy, d.r,
                                  d.predicted, d.beta, within});
            }
    return {ok ? 0 : 1, detail::render_table("discrepancy", cfg, t), {}};
}

// ---------------------------------------------------------------- dichotomy

/// Geometric K grid 10^{k/2}, k = 2, 3, ..., up to Kmax.
inline std::vector<double> r_law_scales(double Kmax)
{
    std::vector<double> Ks;
    for (int k = 2; std::pow(10.0, 0.5 * k) <= Kmax * (1.0 + 1e-12); ++k)
        Ks.push_back(std::pow(10.0, 0.5 * k));
    return Ks;
}

/// Gamma g with g = [[1/d, 0], [c, d]], c = 10^{U[-4,-2]} and |d| in
/// [0.05, 0.2]: the horocycle climbs to height about 1/c^2 and W = |d/c|
/// lies between 5 and 2 10^4.
inline GroupElement engineered_excursion(UniformRng& rng)
{
    const double c = std::pow(10.0, rng.uniform(-4.0, -2.0));
    const double d = (rng() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 0.2);
    return GroupElement{1.0 / d, 0.0, c, d};
}

inline CommandResult cmd_dichotomy(const ExperimentConfig& cfg)
{
    nlohmann::json runs = nlohmann::json::array();
    bool ok = true;
    for (std::uint64_t seed : cfg.seeds) {
        const SurfacePoint p = sample_muX(seed, 1).front();
        for (double T : cfg.T_grid)
            for (double gamma : cfg.gamma_list) {
                const CaseReport rep = classify_case(p, T, gamma, cfg.epsilon);
                // piecewise law of r on an engineered excursion, whose representative is known exactly
                UniformRng rng(seed);
                const GroupElement g = engineered_excursion(rng);
                const SurfacePoint q(g);
                nlohmann::json r_law = nlohmann::json::array();
                std::size_t applicable = 0, within = 0;
                for (const RLawSample& s : r_law_check(q, g, r_law_scales(std::pow(T, 1.0 + gamma)))) {
                    const bool in = s.ratio() >= 1.0 / 64.0 && s.ratio() <= 64.0;
                    applicable += s.applicable ? 1 : 0;
                    within += (s.applicable && in) ? 1 : 0;
                    r_law.push_back({{"K", s.K}, {"r", s.r}, {"predicted", detail::num(s.predicted)},
                                   {"applicable", s.applicable}, {"ratio", detail::num(s.ratio())}});
                }
                ok = ok && within == applicable;
                nlohmann::json counts;
                for (CaseLabel l : {CaseLabel::good, CaseLabel::short_w, CaseLabel::mid_w, CaseLabel::prop31})
                    counts[to_string(l)] = rep.count(l);
                nlohmann::json blocks = nlohmann::json::array();
                for (const CaseBlock& b : rep.blocks)
                    blocks.push_back({b.t0, b.r, detail::num(b.W), to_string(b.label), b.deviation});
                const FrameCoordinates fc = nak(p.reduced());
                runs.push_back({{"seed", seed},
                                {"point", {{"x", fc.x}, {"y", fc.y}, {"theta", fc.theta}}},
                                {"T", T},
                                {"gamma", gamma},
                                {"r_p", rep.r_p},
                                {"W_p", detail::num(rep.W_p)},
                                {"prop31_hypotheses", rep.prop31_hypotheses},
                                {"counts", counts},
                                {"block_columns", {"t0", "r", "W", "label", "deviation"}},
                                {"blocks", blocks},
                                {"r_law", {{"c", g.c()}, {"d", g.d()}, {"samples", r_law}, {"applicable", applicable}, {"within_factor_64", within}}}});
            }
    }
    nlohmann::json j = detail::json_envelope("dichotomy", cfg);
    j["runs"] = runs;
    j["status"] = ok ? "pass" : "fail";
    return {ok ? 0 : 1, j.dump(2) + "\n", {}};
}

// ---------------------------------------------------------------- qbig

/// One-periodic piecewise-linear F through `knots` at x = j/m.
struct PiecewiseLinear {
    std::vector<double> knots;

    double operator()(double x) const
    {
        const auto m = static_cast<double>(knots.size());
        const double u = (x - std::floor(x)) * m;
        const auto j = std::min(static_cast<std::size_t>(u), knots.size() - 1);
        const double w = u - static_cast<double>(j);
        return (1.0 - w) * knots[j] + w * knots[(j + 1) % knots.size()];
    }
    [[nodiscard]] double lipschitz() const
    {
        double L = 0.0;
        for (std::size_t j = 0; j < knots.size(); ++j)
            L = std::max(L, std::abs(knots[(j + 1) % knots.size()] - knots[j]));
        return L * static_cast<double>(knots.size());
    }
};

struct QbigInstance {
    std::string label; ///< "instance" or "adversarial"
    PiecewiseLinear F;
    double s = 0.0;
    double y = 0.0;
    double K = 0.0;
};

/// `count` seeded instances with q >= y^{-3}: y in [0.05, 0.1], eight random
/// knots in [0, 1], s in [1, 3] and 4 10^5 sample points. Draws with a small
/// Dirichlet denominator are redrawn.
inline std::vector<QbigInstance> qbig_instances(std::uint64_t seed, std::size_t count)
{
    UniformRng rng(seed);
    std::vector<QbigInstance> out;
    constexpr double N = 400'000;
    while (out.size() < count) {
        QbigInstance in;
        in.label = "instance";
        in.y = rng.uniform(0.05, 0.1);
        for (int j = 0; j < 8; ++j)
            in.F.knots.push_back(rng());
        in.s = rng.uniform(1.0, 3.0);
        in.K = (N + 0.5) * in.s;
        const RationalApprox ra = dirichlet_approx(in.s * in.y, in.y * in.K / in.s);
        if (static_cast<double>(ra.q) >= 1.0 / (in.y * in.y * in.y))
            out.push_back(std::move(in));
    }
    return out;
}

/// s y = 1/3 and F a spike of height 1 at the integers: the sample points
/// sit on the spike a third of the time, so the average is off by about 1/3.
inline QbigInstance qbig_adversarial()
{
    QbigInstance in;
    in.label = "adversarial";
    in.y = 0.02;
    in.F.knots.assign(50, 0.0);
    in.F.knots[0] = 1.0;
    in.s = 1.0 / (3.0 * in.y);
    in.K = 300'000.5 * in.s;
    return in;
}

inline QbigReport run_qbig(const QbigInstance& in)
{
    return qbig_oracle(in.F, in.F.lipschitz(), in.s, in.y, in.K);
}

inline CommandResult cmd_qbig(const ExperimentConfig& cfg, std::size_t per_seed = 100)
{
    Table t;
    t.columns = {"seed", "index", "label", "y", "s", "K", "L", "q", "a", "average", "integral", "observed",
                 "term_y2_q", "term_qs_K", "term_y1_q", "bound", "dichotomy", "within"};
    bool ok = true;
    auto emit = [&](std::uint64_t seed, std::size_t i, const QbigInstance& in) {
        const QbigReport r = run_qbig(in);
        const bool within = in.label == "adversarial" ? r.observed_error <= cfg.C_cal * in.y
                                                      : r.observed_error <= cfg.C_cal * r.bound();
        if (in.label == "adversarial")
            ok = ok && !within && !r.q_big; // the control must fail the O(y) bound
        else
            ok = ok && within && r.q_big && r.lipschitz_ok;
        t.rows.push_back({seed, i, in.label, in.y, in.s, in.K, in.F.lipschitz(), r.approx.q, r.approx.a, r.average,
                          r.integral, r.observed_error, r.term_lipschitz_drift, r.term_tail, r.term_riemann,
                          r.bound(), r.dichotomy(), within});
    };
    for (std::uint64_t seed : cfg.seeds) {
        const auto inst = qbig_instances(seed, per_seed);
        for (std::size_t i = 0; i < inst.size(); ++i)
            emit(seed, i, inst[i]);
    }
    emit(0, 0, qbig_adversarial());
    return {ok ? 0 : 1, detail::render_table("qbig", cfg, t), {}};
}

// ---------------------------------------------------------------- dernormal

struct DernormalInstance {
    CuspOrbitData data; ///< only R and t_apex enter the scan
    double rmax = 0.0;
    double delta = 0.0;
};

/// Synthetic data in the PROP31 regime at (T, gamma): |W| between 1.5 and 3
/// times T^{1+gamma} with a random sign, R putting G(T) in [0.2, 0.8],
/// rmax = T^{4 eps} and delta = rmax^{-1/10} unless given.
inline DernormalInstance dernormal_instance(std::uint64_t seed, double T, double gamma, double eps,
                                            std::optional<double> delta = std::nullopt)
{
    UniformRng rng(seed);
    const double Tg = std::pow(T, 1.0 + gamma);
    DernormalInstance in;
    const double sign = rng() < 0.5 ? -1.0 : 1.0;
    in.data.t_apex = sign * rng.uniform(1.5, 3.0) * Tg;
    in.data.W = std::abs(in.data.t_apex);
    const double e = Tg - in.data.t_apex;
    in.data.R = rng.uniform(0.2, 0.8) * (e * e + 1.0) / std::pow(T, gamma);
    in.data.c = 1.0 / std::sqrt(in.data.R);
    in.data.d = -in.data.t_apex * in.data.c;
    in.rmax = std::pow(T, 4.0 * eps);
    in.delta = delta.value_or(std::pow(in.rmax, -0.1));
    return in;
}

inline CommandResult cmd_dernormal(const ExperimentConfig& cfg, std::size_t trace_stride = 100)
{
    Table t;
    t.columns = {"seed", "T", "gamma", "delta", "rmax", "R", "W", "width", "width_ok", "grid", "excluded_fraction",
                 "fraction", "bound", "within"};
    std::string trace = detail::csv_preamble("dernormal-trace", cfg) + "seed,T,gamma,t,G,member\n";
    bool ok = true;
    for (std::uint64_t seed : cfg.seeds)
        for (double T : cfg.T_grid)
            for (double gamma : cfg.gamma_list) {
                const DernormalInstance in = dernormal_instance(seed, T, gamma, cfg.epsilon, cfg.delta);
                DernormalOptions opt;
                opt.eta = cfg.eta;
                opt.C_cal = cfg.C_cal;
                const auto samples = dernormal_trace(T, gamma, in.data, in.delta, in.rmax, opt);
                const DernormalReport r = dernormal_scan(T, gamma, in.data, in.delta, in.rmax, opt);
                ok = ok && r.within;
                t.rows.push_back({seed, T, gamma, in.delta, in.rmax, in.data.R, in.data.t_apex, r.width, r.width_ok,
                                  r.grid, r.excluded_fraction, r.fraction, r.bound, r.within});
                for (std::size_t k = 0; k < samples.size(); k += trace_stride) {
                    const auto& s = samples[k];
                    const std::string member = s.member ? std::to_string(s.member->q) + ":" + std::to_string(s.member->a)
                                                        : (s.excluded ? "excluded" : "none");
                    trace += detail::format_cell(seed) + "," + detail::format_cell(T) + ","
                           + detail::format_cell(gamma) + "," + detail::format_cell(s.t) + ","
                           + detail::format_cell(s.G) + "," + member + "\n";
                }
            }
    return {ok ? 0 : 1, detail::render_table("dernormal", cfg, t), trace};
}

} // namespace horolab
