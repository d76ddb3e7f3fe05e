#pragma once

// Experiment configuration: JSON parsing, defaults and validation.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace horolab {

inline constexpr const char* kSchemaVersion = "horolab/1";

/// Bad config or bad command-line input; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string lattice = "psl2z";
    double beta = 0.10;
    double epsilon = 0.01;
    std::optional<double> c_gamma_max; ///< beta / 600 when unset
    double eta = 0.05;
    double C_cal = 10.0;
    std::optional<double> delta;       ///< r^{-1/10} per instance when unset
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> T_grid{1e3, 1e4, 1e5, 1e6};
    std::vector<double> gamma_list{0.0};
    std::string output_path;           ///< empty: stdout
    std::string output_format = "csv";
    bool exploratory = false;
    bool inject_det_violation = false; ///< identities only: plant a det != 1 matrix

    [[nodiscard]] double gamma_max() const { return c_gamma_max.value_or(beta / 600.0); }

    /// Throws ConfigError on any violated invariant.
    void validate() const
    {
        if (lattice != "psl2z")
            throw ConfigError("lattice: only \"psl2z\" is supported");
        if (!(beta > 0.0 && beta < 1.0 / 6.0))
            throw ConfigError("beta must lie in (0, 1/6)");
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw ConfigError("epsilon must lie in (0, 1)");
        if (!(gamma_max() >= 0.0))
            throw ConfigError("c_gamma_max must be non-negative");
        if (!(eta > 0.0 && eta < 1.0))
            throw ConfigError("eta must lie in (0, 1)");
        if (!(C_cal > 0.0))
            throw ConfigError("C_cal must be positive");
        if (delta && !(*delta > 0.0 && *delta < 1.0))
            throw ConfigError("delta must lie in (0, 1)");
        if (seeds.empty() || T_grid.empty() || gamma_list.empty())
            throw ConfigError("seeds, T_grid and gamma_list must be non-empty");
        for (double T : T_grid)
            if (!(T >= 10.0) || !std::isfinite(T))
                throw ConfigError("every T in T_grid must be finite and at least 10");
        for (double g : gamma_list) {
            if (!(g >= 0.0) || !std::isfinite(g))
                throw ConfigError("every gamma must be finite and non-negative");
            if (!exploratory && g > gamma_max())
                throw ConfigError("gamma " + std::to_string(g) + " exceeds c_gamma_max (set exploratory to override)");
        }
        if (output_format != "csv" && output_format != "json")
            throw ConfigError("output.format must be \"csv\" or \"json\"");
    }

    /// The resolved config, every default filled in. Keys come out sorted.
    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["lattice"] = {{"name", lattice}};
        j["beta"] = beta;
        j["epsilon"] = epsilon;
        j["c_gamma_max"] = gamma_max();
        j["eta"] = eta;
        j["C_cal"] = C_cal;
        j["delta"] = delta ? nlohmann::json(*delta) : nlohmann::json("r^-0.1");
        j["seeds"] = seeds;
        j["T_grid"] = T_grid;
        j["gamma_list"] = gamma_list;
        j["output"] = {{"path", output_path}, {"format", output_format}};
        j["exploratory"] = exploratory;
        if (inject_det_violation)
            j["debug"] = {{"inject_det_violation", true}};
        return j;
    }
};

namespace detail {

template <class T>
T config_field(const nlohmann::json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where)
{
    for (const auto& [k, v] : j.items())
        if (!known.count(k))
            throw ConfigError("unknown config key '" + where + k + "'");
}

} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j)
{
    using detail::config_field;
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j,
                           {"lattice", "beta", "epsilon", "c_gamma_max", "eta", "C_cal", "delta", "seeds", "T_grid",
                            "gamma_list", "output", "exploratory", "debug"},
                           "");
    ExperimentConfig c;
    if (j.contains("lattice")) {
        const auto& l = j["lattice"];
        if (l.is_string())
            c.lattice = l.get<std::string>();
        else if (l.is_object()) {
            detail::reject_unknown(l, {"name"}, "lattice.");
            c.lattice = config_field<std::string>(l, "name");
        } else
            throw ConfigError("lattice must be a string or {\"name\": ...}");
    }
    if (j.contains("beta"))
        c.beta = config_field<double>(j, "beta");
    if (j.contains("epsilon"))
        c.epsilon = config_field<double>(j, "epsilon");
    if (j.contains("c_gamma_max"))
        c.c_gamma_max = config_field<double>(j, "c_gamma_max");
    if (j.contains("eta"))
        c.eta = config_field<double>(j, "eta");
    if (j.contains("C_cal"))
        c.C_cal = config_field<double>(j, "C_cal");
    if (j.contains("delta") && !j["delta"].is_string())
        c.delta = config_field<double>(j, "delta");
    if (j.contains("seeds"))
        c.seeds = config_field<std::vector<std::uint64_t>>(j, "seeds");
    if (j.contains("T_grid"))
        c.T_grid = config_field<std::vector<double>>(j, "T_grid");
    if (j.contains("gamma_list"))
        c.gamma_list = config_field<std::vector<double>>(j, "gamma_list");
    if (j.contains("output")) {
        const auto& o = j["output"];
        if (!o.is_object())
            throw ConfigError("output must be an object");
        detail::reject_unknown(o, {"path", "format"}, "output.");
        if (o.contains("path"))
            c.output_path = config_field<std::string>(o, "path");
        if (o.contains("format"))
            c.output_format = config_field<std::string>(o, "format");
    }
    if (j.contains("exploratory"))
        c.exploratory = config_field<bool>(j, "exploratory");
    if (j.contains("debug")) {
        const auto& d = j["debug"];
        if (!d.is_object())
            throw ConfigError("debug must be an object");
        detail::reject_unknown(d, {"inject_det_violation"}, "debug.");
        if (d.contains("inject_det_violation"))
            c.inject_det_violation = config_field<bool>(d, "inject_det_violation");
    }
    return c;
}

inline ExperimentConfig parse_config_text(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace horolab
