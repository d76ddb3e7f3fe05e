// horolab: runs the verification suites and equidistribution scans from a
// JSON config and writes CSV or JSON results.
//
//   horolab <identities|discrepancy|dichotomy|qbig|dernormal> --config <file>
//           [--out <path>] [--seed <n>] [--exploratory]
//
// Exit codes: 0 pass, 1 invariant or bound violation, 2 invalid input.

#include "horolab/config.hpp"
#include "horolab/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace {

bool write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

} // namespace

int main(int argc, char** argv)
{
    using namespace horolab;
    const std::map<std::string, std::function<CommandResult(const ExperimentConfig&)>> commands{
        {"identities", [](const ExperimentConfig& c) { return cmd_identities(c); }},
        {"discrepancy", [](const ExperimentConfig& c) { return cmd_discrepancy(c); }},
        {"dichotomy", [](const ExperimentConfig& c) { return cmd_dichotomy(c); }},
        {"qbig", [](const ExperimentConfig& c) { return cmd_qbig(c); }},
        {"dernormal", [](const ExperimentConfig& c) { return cmd_dernormal(c); }},
    };

    CLI::App app{"Horocycle equidistribution experiments on the modular surface"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    bool exploratory = false;
    for (const auto& [name, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_path, "output path (overrides output.path; default stdout)");
        sub->add_option("--seed", seed, "run with this single seed");
        sub->add_flag("--exploratory", exploratory, "allow gamma above c_gamma_max");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
        if (!out_path.empty())
            cfg.output_path = out_path;
        if (seed)
            cfg.seeds = {*seed};
        cfg.exploratory = cfg.exploratory || exploratory;
        cfg.validate();
    } catch (const ConfigError& e) {
        std::cerr << "horolab: " << e.what() << '\n';
        return 2;
    }

    CommandResult result;
    try {
        result = commands.at(name)(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "horolab: invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "horolab: invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "horolab: invariant violated: " << e.what() << '\n';
        return 1;
    }

    if (cfg.output_path.empty()) {
        std::cout << result.output;
    } else {
        if (!write_file(cfg.output_path, result.output)) {
            std::cerr << "horolab: cannot write '" << cfg.output_path << "'\n";
            return 2;
        }
        if (!result.trace.empty() && !write_file(cfg.output_path + ".trace.csv", result.trace)) {
            std::cerr << "horolab: cannot write trace file\n";
            return 2;
        }
    }
    if (result.exit_code != 0)
        std::cerr << "horolab: " << name << ": check failed\n";
    return result.exit_code;
}
