#include "horolab/config.hpp"
#include "horolab/experiments.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace horolab;

namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(HOROLAB_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return std::string(HOROLAB_CONFIG_DIR) + "/" + name; }

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& stem)
{
    return (std::filesystem::temp_directory_path() / ("horolab_test_" + stem)).string();
}

} // namespace

TEST(Config, DefaultsAndResolvedJson)
{
    const ExperimentConfig c = parse_config_text("{}");
    EXPECT_EQ(c.lattice, "psl2z");
    EXPECT_DOUBLE_EQ(c.beta, 0.10);
    EXPECT_DOUBLE_EQ(c.epsilon, 0.01);
    EXPECT_DOUBLE_EQ(c.gamma_max(), 0.10 / 600.0);
    EXPECT_DOUBLE_EQ(c.eta, 0.05);
    EXPECT_DOUBLE_EQ(c.C_cal, 10.0);
    EXPECT_FALSE(c.delta);
    EXPECT_NO_THROW(c.validate());
    const nlohmann::json j = c.to_json();
    EXPECT_EQ(j["delta"], "r^-0.1");
    EXPECT_EQ(j["lattice"]["name"], "psl2z");
    EXPECT_FALSE(j.contains("debug"));
    // nlohmann::json objects iterate in key order, so the dump is stable
    EXPECT_EQ(j.dump(), parse_config(j).to_json().dump());
}

TEST(Config, ParsesEveryField)
{
    const ExperimentConfig c = parse_config_text(R"({
        "lattice": "psl2z", "beta": 0.12, "epsilon": 0.02, "c_gamma_max": 0.001, "eta": 0.1,
        "C_cal": 5, "delta": 0.3, "seeds": [4, 5], "T_grid": [100, 1000], "gamma_list": [0, 0.001],
        "output": {"path": "x.csv", "format": "json"}, "exploratory": false})");
    EXPECT_DOUBLE_EQ(c.beta, 0.12);
    EXPECT_DOUBLE_EQ(c.gamma_max(), 0.001);
    EXPECT_DOUBLE_EQ(*c.delta, 0.3);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
    EXPECT_EQ(c.output_path, "x.csv");
    EXPECT_EQ(c.output_format, "json");
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(parse_config_text(R"({"lattice": {"name": "psl2z"}})").lattice, "psl2z");
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(parse_config_text("not json"), ConfigError);
    EXPECT_THROW(parse_config_text("[1, 2]"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"betta": 0.1})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"output": {"fmt": "csv"}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"beta": "high"})"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/horolab.json"), ConfigError);

    auto invalid = [](const std::string& text) {
        EXPECT_THROW(parse_config_text(text).validate(), ConfigError) << text;
    };
    invalid(R"({"beta": 0.5})");
    invalid(R"({"beta": 0})");
    invalid(R"({"lattice": "sl3z"})");
    invalid(R"({"epsilon": 1.5})");
    invalid(R"({"delta": 1.0})");
    invalid(R"({"T_grid": [5]})");
    invalid(R"({"seeds": []})");
    invalid(R"({"gamma_list": [-0.01]})");
    invalid(R"({"gamma_list": [0.02]})");
    invalid(R"({"output": {"format": "xml"}})");
    EXPECT_NO_THROW(parse_config_text(R"({"gamma_list": [0.02], "exploratory": true})").validate());
}

TEST(Commands, IdentitiesPassAndReportSuites)
{
    ExperimentConfig c;
    const CommandResult r = cmd_identities(c, 200);
    EXPECT_EQ(r.exit_code, 0);
    const nlohmann::json j = nlohmann::json::parse(r.output);
    EXPECT_EQ(j["schema_version"], kSchemaVersion);
    EXPECT_EQ(j["status"], "pass");
    ASSERT_GE(j["suites"].size(), 5u);
    for (const auto& s : j["suites"]) {
        EXPECT_EQ(s["cases"], s["passed"]);
        EXPECT_GT(s["cases"].get<int>(), 0);
    }
    EXPECT_EQ(j["config"], c.to_json());
}

TEST(Commands, InjectedDeterminantViolationFails)
{
    ExperimentConfig c;
    c.inject_det_violation = true;
    const CommandResult r = cmd_identities(c, 50);
    EXPECT_EQ(r.exit_code, 1);
    const nlohmann::json j = nlohmann::json::parse(r.output);
    EXPECT_EQ(j["status"], "fail");
    EXPECT_FALSE(j["failures"].empty());
    EXPECT_TRUE(j["config"].contains("debug"));
}

TEST(Commands, QbigIsDeterministicAndEmbedsConfig)
{
    ExperimentConfig c;
    c.seeds = {3};
    const CommandResult a = cmd_qbig(c, 10);
    const CommandResult b = cmd_qbig(c, 10);
    EXPECT_EQ(a.output, b.output);
    EXPECT_EQ(a.exit_code, 0);
    EXPECT_EQ(a.output.rfind("# schema_version: horolab/1\n# command: qbig\n# config: ", 0), 0u);
    EXPECT_NE(a.output.find(c.to_json().dump()), std::string::npos);
    EXPECT_NE(a.output.find("small_q"), std::string::npos);
    c.seeds = {4};
    EXPECT_NE(cmd_qbig(c, 10).output, a.output);
}

TEST(Commands, CsvQuotingAndNonFiniteCells)
{
    EXPECT_EQ(detail::format_cell("plain"), "plain");
    EXPECT_EQ(detail::format_cell("a,b"), "\"a,b\"");
    EXPECT_EQ(detail::format_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(detail::format_cell(detail::num(INFINITY)), "inf");
    EXPECT_EQ(detail::format_cell(0.1), "0.10000000000000001");
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(run_cli("identities --config " + config("identities.json")), 0);
    EXPECT_EQ(run_cli("identities --config " + config("inject_det.json")), 1);
    EXPECT_EQ(run_cli("identities --config " + config("bad_beta.json")), 2);
    EXPECT_EQ(run_cli("identities --config /nonexistent.json"), 2);
    EXPECT_EQ(run_cli("identities"), 2);
    EXPECT_EQ(run_cli("unknowncmd --config " + config("identities.json")), 2);
    EXPECT_EQ(run_cli(""), 2);
}

TEST(Cli, ExploratoryFlagGatesLargeGamma)
{
    const std::string path = temp_path("gamma.json");
    {
        std::ofstream out(path);
        out << R"({"seeds": [1], "T_grid": [1000], "gamma_list": [0.02], "output": {"format": "json"}})";
    }
    const std::string out = temp_path("gamma_out.json");
    EXPECT_EQ(run_cli("qbig --config " + path + " --out " + out), 2);
    EXPECT_EQ(run_cli("qbig --config " + path + " --out " + out + " --exploratory"), 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(out));
    EXPECT_EQ(j["config"]["exploratory"], true);
    EXPECT_EQ(j["config"]["output"]["path"], out);
}

TEST(Cli, ByteIdenticalReruns)
{
    const std::string a = temp_path("run_a.csv"), b = temp_path("run_b.csv");
    ASSERT_EQ(run_cli("qbig --config " + config("qbig.json") + " --seed 5 --out " + a), 0);
    ASSERT_EQ(run_cli("qbig --config " + config("qbig.json") + " --seed 5 --out " + b), 0);
    const std::string ta = slurp(a), tb = slurp(b);
    EXPECT_FALSE(ta.empty());
    // the resolved config names the output path, which differs between the two runs
    std::string tb_fixed = tb;
    for (std::size_t p; (p = tb_fixed.find(b)) != std::string::npos;)
        tb_fixed.replace(p, b.size(), a);
    EXPECT_EQ(ta, tb_fixed);
    EXPECT_NE(ta.find("\"seeds\":[5]"), std::string::npos);
}
