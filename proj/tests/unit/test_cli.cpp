#include "cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

namespace {

using nlohmann::json;

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "gfsi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = gfsi::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() / ("gfsi_cli_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> N(0.0, 0.4);
        std::ofstream f(path("y.txt"));
        for (int j = 0; j < 40; ++j) f << (j >= 15 && j < 28 ? 2.0 : 0.0) + N(rng) << '\n';
        std::ofstream g(path("edges.csv"));
        g << "# chain\n";
        for (int j = 0; j + 1 < 40; ++j) g << j << ',' << j + 1 << '\n';
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::filesystem::path dir_;
};

TEST_F(CliTest, FitChainGivesKPlusOneComponents) {
    const CliRun r = run({"fit", "--data", path("y.txt"), "--k", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["n_components"], 3);
    EXPECT_EQ(j["knots"].size(), 2u);
    EXPECT_EQ(j["boundary"].size(), 2u);
    const CliRun g = run({"fit", "--graph", path("edges.csv"), "--data", path("y.txt"), "--k", "2"});
    EXPECT_EQ(json::parse(g.out)["components"], j["components"]);
}

TEST_F(CliTest, TestAllPairsAndRoundTrip) {
    const CliRun all = run({"test", "--data", path("y.txt"), "--k", "2", "--sigma", "0.4"});
    ASSERT_EQ(all.code, 0) << all.err;
    const json j = json::parse(all.out);
    ASSERT_EQ(j["tests"].size(), 3u);
    for (const auto& rec : j["tests"]) {
        for (const char* key : {"pair", "stat", "sigma", "p_naive", "p_hyun", "p_selective", "ci_naive", "ci_hyun",
                                "ci_selective", "n_intervals", "n_instances", "halvings", "runtime_ms",
                                "early_stopped"})
            EXPECT_TRUE(rec.contains(key)) << key;
    }
    const auto& comps = j["fit"]["components"];
    auto nodes = [](const json& c) {
        std::string s;
        for (const auto& v : c["nodes"]) s += (s.empty() ? "" : ",") + std::to_string(v.get<int>());
        return s;
    };
    const std::string spec = "nodes:" + nodes(comps[0]) + "/" + nodes(comps[2]);
    const CliRun by_nodes = run({"test", "--data", path("y.txt"), "--k", "2", "--sigma", "0.4", "--pairs", spec});
    const CliRun by_index = run({"test", "--data", path("y.txt"), "--k", "2", "--sigma", "0.4", "--pairs", "0-2"});
    ASSERT_EQ(by_nodes.code, 0) << by_nodes.err;
    json a = json::parse(by_nodes.out)["tests"][0], b = json::parse(by_index.out)["tests"][0];
    a.erase("runtime_ms");
    b.erase("runtime_ms");
    EXPECT_EQ(a, b);
    json c = j["tests"][1];
    c.erase("runtime_ms");
    EXPECT_EQ(a, c);
}

TEST_F(CliTest, SwappedPairHasSamePValues) {
    const CliRun a = run({"test", "--data", path("y.txt"), "--k", "2", "--pairs", "0-1"});
    const CliRun b = run({"test", "--data", path("y.txt"), "--k", "2", "--pairs", "1-0"});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    const json x = json::parse(a.out)["tests"][0], y = json::parse(b.out)["tests"][0];
    EXPECT_EQ(x["sigma_method"], "residual");
    EXPECT_NEAR(x["p_selective"].get<double>(), y["p_selective"].get<double>(), 1e-10);
    EXPECT_NEAR(x["p_hyun"].get<double>(), y["p_hyun"].get<double>(), 1e-10);
}

TEST_F(CliTest, CsvAndThreadsAreStable) {
    const CliRun one = run({"test", "--data", path("y.txt"), "--k", "2", "--format", "csv", "--threads", "1",
                         "--delta-early-stop", "auto"});
    const CliRun three = run({"test", "--data", path("y.txt"), "--k", "2", "--format", "csv", "--threads", "3",
                           "--delta-early-stop", "auto"});
    ASSERT_EQ(one.code, 0) << one.err;
    auto strip_runtime = [](const std::string& csv) {
        std::istringstream in(csv);
        std::string line, out;
        while (std::getline(in, line)) {
            std::vector<std::string> cols;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cols.push_back(cell);
            cols.erase(cols.end() - 2);  // runtime_ms
            for (const auto& c : cols) out += c + ",";
            out += "\n";
        }
        return out;
    };
    EXPECT_EQ(strip_runtime(one.out), strip_runtime(three.out));
    EXPECT_EQ(std::count(one.out.begin(), one.out.end(), '\n'), 4);
}

TEST_F(CliTest, InputErrorsExitTwo) {
    EXPECT_EQ(run({"fit", "--data", path("missing.txt"), "--k", "2"}).code, 2);
    EXPECT_EQ(run({"fit", "--data", path("y.txt")}).code, 2);
    EXPECT_EQ(run({"fit", "--data", path("y.txt"), "--k", "2", "--components", "3"}).code, 2);
    EXPECT_EQ(run({"test", "--data", path("y.txt"), "--k", "2", "--pairs", "0-7"}).code, 2);
    EXPECT_EQ(run({"test", "--data", path("y.txt"), "--k", "2", "--sigma", "-1"}).code, 2);
    EXPECT_EQ(run({"test", "--data", path("y.txt"), "--k", "2", "--log-transform"}).code, 2);
    EXPECT_EQ(run({"test", "--data", path("y.txt"), "--k", "2", "--pairs", "nodes:0,1/2"}).code, 2);
    EXPECT_EQ(run({"bogus"}).code, 2);
    {
        std::ofstream f(path("tiny.txt"));
        f << "1\n2\n";
    }
    // Residual estimator with n <= L.
    EXPECT_EQ(run({"test", "--data", path("tiny.txt"), "--components", "2"}).code, 2);
}

TEST_F(CliTest, SimulateIsReproducible) {
    const std::vector<std::string> args = {"simulate", "--scenario", "middle_mutation_1d", "--delta", "0",
                                           "--reps", "4", "--seed", "1"};
    auto with_out = [&](const std::string& file, const std::string& threads) {
        auto a = args;
        a.insert(a.end(), {"--out", path(file), "--threads", threads, "--summary", path(file + ".json")});
        return run(a);
    };
    ASSERT_EQ(with_out("a.csv", "1").code, 0);
    ASSERT_EQ(with_out("b.csv", "2").code, 0);
    auto slurp = [&](const std::string& f) {
        std::ifstream in(path(f));
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
    EXPECT_EQ(slurp("a.csv.json"), slurp("b.csv.json"));
    const json s = json::parse(slurp("a.csv.json"));
    EXPECT_EQ(s["reps"], 4);
    EXPECT_TRUE(s["methods"].contains("selective"));
    EXPECT_EQ(run({"simulate", "--scenario", "nope"}).code, 2);
}

}  // namespace
