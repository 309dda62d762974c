// End-to-end runs of the sdlm executable.

#include "sdlm/commands.hpp"
#include "sdlm/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef SDLM_CLI_PATH
#error "SDLM_CLI_PATH must name the sdlm executable"
#endif

using namespace sdlm;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("sdlm_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int sdlm_run(const std::string& args) {
    const std::string cmd = std::string("\"") + SDLM_CLI_PATH + "\" " + args + " > \"" +
                            (work_dir() / "last.log").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

io::json write_json(const fs::path& p, io::json j) {
    io::write_json_file(p, j);
    return j;
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string s;
    while (std::getline(in, s)) ++n;
    return n;
}

const char* kRecipe = R"({
  "model": "joint", "n": 30, "missing_probability": 0.1, "seed": 5,
  "geometry": {"coordinates": [{"id": "west", "lon": -84.0, "lat": 30.0},
                               {"id": "mid", "lon": -84.005, "lat": 30.0},
                               {"id": "east", "lon": -84.01, "lat": 30.0}]},
  "params": {"V": [0.1, 0.2, 0.15], "W": [0.05, 0.05, 0.05], "theta1": [0.5, 0.4, 0.3], "theta2": [1.0, 1.1, 1.2],
             "eta1": {"sigma": 1, "phi": 1}, "eta2": {"sigma": 1, "phi": 1}, "eta3": {"sigma": 0.8, "phi": 1}}
})";

io::json run_config(const std::string& output) {
    return {{"model", "joint"},
            {"data", {{"panel", "sim/panel.csv"}, {"geometry", "sim/geometry.csv"}}},
            {"mcmc", {{"iterations", 3000}, {"burn_in", 1000}, {"thin", 2}, {"pilot_iterations", 600}}},
            {"ffbs_draws", 50},
            {"forecast", {{"horizon", 4}, {"holdout", 3}, {"draws", 200}}},
            {"seed", 21},
            {"output", output}};
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        write(work_dir() / "recipe.json", kRecipe);
        ASSERT_EQ(sdlm_run("simulate --config " + (work_dir() / "recipe.json").string() + " --output " +
                           (work_dir() / "sim").string()),
                  0)
            << slurp(work_dir() / "last.log");
    }
    static fs::path dir() { return work_dir(); }
};

} // namespace

TEST_F(Cli, SimulatedPanelReingestsIdentically) {
    const cli::SimulateSpec spec = cli::parse_simulate_recipe(io::json::parse(kRecipe), dir());
    const SimulationResult direct = simulate_joint(spec.joint);
    const PanelData read = io::read_panel_file(dir() / "sim/panel.csv").panel;
    EXPECT_EQ(read.zone_ids, direct.panel.zone_ids);
    EXPECT_EQ(read.grid.times(), direct.panel.grid.times());
    EXPECT_EQ(read.observed, direct.panel.observed);
    for (Eigen::Index i = 0; i < read.values.rows(); ++i)
        for (Eigen::Index j = 0; j < read.values.cols(); ++j)
            if (read.observed(i, j)) EXPECT_EQ(read.values(i, j), direct.panel.values(i, j));
    const ZoneGeometry g = io::read_geometry_file(dir() / "sim/geometry.csv");
    EXPECT_EQ(g.distances(), spec.joint.geometry.distances());
    const io::json m = io::read_json_file(dir() / "sim/manifest.json");
    EXPECT_EQ(m["verb"], "simulate");
    EXPECT_EQ(m["seed"], 5);
    EXPECT_EQ(m["exit_code"], 0);
}

TEST_F(Cli, ValidateWritesManifest) {
    write_json(dir() / "validate.json", run_config("out_validate"));
    ASSERT_EQ(sdlm_run("validate --config " + (dir() / "validate.json").string()), 0) << slurp(dir() / "last.log");
    const io::json m = io::read_json_file(dir() / "out_validate/manifest.json");
    EXPECT_EQ(m["verb"], "validate");
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["config"]["mcmc"]["iterations"], 3000);
    EXPECT_FALSE(m["inputs"]["panel"]["fnv1a64"].get<std::string>().empty());
    EXPECT_NE(slurp(dir() / "out_validate/validate.txt").find("zones 3"), std::string::npos);
}

TEST_F(Cli, FitIsReproducibleAndWritesAllArtifacts) {
    write_json(dir() / "fit.json", run_config("out_fit_a"));
    ASSERT_EQ(sdlm_run("fit --config " + (dir() / "fit.json").string()), 0) << slurp(dir() / "last.log");
    ASSERT_EQ(sdlm_run("fit --config " + (dir() / "fit.json").string() + " --output " + (dir() / "out_fit_b").string()), 0);
    EXPECT_EQ(slurp(dir() / "out_fit_a/chain.csv"), slurp(dir() / "out_fit_b/chain.csv"));
    EXPECT_EQ(slurp(dir() / "out_fit_a/paths.csv"), slurp(dir() / "out_fit_b/paths.csv"));

    const io::LabelledMatrix chain = io::read_labelled_file(dir() / "out_fit_a/chain.csv");
    EXPECT_EQ(chain.names, JointLayout(3).names());
    EXPECT_EQ(chain.values.rows(), 1000);
    EXPECT_GT(chain.values.col(0).minCoeff(), 0.0);   // natural scale
    const io::json side = io::read_json_file(dir() / "out_fit_a/chain.json");
    EXPECT_EQ(side["seed"], 21);
    EXPECT_GT(side["acceptance_rate"].get<double>(), 0.0);
    // t_0 plus 30 times, 3 zones, 50 draws, header
    EXPECT_EQ(count_lines(dir() / "out_fit_a/paths.csv"), 50u * 31u * 3u + 1u);
    EXPECT_EQ(count_lines(dir() / "out_fit_a/predictive.csv"), 30u * 3u + 1u);
    const std::string table = slurp(dir() / "out_fit_a/summary.txt");
    EXPECT_NE(table.find("95% CI"), std::string::npos);
    EXPECT_NE(table.find("amplitude_1"), std::string::npos);
    const io::json m = io::read_json_file(dir() / "out_fit_a/manifest.json");
    EXPECT_EQ(m["outputs"].size(), 6u);
}

TEST_F(Cli, SeedOverrideChangesTheChain) {
    write_json(dir() / "fit_seed.json", run_config("out_seed_a"));
    ASSERT_EQ(sdlm_run("fit --config " + (dir() / "fit_seed.json").string()), 0);
    ASSERT_EQ(sdlm_run("fit --seed 22 --config " + (dir() / "fit_seed.json").string() + " --output " +
                       (dir() / "out_seed_b").string()),
              0);
    EXPECT_NE(slurp(dir() / "out_seed_a/chain.csv"), slurp(dir() / "out_seed_b/chain.csv"));
    EXPECT_EQ(io::read_json_file(dir() / "out_seed_b/manifest.json")["seed"], 22);
}

TEST_F(Cli, ForecastWithHoldoutAndChainReuse) {
    write_json(dir() / "forecast.json", run_config("out_forecast"));
    ASSERT_EQ(sdlm_run("forecast --config " + (dir() / "forecast.json").string()), 0) << slurp(dir() / "last.log");
    EXPECT_EQ(count_lines(dir() / "out_forecast/forecast.csv"), 4u * 3u + 1u);
    const std::string cov = slurp(dir() / "out_forecast/holdout_coverage.csv");
    EXPECT_EQ(cov.rfind("zone,observed,covered,coverage\n", 0), 0u);
    EXPECT_NE(cov.find("\nall,"), std::string::npos);

    io::json reuse = run_config("out_forecast_reuse");
    reuse["forecast"]["chain"] = (dir() / "out_forecast/chain.csv").string();
    write_json(dir() / "forecast_reuse.json", reuse);
    ASSERT_EQ(sdlm_run("forecast --config " + (dir() / "forecast_reuse.json").string()), 0) << slurp(dir() / "last.log");
    EXPECT_EQ(count_lines(dir() / "out_forecast_reuse/forecast.csv"), 13u);
    EXPECT_FALSE(fs::exists(dir() / "out_forecast_reuse/chain.csv"));
}

TEST_F(Cli, SingleZoneFitAndForecast) {
    io::json c = run_config("out_single");
    c["model"] = "single";
    c["mcmc"] = {{"iterations", 2200}, {"burn_in", 200}, {"pilot_iterations", 500}};
    write_json(dir() / "single.json", c);
    ASSERT_EQ(sdlm_run("fit --config " + (dir() / "single.json").string()), 0) << slurp(dir() / "last.log");
    for (const char* z : {"west", "mid", "east"}) {
        EXPECT_TRUE(fs::exists(dir() / "out_single" / (std::string("chain_") + z + ".csv")));
        EXPECT_TRUE(fs::exists(dir() / "out_single" / (std::string("paths_") + z + ".csv")));
    }
    EXPECT_NE(slurp(dir() / "out_single/summary.csv").find("east.W_3"), std::string::npos);
    c["output"] = "out_single_forecast";
    write_json(dir() / "single_forecast.json", c);
    ASSERT_EQ(sdlm_run("forecast --config " + (dir() / "single_forecast.json").string()), 0) << slurp(dir() / "last.log");
    EXPECT_EQ(count_lines(dir() / "out_single_forecast/forecast.csv"), 13u);
}

TEST_F(Cli, CompareWritesRmseTable) {
    io::json c = run_config("out_compare");
    write_json(dir() / "compare.json", c);
    ASSERT_EQ(sdlm_run("compare --config " + (dir() / "compare.json").string()), 0) << slurp(dir() / "last.log");
    const std::string t = slurp(dir() / "out_compare/compare.csv");
    EXPECT_EQ(t.rfind("zone,single_rmse,joint_rmse\nwest,", 0), 0u) << t;
    EXPECT_EQ(count_lines(dir() / "out_compare/compare.csv"), 4u);
}

TEST_F(Cli, ExitCodesDistinguishFailureKinds) {
    EXPECT_EQ(sdlm_run(""), cli::kUsageError);
    EXPECT_EQ(sdlm_run("fit"), cli::kUsageError);
    EXPECT_EQ(sdlm_run("fit --config " + (dir() / "does_not_exist.json").string()), cli::kUsageError);

    write(dir() / "empty/panel.csv", "");
    io::json c = run_config("out_empty");
    c["data"]["panel"] = "empty/panel.csv";
    write_json(dir() / "empty.json", c);
    EXPECT_EQ(sdlm_run("fit --config " + (dir() / "empty.json").string()), cli::kParseError);
    const io::json m = io::read_json_file(dir() / "out_empty/manifest.json");
    EXPECT_EQ(m["exit_code"], cli::kParseError);
    EXPECT_NE(m["error"].get<std::string>().find("empty panel"), std::string::npos);

    write(dir() / "broken.json", "{\"model\": \"joint\",\n \"data\": }\n");
    EXPECT_EQ(sdlm_run("validate --config " + (dir() / "broken.json").string()), cli::kParseError);

    c = run_config("out_unknown");
    c["mcmc"]["iters"] = 5;
    write_json(dir() / "unknown.json", c);
    EXPECT_EQ(sdlm_run("validate --config " + (dir() / "unknown.json").string()), cli::kValidationError);

    c = run_config("out_h0");
    c["forecast"]["horizon"] = 0;
    write_json(dir() / "h0.json", c);
    EXPECT_EQ(sdlm_run("forecast --config " + (dir() / "h0.json").string()), cli::kValidationError);

    c = run_config("out_holdout");
    c["forecast"]["holdout"] = 30;
    write_json(dir() / "holdout.json", c);
    EXPECT_EQ(sdlm_run("validate --config " + (dir() / "holdout.json").string()), cli::kValidationError);

    write(dir() / "huge/panel.csv", "time,west,mid,east\n1,1e200,1,1\n2,-1e200,1,2\n3,1e200,2,1\n");
    c = run_config("out_huge");
    c["data"]["panel"] = "huge/panel.csv";
    write_json(dir() / "huge.json", c);
    EXPECT_EQ(sdlm_run("fit --config " + (dir() / "huge.json").string()), cli::kNumericalError) << slurp(dir() / "last.log");
}
