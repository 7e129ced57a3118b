#include <doctest.h>

#include "avrsafe/commands.hpp"
#include "avrsafe/errors.hpp"
#include "avrsafe/mdp_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace avrsafe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("avrsafe_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_config() {
    return {{"system", {{"kind", "double-integrator"}}},
            {"grid", {21, 21}},
            {"actions", 5},
            {"samples_per_pair", 60},
            {"seed", 11},
            {"alphas", {1.0, 0.8, 0.6}},
            {"lambdas", {0.0, 0.1, 0.5}},
            {"threads", 1},
            {"rollout", {{"horizon", 200}, {"trials", 400}, {"max_starts", 6}}},
            {"bench", {{"grids", {5, 7, 9}}, {"warmup", 0}, {"repeats", 1}, {"min_batch_seconds", 0.0}}}};
}

RunConfig config_in(const fs::path& dir, json j = small_config()) {
    RunConfig c = parse_config(j, dir);
    c.output = dir;
    return c;
}

}  // namespace

TEST_CASE("config inheritance merges objects and resolves paths per file") {
    const fs::path dir = fresh_dir("cfg_extends");
    fs::create_directories(dir / "variants");
    write_text(dir / "base.json", R"({
        "system": {"kind": "inverted-pendulum", "disturbance": {"std_dev": 0.5}},
        "grid": 41, "actions": 9, "seed": 3,
        "rollout": {"horizon": 50, "trials": 20},
        "output": "out/base"
    })");
    write_text(dir / "variants" / "fine.json", R"({
        "extends": "../base.json",
        "system": {"disturbance": {"clamp_lo": -0.5, "clamp_hi": 0.5}},
        "grid": [61, 31],
        "rollout": {"trials": 99},
        "output": "fine"
    })");
    const RunConfig c = load_config(dir / "variants" / "fine.json");
    CHECK(c.system.kind == DynamicsKind::InvertedPendulum);
    CHECK(c.system.disturbance.std_dev == 0.5);
    CHECK(c.system.disturbance.clamp_lo == -0.5);
    CHECK(c.grid == std::vector<std::size_t>{61, 31});
    CHECK(c.grid_spec().size() == 61 * 31);
    CHECK(c.system.actions.size() == 9);
    CHECK(c.rollout.horizon == 50);
    CHECK(c.rollout.trials == 99);
    CHECK(c.seed == 3);
    CHECK(c.output == dir / "variants" / "fine");
    CHECK_FALSE(c.resolved.contains("extends"));
    fs::remove_all(dir);
}

TEST_CASE("config errors name the problem") {
    const fs::path dir = fresh_dir("cfg_errors");
    auto bad = [&](json j, const std::string& fragment) {
        try {
            parse_config(j, dir);
            FAIL("accepted: " << j.dump());
        } catch (const ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
        }
    };
    json j = small_config();
    j["alphas"] = {1.0, 1.2};
    bad(j, "outside [0, 1]");
    j = small_config();
    j["grid"] = {21, 21, 21};
    bad(j, "axes");
    j = small_config();
    j["gird"] = 3;
    bad(j, "unknown config key \"gird\"");
    j = small_config();
    j["lp_backend"] = "glpk";
    bad(j, "lp_backend");
    j = small_config();
    j["system"] = {{"kind", "custom"}};
    bad(j, "custom");
    j = small_config();
    j["system"]["dt"] = -1.0;
    bad(j, "system");
    j = small_config();
    j.erase("grid");
    bad(j, "grid");

    write_text(dir / "a.json", R"({"extends": "b.json"})");
    write_text(dir / "b.json", R"({"extends": "a.json"})");
    CHECK_THROWS_AS(load_config(dir / "a.json"), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    write_text(dir / "broken.json", "{\"grid\": ");
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("shipped configs describe the published grids") {
    const fs::path configs = fs::path(AVRSAFE_SOURCE_DIR) / "configs";
    const RunConfig di = load_config(configs / "double_integrator.json");
    CHECK(di.grid_spec().size() == 161 * 161);
    CHECK(di.system.actions.size() == 81);
    const RunConfig ip = load_config(configs / "inverted_pendulum.json");
    CHECK(ip.grid_spec().size() == 201 * 201);
    CHECK(ip.system.kind == DynamicsKind::InvertedPendulum);
    for (const char* name : {"double_integrator_41.json", "inverted_pendulum_41.json", "bench.json", "smoke.json"}) {
        CHECK_NOTHROW(load_config(configs / name));
    }
}

TEST_CASE("exit codes by error class") {
    CHECK(exit_code_for(UsageError("x")) == 1);
    CHECK(exit_code_for(StructuralError("x")) == 2);
    CHECK(exit_code_for(NumericalError("x")) == 3);
    CHECK(exit_code_for(EmptySafeSetError("x")) == 3);
    CHECK(exit_code_for(ConfigError("x")) == 4);
    CHECK(exit_code_for(ParameterError("x")) == 4);
}

TEST_CASE("overrides replace config values and reach provenance") {
    const fs::path dir = fresh_dir("overrides");
    RunConfig c = config_in(dir);
    Overrides o;
    o.seed = 99;
    o.out = dir / "elsewhere";
    o.threads = 3;
    apply_overrides(c, o);
    CHECK(c.seed == 99);
    CHECK(c.output == dir / "elsewhere");
    CHECK(c.threads == 3);
    const json p = provenance(c, "discretize");
    CHECK(p["seed"] == 99);
    CHECK(p["config"]["seed"] == 99);
    CHECK_FALSE(p["config"].contains("threads"));
    o = {};
    o.lp_backend = "cplex";
    CHECK_THROWS_AS(apply_overrides(c, o), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("output lock is exclusive and released") {
    const fs::path dir = fresh_dir("lock");
    {
        OutputLock first(dir);
        CHECK(fs::exists(dir / artifact::kLock));
        CHECK_THROWS_AS(OutputLock{dir}, UsageError);
        std::ostringstream out, err;
        CHECK(run_command("discretize", config_in(dir), out, err) == kExitUsage);
        CHECK(err.str().find("locked") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / artifact::kLock));
    CHECK_NOTHROW(OutputLock{dir});
    fs::remove_all(dir);
}

TEST_CASE("commands report missing artifacts as usage errors") {
    const fs::path dir = fresh_dir("missing");
    std::ostringstream out, err;
    for (const char* cmd : {"solve-avr", "solve-mdr", "rollout", "validate"}) {
        CHECK(run_command(cmd, config_in(dir), out, err) == kExitUsage);
    }
    CHECK(err.str().find("missing artifact") != std::string::npos);
    CHECK(run_command("frobnicate", config_in(dir), out, err) == kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("pipeline writes consistent artifacts") {
    const fs::path dir = fresh_dir("pipeline");
    const RunConfig c = config_in(dir);
    std::ostringstream log, err;

    REQUIRE(run_command("discretize", c, log, err) == kExitSuccess);
    const MdpFile file = load_mdp(dir / artifact::kMdp);
    CHECK(file.mdp.num_states() == 21 * 21);
    CHECK(file.metadata["provenance"]["seed"] == 11);

    // byte-identical rerun, regardless of thread count
    const std::string first = slurp(dir / artifact::kMdp);
    RunConfig threaded = c;
    threaded.threads = 4;
    REQUIRE(run_command("discretize", threaded, log, err) == kExitSuccess);
    CHECK(slurp(dir / artifact::kMdp) == first);

    REQUIRE(run_command("solve-avr", c, log, err) == kExitSuccess);
    const std::string gain_bytes = slurp(dir / artifact::kGain);
    REQUIRE(run_command("solve-avr", c, log, err) == kExitSuccess);
    CHECK(slurp(dir / artifact::kGain) == gain_bytes);

    const GridDump gain = read_grid_dump(dir / artifact::kGainGrid);
    for (StateId s = 0; s < gain.values.size(); ++s) {
        if (!file.mdp.in_constraint(s)) CHECK(gain.values[s] == 0.0);
    }
    const auto k1 = read_level_set_csv(dir / artifact::level_set(1.0));
    const auto k8 = read_level_set_csv(dir / artifact::level_set(0.8));
    const auto k6 = read_level_set_csv(dir / artifact::level_set(0.6));
    CHECK(std::includes(k8.begin(), k8.end(), k1.begin(), k1.end()));
    CHECK(std::includes(k6.begin(), k6.end(), k8.begin(), k8.end()));
    CHECK_FALSE(k1.empty());
    const CsvTable ratio = read_csv(dir / artifact::kRatio);
    REQUIRE(ratio.rows.size() == 3);
    CHECK(ratio.rows[0][ratio.column("alpha")] == "1");
    CHECK(ratio.rows[0][ratio.column("ratio")] == "1");

    REQUIRE(run_command("solve-mdr", c, log, err) == kExitSuccess);
    for (double lambda : c.lambdas) {
        CHECK(fs::exists(dir / artifact::mdr_value(lambda)));
        CHECK(fs::exists(dir / artifact::mdr_safe(lambda)));
    }
    const CsvTable residuals = read_csv(dir / artifact::kMdrLog);
    std::map<std::string, std::vector<double>> by_lambda;
    for (const auto& row : residuals.rows) by_lambda[row[0]].push_back(parse_double(row[2]));
    CHECK(by_lambda.size() == 3);
    for (const auto& [lambda, r] : by_lambda) {
        if (lambda == "0") continue;
        for (std::size_t i = 2; i < r.size(); ++i) CHECK(r[i] <= r[i - 1]);
    }
    CHECK(read_csv(dir / artifact::kMdrCompare).rows.size() == 3);

    REQUIRE(run_command("rollout", c, log, err) == kExitSuccess);
    const CsvTable rollout = read_csv(dir / artifact::kRollout);
    CHECK(rollout.rows.size() == 6);
    for (const auto& row : rollout.rows) {
        const double g = parse_double(row[rollout.column("gain")]);
        const double rate = parse_double(row[rollout.column("survival_rate")]);
        if (g == 1.0) CHECK(rate == 1.0);
        CHECK(parse_double(row[rollout.column("exact_absorption")]) == doctest::Approx(g).epsilon(1e-6));
    }

    REQUIRE(run_command("validate", c, log, err) == kExitSuccess);
    const CsvTable report = read_csv(dir / artifact::kValidate);
    CHECK(report.rows.size() >= 12);
    for (const auto& row : report.rows) CHECK_MESSAGE(row[1] == "PASS", row[0]);
    fs::remove_all(dir);
}

TEST_CASE("validate catches injected faults") {
    const fs::path dir = fresh_dir("faults");
    const RunConfig c = config_in(dir);
    std::ostringstream log, err;
    REQUIRE(run_command("discretize", c, log, err) == kExitSuccess);
    REQUIRE(run_command("solve-avr", c, log, err) == kExitSuccess);
    const std::string gain_text = slurp(dir / artifact::kGain);
    const std::string summary_text = slurp(dir / artifact::kAvrSummary);

    auto failed_checks = [&] {
        std::ostringstream out, e;
        const int code = run_command("validate", c, out, e);
        std::set<std::string> failed;
        for (const auto& row : read_csv(dir / artifact::kValidate).rows) {
            if (row[1] == "FAIL") failed.insert(row[0]);
        }
        return std::make_pair(code, failed);
    };

    SUBCASE("gain 0.5 on a state outside C") {
        const MdpFile file = load_mdp(dir / artifact::kMdp);
        StateId victim = 0;
        while (file.mdp.in_constraint(victim)) ++victim;
        CsvTable t = read_csv(dir / artifact::kGain);
        {
            CsvWriter w(dir / artifact::kGain, t.provenance, t.header);
            for (auto& row : t.rows) {
                if (row[0] == std::to_string(victim)) row[t.column("gain")] = "0.5";
                for (const auto& f : row) w << f;
                w.end_row();
            }
            w.close();
        }
        const auto [code, failed] = failed_checks();
        CHECK(code == kExitValidation);
        CHECK(failed.count("gain-outside-constraint-zero") == 1);
    }
    SUBCASE("duality gap of 1e-3") {
        json s = json::parse(summary_text);
        s["primal_objective"] = s["dual_objective"].get<double>() + 1e-3;
        write_json(dir / artifact::kAvrSummary, s);
        const auto [code, failed] = failed_checks();
        CHECK(code == kExitValidation);
        CHECK(failed == std::set<std::string>{"duality-gap"});
    }
    SUBCASE("untouched artifacts pass") {
        const auto [code, failed] = failed_checks();
        CHECK(code == kExitSuccess);
        CHECK(failed.empty());
    }
    write_text(dir / artifact::kGain, gain_text);
    write_text(dir / artifact::kAvrSummary, summary_text);
    fs::remove_all(dir);
}

TEST_CASE("stale dump is refused") {
    const fs::path dir = fresh_dir("stale");
    std::ostringstream log, err;
    REQUIRE(run_command("discretize", config_in(dir), log, err) == kExitSuccess);
    json j = small_config();
    j["grid"] = {23, 21};
    CHECK(run_command("solve-avr", config_in(dir, j), log, err) == kExitUsage);
    CHECK(err.str().find("rerun 'discretize'") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("bench emits one LP row and one VI row per lambda per grid") {
    const fs::path dir = fresh_dir("bench");
    std::ostringstream log, err;
    REQUIRE(run_command("bench", config_in(dir), log, err) == kExitSuccess);
    const CsvTable t = read_csv(dir / artifact::kBench);
    CHECK(t.header == std::vector<std::string>{"method", "states", "lambda", "seconds"});
    CHECK(t.rows.size() == 3 + 3 * 3);
    std::size_t lp_rows = 0;
    for (const auto& row : t.rows) {
        CHECK(parse_double(row[3]) > 0.0);
        if (row[0] == "avr-lp") ++lp_rows;
    }
    CHECK(lp_rows == 3);
    CHECK(t.provenance["command"] == "bench");
    fs::remove_all(dir);
}
