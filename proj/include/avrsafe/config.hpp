#pragma once

#include "avrsafe/avr.hpp"
#include "avrsafe/dynamics.hpp"
#include "avrsafe/grid.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace avrsafe {

struct MdrSettings {
    double tol = 1e-6;
    std::size_t max_iter = 100000;
};

struct RolloutSettings {
    std::size_t horizon = 1000;
    std::size_t trials = 10000;
    // Start states for the rollout command and the validation suite: at most
    // this many, spread evenly over the candidates (0 = all).
    std::size_t max_starts = 32;
};

struct BenchSettings {
    std::vector<std::size_t> grids{21, 31, 41};  // points per axis
    std::size_t warmup = 1;
    std::size_t repeats = 5;     // LP solves
    std::size_t vi_repeats = 15; // value-iteration batches per lambda
    // Fast runs are repeated back to back until a batch lasts this long; the
    // batch mean is one timing sample.
    double min_batch_seconds = 0.02;
};

struct RunConfig {
    std::filesystem::path source;   // file the config was read from, if any
    nlohmann::json resolved;        // merged JSON after inheritance

    SystemSpec system;
    std::vector<std::size_t> grid;  // points per axis
    std::size_t samples_per_pair = 100;
    std::uint64_t seed = 0;
    std::vector<double> alphas{1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
    std::vector<double> lambdas{0.0, 0.01, 0.05, 0.1, 0.5};
    std::string lp_backend = "simplex";
    PrimalRoute primal_route = PrimalRoute::Auto;
    bool nonnegative_bias = false;
    std::size_t threads = 0;
    std::filesystem::path output = "out";
    MdrSettings mdr;
    RolloutSettings rollout;
    BenchSettings bench;

    GridSpec grid_spec() const;
    GridSpec grid_spec(std::size_t points_per_axis) const;
};

/// Reads a config file, following "extends" chains (paths relative to the
/// including file). Objects merge key by key; the child wins on conflicts.
nlohmann::json load_config_json(const std::filesystem::path& path);

/// Interprets merged JSON. Relative paths resolve against `base_dir`.
/// Throws ConfigError with the offending key in the message.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");

RunConfig load_config(const std::filesystem::path& path);

/// Builds a system from its JSON description: {"kind": ...} plus optional
/// overrides of the benchmark preset for that kind.
SystemSpec system_from_json(const nlohmann::json& j, std::size_t action_count);
nlohmann::json to_json(const SystemSpec& spec);

}  // namespace avrsafe
