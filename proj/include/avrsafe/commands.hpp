#pragma once

#include "avrsafe/artifacts.hpp"
#include "avrsafe/config.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace avrsafe {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitSolver = 3,
    kExitConfig = 4,
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

// Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* kMdp = "mdp.bin";
inline constexpr const char* kDiscretize = "discretize.json";
inline constexpr const char* kGain = "gain.csv";
inline constexpr const char* kGainGrid = "gain.grid";
inline constexpr const char* kPolicy = "policy.csv";
inline constexpr const char* kRatio = "ratio.csv";
inline constexpr const char* kAvrSummary = "avr.json";
inline constexpr const char* kMdrLog = "mdr_log.csv";
inline constexpr const char* kMdrCompare = "mdr_compare.csv";
inline constexpr const char* kMdrSummary = "mdr.json";
inline constexpr const char* kRollout = "rollout.csv";
inline constexpr const char* kBench = "bench.csv";
inline constexpr const char* kValidate = "validate.csv";
inline constexpr const char* kLock = ".avrsafe.lock";

std::string level_set(double alpha);   // levelset_<alpha>.csv
std::string mdr_value(double lambda);  // mdr_value_<lambda>.grid
std::string mdr_safe(double lambda);   // mdr_safe_<lambda>.csv
}  // namespace artifact

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> lp_backend;
};

RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides = {});
void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Exclusive ownership of an output directory for the lifetime of the object.
/// Creates the directory if needed; throws UsageError if another process
/// holds the lock.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path file_;
};

/// Provenance object embedded in every artifact written for `command`. It
/// carries the resolved config minus run-local settings (output path, thread
/// count) so that artifacts are byte-identical across reruns.
nlohmann::json provenance(const RunConfig& config, const std::string& command);

// Each command writes into config.output and logs progress to `log`. They
// throw on failure; exit_code_for maps the exception.

void cmd_discretize(const RunConfig& config, std::ostream& log);

struct AvrRunSummary {
    AvrResult result;
    double seconds = 0.0;
};
AvrRunSummary cmd_solve_avr(const RunConfig& config, std::ostream& log);

struct MdrRunSummary {
    std::vector<MdrSolution> solutions;  // one per lambda, config order
    std::vector<double> compare_ratio;   // vs K, when gain.csv was present
};
MdrRunSummary cmd_solve_mdr(const RunConfig& config, std::ostream& log);

std::vector<RolloutReport> cmd_rollout(const RunConfig& config, std::ostream& log);

std::vector<BenchRow> cmd_bench(const RunConfig& config, std::ostream& log);

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool passed() const;
};

ValidationReport cmd_validate(const RunConfig& config, std::ostream& log);

/// Runs one subcommand by name with lock handling and exit-code mapping.
int run_command(const std::string& name, const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace avrsafe
