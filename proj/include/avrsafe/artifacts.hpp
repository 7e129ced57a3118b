#pragma once

#include "avrsafe/avr.hpp"
#include "avrsafe/grid.hpp"
#include "avrsafe/mdr.hpp"
#include "avrsafe/rollout.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace avrsafe {

/// Library version, from `git describe` at configure time.
const char* version();

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

// CSV dialect: comma separated, '.' decimal, LF line endings. Files open with
// "# key: value" provenance lines (one per top-level key of the provenance
// object, keys sorted), then a header row.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const nlohmann::json& provenance,
              const std::vector<std::string>& header);

    CsvWriter& operator<<(const std::string& field);
    CsvWriter& operator<<(const char* field) { return *this << std::string(field); }
    CsvWriter& operator<<(double v) { return *this << format_double(v); }
    CsvWriter& operator<<(std::size_t v) { return *this << std::to_string(v); }
    CsvWriter& operator<<(std::uint32_t v) { return *this << std::to_string(v); }
    CsvWriter& operator<<(int v) { return *this << std::to_string(v); }
    void end_row();
    void close();

private:
    std::ofstream os_;
    std::filesystem::path path_;
    std::size_t columns_;
    std::size_t field_ = 0;
};

struct CsvTable {
    nlohmann::json provenance = nlohmann::json::object();
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws StructuralError when absent.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Grid dump: magic "AVRSGRD1", u64 header length H, H bytes of JSON header
// ({"format", "version", "grid", "count", "layout", "metadata"}), then count
// little-endian doubles in row-major order (last axis fastest).
inline constexpr char kGridMagic[9] = "AVRSGRD1";

struct GridDump {
    GridSpec grid;
    std::vector<double> values;
    nlohmann::json metadata = nlohmann::json::object();
};

void write_grid_dump(const std::filesystem::path& path, const GridSpec& grid,
                     const std::vector<double>& values, const nlohmann::json& metadata);
GridDump read_grid_dump(const std::filesystem::path& path);

// Typed artifacts. `grid` may be null for MDPs without a geometry; coordinate
// columns are then omitted.
void write_gain_csv(const std::filesystem::path& path, const nlohmann::json& provenance,
                    const DiscreteMdp& mdp, const GainBiasSolution& gain, const GridSpec* grid);
GainBiasSolution read_gain_csv(const std::filesystem::path& path, std::size_t states);

void write_policy_csv(const std::filesystem::path& path, const nlohmann::json& provenance,
                      const Policy& policy);
Policy read_policy_csv(const std::filesystem::path& path, std::size_t states, std::size_t actions);

void write_level_set_csv(const std::filesystem::path& path, const nlohmann::json& provenance,
                         const SafetyLevelSet& set, const GainBiasSolution& gain, const GridSpec* grid);
std::vector<StateId> read_level_set_csv(const std::filesystem::path& path);

void write_ratio_csv(const std::filesystem::path& path, const nlohmann::json& provenance,
                     const std::vector<RatioPoint>& curve);

void write_mdr_safe_csv(const std::filesystem::path& path, const nlohmann::json& provenance,
                        const MdrSolution& sol, const GridSpec* grid);

void write_rollout_csv(const std::filesystem::path& path, const nlohmann::json& provenance,
                       const std::vector<RolloutReport>& reports, const std::vector<double>& gain,
                       const std::vector<double>& exact);

struct BenchRow {
    std::string method;
    std::size_t states = 0;
    double lambda = 0.0;  // meaningful for MDR rows only
    double seconds = 0.0;
};

void write_bench_csv(const std::filesystem::path& path, const nlohmann::json& provenance,
                     const std::vector<BenchRow>& rows);

/// Writes pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// File name fragment for an alpha or lambda value ("0.8", "1", "0.05").
std::string value_tag(double v);

}  // namespace avrsafe
