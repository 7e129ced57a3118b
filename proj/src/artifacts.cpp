#include "avrsafe/artifacts.hpp"

#include "avrsafe/errors.hpp"
#include "avrsafe/mdp_io.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#ifndef AVRSAFE_VERSION
#define AVRSAFE_VERSION "unknown"
#endif

namespace avrsafe {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() { return AVRSAFE_VERSION; }

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw StructuralError("not a number: '" + text + "'");
    }
    return v;
}

std::string value_tag(double v) { return format_double(v); }

// ---- CSV -------------------------------------------------------------------

CsvWriter::CsvWriter(const fs::path& path, const json& provenance, const std::vector<std::string>& header)
    : os_(path, std::ios::binary | std::ios::trunc), path_(path), columns_(header.size()) {
    if (!os_) throw Error("cannot open " + path.string() + " for writing");
    for (auto it = provenance.begin(); it != provenance.end(); ++it) {
        os_ << "# " << it.key() << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << '\n';
    }
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
}

CsvWriter& CsvWriter::operator<<(const std::string& field) {
    if (field_ == columns_) throw StructuralError(path_.string() + ": too many fields in row");
    if (field.find_first_of(",\"\n") != std::string::npos) {
        throw StructuralError(path_.string() + ": field needs quoting: " + field);
    }
    os_ << (field_ ? "," : "") << field;
    ++field_;
    return *this;
}

void CsvWriter::end_row() {
    if (field_ != columns_) throw StructuralError(path_.string() + ": short row");
    os_ << '\n';
    field_ = 0;
}

void CsvWriter::close() {
    os_.flush();
    if (!os_) throw Error("write failed for " + path_.string());
    os_.close();
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw StructuralError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header && line.rfind("# ", 0) == 0) {
            const auto colon = line.find(": ");
            if (colon != std::string::npos) {
                const std::string key = line.substr(2, colon - 2);
                const std::string value = line.substr(colon + 2);
                const json parsed = json::parse(value, nullptr, false);
                t.provenance[key] = parsed.is_discarded() ? json(value) : parsed;
            }
            continue;
        }
        if (line.empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw StructuralError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw StructuralError(path.string() + ": missing header row");
    return t;
}

// ---- grid dump -------------------------------------------------------------

void write_grid_dump(const fs::path& path, const GridSpec& grid, const std::vector<double>& values,
                     const json& metadata) {
    if (values.size() != grid.size()) throw StructuralError("grid dump: value count does not match the grid");
    const json header{{"format", "avrsafe-grid"},
                      {"version", 1},
                      {"grid", to_json(grid)},
                      {"count", values.size()},
                      {"layout", "row-major, last axis fastest"},
                      {"metadata", metadata}};
    const std::string text = header.dump();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os.write(kGridMagic, 8);
    le::put_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (double v : values) le::put_f64(os, v);
    if (!os) throw Error("write failed for " + path.string());
}

GridDump read_grid_dump(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != std::string(kGridMagic, 8)) {
        throw StructuralError(path.string() + ": not a grid dump");
    }
    const std::uint64_t len = le::get_u64(is);
    if (len > (1u << 30)) throw StructuralError(path.string() + ": header too large");
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (!is) throw StructuralError(path.string() + ": truncated header");
    json header;
    try {
        header = json::parse(text);
    } catch (const json::exception& e) {
        throw StructuralError(path.string() + ": bad header: " + e.what());
    }
    GridDump d;
    d.grid = grid_from_json(header.at("grid"));
    d.metadata = header.value("metadata", json::object());
    const auto count = header.at("count").get<std::size_t>();
    if (count != d.grid.size()) throw StructuralError(path.string() + ": count does not match the grid");
    d.values.resize(count);
    for (auto& v : d.values) v = le::get_f64(is);
    return d;
}

// ---- typed artifacts -------------------------------------------------------

namespace {

std::vector<std::string> with_coords(std::vector<std::string> head, const GridSpec* grid,
                                     std::vector<std::string> tail) {
    if (grid) {
        for (std::size_t d = 0; d < grid->dims(); ++d) head.push_back("x" + std::to_string(d));
    }
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

void put_coords(CsvWriter& w, const GridSpec* grid, StateId s, std::vector<double>& x) {
    if (!grid) return;
    grid->coord_of(s, x);
    for (double c : x) w << c;
}

std::size_t parse_index(const std::string& text, std::size_t limit, const char* what) {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || v >= limit) {
        throw StructuralError(std::string("bad ") + what + " index '" + text + "'");
    }
    return v;
}

}  // namespace

void write_gain_csv(const fs::path& path, const json& provenance, const DiscreteMdp& mdp,
                    const GainBiasSolution& gain, const GridSpec* grid) {
    CsvWriter w(path, provenance, with_coords({"state"}, grid, {"in_constraint", "gain", "bias"}));
    std::vector<double> x(grid ? grid->dims() : 0);
    for (StateId s = 0; s < gain.size(); ++s) {
        w << s;
        put_coords(w, grid, s, x);
        w << (mdp.in_constraint(s) ? 1 : 0) << gain.gain[s] << gain.bias[s];
        w.end_row();
    }
    w.close();
}

GainBiasSolution read_gain_csv(const fs::path& path, std::size_t states) {
    const CsvTable t = read_csv(path);
    const std::size_t cs = t.column("state"), cg = t.column("gain"), cb = t.column("bias");
    if (t.rows.size() != states) {
        throw StructuralError(path.string() + ": " + std::to_string(t.rows.size()) + " rows for " +
                              std::to_string(states) + " states");
    }
    GainBiasSolution g;
    g.gain.assign(states, 0.0);
    g.bias.assign(states, 0.0);
    std::vector<bool> seen(states, false);
    for (const auto& row : t.rows) {
        const std::size_t s = parse_index(row[cs], states, "state");
        if (seen[s]) throw StructuralError(path.string() + ": state " + row[cs] + " listed twice");
        seen[s] = true;
        g.gain[s] = parse_double(row[cg]);
        g.bias[s] = parse_double(row[cb]);
    }
    g.status = lp::Status::Optimal;
    return g;
}

void write_policy_csv(const fs::path& path, const json& provenance, const Policy& policy) {
    CsvWriter w(path, provenance, {"state", "action", "probability"});
    for (StateId s = 0; s < policy.num_states(); ++s) {
        for (ActionId a = 0; a < policy.num_actions(); ++a) {
            const double p = policy.probability(s, a);
            if (p == 0.0) continue;
            w << s << a << p;
            w.end_row();
        }
    }
    w.close();
}

Policy read_policy_csv(const fs::path& path, std::size_t states, std::size_t actions) {
    const CsvTable t = read_csv(path);
    const std::size_t cs = t.column("state"), ca = t.column("action"), cp = t.column("probability");
    std::vector<double> p(states * actions, 0.0);
    for (const auto& row : t.rows) {
        const std::size_t s = parse_index(row[cs], states, "state");
        const std::size_t a = parse_index(row[ca], actions, "action");
        p[s * actions + a] = parse_double(row[cp]);
    }
    return Policy(states, actions, std::move(p));
}

void write_level_set_csv(const fs::path& path, const json& provenance, const SafetyLevelSet& set,
                         const GainBiasSolution& gain, const GridSpec* grid) {
    CsvWriter w(path, provenance, with_coords({"state"}, grid, {"gain", "boundary"}));
    std::vector<double> x(grid ? grid->dims() : 0);
    for (StateId s : set.members) {
        w << s;
        put_coords(w, grid, s, x);
        const bool edge = std::binary_search(set.boundary.begin(), set.boundary.end(), s);
        w << gain.gain[s] << (edge ? 1 : 0);
        w.end_row();
    }
    w.close();
}

std::vector<StateId> read_level_set_csv(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t cs = t.column("state");
    std::vector<StateId> out;
    for (const auto& row : t.rows) {
        out.push_back(static_cast<StateId>(parse_index(row[cs], std::numeric_limits<StateId>::max(), "state")));
    }
    std::sort(out.begin(), out.end());
    return out;
}

void write_ratio_csv(const fs::path& path, const json& provenance, const std::vector<RatioPoint>& curve) {
    CsvWriter w(path, provenance, {"alpha", "members", "ratio"});
    for (const auto& p : curve) {
        w << p.alpha << p.members << p.ratio;
        w.end_row();
    }
    w.close();
}

void write_mdr_safe_csv(const fs::path& path, const json& provenance, const MdrSolution& sol,
                        const GridSpec* grid) {
    CsvWriter w(path, provenance, with_coords({"state"}, grid, {"value"}));
    std::vector<double> x(grid ? grid->dims() : 0);
    for (StateId s : mdr_safe_set(sol)) {
        w << s;
        put_coords(w, grid, s, x);
        w << sol.value[s];
        w.end_row();
    }
    w.close();
}

void write_rollout_csv(const fs::path& path, const json& provenance, const std::vector<RolloutReport>& reports,
                       const std::vector<double>& gain, const std::vector<double>& exact) {
    CsvWriter w(path, provenance,
                {"start", "policy", "horizon", "trials", "survivals", "survival_rate", "half_width", "gain",
                 "exact_absorption"});
    for (const auto& r : reports) {
        w << r.start << r.policy_id << r.horizon << r.trials << r.survivals << r.survival_rate << r.half_width
          << gain.at(r.start) << exact.at(r.start);
        w.end_row();
    }
    w.close();
}

void write_bench_csv(const fs::path& path, const json& provenance, const std::vector<BenchRow>& rows) {
    CsvWriter w(path, provenance, {"method", "states", "lambda", "seconds"});
    for (const auto& r : rows) {
        w << r.method << r.states << r.lambda << r.seconds;
        w.end_row();
    }
    w.close();
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
    if (!os) throw Error("write failed for " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw StructuralError(path.string() + ": " + e.what());
    }
}

}  // namespace avrsafe
