#include "avrsafe/config.hpp"

#include "avrsafe/errors.hpp"
#include "avrsafe/lp.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace avrsafe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void merge_into(json& base, const json& child) {
    for (auto it = child.begin(); it != child.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
            merge_into(base[it.key()], *it);
        } else {
            base[it.key()] = *it;
        }
    }
}

json load_chain(const fs::path& path, std::set<fs::path>& seen) {
    const fs::path canon = fs::weakly_canonical(path);
    if (!seen.insert(canon).second) throw ConfigError("config inheritance cycle at " + path.string());
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path.string() + ": top level must be an object");
    if (!j.contains("extends")) return j;
    if (!j["extends"].is_string()) throw ConfigError(path.string() + ": \"extends\" must be a path string");
    const fs::path parent = path.parent_path() / j["extends"].get<std::string>();
    json merged = load_chain(parent, seen);
    j.erase("extends");
    merge_into(merged, j);
    return merged;
}

template <class T>
T get(const json& j, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, std::size_t minimum) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
        throw ConfigError(std::string("config key \"") + key + "\" must be an integer >= " +
                          std::to_string(minimum));
    }
    return v.get<std::size_t>();
}

Box box_from_json(const json& j, const char* key) {
    try {
        Box b{j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>()};
        return b;
    } catch (const json::exception&) {
        throw ConfigError(std::string("system.") + key + " needs numeric arrays \"lo\" and \"hi\"");
    }
}

json box_to_json(const Box& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

}  // namespace

SystemSpec system_from_json(const json& j, std::size_t action_count) {
    json sys = j;
    if (sys.is_string()) sys = json{{"kind", sys}};
    if (!sys.is_object() || !sys.contains("kind") || !sys["kind"].is_string()) {
        throw ConfigError("\"system\" must be a preset name or an object with a \"kind\"");
    }
    DynamicsKind kind;
    try {
        kind = dynamics_kind_from_string(sys["kind"].get<std::string>());
    } catch (const Error& e) {
        throw ConfigError(std::string("system.kind: ") + e.what());
    }
    SystemSpec spec;
    if (kind == DynamicsKind::DoubleIntegrator) {
        spec = double_integrator_system(action_count);
    } else if (kind == DynamicsKind::InvertedPendulum) {
        spec = inverted_pendulum_system(action_count);
    } else {
        throw ConfigError("system.kind \"custom\" needs a step function and cannot come from a config file");
    }
    spec.name = get<std::string>(sys, "name", spec.name);
    spec.dt = get<double>(sys, "dt", spec.dt);
    if (sys.contains("control")) {
        const auto& c = sys["control"];
        if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
            throw ConfigError("system.control must be [lo, hi]");
        }
        spec.actions = uniform_actions(c[0].get<double>(), c[1].get<double>(), action_count);
    }
    if (sys.contains("state_box")) spec.state_box = box_from_json(sys["state_box"], "state_box");
    if (sys.contains("constraint_box")) {
        spec.constraint_box = box_from_json(sys["constraint_box"], "constraint_box");
    }
    if (sys.contains("disturbance")) {
        const auto& d = sys["disturbance"];
        spec.disturbance.mean = get<double>(d, "mean", spec.disturbance.mean);
        spec.disturbance.std_dev = get<double>(d, "std_dev", spec.disturbance.std_dev);
        spec.disturbance.clamp_lo = get<double>(d, "clamp_lo", spec.disturbance.clamp_lo);
        spec.disturbance.clamp_hi = get<double>(d, "clamp_hi", spec.disturbance.clamp_hi);
    }
    if (sys.contains("pendulum")) {
        const auto& p = sys["pendulum"];
        spec.pendulum.gravity = get<double>(p, "gravity", spec.pendulum.gravity);
        spec.pendulum.length = get<double>(p, "length", spec.pendulum.length);
        spec.pendulum.mass = get<double>(p, "mass", spec.pendulum.mass);
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
    return spec;
}

json to_json(const SystemSpec& spec) {
    json j{{"kind", to_string(spec.kind)},
           {"name", spec.name},
           {"dt", spec.dt},
           {"actions", spec.actions},
           {"state_box", box_to_json(spec.state_box)},
           {"constraint_box", box_to_json(spec.constraint_box)},
           {"disturbance",
            {{"mean", spec.disturbance.mean},
             {"std_dev", spec.disturbance.std_dev},
             {"clamp_lo", spec.disturbance.clamp_lo},
             {"clamp_hi", spec.disturbance.clamp_hi}}}};
    if (spec.kind == DynamicsKind::InvertedPendulum) {
        j["pendulum"] = {{"gravity", spec.pendulum.gravity},
                         {"length", spec.pendulum.length},
                         {"mass", spec.pendulum.mass}};
    }
    return j;
}

GridSpec RunConfig::grid_spec() const { return GridSpec::over(system.state_box, grid); }

GridSpec RunConfig::grid_spec(std::size_t points_per_axis) const {
    const std::vector<std::size_t> points(system.state_box.dims(), points_per_axis);
    return GridSpec::over(system.state_box, points);
}

json load_config_json(const fs::path& path) {
    std::set<fs::path> seen;
    return load_chain(path, seen);
}

RunConfig parse_config(const json& j, const fs::path& base_dir) {
    static const std::set<std::string> known{
        "system", "grid",    "actions", "samples_per_pair", "seed", "alphas",  "lambdas",
        "lp_backend", "primal_route", "nonnegative_bias", "threads", "output", "mdr", "rollout",
        "bench",  "description"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw ConfigError("unknown config key \"" + it.key() + "\"");
    }

    RunConfig c;
    c.resolved = j;
    if (!j.contains("system")) throw ConfigError("config needs a \"system\"");
    const std::size_t actions = get_count(j, "actions", 81, 1);
    c.system = system_from_json(j["system"], actions);

    if (!j.contains("grid")) throw ConfigError("config needs \"grid\" (points per axis)");
    const auto& g = j["grid"];
    if (g.is_number_integer()) {
        c.grid.assign(c.system.state_box.dims(), g.get<std::size_t>());
    } else if (g.is_array()) {
        for (const auto& n : g) {
            if (!n.is_number_integer()) throw ConfigError("\"grid\" entries must be integers");
            c.grid.push_back(n.get<std::size_t>());
        }
    } else {
        throw ConfigError("\"grid\" must be an integer or an array of integers");
    }
    if (c.grid.size() != c.system.state_box.dims()) {
        throw ConfigError("\"grid\" has " + std::to_string(c.grid.size()) + " axes, the system has " +
                          std::to_string(c.system.state_box.dims()));
    }
    for (std::size_t n : c.grid) {
        if (n < 2) throw ConfigError("\"grid\" needs at least 2 points per axis");
    }

    c.samples_per_pair = get_count(j, "samples_per_pair", c.samples_per_pair, 1);
    c.seed = get<std::uint64_t>(j, "seed", c.seed);
    c.alphas = get<std::vector<double>>(j, "alphas", c.alphas);
    for (double a : c.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha " + std::to_string(a) + " is outside [0, 1]");
    }
    c.lambdas = get<std::vector<double>>(j, "lambdas", c.lambdas);
    for (double l : c.lambdas) {
        if (!(l >= 0.0)) throw ConfigError("lambda " + std::to_string(l) + " must be nonnegative");
    }
    c.lp_backend = get<std::string>(j, "lp_backend", c.lp_backend);
    const auto names = lp::backend_names();
    if (std::find(names.begin(), names.end(), c.lp_backend) == names.end()) {
        throw ConfigError("unknown lp_backend \"" + c.lp_backend + "\"");
    }
    try {
        c.primal_route = primal_route_from_string(get<std::string>(j, "primal_route", "auto"));
    } catch (const Error& e) {
        throw ConfigError(std::string("primal_route: ") + e.what());
    }
    c.nonnegative_bias = get<bool>(j, "nonnegative_bias", c.nonnegative_bias);
    c.threads = get_count(j, "threads", c.threads, 0);

    const fs::path out = get<std::string>(j, "output", c.output.string());
    c.output = out.is_absolute() ? out : base_dir / out;

    if (j.contains("mdr")) {
        const auto& m = j["mdr"];
        c.mdr.tol = get<double>(m, "tol", c.mdr.tol);
        c.mdr.max_iter = get_count(m, "max_iter", c.mdr.max_iter, 1);
        if (!(c.mdr.tol > 0.0)) throw ConfigError("mdr.tol must be positive");
    }
    if (j.contains("rollout")) {
        const auto& r = j["rollout"];
        c.rollout.horizon = get_count(r, "horizon", c.rollout.horizon, 1);
        c.rollout.trials = get_count(r, "trials", c.rollout.trials, 1);
        c.rollout.max_starts = get_count(r, "max_starts", c.rollout.max_starts, 0);
    }
    if (j.contains("bench")) {
        const auto& b = j["bench"];
        c.bench.grids = get<std::vector<std::size_t>>(b, "grids", c.bench.grids);
        c.bench.warmup = get_count(b, "warmup", c.bench.warmup, 0);
        c.bench.repeats = get_count(b, "repeats", c.bench.repeats, 1);
        c.bench.vi_repeats = get_count(b, "vi_repeats", c.bench.vi_repeats, 1);
        c.bench.min_batch_seconds = get<double>(b, "min_batch_seconds", c.bench.min_batch_seconds);
        if (!(c.bench.min_batch_seconds >= 0.0)) throw ConfigError("bench.min_batch_seconds must be >= 0");
        if (c.bench.grids.empty()) throw ConfigError("bench.grids must not be empty");
        for (std::size_t n : c.bench.grids) {
            if (n < 2) throw ConfigError("bench.grids entries need at least 2 points");
        }
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    RunConfig c = parse_config(load_config_json(path), path.parent_path());
    c.source = path;
    return c;
}

}  // namespace avrsafe
