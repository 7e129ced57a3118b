#include "avrsafe/commands.hpp"

#include "avrsafe/dynamics.hpp"
#include "avrsafe/errors.hpp"
#include "avrsafe/lp.hpp"
#include "avrsafe/mdp_io.hpp"
#include "avrsafe/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace avrsafe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kLemma5Tol = 1e-9;
constexpr double kLemma6Tol = 1e-8;
constexpr double kDualityTol = 1e-6;
constexpr double kAbsorptionTol = 1e-6;
constexpr double kBellmanTol = 1e-7;
constexpr double kStochasticTol = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path require(const RunConfig& config, const std::string& name, const char* producer) {
    const fs::path p = config.output / name;
    if (!fs::exists(p)) {
        throw UsageError("missing artifact " + p.string() + " (run '" + producer + "' first)");
    }
    return p;
}

struct Inputs {
    DiscreteMdp mdp;
    GridSpec grid;
};

Inputs load_inputs(const RunConfig& config) {
    const fs::path path = require(config, artifact::kMdp, "discretize");
    MdpFile file = load_mdp(path);
    const auto violations = validate(file.mdp);
    if (!violations.empty()) {
        throw StructuralError(path.string() + ": " + violations.front().message + " (" +
                              std::to_string(violations.size()) + " violations)");
    }
    Inputs in{std::move(file.mdp), {}};
    if (!file.metadata.contains("grid")) throw StructuralError(path.string() + ": no grid in metadata");
    in.grid = grid_from_json(file.metadata["grid"]);
    if (!(in.grid == config.grid_spec()) || file.metadata.value("system", json()) != to_json(config.system)) {
        throw UsageError(path.string() + " was built for a different grid or system; rerun 'discretize'");
    }
    if (in.grid.size() != in.mdp.num_states()) throw StructuralError(path.string() + ": grid/state count mismatch");
    return in;
}

std::vector<double> alpha_ladder(const std::vector<double>& alphas) {
    std::vector<double> a = alphas;
    a.push_back(1.0);
    std::sort(a.begin(), a.end(), std::greater<>());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

// At most `limit` in-constraint states spread evenly by index (0 = all).
std::vector<StateId> select_starts(const DiscreteMdp& mdp, std::size_t limit) {
    std::vector<StateId> inside;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.in_constraint(s)) inside.push_back(s);
    }
    if (limit == 0 || inside.size() <= limit) return inside;
    std::vector<StateId> out;
    for (std::size_t i = 0; i < limit; ++i) out.push_back(inside[i * inside.size() / limit]);
    return out;
}

bool is_subset(const std::vector<StateId>& a, const std::vector<StateId>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Mean time of back-to-back runs over a batch lasting at least min_batch.
template <class F>
double batch_seconds(F&& run, double min_batch) {
    std::size_t count = 0;
    const auto t0 = Clock::now();
    double elapsed = 0.0;
    do {
        run();
        ++count;
        elapsed = seconds_since(t0);
    } while (elapsed < min_batch);
    return elapsed / static_cast<double>(count);
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
        dynamic_cast<const GuardError*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const StructuralError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
        return kExitValidation;
    }
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const EmptySafeSetError*>(&e)) {
        return kExitSolver;
    }
    if (dynamic_cast<const Error*>(&e)) return kExitUsage;  // I/O on named paths
    return kExitSolver;
}

namespace artifact {
std::string level_set(double alpha) { return "levelset_" + value_tag(alpha) + ".csv"; }
std::string mdr_value(double lambda) { return "mdr_value_" + value_tag(lambda) + ".grid"; }
std::string mdr_safe(double lambda) { return "mdr_safe_" + value_tag(lambda) + ".csv"; }
}  // namespace artifact

void apply_overrides(RunConfig& config, const Overrides& o) {
    if (o.out) config.output = *o.out;
    if (o.seed) {
        config.seed = *o.seed;
        config.resolved["seed"] = *o.seed;
    }
    if (o.threads) config.threads = *o.threads;
    if (o.lp_backend) {
        const auto names = lp::backend_names();
        if (std::find(names.begin(), names.end(), *o.lp_backend) == names.end()) {
            throw ConfigError("unknown LP backend \"" + *o.lp_backend + "\"");
        }
        config.lp_backend = *o.lp_backend;
        config.resolved["lp_backend"] = *o.lp_backend;
    }
}

RunConfig load_run_config(const fs::path& path, const Overrides& overrides) {
    RunConfig c = load_config(path);
    apply_overrides(c, overrides);
    return c;
}

OutputLock::OutputLock(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw UsageError("cannot create output directory " + dir.string());
    }
    file_ = dir / artifact::kLock;
    std::FILE* f = std::fopen(file_.c_str(), "wx");
    if (!f) {
        throw UsageError("output directory " + dir.string() + " is locked by another run (remove " +
                         file_.string() + " if it is stale)");
    }
    std::fclose(f);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(file_, ec);
}

json provenance(const RunConfig& config, const std::string& command) {
    json cfg = config.resolved;
    cfg.erase("output");
    cfg.erase("threads");
    return {{"tool", "avrsafe"},
            {"version", version()},
            {"command", command},
            {"seed", config.seed},
            {"samples_per_pair", config.samples_per_pair},
            {"lp_backend", config.lp_backend},
            {"config", cfg}};
}

// ---- discretize ------------------------------------------------------------

void cmd_discretize(const RunConfig& config, std::ostream& log) {
    fs::create_directories(config.output);
    const GridSpec grid = config.grid_spec();
    const auto t0 = Clock::now();
    const DiscreteMdp mdp = estimate_transitions(config.system, grid, config.samples_per_pair, config.seed,
                                                 resolve_threads(config.threads));
    const auto violations = validate(mdp);
    if (!violations.empty()) throw StructuralError("estimated MDP is invalid: " + violations.front().message);

    const json prov = provenance(config, "discretize");
    const json meta{{"grid", to_json(grid)}, {"system", to_json(config.system)}, {"provenance", prov}};
    save_mdp(config.output / artifact::kMdp, mdp, meta);
    json summary = prov;
    summary["states"] = mdp.num_states();
    summary["actions"] = mdp.num_actions();
    summary["nonzeros"] = mdp.transitions().nonzeros();
    summary["constraint_cells"] = mdp.constraint().count();
    write_json(config.output / artifact::kDiscretize, summary);
    log << "discretize: " << mdp.num_states() << " states, " << mdp.num_actions() << " actions, "
        << mdp.transitions().nonzeros() << " transitions in " << seconds_since(t0) << " s\n";
}

// ---- solve-avr -------------------------------------------------------------

AvrRunSummary cmd_solve_avr(const RunConfig& config, std::ostream& log) {
    const Inputs in = load_inputs(config);
    const auto backend = lp::make_backend(config.lp_backend);
    AvrOptions options;
    options.route = config.primal_route;
    options.primal.nonnegative_bias = config.nonnegative_bias;

    AvrRunSummary run;
    const auto t0 = Clock::now();
    run.result = solve_avr(in.mdp, *backend, options);
    run.seconds = seconds_since(t0);
    const AvrResult& r = run.result;
    log << "solve-avr: dual " << r.dual_iterations << " iterations, primal route " << to_string(r.route)
        << ", gap " << r.duality_gap << ", " << run.seconds << " s\n";

    const json prov = provenance(config, "solve-avr");
    write_gain_csv(config.output / artifact::kGain, prov, in.mdp, r.gain, &in.grid);
    write_grid_dump(config.output / artifact::kGainGrid, in.grid, r.gain.gain, prov);
    write_policy_csv(config.output / artifact::kPolicy, prov, r.policy);

    json sets = json::array();
    for (double alpha : config.alphas) {
        const SafetyLevelSet set = extract_level_set(r.gain, alpha, &in.grid);
        json p = prov;
        p["alpha"] = alpha;
        write_level_set_csv(config.output / artifact::level_set(alpha), p, set, r.gain, &in.grid);
        sets.push_back({{"alpha", alpha}, {"members", set.size()}, {"boundary", set.boundary.size()}});
        log << "  K_" << alpha << ": " << set.size() << " states\n";
    }

    const auto ladder = alpha_ladder(config.alphas);
    json ratio_prov = prov;
    std::vector<RatioPoint> curve;
    try {
        curve = level_set_ratio_curve(r.gain, ladder);
    } catch (const EmptySafeSetError&) {
        ratio_prov["note"] = "no state is safe with probability one; ratio undefined";
        log << "  warning: K_1 is empty, ratio curve left empty\n";
    }
    write_ratio_csv(config.output / artifact::kRatio, ratio_prov, curve);

    json summary = prov;
    summary["states"] = in.mdp.num_states();
    summary["actions"] = in.mdp.num_actions();
    summary["constraint_cells"] = in.mdp.constraint().count();
    summary["primal_objective"] = r.primal_objective;
    summary["dual_objective"] = r.dual_objective;
    summary["duality_gap"] = r.duality_gap;
    summary["primal_iterations"] = r.primal_iterations;
    summary["dual_iterations"] = r.dual_iterations;
    summary["primal_route"] = to_string(r.route);
    summary["primal_violation"] = r.primal_violation;
    summary["bellman_residual"] = bellman_residual(in.mdp, r.gain.gain);
    summary["policy_deterministic"] = r.policy.is_deterministic();
    summary["level_sets"] = sets;
    summary["seconds"] = run.seconds;
    write_json(config.output / artifact::kAvrSummary, summary);
    return run;
}

// ---- solve-mdr -------------------------------------------------------------

MdrRunSummary cmd_solve_mdr(const RunConfig& config, std::ostream& log) {
    const Inputs in = load_inputs(config);
    const std::vector<double> l = signed_distance(in.grid, config.system.constraint_box);
    const json prov = provenance(config, "solve-mdr");

    std::optional<SafetyLevelSet> k;
    const fs::path gain_path = config.output / artifact::kGain;
    if (fs::exists(gain_path)) {
        k = extract_level_set(read_gain_csv(gain_path, in.mdp.num_states()), 1.0);
    }

    MdrRunSummary run;
    CsvWriter residual_log(config.output / artifact::kMdrLog, prov, {"lambda", "iteration", "residual"});
    json entries = json::array();
    std::vector<std::vector<StateId>> safe_sets;
    for (double lambda : config.lambdas) {
        MdrOptions o;
        o.lambda = lambda;
        o.dt = config.system.dt;
        o.tol = config.mdr.tol;
        o.max_iter = config.mdr.max_iter;
        o.threads = resolve_threads(config.threads);
        o.record_residuals = true;
        const auto t0 = Clock::now();
        MdrSolution sol = mdr_value_iteration(in.mdp, l, o);
        const double secs = seconds_since(t0);
        if (sol.status != MdrStatus::Converged) {
            log << "  warning: lambda " << lambda << " stopped after " << sol.iterations
                << " sweeps with residual " << sol.residual << "\n";
        }
        for (std::size_t i = 0; i < sol.residuals.size(); ++i) {
            residual_log << lambda << (i + 1) << sol.residuals[i];
            residual_log.end_row();
        }
        bool monotone = true;
        for (std::size_t i = 2; i < sol.residuals.size(); ++i) {
            if (sol.residuals[i] > sol.residuals[i - 1]) monotone = false;
        }

        json p = prov;
        p["lambda"] = lambda;
        json meta = p;
        meta["gamma"] = sol.gamma;
        meta["iterations"] = sol.iterations;
        meta["residual"] = sol.residual;
        meta["status"] = to_string(sol.status);
        write_grid_dump(config.output / artifact::mdr_value(lambda), in.grid, sol.value, meta);
        write_mdr_safe_csv(config.output / artifact::mdr_safe(lambda), p, sol, &in.grid);

        const auto safe = mdr_safe_set(sol);
        json e{{"lambda", lambda},
               {"gamma", sol.gamma},
               {"iterations", sol.iterations},
               {"residual", sol.residual},
               {"status", to_string(sol.status)},
               {"safe_cells", safe.size()},
               {"residuals_nonincreasing", monotone},
               {"seconds", secs}};
        log << "solve-mdr: lambda " << lambda << ", " << sol.iterations << " sweeps, |Z| = " << safe.size()
            << ", " << to_string(sol.status) << "\n";
        entries.push_back(e);
        safe_sets.push_back(safe);
        run.solutions.push_back(std::move(sol));
    }
    residual_log.close();

    // Inclusion relative to the undiscounted set, reported only.
    const auto zero = std::find(config.lambdas.begin(), config.lambdas.end(), 0.0);
    if (zero != config.lambdas.end()) {
        const auto& z0 = safe_sets[zero - config.lambdas.begin()];
        for (std::size_t i = 0; i < safe_sets.size(); ++i) {
            entries[i]["subset_of_lambda0"] = is_subset(safe_sets[i], z0);
            entries[i]["superset_of_lambda0"] = is_subset(z0, safe_sets[i]);
        }
    }

    if (k) {
        CsvWriter cmp(config.output / artifact::kMdrCompare, prov,
                      {"lambda", "avr_cells", "mdr_cells", "only_avr", "only_mdr", "ratio"});
        for (std::size_t i = 0; i < safe_sets.size(); ++i) {
            const SetComparison c = compare_safe_sets(*k, safe_sets[i], in.mdp.constraint());
            cmp << config.lambdas[i] << k->size() << safe_sets[i].size() << c.only_first.size()
                << c.only_second.size() << c.ratio;
            cmp.end_row();
            entries[i]["avr_disagreement_ratio"] = c.ratio;
            run.compare_ratio.push_back(c.ratio);
            log << "  lambda " << config.lambdas[i] << ": |K xor Z| / |C| = " << c.ratio << "\n";
        }
        cmp.close();
    }

    json summary = prov;
    summary["constraint_cells"] = in.mdp.constraint().count();
    summary["lambdas"] = entries;
    write_json(config.output / artifact::kMdrSummary, summary);
    return run;
}

// ---- rollout ---------------------------------------------------------------

std::vector<RolloutReport> cmd_rollout(const RunConfig& config, std::ostream& log) {
    const Inputs in = load_inputs(config);
    const std::size_t S = in.mdp.num_states();
    const GainBiasSolution gain = read_gain_csv(require(config, artifact::kGain, "solve-avr"), S);
    const Policy policy = read_policy_csv(require(config, artifact::kPolicy, "solve-avr"), S, in.mdp.num_actions());
    const auto exact = absorption_probabilities(in.mdp, policy);

    std::vector<RolloutReport> reports;
    for (StateId s : select_starts(in.mdp, config.rollout.max_starts)) {
        reports.push_back(rollout_survival(in.mdp, policy, s, config.rollout.horizon, config.rollout.trials,
                                           config.seed, resolve_threads(config.threads), "avr"));
    }
    write_rollout_csv(config.output / artifact::kRollout, provenance(config, "rollout"), reports, gain.gain, exact);
    log << "rollout: " << reports.size() << " starts x " << config.rollout.trials << " trials x "
        << config.rollout.horizon << " steps\n";
    return reports;
}

// ---- bench -----------------------------------------------------------------

std::vector<BenchRow> cmd_bench(const RunConfig& config, std::ostream& log) {
    fs::create_directories(config.output);
    const auto backend = lp::make_backend(config.lp_backend);
    const std::size_t threads = resolve_threads(config.threads);
    const auto& b = config.bench;
    AvrOptions options;
    options.route = config.primal_route;
    options.primal.nonnegative_bias = config.nonnegative_bias;

    std::vector<BenchRow> rows;
    for (std::size_t n : b.grids) {
        const GridSpec grid = config.grid_spec(n);
        const DiscreteMdp mdp = estimate_transitions(config.system, grid, config.samples_per_pair, config.seed,
                                                     threads);
        const std::size_t S = mdp.num_states();
        auto solve = [&] { solve_avr(mdp, *backend, options); };
        for (std::size_t w = 0; w < b.warmup; ++w) solve();
        double avr = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < b.repeats; ++r) avr = std::min(avr, batch_seconds(solve, 0.0));
        rows.push_back({"avr-lp", S, 0.0, avr});
        log << "bench: " << S << " states, avr-lp " << avr << " s\n";

        // Lambdas take turns within each repeat so slow spells on the machine
        // hit all of them; the minimum over repeats discards those spells.
        const std::vector<double> l = signed_distance(grid, config.system.constraint_box);
        std::vector<MdrOptions> opts;
        for (double lambda : config.lambdas) {
            MdrOptions o;
            o.lambda = lambda;
            o.dt = config.system.dt;
            o.tol = config.mdr.tol;
            o.max_iter = config.mdr.max_iter;
            o.threads = 1;  // the LP backend is sequential too
            opts.push_back(o);
        }
        for (std::size_t w = 0; w < b.warmup; ++w) {
            for (const auto& o : opts) mdr_value_iteration(mdp, l, o);
        }
        std::vector<double> vi(opts.size(), std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < b.vi_repeats; ++r) {
            for (std::size_t i = 0; i < opts.size(); ++i) {
                vi[i] = std::min(vi[i], batch_seconds([&] { mdr_value_iteration(mdp, l, opts[i]); },
                                                      b.min_batch_seconds));
            }
        }
        for (std::size_t i = 0; i < opts.size(); ++i) {
            rows.push_back({"mdr-vi", S, opts[i].lambda, vi[i]});
            log << "bench: " << S << " states, mdr-vi lambda " << opts[i].lambda << " " << vi[i] << " s\n";
        }
        const auto [vi_min, vi_max] = std::minmax_element(vi.begin(), vi.end());
        log << "bench: " << S << " states, VI spread across lambda " << (*vi_max / *vi_min - 1.0) * 100.0
            << "%, LP/VI time ratio " << avr / *vi_max << "\n";
    }
    write_bench_csv(config.output / artifact::kBench, provenance(config, "bench"), rows);
    return rows;
}

// ---- validate --------------------------------------------------------------

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

ValidationReport cmd_validate(const RunConfig& config, std::ostream& log) {
    const fs::path mdp_path = require(config, artifact::kMdp, "discretize");
    const fs::path gain_path = require(config, artifact::kGain, "solve-avr");
    const fs::path policy_path = require(config, artifact::kPolicy, "solve-avr");
    const fs::path summary_path = require(config, artifact::kAvrSummary, "solve-avr");

    ValidationReport report;
    auto add = [&](std::string name, bool ok, double value, double tol, std::string detail) {
        report.checks.push_back({std::move(name), ok, value, tol, std::move(detail)});
    };

    MdpFile file = load_mdp(mdp_path);
    const DiscreteMdp& mdp = file.mdp;
    const auto violations = validate(mdp);
    add("mdp-structure", violations.empty(), static_cast<double>(violations.size()), 0.0,
        violations.empty() ? "row mass and absorbing rule hold" : violations.front().message);
    if (!violations.empty()) return report;

    const std::size_t S = mdp.num_states();
    const GainBiasSolution gain = read_gain_csv(gain_path, S);
    const Policy policy = read_policy_csv(policy_path, S, mdp.num_actions());
    const json summary = read_json(summary_path);
    const auto& g = gain.gain;

    double outside = 0.0, range = 0.0;
    for (StateId s = 0; s < S; ++s) {
        if (!mdp.in_constraint(s)) outside = std::max(outside, std::abs(g[s]));
        range = std::max({range, -g[s], g[s] - 1.0});
    }
    add("gain-outside-constraint-zero", outside <= kLemma5Tol, outside, kLemma5Tol, "max |g| over states outside C");
    add("gain-in-unit-interval", range <= kLemma5Tol, std::max(range, 0.0), kLemma5Tol, "g within [0, 1]");

    double row_error = 0.0;
    for (StateId s = 0; s < S; ++s) {
        double sum = 0.0;
        for (double p : policy.row(s)) {
            sum += p;
            if (p < 0.0) row_error = std::max(row_error, -p);
        }
        row_error = std::max(row_error, std::abs(sum - 1.0));
    }
    add("policy-stochastic", row_error <= kStochasticTol, row_error, kStochasticTol, "policy rows are distributions");

    const double primal = summary.at("primal_objective").get<double>();
    const double dual = summary.at("dual_objective").get<double>();
    add("duality-gap", std::abs(primal - dual) <= kDualityTol, std::abs(primal - dual), kDualityTol,
        "recorded primal vs dual objective");
    double weighted = 0.0;
    for (StateId s = 0; s < S; ++s) weighted += mdp.initial_weights()[s] * g[s];
    add("gain-matches-dual-objective", std::abs(weighted - dual) <= kDualityTol, std::abs(weighted - dual),
        kDualityTol, "sum of weighted gains vs recorded dual objective");

    const double bellman = bellman_residual(mdp, g);
    add("bellman-residual", bellman <= kBellmanTol, bellman, kBellmanTol, "max_a E[g'] - g");

    const ChainClassification chain = classify_chain(mdp, policy);
    std::size_t recurrent_unsafe = 0, safe_class_low = 0;
    for (StateId s = 0; s < S; ++s) {
        if (mdp.in_constraint(s) && g[s] < 1.0 - kLemma6Tol && chain.recurrent[s]) ++recurrent_unsafe;
        if (chain.safe_class[s] && g[s] < 1.0 - kLemma6Tol) ++safe_class_low;
    }
    add("transient-below-one", recurrent_unsafe == 0, static_cast<double>(recurrent_unsafe), 0.0,
        "in-C states with g < 1 that are recurrent under the policy");
    add("safe-class-gain-one", safe_class_low == 0, static_cast<double>(safe_class_low), 0.0,
        "states of closed in-C classes with g < 1");

    const auto exact = absorption_probabilities(mdp, policy);
    double absorb = 0.0;
    for (StateId s = 0; s < S; ++s) absorb = std::max(absorb, std::abs(exact[s] - g[s]));
    add("policy-absorption-matches-gain", absorb <= kAbsorptionTol, absorb, kAbsorptionTol,
        "exact survival under the stored policy vs g");

    // Finite-horizon survival can only exceed the infinite-horizon value, so
    // the Monte Carlo check is one-sided except for states with g = 1.
    std::size_t mc_fail = 0, starts = 0;
    double worst = 0.0;
    for (StateId s : select_starts(mdp, config.rollout.max_starts)) {
        const auto r = rollout_survival(mdp, policy, s, config.rollout.horizon, config.rollout.trials, config.seed,
                                        resolve_threads(config.threads), "avr");
        ++starts;
        const double se = std::sqrt(g[s] * (1.0 - g[s]) / static_cast<double>(r.trials));
        const double shortfall = g[s] - r.survival_rate;
        worst = std::max(worst, shortfall);
        const bool ok = g[s] >= 1.0 - kLemma6Tol ? r.survivals == r.trials : shortfall <= 4.0 * se + 1e-12;
        if (!ok) ++mc_fail;
    }
    add("rollout-agreement", mc_fail == 0, std::max(worst, 0.0), 0.0,
        std::to_string(starts) + " starts, " + std::to_string(config.rollout.trials) + " trials, horizon " +
            std::to_string(config.rollout.horizon) + "; " + std::to_string(mc_fail) + " failed");

    const auto ladder = alpha_ladder(config.alphas);
    std::size_t nest_fail = 0;
    std::vector<StateId> prev;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto set = extract_level_set(gain, ladder[i]);
        if (i > 0 && !is_subset(prev, set.members)) ++nest_fail;
        prev = set.members;
    }
    add("level-sets-nested", nest_fail == 0, static_cast<double>(nest_fail), 0.0,
        std::to_string(ladder.size()) + " alphas");

    if (extract_level_set(gain, 1.0).size() > 0) {
        const auto curve = level_set_ratio_curve(gain, ladder);
        bool ok = curve.front().ratio == 1.0;
        for (std::size_t i = 1; i < curve.size(); ++i) ok = ok && curve[i].ratio >= curve[i - 1].ratio;
        add("ratio-curve", ok, curve.back().ratio, 0.0, "starts at 1 and is nondecreasing as alpha falls");
    }

    CsvWriter w(config.output / artifact::kValidate, provenance(config, "validate"),
                {"check", "status", "value", "tolerance", "detail"});
    for (const auto& c : report.checks) {
        std::string detail = c.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        w << c.name << (c.passed ? "PASS" : "FAIL") << c.value << c.tolerance << detail;
        w.end_row();
        log << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " tol=" << c.tolerance << " ("
            << c.detail << ")\n";
    }
    w.close();
    return report;
}

// ---- dispatch --------------------------------------------------------------

int run_command(const std::string& name, const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        static const std::set<std::string> known{"discretize", "solve-avr", "solve-mdr", "rollout", "bench",
                                                 "validate"};
        if (!known.count(name)) throw UsageError("unknown command '" + name + "'");
        OutputLock lock(config.output);
        if (name == "discretize") cmd_discretize(config, out);
        if (name == "solve-avr") cmd_solve_avr(config, out);
        if (name == "solve-mdr") cmd_solve_mdr(config, out);
        if (name == "rollout") cmd_rollout(config, out);
        if (name == "bench") cmd_bench(config, out);
        if (name == "validate" && !cmd_validate(config, out).passed()) {
            err << "validation failed\n";
            return kExitValidation;
        }
        return kExitSuccess;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace avrsafe
