#pragma once
#ifndef SDLM_COMMANDS_HPP
#define SDLM_COMMANDS_HPP

// Run configuration and the fit / forecast / simulate / compare / validate
// commands. Each command writes its outputs and a manifest.json into the
// output directory.

#include "sdlm/error.hpp"
#include "sdlm/fit.hpp"
#include "sdlm/io.hpp"
#include "sdlm/model.hpp"
#include "sdlm/posterior.hpp"
#include "sdlm/predict.hpp"
#include "sdlm/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#ifndef SDLM_VERSION
#define SDLM_VERSION "0.1.0"
#endif

namespace sdlm::cli {

namespace fs = std::filesystem;
using io::json;

enum ExitCode : int {
    kOk = 0,
    kInternalError = 1,
    kUsageError = 2,
    kParseError = 3,
    kValidationError = 4,
    kNumericalError = 5,
    kIoError = 6,
};

enum class ModelKind { joint, single };

struct ForecastSpec {
    std::size_t horizon = 10;
    std::size_t holdout = 10;
    std::size_t draws = 1000;
    std::optional<fs::path> chain;   // natural-scale joint chain CSV to reuse instead of refitting
};

struct RunConfig {
    ModelKind model = ModelKind::joint;
    fs::path panel;
    std::optional<fs::path> geometry;
    ModelOptions options;
    PriorSpec priors;
    FitConfig fit;
    ForecastSpec forecast;
    double lower = 0.025;
    double upper = 0.975;
    bool write_draws = false;
    std::uint64_t seed = 1;
    fs::path output = "sdlm_out";
};

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<fs::path> output;
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline void expect_keys(const json& obj, const std::set<std::string>& known, const std::string& context) {
    if (!obj.is_object()) throw ValidationError((context.empty() ? "config" : context) + " must be an object");
    std::vector<std::string> v;
    for (const auto& [k, val] : obj.items())
        if (!known.count(k)) v.push_back("unknown config key '" + (context.empty() ? k : context + "." + k) + "'");
    if (!v.empty()) throw ValidationError(std::move(v));
}

inline double get_number(const json& obj, const char* key, double fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ValidationError("config key '" + context + key + "' must be a number");
    return obj[key].get<double>();
}

inline long get_count(const json& obj, const char* key, long fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (v.is_number_integer() && v.get<long>() >= 0) return v.get<long>();
    if (v.is_number_float() && v.get<double>() >= 0 && v.get<double>() == std::floor(v.get<double>()) && v.get<double>() < 9e15)
        return static_cast<long>(v.get<double>());
    throw ValidationError("config key '" + context + key + "' must be a non-negative integer");
}

inline std::string get_string(const json& obj, const char* key, const std::string& fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) throw ValidationError("config key '" + context + key + "' must be a string");
    return obj[key].get<std::string>();
}

inline bool get_bool(const json& obj, const char* key, bool fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) throw ValidationError("config key '" + context + key + "' must be true or false");
    return obj[key].get<bool>();
}

inline fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

inline KernelForm parse_kernel(const std::string& s) {
    if (s == "exponential") return KernelForm::exponential;
    if (s == "squared_exponential") return KernelForm::squared_exponential;
    throw ValidationError("kernel must be 'exponential' or 'squared_exponential', got '" + s + "'");
}

inline const char* kernel_name(KernelForm k) { return k == KernelForm::exponential ? "exponential" : "squared_exponential"; }

} // namespace detail

/// Parses a run config. Relative data paths resolve against `base_dir`.
/// MCMC defaults follow the model: 22k iterations with 2k burn-in for the
/// single-zone model, 10^6 iterations with 10^5 burn-in and thin 100 for
/// the joint model.
inline RunConfig parse_run_config(const json& j, const fs::path& base_dir, const Overrides& over = {}) {
    using detail::get_count;
    using detail::get_number;
    detail::expect_keys(j, {"model", "data", "harmonic", "kernel", "priors", "mcmc", "ffbs_draws", "interval", "forecast",
                            "write_draws", "seed", "threads", "output"},
                        "");
    RunConfig c;
    const std::string model = detail::get_string(j, "model", "joint", "");
    if (model == "joint") c.model = ModelKind::joint;
    else if (model == "single") c.model = ModelKind::single;
    else throw ValidationError("model must be 'joint' or 'single', got '" + model + "'");

    if (!j.contains("data")) throw ValidationError("config needs a 'data' section with a panel path");
    const json& data = j["data"];
    detail::expect_keys(data, {"panel", "geometry"}, "data");
    const std::string panel = detail::get_string(data, "panel", "", "data.");
    if (panel.empty()) throw ValidationError("config key 'data.panel' is required");
    c.panel = detail::resolve(panel, base_dir);
    if (data.contains("geometry")) c.geometry = detail::resolve(detail::get_string(data, "geometry", "", "data."), base_dir);

    if (j.contains("harmonic")) {
        detail::expect_keys(j["harmonic"], {"period"}, "harmonic");
        c.options.harmonic.period = get_number(j["harmonic"], "period", 12.0, "harmonic.");
        if (!(c.options.harmonic.period > 0.0)) throw ValidationError("harmonic.period must be positive");
    }
    c.options.kernel = detail::parse_kernel(detail::get_string(j, "kernel", "exponential", ""));
    if (j.contains("priors")) c.priors = io::priors_from_json(j["priors"]);

    const bool joint = c.model == ModelKind::joint;
    McmcConfig& m = c.fit.mcmc;
    m.iterations = joint ? 1000000 : 22000;
    m.burn_in = joint ? 100000 : 2000;
    m.thin = joint ? 100 : 1;
    if (j.contains("mcmc")) {
        const json& mc = j["mcmc"];
        detail::expect_keys(mc, {"iterations", "burn_in", "thin", "step_scale", "target_acceptance", "adapt",
                                 "pilot_iterations", "pilot_rounds", "chains"},
                            "mcmc");
        m.iterations = get_count(mc, "iterations", m.iterations, "mcmc.");
        m.burn_in = get_count(mc, "burn_in", mc.contains("iterations") ? m.iterations / 10 : m.burn_in, "mcmc.");
        m.thin = get_count(mc, "thin", m.thin, "mcmc.");
        m.step_scale = get_number(mc, "step_scale", m.step_scale, "mcmc.");
        m.target_acceptance = get_number(mc, "target_acceptance", m.target_acceptance, "mcmc.");
        m.adapt = detail::get_bool(mc, "adapt", m.adapt, "mcmc.");
        c.fit.pilot_iterations = get_count(mc, "pilot_iterations", c.fit.pilot_iterations, "mcmc.");
        c.fit.pilot_rounds = static_cast<int>(get_count(mc, "pilot_rounds", c.fit.pilot_rounds, "mcmc."));
        c.fit.chains = static_cast<std::size_t>(get_count(mc, "chains", 1, "mcmc."));
        if (c.fit.chains == 0) throw ValidationError("mcmc.chains must be at least 1");
    }
    c.fit.ffbs_draws = static_cast<std::size_t>(get_count(j, "ffbs_draws", 1000, ""));
    if (c.fit.ffbs_draws == 0) throw ValidationError("ffbs_draws must be at least 1");

    if (j.contains("interval")) {
        detail::expect_keys(j["interval"], {"lower", "upper"}, "interval");
        c.lower = get_number(j["interval"], "lower", c.lower, "interval.");
        c.upper = get_number(j["interval"], "upper", c.upper, "interval.");
    }
    if (!(c.lower >= 0.0 && c.lower < c.upper && c.upper <= 1.0))
        throw ValidationError("interval bounds must satisfy 0 <= lower < upper <= 1");

    if (j.contains("forecast")) {
        const json& f = j["forecast"];
        detail::expect_keys(f, {"horizon", "holdout", "draws", "chain"}, "forecast");
        c.forecast.horizon = static_cast<std::size_t>(get_count(f, "horizon", 10, "forecast."));
        c.forecast.holdout = static_cast<std::size_t>(get_count(f, "holdout", 10, "forecast."));
        c.forecast.draws = static_cast<std::size_t>(get_count(f, "draws", 1000, "forecast."));
        if (f.contains("chain")) c.forecast.chain = detail::resolve(detail::get_string(f, "chain", "", "forecast."), base_dir);
    }
    c.write_draws = detail::get_bool(j, "write_draws", false, "");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("config key 'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.fit.threads = static_cast<std::size_t>(get_count(j, "threads", 1, ""));
    if (j.contains("output")) c.output = detail::resolve(detail::get_string(j, "output", "", ""), base_dir);

    if (over.seed) c.seed = *over.seed;
    if (over.threads) c.fit.threads = *over.threads;
    if (over.output) c.output = *over.output;
    if (c.fit.threads == 0) c.fit.threads = 1;
    m.seed = c.seed;
    m.validate(1);
    return c;
}

inline RunConfig load_run_config(const fs::path& path, const Overrides& over = {}) {
    const json j = io::read_json_file(path);
    return parse_run_config(j, fs::absolute(path).parent_path(), over);
}

/// Fully resolved config, defaults included.
inline json to_json(const RunConfig& c) {
    json j;
    j["model"] = c.model == ModelKind::joint ? "joint" : "single";
    j["data"]["panel"] = c.panel.string();
    j["data"]["geometry"] = c.geometry ? json(c.geometry->string()) : json(nullptr);
    j["harmonic"]["period"] = c.options.harmonic.period;
    j["kernel"] = detail::kernel_name(c.options.kernel);
    j["priors"] = io::to_json(c.priors);
    j["mcmc"] = {{"iterations", c.fit.mcmc.iterations},
                 {"burn_in", c.fit.mcmc.burn_in},
                 {"thin", c.fit.mcmc.thin},
                 {"step_scale", c.fit.mcmc.step_scale},
                 {"target_acceptance", c.fit.mcmc.target_acceptance},
                 {"adapt", c.fit.mcmc.adapt},
                 {"pilot_iterations", c.fit.pilot_iterations},
                 {"pilot_rounds", c.fit.pilot_rounds},
                 {"chains", c.fit.chains}};
    j["ffbs_draws"] = c.fit.ffbs_draws;
    j["interval"] = {{"lower", c.lower}, {"upper", c.upper}};
    j["forecast"] = {{"horizon", c.forecast.horizon},
                     {"holdout", c.forecast.holdout},
                     {"draws", c.forecast.draws},
                     {"chain", c.forecast.chain ? json(c.forecast.chain->string()) : json(nullptr)}};
    j["write_draws"] = c.write_draws;
    j["seed"] = c.seed;
    j["threads"] = c.fit.threads;
    j["output"] = fs::absolute(c.output).lexically_normal().string();
    return j;
}

// ---------------------------------------------------------------------------
// Run context and manifest

/// FNV-1a 64 of a file's bytes, as hex.
inline std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "";
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

struct RunContext {
    std::string verb;
    std::vector<std::string> argv;
    fs::path output;
    json config = json::object();
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    json inputs = json::object();
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    std::ostream* log = &std::cerr;

    /// Registers an output file and returns its full path.
    fs::path file(const std::string& name) {
        outputs.push_back(name);
        return output / name;
    }

    void record_input(const std::string& role, const fs::path& path) {
        inputs[role] = {{"path", path.string()}, {"fnv1a64", file_digest(path)}};
    }

    void warn(const std::string& message) {
        warnings.push_back(message);
        *log << "sdlm: warning: " << message << '\n';
    }

    void write_manifest(int exit_code, const std::string& error = "") const {
        if (output.empty()) return;
        json m;
        m["tool"] = "sdlm";
        m["version"] = SDLM_VERSION;
        m["verb"] = verb;
        m["argv"] = argv;
        m["seed"] = seed;
        m["threads"] = threads;
        m["config"] = config;
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        m["warnings"] = warnings;
        m["exit_code"] = exit_code;
        m["status"] = exit_code == 0 ? "ok" : "error";
        if (!error.empty()) m["error"] = error;
        io::write_json_file(output / "manifest.json", m);
    }
};

// ---------------------------------------------------------------------------
// Inputs

struct Inputs {
    PanelData panel;
    std::optional<ZoneGeometry> geometry;
};

/// Reorders `g` to the zone order of the panel; the id sets must agree.
inline ZoneGeometry align_geometry(const ZoneGeometry& g, const std::vector<std::string>& panel_ids) {
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < g.size(); ++j) index[g.zone_ids()[j]] = j;
    std::vector<std::string> v;
    if (g.size() != panel_ids.size())
        v.push_back("dimension mismatch: geometry has " + std::to_string(g.size()) + " zones, panel has " +
                    std::to_string(panel_ids.size()));
    std::vector<std::size_t> perm;
    for (const auto& id : panel_ids) {
        const auto it = index.find(id);
        if (it == index.end()) v.push_back("panel zone '" + id + "' is missing from the geometry");
        else perm.push_back(it->second);
    }
    if (!v.empty()) throw ValidationError(std::move(v));
    return g.permuted(perm);
}

inline Inputs load_inputs(const RunConfig& c, RunContext& ctx, bool need_geometry) {
    Inputs in;
    io::PanelLoad load = io::read_panel_file(c.panel);
    ctx.record_input("panel", c.panel);
    for (const auto& w : load.warnings) ctx.warn(w);
    in.panel = std::move(load.panel);
    if (auto v = in.panel.violations(); !v.empty()) throw ValidationError(std::move(v));
    if (need_geometry && !c.geometry) throw ValidationError("config key 'data.geometry' is required for the joint model");
    if (c.geometry) {
        ctx.record_input("geometry", *c.geometry);
        in.geometry = align_geometry(io::read_geometry_file(*c.geometry), in.panel.zone_ids);
    }
    return in;
}

inline std::string file_stem(const std::string& zone) {
    std::string s = zone;
    for (char& ch : s)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
    return s;
}

// ---------------------------------------------------------------------------
// Writers shared by commands

/// Posterior rows of the natural-scale chain plus seasonal amplitude and
/// phase per zone.
inline std::vector<io::ParameterSummary> joint_summary(const JointFit& fit, std::size_t n_zones, double lower, double upper) {
    auto rows = io::summarize_columns(fit.names, fit.natural, lower, upper);
    const auto nz = static_cast<Eigen::Index>(n_zones);
    Matrix ap(fit.natural.rows(), 2 * nz);
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < nz; ++j) names.push_back("amplitude_" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < nz; ++j) names.push_back("phase_" + std::to_string(j + 1));
    for (Eigen::Index r = 0; r < fit.natural.rows(); ++r)
        for (Eigen::Index j = 0; j < nz; ++j) {
            const AmplitudePhase a = amplitude_phase(fit.natural(r, 2 * nz + j), fit.natural(r, 3 * nz + j));
            ap(r, j) = a.amplitude;
            ap(r, nz + j) = a.phase;
        }
    for (auto& row : io::summarize_columns(names, ap, lower, upper)) rows.push_back(std::move(row));
    return rows;
}

inline void write_chain(RunContext& ctx, const std::string& stem, const std::vector<std::string>& names,
                        const Matrix& natural, const ChainOutput& chain) {
    {
        auto out = io::open_output(ctx.file(stem + ".csv"));
        io::write_labelled_csv(out, names, natural);
    }
    json side = io::chain_sidecar(chain, names);
    side["run_config"] = ctx.config;
    io::write_json_file(ctx.file(stem + ".json"), side);
}

inline void write_summary(RunContext& ctx, const std::vector<io::ParameterSummary>& rows, const std::string& title) {
    {
        auto out = io::open_output(ctx.file("summary.csv"));
        io::write_summary_csv(out, rows);
    }
    auto out = io::open_output(ctx.file("summary.txt"));
    io::write_summary_table(out, rows, title);
}

inline void write_interval_files(RunContext& ctx, const std::string& stem, const std::vector<double>& times,
                                 const std::vector<std::string>& zones, const IntervalSummary& s,
                                 const std::vector<Matrix>* draws) {
    {
        auto out = io::open_output(ctx.file(stem + ".csv"));
        io::write_interval_csv(out, times, zones, s);
    }
    if (draws) {
        auto out = io::open_output(ctx.file(stem + "_draws.csv"));
        io::write_draws_csv(out, times, zones, *draws);
    }
}

inline FitConfig zone_fit_config(const RunConfig& c, std::size_t zone) {
    FitConfig f = c.fit;
    f.mcmc.seed = derive_seed(c.seed, 100 + zone);
    return f;
}

inline std::string title_for(const RunConfig& c, Eigen::Index kept) {
    return std::string(c.model == ModelKind::joint ? "Joint" : "Single-zone") + " model posterior summary (" +
           std::to_string(kept) + " draws; mean and " + std::to_string(static_cast<int>(std::lround(100 * (c.upper - c.lower)))) +
           "% interval)";
}

// ---------------------------------------------------------------------------
// Commands

/// Fits the configured model. Writes the natural-scale chain with its JSON
/// sidecar, the latent-path archive, a posterior summary and the
/// within-sample predictive summary.
inline int cmd_fit(const RunConfig& c, RunContext& ctx) {
    const Inputs in = load_inputs(c, ctx, c.model == ModelKind::joint);
    if (c.model == ModelKind::joint) {
        const JointFit fit = two_stage_fit(in.panel, *in.geometry, c.priors, c.options, c.fit);
        write_chain(ctx, "chain", fit.names, fit.natural, fit.chain);
        {
            auto out = io::open_output(ctx.file("paths.csv"));
            io::write_paths_csv(out, fit.paths, in.panel.grid, in.panel.zone_ids);
        }
        write_summary(ctx, joint_summary(fit, in.panel.n_zones(), c.lower, c.upper), title_for(c, fit.natural.rows()));
        const PredictiveDraws pred = within_sample_predictive(fit.ffbs_params, fit.paths, in.panel, c.options.harmonic,
                                                              derive_seed(c.seed, 2), c.fit.threads);
        write_interval_files(ctx, "predictive", pred.times, pred.zone_ids, pred.summary(c.lower, c.upper),
                             c.write_draws ? &pred.draws : nullptr);
        *ctx.log << "sdlm: joint fit, acceptance " << fit.chain.acceptance_rate << ", " << fit.natural.rows()
                 << " kept draws\n";
        return kOk;
    }

    std::vector<io::ParameterSummary> rows;
    std::vector<Matrix> pred_draws;
    std::vector<double> times = in.panel.grid.times();
    const auto n = static_cast<Eigen::Index>(in.panel.n_times());
    const auto nz = static_cast<Eigen::Index>(in.panel.n_zones());
    Eigen::Index kept = 0;
    for (std::size_t j = 0; j < in.panel.n_zones(); ++j) {
        const PanelData zone = in.panel.column(j);
        const std::string& id = in.panel.zone_ids[j];
        const SingleZoneFit fit = single_zone_fit(zone, c.priors, c.options.harmonic, zone_fit_config(c, j));
        kept = fit.natural.rows();
        const auto names = SingleZoneLayout::names();
        write_chain(ctx, "chain_" + file_stem(id), names, fit.natural, fit.chain);
        {
            auto out = io::open_output(ctx.file("paths_" + file_stem(id) + ".csv"));
            io::write_paths_csv(out, fit.paths, zone.grid, {"theta1", "theta2", "theta3"}, "state");
        }
        std::vector<std::string> labelled;
        for (const auto& nm : names) labelled.push_back(id + "." + nm);
        for (auto& r : io::summarize_columns(labelled, fit.natural, c.lower, c.upper)) rows.push_back(std::move(r));
        const PredictiveDraws p = within_sample_predictive_single(fit.ffbs_params, fit.paths, zone, c.options.harmonic,
                                                                  derive_seed(c.seed, 200 + j), c.fit.threads);
        if (pred_draws.empty()) pred_draws.assign(p.draws.size(), Matrix(n, nz));
        for (std::size_t r = 0; r < p.draws.size(); ++r) pred_draws[r].col(static_cast<Eigen::Index>(j)) = p.draws[r].col(0);
        *ctx.log << "sdlm: zone " << id << ", acceptance " << fit.chain.acceptance_rate << '\n';
    }
    write_summary(ctx, rows, title_for(c, kept));
    write_interval_files(ctx, "predictive", times, in.panel.zone_ids, summarize(pred_draws, c.lower, c.upper),
                         c.write_draws ? &pred_draws : nullptr);
    return kOk;
}

/// Forecast times: the held-out times first, then further steps at the
/// panel's median spacing.
inline TimeGrid forecast_grid(const PanelData& panel, const PanelData& train, std::size_t horizon, std::size_t holdout) {
    const std::size_t from_holdout = std::min(horizon, holdout);
    std::vector<double> t(panel.grid.times().end() - static_cast<long>(holdout),
                          panel.grid.times().end() - static_cast<long>(holdout - from_holdout));
    if (horizon > holdout) {
        const TimeGrid more = panel.grid.extension(horizon - holdout);
        t.insert(t.end(), more.times().begin(), more.times().end());
    }
    return TimeGrid::from_times(std::move(t), train.grid.times().back());
}

/// Withholds the last `holdout` points, fits (or reuses a chain) on the rest,
/// forecasts `horizon` steps and reports coverage of the held-out points.
inline int cmd_forecast(const RunConfig& c, RunContext& ctx) {
    if (c.forecast.horizon == 0) throw ValidationError("forecast horizon must be at least 1");
    if (c.forecast.draws == 0) throw ValidationError("forecast draws must be at least 1");
    const Inputs in = load_inputs(c, ctx, c.model == ModelKind::joint);
    const std::size_t n = in.panel.n_times();
    if (c.forecast.holdout >= n)
        throw ValidationError("holdout (" + std::to_string(c.forecast.holdout) + ") must be smaller than the panel length (" +
                              std::to_string(n) + ")");
    const PanelData train = in.panel.head(n - c.forecast.holdout);
    const TimeGrid ext = forecast_grid(in.panel, train, c.forecast.horizon, c.forecast.holdout);
    const std::uint64_t fseed = derive_seed(c.seed, 3);

    ForecastResult fc;
    if (c.model == ModelKind::joint) {
        JointFit fit;
        if (c.forecast.chain) {
            ctx.record_input("chain", *c.forecast.chain);
            const io::LabelledMatrix chain = io::read_labelled_file(*c.forecast.chain);
            const JointPosterior post(train, *in.geometry, c.priors, c.options);
            if (chain.names != post.layout().names())
                throw ValidationError("chain columns do not match the joint parameter layout for this panel");
            if (chain.values.rows() == 0) throw ValidationError("chain file has no draws");
            fit.names = chain.names;
            fit.natural = chain.values;
            sample_joint_paths(fit, post, c.fit.ffbs_draws, derive_seed(c.seed, 77), c.fit.threads);
        } else {
            fit = two_stage_fit(train, *in.geometry, c.priors, c.options, c.fit);
            write_chain(ctx, "chain", fit.names, fit.natural, fit.chain);
        }
        fc = k_step_forecast(fit.final_mean, fit.final_cov, fit.ffbs_params, *in.geometry, ext, c.options, c.forecast.draws,
                             fseed, c.fit.threads, c.lower, c.upper);
    } else {
        if (c.forecast.chain) throw ValidationError("forecast.chain is only supported for the joint model");
        const auto H = static_cast<Eigen::Index>(ext.size());
        const auto nz = static_cast<Eigen::Index>(in.panel.n_zones());
        fc.horizons = ext.times();
        fc.zone_ids = in.panel.zone_ids;
        fc.draws.assign(c.forecast.draws, Matrix(H, nz));
        fc.state_draws.assign(c.forecast.draws, Matrix(H, nz));
        for (std::size_t j = 0; j < in.panel.n_zones(); ++j) {
            const SingleZoneFit fit =
                single_zone_fit(train.column(j), c.priors, c.options.harmonic, zone_fit_config(c, j));
            const ForecastResult z =
                k_step_forecast_single(fit.final_mean, fit.final_cov, fit.ffbs_params, in.panel.zone_ids[j], ext,
                                       c.options.harmonic, c.forecast.draws, derive_seed(fseed, j), c.fit.threads);
            for (std::size_t r = 0; r < c.forecast.draws; ++r) {
                fc.draws[r].col(static_cast<Eigen::Index>(j)) = z.draws[r].col(0);
                fc.state_draws[r].col(static_cast<Eigen::Index>(j)) = z.state_draws[r].col(0);
            }
        }
        fc.summary = summarize(fc.draws, c.lower, c.upper);
    }
    write_interval_files(ctx, "forecast", fc.horizons, fc.zone_ids, fc.summary, c.write_draws ? &fc.draws : nullptr);

    if (c.forecast.holdout > 0) {
        const std::size_t k = std::min(c.forecast.horizon, c.forecast.holdout);
        const PanelData held = in.panel.tail(c.forecast.holdout).head(k);
        const auto ki = static_cast<Eigen::Index>(k);
        auto out = io::open_output(ctx.file("holdout_coverage.csv"));
        out << "zone,observed,covered,coverage\n";
        long all_obs = 0, all_cov = 0;
        for (Eigen::Index j = 0; j < held.values.cols(); ++j) {
            long obs = 0, cov = 0;
            for (Eigen::Index i = 0; i < ki; ++i) {
                if (!held.observed(i, j)) continue;
                ++obs;
                const double x = held.values(i, j);
                cov += x >= fc.summary.lo(i, j) && x <= fc.summary.hi(i, j);
            }
            all_obs += obs;
            all_cov += cov;
            out << held.zone_ids[static_cast<std::size_t>(j)] << ',' << obs << ',' << cov << ','
                << (obs ? io::format_number(static_cast<double>(cov) / static_cast<double>(obs)) : "") << '\n';
        }
        out << "all," << all_obs << ',' << all_cov << ','
            << (all_obs ? io::format_number(static_cast<double>(all_cov) / static_cast<double>(all_obs)) : "") << '\n';
        *ctx.log << "sdlm: holdout coverage " << all_cov << '/' << all_obs << '\n';
    }
    return kOk;
}

/// Fits the joint model and one single-zone model per zone on the same
/// panel and writes per-zone mean within-sample RMSE.
inline int cmd_compare(const RunConfig& c, RunContext& ctx) {
    const Inputs in = load_inputs(c, ctx, true);
    const JointFit jf = two_stage_fit(in.panel, *in.geometry, c.priors, c.options, c.fit);
    const PredictiveDraws joint = within_sample_predictive(jf.ffbs_params, jf.paths, in.panel, c.options.harmonic,
                                                           derive_seed(c.seed, 2), c.fit.threads);
    std::vector<PredictiveDraws> single;
    for (std::size_t j = 0; j < in.panel.n_zones(); ++j) {
        const PanelData zone = in.panel.column(j);
        const SingleZoneFit sf = single_zone_fit(zone, c.priors, c.options.harmonic, zone_fit_config(c, j));
        single.push_back(within_sample_predictive_single(sf.ffbs_params, sf.paths, zone, c.options.harmonic,
                                                         derive_seed(c.seed, 200 + j), c.fit.threads));
    }
    const RmseComparison cmp = compare_rmse(in.panel, single, joint);
    {
        auto out = io::open_output(ctx.file("compare.csv"));
        io::write_compare_csv(out, cmp.zone_ids, cmp.single, cmp.joint);
    }
    auto out = io::open_output(ctx.file("compare.txt"));
    out << "Mean within-sample RMSE per zone\n" << std::left << std::setw(16) << "zone" << std::right << std::setw(12)
        << "single" << std::setw(12) << "joint" << '\n'
        << std::fixed << std::setprecision(4);
    for (std::size_t j = 0; j < cmp.zone_ids.size(); ++j)
        out << std::left << std::setw(16) << cmp.zone_ids[j] << std::right << std::setw(12)
            << cmp.single(static_cast<Eigen::Index>(j)) << std::setw(12) << cmp.joint(static_cast<Eigen::Index>(j)) << '\n';
    const double ratio = cmp.single.mean() / cmp.joint.mean();
    out << "overall ratio single/joint: " << ratio << '\n';
    *ctx.log << "sdlm: overall RMSE ratio single/joint " << ratio << '\n';
    return kOk;
}

/// Loads and checks the inputs of a run config without fitting.
inline int cmd_validate(const RunConfig& c, RunContext& ctx) {
    const Inputs in = load_inputs(c, ctx, c.model == ModelKind::joint);
    const std::size_t n = in.panel.n_times();
    if (c.forecast.holdout >= n)
        throw ValidationError("holdout (" + std::to_string(c.forecast.holdout) + ") must be smaller than the panel length (" +
                              std::to_string(n) + ")");
    if (c.model == ModelKind::joint) {
        const JointPosterior post(in.panel, *in.geometry, c.priors, c.options);
        const double lp = post.log_posterior(default_joint_init(in.panel, c.priors));
        if (!std::isfinite(lp)) throw NumericalError("log posterior at the default starting point is not finite");
    }
    const std::size_t cells = n * in.panel.n_zones();
    const std::size_t obs = in.panel.observed_count();
    auto out = io::open_output(ctx.file("validate.txt"));
    out << "times " << n << "\nzones " << in.panel.n_zones() << "\nobserved " << obs << "\nmissing " << cells - obs
        << "\nfirst_time " << io::format_number(in.panel.grid.times().front()) << "\nlast_time "
        << io::format_number(in.panel.grid.times().back()) << "\nwarnings " << ctx.warnings.size() << '\n';
    *ctx.log << "sdlm: " << n << " times, " << in.panel.n_zones() << " zones, " << cells - obs << " missing entries: valid\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// Simulation recipes

struct SimulateSpec {
    ModelKind model = ModelKind::joint;
    SimulationRecipe joint;
    SingleZoneRecipe single;
    fs::path output = "sdlm_sim";
};

inline TimeGrid grid_from_json(const json& j) {
    if (j.contains("times")) {
        const Vector t = io::vector_from_json(j["times"], "times");
        std::vector<double> times(t.data(), t.data() + t.size());
        if (j.contains("origin")) return TimeGrid::from_times(std::move(times), detail::get_number(j, "origin", 0.0, ""));
        return TimeGrid::from_times(std::move(times));
    }
    const long n = detail::get_count(j, "n", 0, "");
    if (n <= 0) throw ValidationError("recipe needs 'n' (number of times) or an explicit 'times' array");
    return TimeGrid::regular(static_cast<std::size_t>(n), detail::get_number(j, "start", 1.0, ""),
                             detail::get_number(j, "step", 1.0, ""));
}

inline ZoneGeometry geometry_from_json(const json& g, const fs::path& base_dir) {
    detail::expect_keys(g, {"line", "coordinates", "file"}, "geometry");
    if (g.size() != 1) throw ValidationError("geometry needs exactly one of 'line', 'coordinates' or 'file'");
    if (g.contains("line")) {
        detail::expect_keys(g["line"], {"zones", "spacing_km"}, "geometry.line");
        const long nz = detail::get_count(g["line"], "zones", 0, "geometry.line.");
        if (nz <= 0) throw ValidationError("geometry.line.zones must be positive");
        return ZoneGeometry::line(static_cast<std::size_t>(nz), detail::get_number(g["line"], "spacing_km", 1.0, "geometry.line."));
    }
    if (g.contains("coordinates")) {
        std::vector<std::string> ids;
        std::vector<Coordinate> coords;
        for (const json& z : g["coordinates"]) {
            detail::expect_keys(z, {"id", "lon", "lat"}, "geometry.coordinates[]");
            ids.push_back(detail::get_string(z, "id", "", ""));
            coords.push_back({detail::get_number(z, "lon", 0.0, ""), detail::get_number(z, "lat", 0.0, "")});
        }
        return ZoneGeometry::from_coordinates(std::move(ids), std::move(coords));
    }
    return io::read_geometry_file(detail::resolve(g["file"].get<std::string>(), base_dir));
}

inline SimulateSpec parse_simulate_recipe(const json& j, const fs::path& base_dir, const Overrides& over = {}) {
    detail::expect_keys(j, {"model", "n", "start", "step", "times", "origin", "missing_probability", "seed", "harmonic",
                            "kernel", "geometry", "params", "zone_id", "output"},
                        "");
    SimulateSpec s;
    const std::string model = detail::get_string(j, "model", "joint", "");
    if (model == "single") s.model = ModelKind::single;
    else if (model != "joint") throw ValidationError("model must be 'joint' or 'single', got '" + model + "'");
    std::uint64_t seed = 1;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("config key 'seed' must be a non-negative integer");
        seed = j["seed"].get<std::uint64_t>();
    }
    if (over.seed) seed = *over.seed;
    const TimeGrid grid = grid_from_json(j);
    const double missing = detail::get_number(j, "missing_probability", 0.0, "");
    HarmonicConfig harmonic;
    if (j.contains("harmonic")) {
        detail::expect_keys(j["harmonic"], {"period"}, "harmonic");
        harmonic.period = detail::get_number(j["harmonic"], "period", 12.0, "harmonic.");
    }
    if (!j.contains("params")) throw ValidationError("recipe needs 'params'");
    if (s.model == ModelKind::joint) {
        if (!j.contains("geometry")) throw ValidationError("joint recipe needs 'geometry'");
        s.joint.geometry = geometry_from_json(j["geometry"], base_dir);
        s.joint.params = io::joint_params_from_json(j["params"]);
        if (s.joint.params.n_zones() != s.joint.geometry.size())
            throw ValidationError("params have " + std::to_string(s.joint.params.n_zones()) + " zones, geometry has " +
                                  std::to_string(s.joint.geometry.size()));
        s.joint.grid = grid;
        s.joint.missing_probability = missing;
        s.joint.seed = seed;
        s.joint.options.harmonic = harmonic;
        s.joint.options.kernel = detail::parse_kernel(detail::get_string(j, "kernel", "exponential", ""));
    } else {
        s.single.params = io::single_params_from_json(j["params"]);
        s.single.grid = grid;
        s.single.missing_probability = missing;
        s.single.seed = seed;
        s.single.harmonic = harmonic;
        s.single.zone_id = detail::get_string(j, "zone_id", "zone_1", "");
    }
    if (j.contains("output")) s.output = detail::resolve(detail::get_string(j, "output", "", ""), base_dir);
    if (over.output) s.output = *over.output;
    return s;
}

/// Writes panel.csv, truth.csv and params.json (plus geometry.csv for the
/// joint model).
inline int cmd_simulate(const SimulateSpec& s, RunContext& ctx) {
    const bool joint = s.model == ModelKind::joint;
    const SimulationResult r = joint ? simulate_joint(s.joint) : simulate_single(s.single);
    io::write_panel_file(ctx.file("panel.csv"), r.panel);
    if (joint) io::write_geometry_file(ctx.file("geometry.csv"), s.joint.geometry);
    {
        auto out = io::open_output(ctx.file("truth.csv"));
        if (joint) io::write_paths_csv(out, {r.truth}, r.panel.grid, r.panel.zone_ids);
        else io::write_paths_csv(out, {r.truth}, r.panel.grid, {"theta1", "theta2", "theta3"}, "state");
    }
    io::write_json_file(ctx.file("params.json"), joint ? io::to_json(s.joint.params) : io::to_json(s.single.params));
    const std::size_t cells = r.panel.n_times() * r.panel.n_zones();
    *ctx.log << "sdlm: simulated " << r.panel.n_times() << " times x " << r.panel.n_zones() << " zones, "
             << cells - r.panel.observed_count() << " missing\n";
    return kOk;
}

} // namespace sdlm::cli

#endif
