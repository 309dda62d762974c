// sdlm: fit, forecast, simulate, compare and validate spatial dynamic
// linear models from the command line.

#include "sdlm/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace sdlm;
using namespace sdlm::cli;

int run(const std::string& verb, const fs::path& config_path, const Overrides& over, RunContext& ctx) {
    if (verb == "simulate") {
        const SimulateSpec spec = parse_simulate_recipe(io::read_json_file(config_path),
                                                        fs::absolute(config_path).parent_path(), over);
        ctx.output = spec.output;
        ctx.seed = spec.model == ModelKind::joint ? spec.joint.seed : spec.single.seed;
        ctx.config = io::read_json_file(config_path);
        ctx.record_input("recipe", config_path);
        return cmd_simulate(spec, ctx);
    }
    const RunConfig c = load_run_config(config_path, over);
    ctx.output = c.output;
    ctx.seed = c.seed;
    ctx.threads = c.fit.threads;
    ctx.config = to_json(c);
    ctx.record_input("config", config_path);
    if (verb == "fit") return cmd_fit(c, ctx);
    if (verb == "forecast") return cmd_forecast(c, ctx);
    if (verb == "compare") return cmd_compare(c, ctx);
    return cmd_validate(c, ctx);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian spatial dynamic linear models"};
    app.set_version_flag("--version", SDLM_VERSION);
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> output;
    const std::pair<const char*, const char*> verbs[] = {
        {"fit", "fit the configured model and write chain, paths and summaries"},
        {"forecast", "withhold the last points, fit, forecast and report holdout coverage"},
        {"simulate", "simulate a panel from a recipe"},
        {"compare", "compare within-sample RMSE of joint and single-zone fits"},
        {"validate", "check a config and its input files without fitting"},
    };
    for (const auto& [name, help] : verbs) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, name == std::string("simulate") ? "simulation recipe (JSON)" : "run config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--threads", threads, "worker threads (overrides the config)");
        sub->add_option("--output", output, "output directory (overrides the config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    RunContext ctx;
    ctx.verb = app.get_subcommands().front()->get_name();
    ctx.argv.assign(argv, argv + argc);
    Overrides over;
    over.seed = seed;
    over.threads = threads;
    if (output) over.output = fs::path(*output);
    // the manifest goes to --output even when the config itself fails
    if (over.output) ctx.output = *over.output;

    auto fail = [&](int code, const std::string& kind, const std::string& what) {
        std::cerr << "sdlm: " << kind << ": " << what << '\n';
        try {
            ctx.write_manifest(code, kind + ": " + what);
        } catch (const std::exception& e) {
            std::cerr << "sdlm: could not write manifest: " << e.what() << '\n';
        }
        return code;
    };

    try {
        const int code = run(ctx.verb, config, over, ctx);
        ctx.write_manifest(code);
        return code;
    } catch (const ParseError& e) {
        return fail(kParseError, "parse error", e.what());
    } catch (const ValidationError& e) {
        return fail(kValidationError, "validation error", e.what());
    } catch (const NumericalError& e) {
        return fail(kNumericalError, "numerical error", e.what());
    } catch (const Error& e) {
        return fail(kIoError, "i/o error", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(kIoError, "i/o error", e.what());
    } catch (const std::exception& e) {
        return fail(kInternalError, "internal error", e.what());
    }
}
