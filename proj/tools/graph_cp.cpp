// Command-line front end: simulate, fit, predict, conformal, evaluate, report, pipeline.

#include "graphcp/error.hpp"
#include "graphcp/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace graphcp;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct Options {
    std::string config;
    std::string out;
    std::vector<std::string> methods;
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
};

void add_shared(CLI::App* cmd, Options& o, bool needs_config) {
    auto* c = cmd->add_option("--config", o.config, "JSON config file");
    if (needs_config) c->required();
    cmd->add_option("--out", o.out, "run directory")->required();
    cmd->add_option("--seed", o.seed, "override the run seed");
}

std::string read_text(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

PipelineConfig pipeline_config(const Options& o) {
    PipelineConfig c;
    if (!o.config.empty()) c = load_pipeline_config(o.config);
    if (o.seed) reseed(c, *o.seed);
    if (o.alpha) c.conformal.alpha = *o.alpha;
    if (!o.methods.empty()) {
        c.methods.clear();
        for (const auto& m : o.methods) c.methods.push_back(method_from_string(m));
    }
    return c;
}

/// Methods whose interval files exist in the run directory, in tie-break order.
std::vector<Method> methods_on_disk(const fs::path& dir) {
    std::vector<Method> found;
    for (auto m : {Method::Poisson, Method::Vanilla, Method::Temporal, Method::Graph})
        if (fs::exists(dir / run_files::intervals(m))) found.push_back(m);
    if (found.empty()) throw Error(ErrorKind::IoError, "no interval files in " + dir.string());
    return found;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::UnknownMethod: return kExitUsage;
    case ErrorKind::IoError: return kExitIo;
    default: return kExitValidation;
    }
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("graph_cp");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("GRAPH_CP_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    const StageLog log = [](std::string_view msg) { spdlog::info("{}", msg); };

    CLI::App app{"Graph conformal prediction for outage counts"};
    app.require_subcommand(1, 1);
    Options o;

    auto* simulate_cmd = app.add_subcommand("simulate", "simulate a scenario into a run directory");
    add_shared(simulate_cmd, o, true);
    auto* fit_cmd = app.add_subcommand("fit", "fit the intensity model on the train range");
    add_shared(fit_cmd, o, false);
    auto* predict_cmd = app.add_subcommand("predict", "write one-step-ahead intensities");
    add_shared(predict_cmd, o, false);
    auto* conformal_cmd = app.add_subcommand("conformal", "build prediction intervals over the test range");
    add_shared(conformal_cmd, o, false);
    conformal_cmd->add_option("--method", o.methods, "poisson, vanilla, temporal or graph (repeatable)");
    conformal_cmd->add_option("--alpha", o.alpha, "miscoverage level")->check(CLI::Range(0.0, 1.0));
    auto* evaluate_cmd = app.add_subcommand("evaluate", "coverage, width and winner tables");
    add_shared(evaluate_cmd, o, false);
    evaluate_cmd->add_option("--method", o.methods, "restrict to these methods (repeatable)");
    evaluate_cmd->add_option("--alpha", o.alpha, "target miscoverage for the winner table")->check(CLI::Range(0.0, 1.0));
    auto* report_cmd = app.add_subcommand("report", "print the evaluation tables");
    report_cmd->add_option("--out", o.out, "run directory")->required();
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage from one config");
    add_shared(pipeline_cmd, o, true);
    pipeline_cmd->add_option("--method", o.methods, "override the configured methods (repeatable)");
    pipeline_cmd->add_option("--alpha", o.alpha, "miscoverage level")->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    const fs::path dir = o.out;
    try {
        if (simulate_cmd->parsed()) {
            const auto text = read_text(o.config);
            ScenarioConfig scenario;
            if (nlohmann::json::parse(text, nullptr, false).contains("scenario")) {
                auto c = pipeline_config(o);
                scenario = *c.scenario;
            } else {
                scenario = scenario_from_json(text);
                if (o.seed) scenario.seed = scenario.truth.seed = *o.seed;
            }
            stage_simulate(scenario, dir, log);
        } else if (fit_cmd->parsed()) {
            stage_fit(pipeline_config(o), dir, log);
        } else if (predict_cmd->parsed()) {
            stage_predict(pipeline_config(o), dir, log);
        } else if (conformal_cmd->parsed()) {
            const auto c = pipeline_config(o);
            for (auto m : c.methods) stage_conformal(c, m, dir, log);
        } else if (evaluate_cmd->parsed()) {
            const auto c = pipeline_config(o);
            const auto methods = o.methods.empty() ? methods_on_disk(dir) : c.methods;
            (void)stage_evaluate(c, methods, dir, log);
        } else if (report_cmd->parsed()) {
            std::cout << stage_report(dir);
        } else if (pipeline_cmd->parsed()) {
            run_pipeline(pipeline_config(o), dir, log);
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
