#include "graphcp/pipeline.hpp"

#include "csv.hpp"
#include "graphcp/error.hpp"
#include "graphcp/random.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace graphcp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void note(const StageLog& log, const std::string& msg) {
    if (log) log(msg);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.contains(key)) throw Error(ErrorKind::ConfigError, where + ": unknown key '" + key + "'");
}

std::string read_text(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::optional<std::size_t> optional_size(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::size_t>();
}

struct RunData {
    PanelDataset panel;
    ServiceGraph graph;
    DataSplit split;
};

RunData load_run(const PipelineConfig& config, const fs::path& dir) {
    auto panel = load_panel(dir / run_files::weather, dir / run_files::counts);
    auto graph = load_graph(dir / run_files::graph, panel.units());
    auto s = split(panel, config.train_fraction, config.calibration_fraction, config.test_fraction);
    return {std::move(panel), std::move(graph), s};
}

std::ofstream open_out(const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + file.string());
    return out;
}

} // namespace

std::string run_files::intervals(Method method) { return "intervals_" + std::string(to_string(method)) + ".csv"; }

PipelineConfig pipeline_config_from_json(const std::string& text, const fs::path& base_dir) {
    try {
        const auto j = json::parse(text);
        check_keys(j, {"seed", "scenario", "split", "model", "fit", "conformal", "methods", "evaluate"}, "pipeline");
        PipelineConfig c;
        if (j.contains("scenario")) {
            const auto& s = j.at("scenario");
            c.scenario = s.is_string() ? load_scenario(base_dir / s.get<std::string>()) : scenario_from_json(s.dump());
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            check_keys(s, {"train", "calibration", "test"}, "split");
            c.train_fraction = s.value("train", c.train_fraction);
            c.calibration_fraction = s.value("calibration", c.calibration_fraction);
            c.test_fraction = s.value("test", c.test_fraction);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            check_keys(m, {"hidden", "window_d"}, "model");
            c.hidden = m.value("hidden", c.hidden);
            c.window_d = optional_size(m, "window_d");
        }
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            check_keys(f, {"learning_rate", "momentum", "epochs", "block_length", "tolerance"}, "fit");
            c.fit.learning_rate = f.value("learning_rate", c.fit.learning_rate);
            c.fit.momentum = f.value("momentum", c.fit.momentum);
            c.fit.epochs = f.value("epochs", c.fit.epochs);
            c.fit.block_length = f.value("block_length", c.fit.block_length);
            c.fit.tolerance = f.value("tolerance", c.fit.tolerance);
        }
        if (j.contains("conformal")) {
            const auto& k = j.at("conformal");
            check_keys(k, {"alpha", "window", "calibration_window", "retrain_stride", "forest", "parallel"},
                       "conformal");
            c.conformal.alpha = k.value("alpha", c.conformal.alpha);
            c.conformal.window = k.value("window", c.conformal.window);
            c.conformal.calibration_window = optional_size(k, "calibration_window");
            c.conformal.retrain_stride = k.value("retrain_stride", c.conformal.retrain_stride);
            c.conformal.parallel = k.value("parallel", c.conformal.parallel);
            if (k.contains("forest")) {
                const auto& f = k.at("forest");
                check_keys(f, {"n_trees", "max_depth", "min_leaf", "mtry", "bootstrap"}, "forest");
                c.conformal.forest.n_trees = f.value("n_trees", c.conformal.forest.n_trees);
                c.conformal.forest.max_depth = optional_size(f, "max_depth");
                c.conformal.forest.min_leaf = f.value("min_leaf", c.conformal.forest.min_leaf);
                c.conformal.forest.mtry = optional_size(f, "mtry");
                c.conformal.forest.bootstrap = f.value("bootstrap", c.conformal.forest.bootstrap);
            }
        }
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) {
                try {
                    c.methods.push_back(method_from_string(m.get<std::string>()));
                } catch (const Error& e) {
                    throw Error(ErrorKind::ConfigError, e.what());
                }
            }
            if (c.methods.empty()) throw Error(ErrorKind::ConfigError, "methods: empty list");
        }
        if (j.contains("evaluate")) {
            const auto& e = j.at("evaluate");
            check_keys(e, {"outage_threshold"}, "evaluate");
            c.outage_threshold = e.value("outage_threshold", c.outage_threshold);
        }
        reseed(c, j.value("seed", std::uint64_t{0}));
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("pipeline: ") + e.what());
    }
}

PipelineConfig load_pipeline_config(const fs::path& file) {
    return pipeline_config_from_json(read_text(file), file.parent_path());
}

void reseed(PipelineConfig& config, std::uint64_t seed) {
    config.seed = seed;
    if (config.scenario) {
        config.scenario->seed = rng::derive(seed, 0);
        config.scenario->truth.seed = config.scenario->seed;
    }
    config.fit.seed = rng::derive(seed, 2);
    config.conformal.seed = rng::derive(seed, 3);
}

void stage_simulate(const ScenarioConfig& scenario, const fs::path& dir, const StageLog& log) {
    const auto panel = simulate(scenario);
    fs::create_directories(dir);
    write_graph(dir / run_files::graph, scenario.graph);
    write_panel(dir / run_files::weather, dir / run_files::counts, panel);
    save_params(dir / run_files::truth, scenario.truth);
    note(log, "simulated " + std::to_string(panel.units()) + " units x " + std::to_string(panel.times()) +
                  " steps into " + dir.string());
}

void stage_fit(const PipelineConfig& config, const fs::path& dir, const StageLog& log) {
    const auto run = load_run(config, dir);
    const auto d = config.window_d.value_or(config.scenario ? config.scenario->truth.window_d : std::size_t{96});
    const auto init =
        default_params(run.graph, run.panel.variables(), config.hidden, d, rng::derive(config.seed, 1));
    const auto result = fit(run.panel, run.graph, init, config.fit, run.split.train);
    save_params(dir / run_files::params, result.params);
    note(log, "fit: log-likelihood " + csv::format(result.checkpoints.front()) + " -> " +
                  csv::format(result.checkpoints.back()) + ", " + std::to_string(result.rejected_epochs) +
                  " rejected epochs");
}

void stage_predict(const PipelineConfig& config, const fs::path& dir, const StageLog& log) {
    const auto run = load_run(config, dir);
    const auto params = load_params(dir / run_files::params);
    const auto field = intensity_field(run.panel, run.graph, params);
    auto out = open_out(dir / run_files::forecast);
    out << "unit,time,lambda\n";
    for (std::size_t i = 0; i < field.units; ++i)
        for (std::size_t t = 0; t < field.times; ++t) out << i << ',' << t << ',' << csv::format(field.at(i, t)) << '\n';
    note(log, "predict: wrote " + (dir / run_files::forecast).string());
}

void stage_conformal(const PipelineConfig& config, Method method, const fs::path& dir, const StageLog& log) {
    const auto run = load_run(config, dir);
    const auto params = load_params(dir / run_files::params);
    auto cfg = config.conformal;
    cfg.method = method;
    const auto series = run_conformal(run.panel, run.graph, params, run.split, cfg);
    write_intervals(dir / run_files::intervals(method), series);
    note(log, "conformal " + std::string(to_string(method)) + ": " + std::to_string(series.records.size()) +
                  " intervals");
}

std::vector<MethodReport> stage_evaluate(const PipelineConfig& config, std::span<const Method> methods,
                                         const fs::path& dir, const StageLog& log) {
    if (methods.empty()) throw Error(ErrorKind::ConfigError, "evaluate: no methods");
    const auto run = load_run(config, dir);
    std::vector<MethodReport> reports;
    for (auto m : methods) {
        const auto series = read_intervals(dir / run_files::intervals(m));
        reports.push_back(coverage_metrics(series, run.panel, run.split.test));
        if (reports.back().method != to_string(m))
            throw Error(ErrorKind::AlignmentError, run_files::intervals(m) + " holds another method");
    }
    write_reports(dir / run_files::metrics, reports);
    write_node_metrics(dir / run_files::node_metrics, reports);
    violin_export(dir / run_files::violin, reports);
    std::error_code ec;
    fs::remove(dir / run_files::winners, ec);
    if (reports.size() >= 2) {
        try {
            write_winner_table(dir / run_files::winners,
                               winner_table(reports, config.conformal.alpha, config.outage_threshold));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoEligibleNodes) throw;
            note(log, std::string("evaluate: no winner table, ") + e.what());
        }
    }
    for (const auto& r : reports)
        note(log, "evaluate " + r.method + ": coverage " + csv::format(r.coverage) + ", width " +
                      csv::format(r.mean_width));
    return reports;
}

std::string stage_report(const fs::path& dir) {
    std::ostringstream out;
    auto table = [&](const fs::path& file) {
        std::istringstream in(read_text(file));
        std::vector<std::vector<std::string>> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (csv::trim(line).empty()) continue;
            std::vector<std::string> row;
            for (auto f : csv::split(line)) row.emplace_back(f);
            rows.push_back(std::move(row));
        }
        std::vector<std::size_t> width;
        for (const auto& r : rows)
            for (std::size_t c = 0; c < r.size(); ++c) {
                if (width.size() <= c) width.push_back(0);
                width[c] = std::max(width[c], r[c].size());
            }
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < r.size(); ++c)
                out << std::left << std::setw(static_cast<int>(width[c]) + 2) << r[c];
            out << '\n';
        }
    };
    out << "Coverage and width\n";
    table(dir / run_files::metrics);
    if (fs::exists(dir / run_files::winners)) {
        out << "\nWinner rates\n";
        table(dir / run_files::winners);
    }
    return out.str();
}

void run_pipeline(const PipelineConfig& config, const fs::path& dir, const StageLog& log) {
    if (!config.scenario) throw Error(ErrorKind::ConfigError, "pipeline: no scenario");
    stage_simulate(*config.scenario, dir, log);
    stage_fit(config, dir, log);
    stage_predict(config, dir, log);
    for (auto m : config.methods) stage_conformal(config, m, dir, log);
    (void)stage_evaluate(config, config.methods, dir, log);
}

} // namespace graphcp
