#include "graphcp/synthetic.hpp"

#include "graphcp/error.hpp"
#include "model_internal.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

namespace graphcp {

namespace {

constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

std::vector<std::size_t> hop_distances(const ServiceGraph& graph, NodeIndex origin) {
    std::vector<std::vector<NodeIndex>> undirected(graph.num_nodes());
    for (const auto& e : graph.edges()) {
        undirected[e.target].push_back(e.source);
        undirected[e.source].push_back(e.target);
    }
    std::vector<std::size_t> dist(graph.num_nodes(), kUnreachable);
    std::deque<NodeIndex> queue{origin};
    dist[origin] = 0;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        for (auto w : undirected[u])
            if (dist[w] == kUnreachable) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
    }
    return dist;
}

void draw_weather(const ScenarioConfig& config, PanelDataset& panel) {
    const auto K = panel.units();
    const auto M = panel.variables();
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t m = 0; m < M; ++m) {
            rng::Engine engine(rng::derive(config.seed, 1000 + i * M + m));
            const auto& process = config.weather[m];
            double prev = process.mean;
            for (std::size_t t = 0; t < panel.times(); ++t) {
                const double x =
                    process.mean + process.ar_coefficient * (prev - process.mean) + process.noise_scale * rng::normal(engine);
                panel.weather(i, t, m) = x;
                prev = x;
            }
        }
    for (const auto& storm : config.storms) {
        std::vector<std::size_t> delay(K, 0);
        if (storm.origin) {
            const auto hops = hop_distances(config.graph, *storm.origin);
            for (std::size_t i = 0; i < K; ++i)
                delay[i] = hops[i] == kUnreachable ? kUnreachable : hops[i] * storm.sweep_delay;
        }
        for (std::size_t i = 0; i < K; ++i) {
            if (delay[i] == kUnreachable) continue;
            const auto begin = storm.start + delay[i];
            const auto end = std::min(begin + storm.duration, panel.times());
            for (std::size_t t = begin; t < end; ++t) panel.weather(i, t, storm.variable) += storm.amplitude;
        }
    }
}

} // namespace

void validate(const ScenarioConfig& config) {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::ConfigError, "scenario: " + what); };
    if (config.graph.num_nodes() == 0) fail("graph has no nodes");
    if (config.times == 0) fail("times must be positive");
    if (config.weather.empty()) fail("at least one weather variable is required");
    try {
        check_compatible(config.truth, config.graph, config.weather.size());
    } catch (const Error& e) {
        fail(e.what());
    }
    auto negative = [](const std::vector<double>& xs) {
        return std::any_of(xs.begin(), xs.end(), [](double x) { return !(x >= 0.0); });
    };
    if (negative(config.truth.alpha) || negative(config.truth.beta) || negative(config.truth.gamma) ||
        negative(config.truth.omega))
        fail("rate parameters must be nonnegative");
    for (const auto& storm : config.storms) {
        if (storm.duration == 0 || storm.start + storm.duration > config.times)
            fail("storm pulse outside [0, T)");
        if (storm.variable >= config.weather.size()) fail("storm pulse on unknown variable");
        if (storm.origin && *storm.origin >= config.graph.num_nodes()) fail("storm origin is not a node");
    }
    if (!(config.intensity_cap > 0.0)) fail("intensity_cap must be positive");
}

PanelDataset simulate(const ScenarioConfig& config) {
    validate(config);
    std::vector<std::string> names;
    for (const auto& w : config.weather) names.push_back(w.name);
    PanelDataset panel(config.graph.num_nodes(), config.times, names);
    draw_weather(config, panel);

    const auto& truth = config.truth;
    const auto K = panel.units();
    const auto weather = detail::windowed_weather(panel, truth.omega, truth.window_d, 0, config.times, false);
    std::vector<double> mu_values(K * config.times);
    std::vector<double> hidden(truth.phi.hidden);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t t = 0; t < config.times; ++t) {
            double unused = 0.0;
            mu_values[i * config.times + t] = detail::mu_forward(weather.at(i, t), truth.phi, hidden, unused);
        }

    rng::Engine engine(rng::derive(config.seed, 1));
    std::vector<double> s(K, 0.0);
    std::vector<double> decay(K);
    for (std::size_t j = 0; j < K; ++j) decay[j] = std::exp(-truth.beta[j]);
    const auto edges = config.graph.edges();
    double lambda_total = 0.0;

    for (std::size_t t = 0; t < config.times; ++t) {
        if (t > 0)
            for (std::size_t j = 0; j < K; ++j)
                s[j] = decay[j] * (s[j] + truth.beta[j] * static_cast<double>(panel.count(j, t - 1)));
        for (std::size_t i = 0; i < K; ++i) {
            double lambda = truth.gamma[i] * mu_values[i * config.times + t] + s[i];
            for (auto e : config.graph.incoming_edges(i)) lambda += truth.alpha[e] * s[edges[e].source];
            lambda_total += lambda;
            if (!(lambda < 1e12))
                throw Error(ErrorKind::ExplosiveConfig, "intensity " + std::to_string(lambda) + " at t=" +
                                                            std::to_string(t));
            panel.count(i, t) = rng::poisson(engine, lambda);
        }
        const double running_mean = lambda_total / static_cast<double>(K * (t + 1));
        if (running_mean > config.intensity_cap)
            throw Error(ErrorKind::ExplosiveConfig, "running mean intensity " + std::to_string(running_mean) +
                                                        " exceeds cap at t=" + std::to_string(t));
    }
    return panel;
}

double iid_mean(double x) noexcept { return 2.0 * std::sin(x) + 0.5 * x; }

IidSample simulate_iid(std::size_t n, NoiseSpec noise, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorKind::ConfigError, "simulate_iid needs n >= 1");
    IidSample out;
    out.x.reserve(n);
    out.y.reserve(n);
    rng::Engine engine(rng::derive(seed, 7));
    for (std::size_t k = 0; k < n; ++k) {
        const double x = -3.0 + 6.0 * rng::uniform(engine);
        double eps = 0.0;
        switch (noise.kind) {
        case NoiseKind::None: break;
        case NoiseKind::Gaussian: eps = noise.scale * rng::normal(engine); break;
        case NoiseKind::Laplace: {
            const double u = rng::uniform(engine) - 0.5;
            eps = -noise.scale * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
            break;
        }
        }
        out.x.push_back(x);
        out.y.push_back(iid_mean(x) + eps);
    }
    return out;
}

// ---- JSON ----

namespace {

std::vector<double> broadcast(const nlohmann::json& j, std::size_t n, const char* name) {
    if (j.is_number()) return std::vector<double>(n, j.get<double>());
    auto v = j.get<std::vector<double>>();
    if (v.size() != n)
        throw Error(ErrorKind::ConfigError, std::string("scenario: ") + name + " needs " + std::to_string(n) +
                                                " values, got " + std::to_string(v.size()));
    return v;
}

ServiceGraph graph_from_json(const nlohmann::json& g) {
    const auto topology = g.value("topology", std::string("star"));
    if (topology == "star") return make_star(g.at("nodes").get<std::size_t>());
    if (topology == "chain") return make_chain(g.at("nodes").get<std::size_t>());
    if (topology == "grid") return make_grid(g.at("rows").get<std::size_t>(), g.at("cols").get<std::size_t>());
    if (topology == "edges" || topology == "empty") {
        std::vector<Edge> edges;
        if (g.contains("edges"))
            for (const auto& e : g.at("edges"))
                edges.push_back({e.at(0).get<NodeIndex>(), e.at(1).get<NodeIndex>(), e.size() > 2 ? e.at(2).get<double>() : 1.0});
        return ServiceGraph(g.at("nodes").get<std::size_t>(), std::move(edges));
    }
    throw Error(ErrorKind::ConfigError, "scenario: unknown topology '" + topology + "'");
}

} // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ScenarioConfig c;
        c.seed = j.value("seed", std::uint64_t{0});
        c.times = j.at("times").get<std::size_t>();
        c.intensity_cap = j.value("intensity_cap", 1e4);
        c.graph = graph_from_json(j.at("graph"));
        for (const auto& w : j.at("weather")) {
            WeatherProcess p;
            p.name = w.value("name", "x" + std::to_string(c.weather.size()));
            p.mean = w.value("mean", 0.0);
            p.ar_coefficient = w.value("ar", 0.8);
            p.noise_scale = w.value("noise", 1.0);
            c.weather.push_back(p);
        }
        if (j.contains("storms"))
            for (const auto& s : j.at("storms")) {
                StormPulse p;
                p.start = s.at("start").get<std::size_t>();
                p.duration = s.at("duration").get<std::size_t>();
                p.amplitude = s.at("amplitude").get<double>();
                p.variable = s.value("variable", std::size_t{0});
                if (s.contains("origin")) p.origin = s.at("origin").get<NodeIndex>();
                p.sweep_delay = s.value("sweep_delay", std::size_t{0});
                c.storms.push_back(p);
            }

        const auto& truth = j.at("truth");
        const auto K = c.graph.num_nodes();
        const auto M = c.weather.size();
        auto& p = c.truth;
        for (const auto& e : c.graph.edges()) p.alpha_edges.emplace_back(e.target, e.source);
        p.alpha = broadcast(truth.value("alpha", nlohmann::json(0.0)), c.graph.num_edges(), "alpha");
        p.beta = broadcast(truth.value("beta", nlohmann::json(1.0)), K, "beta");
        p.gamma = broadcast(truth.value("gamma", nlohmann::json(1.0)), K, "gamma");
        p.omega = broadcast(truth.value("omega", nlohmann::json(0.0)), M, "omega");
        p.window_d = truth.value("window_d", std::size_t{96});
        p.seed = c.seed;
        if (truth.contains("phi")) {
            const auto& phi = truth.at("phi");
            p.phi.hidden = phi.at("hidden").get<std::size_t>();
            p.phi.inputs = M;
            p.phi.hidden_weights = phi.value("hidden_weights", std::vector<double>(p.phi.hidden * M, 0.0));
            p.phi.hidden_bias = phi.value("hidden_bias", std::vector<double>(p.phi.hidden, 0.0));
            p.phi.output_weights = phi.value("output_weights", std::vector<double>(p.phi.hidden, 0.0));
            p.phi.output_bias = phi.value("output_bias", 0.0);
        } else {
            p.phi = ResponseWeights::zeros(1, M);
        }
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("scenario: ") + e.what());
    }
}

ScenarioConfig load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

} // namespace graphcp
