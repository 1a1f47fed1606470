#include "graphcp/model.hpp"

#include "graphcp/error.hpp"
#include "graphcp/kernels.hpp"
#include "graphcp/random.hpp"
#include "model_internal.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace graphcp {

double softplus_inverse(double y) noexcept {
    if (!(y > 0.0)) return -40.0;
    if (y > 20.0) return y + std::log(-std::expm1(-y));
    return std::log(std::expm1(y));
}

ResponseWeights ResponseWeights::zeros(std::size_t hidden, std::size_t inputs) {
    ResponseWeights phi;
    phi.hidden = hidden;
    phi.inputs = inputs;
    phi.hidden_weights.assign(hidden * inputs, 0.0);
    phi.hidden_bias.assign(hidden, 0.0);
    phi.output_weights.assign(hidden, 0.0);
    return phi;
}

double mu(std::span<const double> v, const ResponseWeights& phi) {
    if (v.size() != phi.inputs || phi.hidden_weights.size() != phi.hidden * phi.inputs ||
        phi.hidden_bias.size() != phi.hidden || phi.output_weights.size() != phi.hidden)
        throw Error(ErrorKind::DimensionMismatch, "response weights do not match input of size " +
                                                      std::to_string(v.size()));
    std::vector<double> hidden(phi.hidden);
    double unused = 0.0;
    return detail::mu_forward(v, phi, hidden, unused);
}

ModelParams default_params(const ServiceGraph& graph, std::size_t variables, std::size_t hidden,
                           std::size_t window_d, std::uint64_t seed) {
    ModelParams p;
    for (const auto& e : graph.edges()) p.alpha_edges.emplace_back(e.target, e.source);
    p.alpha.assign(graph.num_edges(), 0.1);
    p.beta.assign(graph.num_nodes(), 1.0);
    p.gamma.assign(graph.num_nodes(), 1.0);
    p.omega.assign(variables, 0.1);
    p.phi = ResponseWeights::zeros(hidden, variables);
    // Small random weights so that φ starts off the all-zero saddle.
    rng::Engine engine(rng::derive(seed, 1));
    for (auto& w : p.phi.hidden_weights) w = 0.1 * rng::normal(engine);
    for (auto& w : p.phi.output_weights) w = 0.1 * rng::normal(engine);
    p.window_d = window_d;
    p.seed = seed;
    return p;
}

void check_compatible(const ModelParams& params, const ServiceGraph& graph, std::size_t variables) {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::DimensionMismatch, what); };
    const auto K = graph.num_nodes();
    if (params.beta.size() != K || params.gamma.size() != K)
        fail("params have " + std::to_string(params.beta.size()) + " nodes, graph has " + std::to_string(K));
    if (params.alpha.size() != graph.num_edges() || params.alpha_edges.size() != graph.num_edges())
        fail("params have " + std::to_string(params.alpha.size()) + " edge weights, graph has " +
             std::to_string(graph.num_edges()) + " edges");
    const auto edges = graph.edges();
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (params.alpha_edges[e] != std::pair(edges[e].target, edges[e].source))
            fail("params edge " + std::to_string(e) + " does not match graph edge order");
    if (params.omega.size() != variables || params.phi.inputs != variables)
        fail("params expect " + std::to_string(params.omega.size()) + " weather variables, panel has " +
             std::to_string(variables));
    const auto& phi = params.phi;
    if (phi.hidden_weights.size() != phi.hidden * phi.inputs || phi.hidden_bias.size() != phi.hidden ||
        phi.output_weights.size() != phi.hidden)
        fail("response weight arrays are inconsistent with hidden size " + std::to_string(phi.hidden));
    if (params.window_d == 0) fail("window_d must be positive");
}

std::vector<double> to_unconstrained(const ModelParams& params) {
    const ParameterLayout layout(params);
    std::vector<double> u(layout.size());
    auto out = u.begin();
    out = std::transform(params.alpha.begin(), params.alpha.end(), out, softplus_inverse);
    out = std::transform(params.beta.begin(), params.beta.end(), out, softplus_inverse);
    out = std::transform(params.gamma.begin(), params.gamma.end(), out, softplus_inverse);
    out = std::transform(params.omega.begin(), params.omega.end(), out, softplus_inverse);
    out = std::copy(params.phi.hidden_weights.begin(), params.phi.hidden_weights.end(), out);
    out = std::copy(params.phi.hidden_bias.begin(), params.phi.hidden_bias.end(), out);
    out = std::copy(params.phi.output_weights.begin(), params.phi.output_weights.end(), out);
    *out = params.phi.output_bias;
    return u;
}

ModelParams from_unconstrained(std::span<const double> coords, const ModelParams& like) {
    const ParameterLayout layout(like);
    if (coords.size() != layout.size())
        throw Error(ErrorKind::DimensionMismatch, "coordinate vector has wrong length");
    ModelParams p = like;
    auto in = coords.begin();
    auto take = [&in](std::vector<double>& dst, bool constrained) {
        for (auto& x : dst) x = constrained ? softplus(*in++) : *in++;
    };
    take(p.alpha, true);
    take(p.beta, true);
    take(p.gamma, true);
    take(p.omega, true);
    take(p.phi.hidden_weights, false);
    take(p.phi.hidden_bias, false);
    take(p.phi.output_weights, false);
    p.phi.output_bias = *in;
    return p;
}

WeatherEffects cumulative_weather(const PanelDataset& panel, std::span<const double> omega, std::size_t window_d) {
    if (omega.size() != panel.variables())
        throw Error(ErrorKind::DimensionMismatch, "one decay rate per weather variable required");
    if (window_d == 0) throw Error(ErrorKind::DimensionMismatch, "window_d must be positive");
    return kernels::parallel::cumulative_weather(panel, omega, window_d);
}

std::vector<double> excitation_recursion(const PanelDataset& panel, std::span<const double> beta, std::size_t t) {
    if (beta.size() != panel.units()) throw Error(ErrorKind::DimensionMismatch, "one beta per node required");
    std::vector<double> out(panel.units());
    std::vector<double> row(t + 1);
    for (std::size_t j = 0; j < panel.units(); ++j) {
        detail::excitation_row(panel, j, beta[j], t + 1, row.data(), nullptr);
        out[j] = row[t];
    }
    return out;
}

std::vector<double> intensity(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params,
                              std::size_t t) {
    check_compatible(params, graph, panel.variables());
    const auto s = excitation_recursion(panel, params.beta, t);
    const auto weather = detail::windowed_weather(panel, params.omega, params.window_d, t, t + 1, false);
    std::vector<double> lambda(panel.units());
    const auto edges = graph.edges();
    for (std::size_t i = 0; i < panel.units(); ++i) {
        double raw = params.gamma[i] * mu(weather.at(i, t), params.phi) + s[i];
        for (auto e : graph.incoming_edges(i)) raw += params.alpha[e] * s[edges[e].source];
        lambda[i] = std::max(raw, kIntensityFloor);
    }
    return lambda;
}

IntensityField intensity_field(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params) {
    check_compatible(params, graph, panel.variables());
    const auto T = panel.times();
    const auto excitation = detail::excitation_series(panel, params.beta, T, false);
    const auto weather = detail::windowed_weather(panel, params.omega, params.window_d, 0, T, false);
    IntensityField field{panel.units(), T, std::vector<double>(panel.units() * T)};
    const auto edges = graph.edges();
    std::vector<double> hidden(params.phi.hidden);
    for (std::size_t i = 0; i < panel.units(); ++i)
        for (std::size_t t = 0; t < T; ++t) {
            double unused = 0.0;
            double raw = params.gamma[i] * detail::mu_forward(weather.at(i, t), params.phi, hidden, unused) +
                         excitation.at(i, t);
            for (auto e : graph.incoming_edges(i)) raw += params.alpha[e] * excitation.at(edges[e].source, t);
            field.lambda[i * T + t] = std::max(raw, kIntensityFloor);
        }
    return field;
}

namespace {

void check_range(const PanelDataset& panel, TimeRange range) {
    if (range.begin > range.end || range.end > panel.times())
        throw Error(ErrorKind::DimensionMismatch, "time range [" + std::to_string(range.begin) + "," +
                                                      std::to_string(range.end) + ") outside panel of length " +
                                                      std::to_string(panel.times()));
}

} // namespace

double log_likelihood(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params,
                      TimeRange range) {
    check_range(panel, range);
    return kernels::parallel::evaluate(panel, graph, params, range, false).log_likelihood;
}

std::vector<double> gradient(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params,
                             TimeRange range) {
    check_range(panel, range);
    return kernels::parallel::evaluate(panel, graph, params, range, true).gradient;
}

FitResult fit(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& init,
              const FitConfig& config, TimeRange train) {
    check_range(panel, train);
    if (train.size() == 0) throw Error(ErrorKind::DimensionMismatch, "empty training range");
    if (config.block_length == 0) throw Error(ErrorKind::ConfigError, "block_length must be positive");

    FitResult result{init, {}, 0};
    double best = log_likelihood(panel, graph, init, train);
    if (!std::isfinite(best)) throw Error(ErrorKind::NonFiniteLoss, "initial log-likelihood is not finite");
    result.checkpoints.push_back(best);

    std::vector<TimeRange> blocks;
    for (std::size_t b = train.begin; b < train.end; b += config.block_length)
        blocks.push_back({b, std::min(b + config.block_length, train.end)});

    std::vector<double> coords = to_unconstrained(init);
    std::vector<double> best_coords = coords;
    std::vector<double> velocity(coords.size(), 0.0);
    rng::Engine engine(rng::derive(config.seed, 2));
    double lr = config.learning_rate;
    const auto cells_per_step = static_cast<double>(panel.units());

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng::shuffle(blocks.begin(), blocks.end(), engine);
        for (const auto& block : blocks) {
            const auto current = from_unconstrained(coords, init);
            const auto g = kernels::parallel::evaluate(panel, graph, current, block, true).gradient;
            const double scale = lr / (cells_per_step * static_cast<double>(block.size()));
            for (std::size_t p = 0; p < coords.size(); ++p) {
                velocity[p] = config.momentum * velocity[p] + scale * g[p];
                coords[p] += velocity[p];
            }
        }
        if (!std::all_of(coords.begin(), coords.end(), [](double x) { return std::isfinite(x); }))
            throw Error(ErrorKind::NonFiniteLoss, "parameters diverged at epoch " + std::to_string(epoch));
        if (coords == best_coords) continue;
        auto candidate = from_unconstrained(coords, init);
        const double ll = log_likelihood(panel, graph, candidate, train);
        if (!std::isfinite(ll))
            throw Error(ErrorKind::NonFiniteLoss, "log-likelihood diverged at epoch " + std::to_string(epoch));

        if (ll > best) {
            best = ll;
            best_coords = coords;
            result.params = std::move(candidate);
            result.checkpoints.push_back(ll);
        } else if (ll < best) {
            coords = best_coords;
            std::fill(velocity.begin(), velocity.end(), 0.0);
            lr *= 0.5;
            ++result.rejected_epochs;
        }
    }
    result.params.seed = config.seed;
    return result;
}

// ---- JSON ----

std::string params_to_json(const ModelParams& params) {
    nlohmann::json j;
    j["window_d"] = params.window_d;
    j["seed"] = params.seed;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [target, source] : params.alpha_edges) edges.push_back({target, source});
    j["alpha"] = {{"edges", edges}, {"values", params.alpha}};
    j["beta"] = params.beta;
    j["gamma"] = params.gamma;
    j["omega"] = params.omega;
    j["phi"] = {{"hidden", params.phi.hidden},
                {"inputs", params.phi.inputs},
                {"hidden_weights", params.phi.hidden_weights},
                {"hidden_bias", params.phi.hidden_bias},
                {"output_weights", params.phi.output_weights},
                {"output_bias", params.phi.output_bias}};
    return j.dump(2);
}

ModelParams params_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ModelParams p;
        p.window_d = j.at("window_d").get<std::size_t>();
        p.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("alpha").at("edges"))
            p.alpha_edges.emplace_back(e.at(0).get<NodeIndex>(), e.at(1).get<NodeIndex>());
        p.alpha = j.at("alpha").at("values").get<std::vector<double>>();
        p.beta = j.at("beta").get<std::vector<double>>();
        p.gamma = j.at("gamma").get<std::vector<double>>();
        p.omega = j.at("omega").get<std::vector<double>>();
        const auto& phi = j.at("phi");
        p.phi.hidden = phi.at("hidden").get<std::size_t>();
        p.phi.inputs = phi.at("inputs").get<std::size_t>();
        p.phi.hidden_weights = phi.at("hidden_weights").get<std::vector<double>>();
        p.phi.hidden_bias = phi.at("hidden_bias").get<std::vector<double>>();
        p.phi.output_weights = phi.at("output_weights").get<std::vector<double>>();
        p.phi.output_bias = phi.at("output_bias").get<double>();
        if (p.alpha.size() != p.alpha_edges.size())
            throw Error(ErrorKind::ConfigError, "alpha edges and values differ in length");
        auto negative = [](const std::vector<double>& xs) {
            return std::any_of(xs.begin(), xs.end(), [](double x) { return !(x >= 0.0); });
        };
        if (negative(p.alpha) || negative(p.beta) || negative(p.gamma) || negative(p.omega))
            throw Error(ErrorKind::ConfigError, "rate parameters must be nonnegative");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("model params: ") + e.what());
    }
}

void save_params(const std::filesystem::path& file, const ModelParams& params) {
    std::ofstream out(file);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + file.string());
    out << params_to_json(params) << '\n';
}

ModelParams load_params(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return params_from_json(buf.str());
}

} // namespace graphcp
