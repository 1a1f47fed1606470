#include "graphcp/random.hpp"

#include <cmath>

namespace graphcp::rng {

std::int64_t poisson(Engine& e, double lambda) {
    if (!(lambda > 0.0)) return 0;
    if (lambda < 30.0) {
        const double u = uniform(e);
        double pmf = std::exp(-lambda);
        double cdf = pmf;
        std::int64_t k = 0;
        // The cap only matters if rounding leaves cdf a hair below u.
        while (u > cdf && k < 1000) {
            ++k;
            pmf *= lambda / static_cast<double>(k);
            cdf += pmf;
        }
        return k;
    }
    // Hörmann (1993), transformed rejection with squeeze.
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        const double u = uniform(e) - 0.5;
        const double v = uniform(e);
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -lambda + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::int64_t>(k);
    }
}

} // namespace graphcp::rng
