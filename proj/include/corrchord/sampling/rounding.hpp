#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace corrchord {

/// P = floor(theta) + Bernoulli(theta - floor(theta)), clamped to [0, extent - 1].
template <typename Rng>
void bernoulli_round(std::span<const double> theta, std::span<const std::int64_t> extent, Rng& rng, std::span<std::int64_t> out) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t a = 0; a < theta.size(); ++a) {
        const double fl = std::floor(theta[a]);
        const double frac = theta[a] - fl;
        auto p = static_cast<std::int64_t>(fl);
        // Always draw so the stream position does not depend on theta.
        if (u(rng) < frac) ++p;
        out[a] = std::clamp<std::int64_t>(p, 0, extent[a] - 1);
    }
}

} // namespace corrchord
