#pragma once

#include "ada/ada.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace fixture {

inline ada::Matrix gaussian(std::size_t T, std::size_t d, ada::Rng& rng) { return ada::random_normal(T, d, rng); }

/// Rows drawn around a few random centers so that selection has real work to do.
inline ada::Matrix clustered(std::size_t T, std::size_t d, std::size_t k, double noise, ada::Rng& rng) {
    const ada::Matrix centers = ada::random_normal(k, d, rng);
    ada::Matrix x(T, d);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t c = rng.below(k);
        const double sign = rng.uniform() < 0.2 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            x(t, j) = sign * centers(c, j) + noise * rng.normal();
        }
    }
    return x;
}

/// Unit vectors in the first two coordinates at the given angles (degrees).
inline ada::Matrix planar(const std::vector<double>& degrees, std::size_t d = 2) {
    ada::Matrix x(degrees.size(), d);
    for (std::size_t t = 0; t < degrees.size(); ++t) {
        const double a = degrees[t] * 3.14159265358979323846 / 180.0;
        x(t, 0) = std::cos(a);
        x(t, 1) = std::sin(a);
    }
    return x;
}

inline ada::LayerActivation layer(ada::Matrix x, std::size_t index = 0) { return {index, std::move(x)}; }

inline ada::ActivationTrace trace_of(std::vector<ada::Matrix> xs, const std::string& name = "fixture") {
    std::vector<ada::LayerActivation> layers;
    for (std::size_t l = 0; l < xs.size(); ++l) {
        layers.emplace_back(l, std::move(xs[l]));
    }
    return {name, std::move(layers)};
}

/// Perturbs every entry by eps * N(0, 1).
inline ada::Matrix jitter(const ada::Matrix& x, double eps, ada::Rng& rng) {
    ada::Matrix out = x;
    for (double& v : out.values()) {
        v += eps * rng.normal();
    }
    return out;
}

} // namespace fixture
