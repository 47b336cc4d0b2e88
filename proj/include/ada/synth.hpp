#pragma once

// Synthetic activation traces with controllable depth coherence, and the pairwise
// redundancy-persistence check driven by an empirical Lipschitz constant.

#include "ada/errors.hpp"
#include "ada/linalg.hpp"
#include "ada/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ada {

enum class SynthMode {
    ResidualSmooth, ///< x <- x + lambda * F(x) with a frozen 1-Lipschitz F per layer
    OptCollapse,    ///< distinct tokens, then collapse to one direction, then slow regrowth
    Constant,       ///< every layer equals layer 0
};

[[nodiscard]] inline std::string_view to_string(SynthMode m) noexcept {
    switch (m) {
    case SynthMode::ResidualSmooth: return "residual";
    case SynthMode::OptCollapse: return "opt-collapse";
    case SynthMode::Constant: return "constant";
    }
    return "?";
}

[[nodiscard]] inline SynthMode parse_synth_mode(std::string_view s) {
    if (s == "residual") return SynthMode::ResidualSmooth;
    if (s == "opt-collapse") return SynthMode::OptCollapse;
    if (s == "constant") return SynthMode::Constant;
    throw config_error("unknown synth mode '" + std::string(s) + "' (expected residual, opt-collapse or constant)");
}

struct SynthConfig {
    std::size_t T = 64;
    std::size_t d = 16;
    std::size_t L = 8;
    double lambda_block = 0.05;
    std::size_t num_clusters = 8;
    double cluster_spread = 0.4;
    bool renormalize = false;
    std::uint64_t seed = 0;
    SynthMode mode = SynthMode::ResidualSmooth;

    void validate() const {
        if (T < 1 || d < 1 || L < 1) {
            throw config_error("synth needs T, d, L >= 1");
        }
        if (num_clusters < 1 || num_clusters > T) {
            throw config_error("num_clusters must lie in [1, T]");
        }
        if (!std::isfinite(lambda_block) || lambda_block < 0.0) {
            throw config_error("lambda_block must be finite and >= 0");
        }
        if (!std::isfinite(cluster_spread) || cluster_spread < 0.0) {
            throw config_error("cluster_spread must be finite and >= 0");
        }
    }
};

namespace synth_detail {

/// Rounds to f32 so the in-memory trace equals what a trace file stores.
inline Matrix to_f32_precision(Matrix x) {
    for (double& v : x.values()) {
        v = static_cast<double>(static_cast<float>(v));
    }
    return x;
}

inline void normalize_in_place(std::span<double> v) {
    const double n = norm2(v);
    for (double& x : v) {
        x /= n;
    }
}

inline std::vector<double> random_unit(std::size_t d, Rng& rng) {
    std::vector<double> v(d);
    double n = 0.0;
    while (n < 1e-6) {
        for (double& x : v) {
            x = rng.normal();
        }
        n = norm2(v);
    }
    for (double& x : v) {
        x /= n;
    }
    return v;
}

/// Unit vector = normalize(dir + magnitude * u), u a random unit vector orthogonal to dir.
inline std::vector<double> perturb_on_sphere(std::span<const double> dir, double magnitude, Rng& rng) {
    std::vector<double> out(dir.begin(), dir.end());
    if (magnitude <= 0.0 || dir.size() < 2) {
        return out;
    }
    std::vector<double> g(dir.size());
    double n = 0.0;
    while (n < 1e-6) {
        for (double& x : g) {
            x = rng.normal();
        }
        const double along = dot(g, dir);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] -= along * dir[i];
        }
        n = norm2(g);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += magnitude * g[i] / n;
    }
    normalize_in_place(out);
    return out;
}

inline std::vector<double> token_norms(std::size_t T, Rng& rng) {
    std::vector<double> norms(T);
    for (double& n : norms) {
        n = rng.uniform(0.5, 2.0);
    }
    return norms;
}

/// Clustered layer 0: token t < k seeds cluster t, later tokens join a random cluster.
inline Matrix clustered_layer(const SynthConfig& cfg, Rng& rng) {
    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < cfg.num_clusters; ++c) {
        centers.push_back(random_unit(cfg.d, rng));
    }
    const std::vector<double> norms = token_norms(cfg.T, rng);
    Matrix x(cfg.T, cfg.d);
    for (std::size_t t = 0; t < cfg.T; ++t) {
        const std::size_t c = t < cfg.num_clusters ? t : rng.below(cfg.num_clusters);
        const auto dir = perturb_on_sphere(centers[c], cfg.cluster_spread * rng.uniform(), rng);
        for (std::size_t j = 0; j < cfg.d; ++j) {
            x(t, j) = norms[t] * dir[j];
        }
    }
    return x;
}

/// Random d×d map scaled to spectral norm <= 1.
inline Matrix unit_spectral_map(std::size_t d, Rng& rng) {
    Matrix w = random_normal(d, d, rng);
    const double sigma = spectral_norm(w, 1e-10, 1000).value;
    // Power iteration approaches sigma from below; pad slightly so the bound holds.
    const double scale = 1.0 / (sigma * (1.0 + 1e-6));
    for (double& v : w.values()) {
        v *= scale;
    }
    return w;
}

/// x <- x + lambda * tanh(W x) row-wise; optionally restore each row's incoming norm.
inline Matrix residual_block(const Matrix& x, const Matrix& w, double lambda, bool renormalize) {
    Matrix out = x;
    std::vector<double> wx(x.cols());
    for (std::size_t t = 0; t < x.rows(); ++t) {
        const auto row = x.row(t);
        for (std::size_t i = 0; i < x.cols(); ++i) {
            wx[i] = dot(w.row(i), row);
        }
        auto dst = out.row(t);
        for (std::size_t i = 0; i < x.cols(); ++i) {
            dst[i] += lambda * std::tanh(wx[i]);
        }
        if (renormalize) {
            const double before = norm2(row);
            const double after = norm2(dst);
            if (after > 0.0) {
                for (double& v : dst) {
                    v *= before / after;
                }
            }
        }
    }
    return out;
}

/// T unit directions with pairwise |cos| below `max_cos`, by rejection sampling.
inline std::vector<std::vector<double>> separated_directions(std::size_t T, std::size_t d, double max_cos, Rng& rng) {
    std::vector<std::vector<double>> dirs;
    dirs.reserve(T);
    constexpr int kAttempts = 10000;
    for (std::size_t t = 0; t < T; ++t) {
        bool placed = false;
        for (int a = 0; a < kAttempts && !placed; ++a) {
            auto v = random_unit(d, rng);
            const bool ok = std::ranges::all_of(dirs, [&](const auto& u) { return std::abs(dot(u, v)) < max_cos; });
            if (ok) {
                dirs.push_back(std::move(v));
                placed = true;
            }
        }
        if (!placed) {
            throw config_error("cannot place " + std::to_string(T) + " directions with |cos| < " +
                               std::to_string(max_cos) + " in d = " + std::to_string(d) + "; increase d");
        }
    }
    return dirs;
}

inline std::vector<LayerActivation> opt_collapse_layers(const SynthConfig& cfg, Rng& rng) {
    const std::size_t T = cfg.T;
    const std::size_t d = cfg.d;
    const auto own = separated_directions(T, d, 0.7, rng);
    const auto shared = random_unit(d, rng);
    const std::vector<double> norms = token_norms(T, rng);

    // Tokens leave the shared direction in this order, a growing prefix per layer.
    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = T; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }

    std::vector<LayerActivation> layers;
    for (std::size_t l = 0; l < cfg.L; ++l) {
        std::vector<bool> diverse(T, l == 0);
        if (l >= 2) {
            const std::size_t m = T * (l - 1) / (cfg.L - 1);
            for (std::size_t i = 0; i < m; ++i) {
                diverse[order[i]] = true;
            }
        }
        Matrix x(T, d);
        for (std::size_t t = 0; t < T; ++t) {
            const auto dir = diverse[t] ? (l == 0 ? own[t] : perturb_on_sphere(own[t], cfg.cluster_spread * rng.uniform(), rng))
                                        : perturb_on_sphere(shared, cfg.cluster_spread * rng.uniform(), rng);
            for (std::size_t j = 0; j < d; ++j) {
                x(t, j) = norms[t] * dir[j];
            }
        }
        layers.emplace_back(l, to_f32_precision(std::move(x)));
    }
    return layers;
}

} // namespace synth_detail

/// Deterministic in cfg (including seed). Values are rounded to f32 precision.
[[nodiscard]] inline ActivationTrace generate_trace(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<LayerActivation> layers;
    const std::string name = "synth-" + std::string(to_string(cfg.mode));

    switch (cfg.mode) {
    case SynthMode::OptCollapse:
        return {name, synth_detail::opt_collapse_layers(cfg, rng)};
    case SynthMode::Constant: {
        const Matrix x0 = synth_detail::to_f32_precision(synth_detail::clustered_layer(cfg, rng));
        for (std::size_t l = 0; l < cfg.L; ++l) {
            layers.emplace_back(l, x0);
        }
        return {name, std::move(layers)};
    }
    case SynthMode::ResidualSmooth: {
        Matrix x = synth_detail::clustered_layer(cfg, rng);
        layers.emplace_back(0, synth_detail::to_f32_precision(x));
        for (std::size_t l = 1; l < cfg.L; ++l) {
            const Matrix w = synth_detail::unit_spectral_map(cfg.d, rng);
            x = synth_detail::residual_block(x, w, cfg.lambda_block, cfg.renormalize);
            layers.emplace_back(l, synth_detail::to_f32_precision(x));
        }
        return {name, std::move(layers)};
    }
    }
    throw config_error("unhandled synth mode");
}

/// Largest pairwise expansion ‖x'_s - x'_t‖ / ‖x_s - x_t‖ over token pairs; pairs whose
/// layer-l distance is below 1e-9 are skipped. A lower bound on the block's Lipschitz constant.
[[nodiscard]] inline double estimate_lipschitz(const LayerActivation& x_l, const LayerActivation& x_next) {
    if (x_l.tokens() != x_next.tokens() || x_l.hidden_dim() != x_next.hidden_dim()) {
        throw dimension_mismatch("estimate_lipschitz: layers differ in shape");
    }
    if (x_l.tokens() < 2) {
        throw data_error("estimate_lipschitz needs at least 2 tokens");
    }
    const Matrix& a = x_l.data();
    const Matrix& b = x_next.data();
    double best = 0.0;
    bool any = false;
    for (std::size_t s = 0; s < a.rows(); ++s) {
        for (std::size_t t = s + 1; t < a.rows(); ++t) {
            const double den = distance(a.row(s), a.row(t));
            if (den < 1e-9) {
                continue;
            }
            best = std::max(best, distance(b.row(s), b.row(t)) / den);
            any = true;
        }
    }
    if (!any) {
        throw all_pairs_degenerate();
    }
    return best;
}

struct PersistenceCheck {
    std::pair<std::size_t, std::size_t> pair;
    double condition_lhs = 0.0; ///< Λ ‖x_s - x_t‖ / min(‖x'_s‖, ‖x'_t‖)
    double condition_rhs = 0.0; ///< sqrt(2) τ
    bool condition_holds = false;
    bool redundant_next = false; ///< cos(x'_s, x'_t) > 1 - τ²
};

[[nodiscard]] inline PersistenceCheck persistence_check(const LayerActivation& x_l, const LayerActivation& x_next,
                                                        std::pair<std::size_t, std::size_t> pair, double lipschitz,
                                                        double tau) {
    const auto [s, t] = pair;
    if (s == t) {
        throw data_error("persistence_check needs two distinct tokens");
    }
    if (s >= x_l.tokens() || t >= x_l.tokens() || x_l.tokens() != x_next.tokens() ||
        x_l.hidden_dim() != x_next.hidden_dim()) {
        throw dimension_mismatch("persistence_check: token index or layer shape mismatch");
    }
    const auto ns = x_next.data().row(s);
    const auto nt = x_next.data().row(t);
    const double norm_s = norm2(ns);
    const double norm_t = norm2(nt);
    if (norm2(x_l.data().row(s)) < kMinRowNorm || norm2(x_l.data().row(t)) < kMinRowNorm) {
        throw zero_norm_row(norm2(x_l.data().row(s)) < kMinRowNorm ? s : t, 0.0);
    }
    if (norm_s < kMinRowNorm || norm_t < kMinRowNorm) {
        throw zero_norm_row(norm_s < kMinRowNorm ? s : t, std::min(norm_s, norm_t));
    }

    PersistenceCheck out;
    out.pair = pair;
    out.condition_lhs = lipschitz * distance(x_l.data().row(s), x_l.data().row(t)) / std::min(norm_s, norm_t);
    out.condition_rhs = std::sqrt(2.0) * tau;
    out.condition_holds = out.condition_lhs < out.condition_rhs;
    out.redundant_next = dot(ns, nt) / (norm_s * norm_t) > 1.0 - tau * tau;
    return out;
}

struct PersistenceScan {
    std::size_t pairs = 0;
    std::size_t condition_holds = 0;
    std::size_t redundant_next = 0;
    /// condition_holds && !redundant_next
    std::size_t violations = 0;
};

/// Every unordered pair of one layer transition, using estimate_lipschitz for Λ.
[[nodiscard]] inline PersistenceScan persistence_scan(const LayerActivation& x_l, const LayerActivation& x_next,
                                                      double tau) {
    const double lipschitz = estimate_lipschitz(x_l, x_next);
    PersistenceScan scan;
    for (std::size_t s = 0; s < x_l.tokens(); ++s) {
        for (std::size_t t = s + 1; t < x_l.tokens(); ++t) {
            const PersistenceCheck c = persistence_check(x_l, x_next, {s, t}, lipschitz, tau);
            ++scan.pairs;
            scan.condition_holds += c.condition_holds ? 1 : 0;
            scan.redundant_next += c.redundant_next ? 1 : 0;
            scan.violations += (c.condition_holds && !c.redundant_next) ? 1 : 0;
        }
    }
    return scan;
}

} // namespace ada
