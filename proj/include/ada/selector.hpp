#pragma once

// Gram-threshold representative selection on a single layer.
//
// A token t is representative when its largest |cosine| against a comparison set of
// earlier tokens stays strictly below 1 - tau^2. Token 0 is always representative.

#include "ada/errors.hpp"
#include "ada/linalg.hpp"
#include "ada/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ada {

/// Which earlier tokens a candidate is compared against.
enum class ComparisonMode {
    AllEarlier,      ///< every s < t
    EarlierRepsOnly, ///< only representatives chosen so far (greedy covering)
};

[[nodiscard]] inline std::string_view to_string(ComparisonMode m) noexcept {
    return m == ComparisonMode::AllEarlier ? "all-earlier" : "reps-only";
}

[[nodiscard]] inline ComparisonMode parse_comparison_mode(std::string_view s) {
    if (s == "reps-only") {
        return ComparisonMode::EarlierRepsOnly;
    }
    if (s == "all-earlier") {
        return ComparisonMode::AllEarlier;
    }
    throw config_error("unknown comparison mode '" + std::string(s) + "' (expected reps-only or all-earlier)");
}

class SelectionConfig {
public:
    explicit SelectionConfig(double tau, ComparisonMode mode = ComparisonMode::EarlierRepsOnly)
        : tau_(tau), mode_(mode) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw config_error("tau must lie in (0, 1), got " + std::to_string(tau));
        }
    }

    [[nodiscard]] double tau() const noexcept { return tau_; }
    [[nodiscard]] ComparisonMode mode() const noexcept { return mode_; }
    /// Cosine level at or above which a token is redundant: 1 - tau^2.
    [[nodiscard]] double threshold() const noexcept { return 1.0 - tau_ * tau_; }
    [[nodiscard]] bool is_redundant(double gamma) const noexcept { return !(gamma < threshold()); }

private:
    double tau_;
    ComparisonMode mode_;
};

/// Symmetric T×T matrix of cosine similarities between unit rows.
class GramMatrix {
public:
    explicit GramMatrix(Matrix data) : data_(std::move(data)) {
        if (data_.rows() != data_.cols()) {
            throw dimension_mismatch("Gram matrix must be square");
        }
        for (std::size_t s = 0; s < size(); ++s) {
            if (std::abs(data_(s, s) - 1.0) > 1e-6) {
                throw invariant_violation("Gram diagonal entry " + std::to_string(s) + " = " +
                                          std::to_string(data_(s, s)));
            }
            for (std::size_t t = 0; t < s; ++t) {
                if (data_(s, t) != data_(t, s)) {
                    throw invariant_violation("Gram matrix not exactly symmetric");
                }
                if (std::abs(data_(s, t)) > 1.0 + 1e-6) {
                    throw invariant_violation("Gram entry outside [-1, 1]");
                }
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return data_.rows(); }
    [[nodiscard]] double operator()(std::size_t s, std::size_t t) const noexcept { return data_(s, t); }
    [[nodiscard]] const Matrix& data() const noexcept { return data_; }

private:
    Matrix data_;
};

/// Lower triangle by explicit dot products, mirrored so symmetry is exact.
[[nodiscard]] inline GramMatrix compute_gram(const UnitRowActivation& xhat) {
    const std::size_t T = xhat.tokens();
    Matrix g(T, T);
    for (std::size_t s = 0; s < T; ++s) {
        for (std::size_t t = 0; t <= s; ++t) {
            const double v = dot(xhat.row(s), xhat.row(t));
            g(s, t) = v;
            g(t, s) = v;
        }
    }
    return GramMatrix(std::move(g));
}

/// Ordered representative indices plus the max correlation each token saw when decided.
class RepSet {
public:
    RepSet(std::size_t seq_len, std::vector<std::size_t> indices, std::vector<double> gammas)
        : seq_len_(seq_len), indices_(std::move(indices)), gammas_(std::move(gammas)), member_(seq_len, false) {
        if (indices_.empty()) {
            throw empty_rep_set();
        }
        if (gammas_.size() != seq_len_) {
            throw dimension_mismatch("RepSet gammas must have one entry per token");
        }
        if (indices_.front() != 0) {
            throw invariant_violation("token 0 must be a representative");
        }
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (indices_[i] >= seq_len_ || (i > 0 && indices_[i] <= indices_[i - 1])) {
                throw invariant_violation("RepSet indices must be strictly increasing and below T");
            }
            member_[indices_[i]] = true;
        }
    }

    /// Index set only; gammas are zero. Useful for tests and for sets read back from reports.
    static RepSet from_indices(std::size_t seq_len, std::vector<std::size_t> indices) {
        std::ranges::sort(indices);
        return RepSet(seq_len, std::move(indices), std::vector<double>(seq_len, 0.0));
    }

    [[nodiscard]] std::size_t seq_len() const noexcept { return seq_len_; }
    [[nodiscard]] std::size_t size() const noexcept { return indices_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    [[nodiscard]] const std::vector<double>& gammas() const noexcept { return gammas_; }
    [[nodiscard]] bool contains(std::size_t t) const noexcept { return t < seq_len_ && member_[t]; }

    /// Throws unless every member's gamma is below the config's threshold.
    void check_gammas(const SelectionConfig& cfg) const {
        for (std::size_t t : indices_) {
            if (!(gammas_[t] < cfg.threshold())) {
                throw invariant_violation("representative " + std::to_string(t) + " has gamma " +
                                          std::to_string(gammas_[t]) + " >= 1 - tau^2");
            }
        }
    }

private:
    std::size_t seq_len_;
    std::vector<std::size_t> indices_;
    std::vector<double> gammas_;
    std::vector<bool> member_;
};

struct IndependentSelection {
    RepSet reps;
    /// Gram entries charged for the selection: always T^2.
    std::uint64_t gram_entry_count = 0;
};

/// Sequential scan on pre-normalized rows.
[[nodiscard]] inline IndependentSelection select_independent(const UnitRowActivation& xhat, const SelectionConfig& cfg) {
    const std::size_t T = xhat.tokens();
    std::vector<std::size_t> reps{0};
    std::vector<double> gammas(T, 0.0);
    for (std::size_t t = 1; t < T; ++t) {
        const auto row = xhat.row(t);
        double gamma = 0.0;
        if (cfg.mode() == ComparisonMode::AllEarlier) {
            for (std::size_t s = 0; s < t; ++s) {
                gamma = std::max(gamma, std::abs(dot(xhat.row(s), row)));
            }
        } else {
            for (std::size_t s : reps) {
                gamma = std::max(gamma, std::abs(dot(xhat.row(s), row)));
            }
        }
        gammas[t] = gamma;
        if (!cfg.is_redundant(gamma)) {
            reps.push_back(t);
        }
    }
    return {RepSet(T, std::move(reps), std::move(gammas)), static_cast<std::uint64_t>(T) * T};
}

[[nodiscard]] inline IndependentSelection select_independent(const LayerActivation& x, const SelectionConfig& cfg) {
    return select_independent(row_normalize(x), cfg);
}

struct RepAssignment {
    std::vector<std::size_t> nearest;
    std::vector<double> similarity; ///< |G[t][nearest[t]]|
};

/// Nearest representative by |G|; ties go to the smallest representative index.
[[nodiscard]] inline RepAssignment assign_nearest(const GramMatrix& g, const RepSet& reps) {
    if (reps.size() == 0) {
        throw empty_rep_set();
    }
    if (reps.seq_len() != g.size()) {
        throw dimension_mismatch("RepSet T = " + std::to_string(reps.seq_len()) + " but Gram is " +
                                 std::to_string(g.size()) + "x" + std::to_string(g.size()));
    }
    const std::size_t T = g.size();
    RepAssignment out{std::vector<std::size_t>(T), std::vector<double>(T)};
    for (std::size_t t = 0; t < T; ++t) {
        if (reps.contains(t)) {
            out.nearest[t] = t;
            out.similarity[t] = std::abs(g(t, t));
            continue;
        }
        std::size_t best = reps.indices().front();
        double best_sim = -1.0;
        for (std::size_t s : reps.indices()) {
            const double sim = std::abs(g(t, s));
            if (sim > best_sim) {
                best_sim = sim;
                best = s;
            }
        }
        out.nearest[t] = best;
        out.similarity[t] = best_sim;
    }
    return out;
}

/// Same rule as above, computing only the token-vs-representative entries (T·r dot products).
[[nodiscard]] inline RepAssignment assign_nearest(const UnitRowActivation& xhat, const RepSet& reps) {
    if (reps.size() == 0) {
        throw empty_rep_set();
    }
    if (reps.seq_len() != xhat.tokens()) {
        throw dimension_mismatch("RepSet T = " + std::to_string(reps.seq_len()) + " but activation has " +
                                 std::to_string(xhat.tokens()) + " tokens");
    }
    const std::size_t T = xhat.tokens();
    RepAssignment out{std::vector<std::size_t>(T), std::vector<double>(T)};
    for (std::size_t t = 0; t < T; ++t) {
        if (reps.contains(t)) {
            out.nearest[t] = t;
            out.similarity[t] = std::abs(dot(xhat.row(t), xhat.row(t)));
            continue;
        }
        std::size_t best = reps.indices().front();
        double best_sim = -1.0;
        for (std::size_t s : reps.indices()) {
            const double sim = std::abs(dot(xhat.row(t), xhat.row(s)));
            if (sim > best_sim) {
                best_sim = sim;
                best = s;
            }
        }
        out.nearest[t] = best;
        out.similarity[t] = best_sim;
    }
    return out;
}

} // namespace ada
