#pragma once

// Depth cascade: inherit the representative set from the previous layer, validate it with
// an r×r Gram among the inherited reps, and scan the remaining tokens against the surviving
// reps with a (T-r)×r_valid cross-Gram.

#include "ada/errors.hpp"
#include "ada/selector.hpp"
#include "ada/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace ada {

/// Comparison set used when re-validating inherited representatives.
enum class ValidationScope {
    /// Each inherited rep s is checked against every inherited rep with smaller index.
    EarlierInherited,
    /// Each inherited rep s is checked against smaller-index inherited reps that survived
    /// validation themselves (the greedy-covering scan restricted to the inherited set).
    EarlierValid,
};

struct CascadeOptions {
    /// Unset: EarlierInherited under ComparisonMode::AllEarlier, EarlierValid under
    /// ComparisonMode::EarlierRepsOnly, so both passes use the same comparison rule.
    std::optional<ValidationScope> validation;
    /// Drop added tokens that are redundant with a smaller-index added token. Off by default;
    /// the plain step never compares new reps with each other.
    bool dedup_added = false;

    [[nodiscard]] ValidationScope resolve(ComparisonMode mode) const noexcept {
        if (validation) {
            return *validation;
        }
        return mode == ComparisonMode::AllEarlier ? ValidationScope::EarlierInherited : ValidationScope::EarlierValid;
    }
};

struct CascadeStepResult {
    std::vector<std::size_t> kept;    ///< inherited reps that passed validation
    std::vector<std::size_t> added;   ///< non-inherited tokens decorrelated from every kept rep
    std::vector<std::size_t> removed; ///< inherited reps that failed validation
    RepSet result;
    std::size_t inherited_count = 0;
    /// r^2 + (T - r) * r_valid, r = inherited count.
    std::uint64_t gram_entry_count = 0;
    /// Entries computed by the optional dedup pass; zero when it is off.
    std::uint64_t dedup_entry_count = 0;
    double turnover = 0.0;
    /// gamma^rep for each inherited rep, in inherited order.
    std::vector<double> validation_gammas;
};

namespace detail {

inline void check_step_inputs(const UnitRowActivation& xhat, const RepSet& inherited) {
    if (inherited.size() == 0) {
        throw empty_rep_set();
    }
    if (inherited.seq_len() != xhat.tokens()) {
        throw dimension_mismatch("inherited set is over T = " + std::to_string(inherited.seq_len()) +
                                 " tokens but the layer has " + std::to_string(xhat.tokens()));
    }
}

} // namespace detail

[[nodiscard]] inline CascadeStepResult cascade_step(const UnitRowActivation& xhat, const RepSet& inherited,
                                                    const SelectionConfig& cfg, const CascadeOptions& opts = {}) {
    detail::check_step_inputs(xhat, inherited);
    const std::size_t T = xhat.tokens();
    const std::vector<std::size_t>& reps = inherited.indices();
    const std::size_t r = reps.size();
    const ValidationScope scope = opts.resolve(cfg.mode());

    // r×r Gram among inherited reps (lower triangle suffices for the validation max).
    Matrix rep_gram(r, r);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = dot(xhat.row(reps[i]), xhat.row(reps[j]));
            rep_gram(i, j) = v;
            rep_gram(j, i) = v;
        }
    }

    std::vector<double> gammas(T, 0.0);
    std::vector<double> validation_gammas(r, 0.0);
    std::vector<bool> valid(r, false);
    std::vector<std::size_t> kept;
    std::vector<std::size_t> removed;
    for (std::size_t i = 0; i < r; ++i) {
        double gamma = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            if (scope == ValidationScope::EarlierValid && !valid[j]) {
                continue;
            }
            gamma = std::max(gamma, std::abs(rep_gram(i, j)));
        }
        validation_gammas[i] = gamma;
        gammas[reps[i]] = gamma;
        valid[i] = !cfg.is_redundant(gamma);
        (valid[i] ? kept : removed).push_back(reps[i]);
    }

    // (T-r)×r_valid cross-Gram of non-inherited tokens against the kept reps.
    std::vector<std::size_t> added;
    for (std::size_t t = 0; t < T; ++t) {
        if (inherited.contains(t)) {
            continue;
        }
        const auto row = xhat.row(t);
        double gamma = 0.0;
        for (std::size_t s : kept) {
            gamma = std::max(gamma, std::abs(dot(xhat.row(s), row)));
        }
        gammas[t] = gamma;
        if (!cfg.is_redundant(gamma)) {
            added.push_back(t);
        }
    }

    std::uint64_t dedup_entries = 0;
    if (opts.dedup_added && added.size() > 1) {
        std::vector<std::size_t> deduped;
        for (std::size_t t : added) {
            double gamma = gammas[t];
            for (std::size_t s : deduped) {
                gamma = std::max(gamma, std::abs(dot(xhat.row(s), xhat.row(t))));
                ++dedup_entries;
            }
            gammas[t] = gamma;
            if (!cfg.is_redundant(gamma)) {
                deduped.push_back(t);
            }
        }
        added = std::move(deduped);
    }

    std::vector<std::size_t> merged;
    merged.reserve(kept.size() + added.size());
    std::ranges::merge(kept, added, std::back_inserter(merged));
    if (merged.empty() || merged.front() != 0) {
        // Token 0 is inherited (RepSet invariant) and always validates against an empty set.
        throw invariant_violation("cascade step lost token 0");
    }

    const std::uint64_t r64 = r;
    const std::uint64_t gram_entries = r64 * r64 + (static_cast<std::uint64_t>(T) - r64) * kept.size();
    const double turnover = static_cast<double>(added.size() + removed.size()) / static_cast<double>(r);

    RepSet result(T, std::move(merged), std::move(gammas));
    return CascadeStepResult{std::move(kept),
                             std::move(added),
                             std::move(removed),
                             std::move(result),
                             r,
                             gram_entries,
                             dedup_entries,
                             turnover,
                             std::move(validation_gammas)};
}

[[nodiscard]] inline CascadeStepResult cascade_step(const LayerActivation& x_next, const RepSet& inherited,
                                                    const SelectionConfig& cfg, const CascadeOptions& opts = {}) {
    return cascade_step(row_normalize(x_next), inherited, cfg, opts);
}

/// |a ∩ b| / |a ∪ b| from counts.
[[nodiscard]] inline double jaccard_from_counts(std::size_t size_a, std::size_t size_b, std::size_t intersection) {
    if (intersection > std::min(size_a, size_b)) {
        throw data_error("intersection larger than one of the sets");
    }
    const std::size_t uni = size_a + size_b - intersection;
    if (uni == 0) {
        throw empty_rep_set();
    }
    return static_cast<double>(intersection) / static_cast<double>(uni);
}

[[nodiscard]] inline std::size_t intersection_size(const RepSet& a, const RepSet& b) {
    std::size_t n = 0;
    for (std::size_t t : a.indices()) {
        n += b.contains(t) ? 1 : 0;
    }
    return n;
}

[[nodiscard]] inline double jaccard(const RepSet& a, const RepSet& b) {
    if (a.seq_len() != b.seq_len()) {
        throw dimension_mismatch("Jaccard of sets over different sequence lengths");
    }
    return jaccard_from_counts(a.size(), b.size(), intersection_size(a, b));
}

/// (|added| + |removed|) / |inherited|
[[nodiscard]] inline double turnover_from_counts(std::size_t inherited, std::size_t added, std::size_t removed) {
    if (inherited == 0) {
        throw empty_rep_set();
    }
    return static_cast<double>(added + removed) / static_cast<double>(inherited);
}

/// Independent representatives missing from a cascade result, split by whether a kept
/// inherited rep covers them (|G| >= 1 - tau^2).
struct MissAudit {
    std::vector<std::size_t> covered;
    std::vector<std::size_t> unexplained;
};

[[nodiscard]] inline MissAudit audit_misses(const UnitRowActivation& xhat, const RepSet& independent,
                                            const CascadeStepResult& step, const SelectionConfig& cfg) {
    MissAudit audit;
    for (std::size_t t : independent.indices()) {
        if (step.result.contains(t)) {
            continue;
        }
        const bool covered = std::ranges::any_of(step.kept, [&](std::size_t s) {
            return s != t && cfg.is_redundant(std::abs(dot(xhat.row(s), xhat.row(t))));
        });
        (covered ? audit.covered : audit.unexplained).push_back(t);
    }
    return audit;
}

struct CascadeLayerRecord {
    std::size_t layer = 0;
    std::size_t r_independent = 0;
    std::size_t r_cascade = 0;
    /// Independent sets at layer-1 and layer; unset at layer 0.
    std::optional<double> jaccard_consecutive;
    double jaccard_cascade_vs_independent = 1.0;
    // Cascade diagnostics; unset at layer 0 (full Gram bootstrap).
    std::optional<std::size_t> r_inherited;
    std::optional<std::size_t> r_valid;
    std::optional<std::size_t> adds;
    std::optional<std::size_t> removes;
    std::optional<double> turnover;
    std::uint64_t gram_ops_independent = 0;
    std::uint64_t gram_ops_cascade = 0;
    /// Independent reps absent from the cascade set, and how many of those no kept rep covers.
    std::size_t missed_independent = 0;
    std::size_t unexplained_misses = 0;
};

struct CascadeRunRecord {
    std::vector<CascadeLayerRecord> per_layer;
    std::vector<RepSet> independent_sets;
    std::vector<RepSet> cascade_sets;

    [[nodiscard]] std::uint64_t total_gram_ops_independent() const noexcept {
        std::uint64_t n = 0;
        for (const auto& rec : per_layer) {
            n += rec.gram_ops_independent;
        }
        return n;
    }
    [[nodiscard]] std::uint64_t total_gram_ops_cascade() const noexcept {
        std::uint64_t n = 0;
        for (const auto& rec : per_layer) {
            n += rec.gram_ops_cascade;
        }
        return n;
    }
};

/// Cascade over a whole trace, alongside independent selection at every layer for comparison.
[[nodiscard]] inline CascadeRunRecord run_cascade(const ActivationTrace& trace, const SelectionConfig& cfg,
                                                  const CascadeOptions& opts = {}) {
    CascadeRunRecord run;
    const std::size_t L = trace.num_layers();
    run.per_layer.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
        const UnitRowActivation xhat = row_normalize(trace.layer(l));
        IndependentSelection ind = select_independent(xhat, cfg);

        CascadeLayerRecord rec;
        rec.layer = l;
        rec.r_independent = ind.reps.size();
        rec.gram_ops_independent = ind.gram_entry_count;
        if (l > 0) {
            rec.jaccard_consecutive = jaccard(run.independent_sets.back(), ind.reps);
        }

        if (l == 0) {
            rec.r_cascade = ind.reps.size();
            rec.gram_ops_cascade = ind.gram_entry_count;
            run.cascade_sets.push_back(ind.reps);
        } else {
            CascadeStepResult step = cascade_step(xhat, run.cascade_sets.back(), cfg, opts);
            const MissAudit audit = audit_misses(xhat, ind.reps, step, cfg);
            rec.r_cascade = step.result.size();
            rec.r_inherited = step.inherited_count;
            rec.r_valid = step.kept.size();
            rec.adds = step.added.size();
            rec.removes = step.removed.size();
            rec.turnover = step.turnover;
            rec.gram_ops_cascade = step.gram_entry_count + step.dedup_entry_count;
            rec.missed_independent = audit.covered.size() + audit.unexplained.size();
            rec.unexplained_misses = audit.unexplained.size();
            run.cascade_sets.push_back(std::move(step.result));
        }
        rec.jaccard_cascade_vs_independent = jaccard(run.cascade_sets.back(), ind.reps);
        run.independent_sets.push_back(std::move(ind.reps));
        run.per_layer.push_back(rec);
    }
    return run;
}

} // namespace ada
