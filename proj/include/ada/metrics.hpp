#pragma once

// Selection-cost accounting.
//
// A "Gram operation" is one entry of a Gram or cross-Gram matrix (d multiply-accumulates).
// FLOP figures multiply entry counts by d; the compressed-attention figure carries the
// factor 2 of 2·r²·d_h per head. All integer inputs produce exact integer outputs.

#include "ada/errors.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ada {

namespace detail {

[[nodiscard]] inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
        throw config_error("cost model overflow: " + std::to_string(a) + " * " + std::to_string(b));
    }
    return a * b;
}

[[nodiscard]] inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    if (b > std::numeric_limits<std::uint64_t>::max() - a) {
        throw config_error("cost model overflow in addition");
    }
    return a + b;
}

} // namespace detail

/// L · T² entries.
[[nodiscard]] inline std::uint64_t gram_ops_independent(std::uint64_t L, std::uint64_t T) {
    if (L < 1 || T < 1) {
        throw config_error("gram_ops_independent needs L, T >= 1");
    }
    return detail::checked_mul(L, detail::checked_mul(T, T));
}

/// T² + Σ_l (r_l² + (T - r_l) · r_valid_l) over cascade layers 1..L-1, where r_l is the
/// inherited count at step l and r_valid_l the survivors of validation.
[[nodiscard]] inline std::uint64_t gram_ops_cascade(std::uint64_t T, std::span<const std::uint64_t> r_inherited,
                                                    std::span<const std::uint64_t> r_valid) {
    if (T < 1) {
        throw config_error("gram_ops_cascade needs T >= 1");
    }
    if (r_inherited.size() != r_valid.size()) {
        throw dimension_mismatch("per-layer inherited and valid counts differ in length");
    }
    std::uint64_t total = detail::checked_mul(T, T);
    for (std::size_t i = 0; i < r_inherited.size(); ++i) {
        const std::uint64_t r = r_inherited[i];
        const std::uint64_t rv = r_valid[i];
        if (r < 1 || r > T || rv > r) {
            throw config_error("step " + std::to_string(i + 1) + " needs 1 <= r_valid <= r <= T");
        }
        total = detail::checked_add(total, detail::checked_add(detail::checked_mul(r, r), detail::checked_mul(T - r, rv)));
    }
    return total;
}

struct CostModelInput {
    std::uint64_t L = 0;
    std::uint64_t T = 0;
    std::uint64_t d = 0;
    std::uint64_t d_h = 0;
    std::uint64_t h = 0;
    /// Mean inherited representative count driving the cascade term.
    std::uint64_t r_bar = 0;
    /// Mean representative count for the compressed-attention term; defaults to r_bar.
    std::optional<std::uint64_t> attention_r_bar;
    std::vector<std::uint64_t> r_sequence;

    void validate() const {
        if (L < 1 || T < 1 || d < 1 || d_h < 1 || h < 1 || r_bar < 1) {
            throw config_error("cost model inputs must be positive");
        }
        if (r_bar > T || attention_r_bar.value_or(r_bar) > T || attention_r_bar.value_or(1) < 1) {
            throw config_error("mean representative count must lie in [1, T]");
        }
        for (std::uint64_t r : r_sequence) {
            if (r < 1 || r > T) {
                throw config_error("per-layer representative counts must lie in [1, T]");
            }
        }
    }
};

struct SelectionFlops {
    std::uint64_t independent = 0;          ///< L · T² · d
    std::uint64_t cascade = 0;              ///< T · d · (T + (L-1) · r̄)
    std::uint64_t attention_compressed = 0; ///< L · 2 · r̄² · d_h · h
};

[[nodiscard]] inline SelectionFlops selection_flops(const CostModelInput& in) {
    using detail::checked_add;
    using detail::checked_mul;
    in.validate();
    const std::uint64_t ra = in.attention_r_bar.value_or(in.r_bar);
    SelectionFlops f;
    f.independent = checked_mul(checked_mul(in.L, checked_mul(in.T, in.T)), in.d);
    f.cascade = checked_mul(checked_mul(in.T, in.d), checked_add(in.T, checked_mul(in.L - 1, in.r_bar)));
    f.attention_compressed = checked_mul(checked_mul(checked_mul(in.L, 2), checked_mul(ra, ra)), checked_mul(in.d_h, in.h));
    return f;
}

struct ScalingRow {
    std::uint64_t T = 0;
    double r_bar_estimate = 0.0;
    double ratio_T_over_r = 0.0;
    double savings_asymptotic = 0.0; ///< 1 - r̄/T (layer-0 bootstrap ignored)
    double savings_exact = 0.0;      ///< 1 - (T + (L-1)·r̄) / (L·T)
    double selection_speedup = 0.0;  ///< T / r̄
};

struct ScalingInput {
    std::uint64_t T = 0;
    double r_bar_estimate = 0.0;
};

[[nodiscard]] inline std::vector<ScalingRow> scaling_table(std::uint64_t L, std::span<const ScalingInput> rows) {
    if (L < 1) {
        throw config_error("scaling_table needs L >= 1");
    }
    std::vector<ScalingRow> out;
    out.reserve(rows.size());
    for (const auto& in : rows) {
        const double T = static_cast<double>(in.T);
        const double r = in.r_bar_estimate;
        if (in.T < 1 || !(r > 0.0) || r > T) {
            throw config_error("scaling row needs 0 < r_bar <= T (T = " + std::to_string(in.T) + ")");
        }
        const double Ld = static_cast<double>(L);
        ScalingRow row;
        row.T = in.T;
        row.r_bar_estimate = r;
        row.ratio_T_over_r = T / r;
        row.savings_asymptotic = 1.0 - r / T;
        row.savings_exact = 1.0 - (T + (Ld - 1.0) * r) / (Ld * T);
        row.selection_speedup = T / r;
        out.push_back(row);
    }
    return out;
}

struct CompressionSummary {
    double linear_ratio = 0.0;    ///< T / r
    double quadratic_ratio = 0.0; ///< (T / r)²
};

[[nodiscard]] inline CompressionSummary compression_summary(std::uint64_t T, std::uint64_t r) {
    if (r < 1 || r > T) {
        throw config_error("compression_summary needs 1 <= r <= T");
    }
    const double lin = static_cast<double>(T) / static_cast<double>(r);
    return {lin, lin * lin};
}

/// 1 - cascade / independent.
[[nodiscard]] inline double savings_fraction(std::uint64_t cascade_ops, std::uint64_t independent_ops) {
    if (independent_ops == 0) {
        throw config_error("independent op count must be positive");
    }
    return 1.0 - static_cast<double>(cascade_ops) / static_cast<double>(independent_ops);
}

} // namespace ada
