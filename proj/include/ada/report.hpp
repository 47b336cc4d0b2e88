#pragma once

// JSON documents behind every CLI command, and the text renderings derived from them.
// Text output is always produced from the JSON document, never from the raw records, so the
// two cannot diverge.

#include "ada/attention.hpp"
#include "ada/cascade.hpp"
#include "ada/metrics.hpp"
#include "ada/selector.hpp"
#include "ada/trace.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace ada::report {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

[[nodiscard]] inline std::string printf_string(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list copy;
    va_copy(copy, args);
    const int n = std::vsnprintf(nullptr, 0, fmt, copy);
    va_end(copy);
    std::string out(static_cast<std::size_t>(n), '\0');
    std::vsnprintf(out.data(), out.size() + 1, fmt, args);
    va_end(args);
    return out;
}

/// Fraction as a percentage with one decimal, e.g. 0.1899 -> "19.0%".
[[nodiscard]] inline std::string percent(double fraction) { return printf_string("%.1f%%", 100.0 * fraction); }

[[nodiscard]] inline std::string gflop(std::uint64_t flops) {
    return printf_string("%.1f", static_cast<double>(flops) / 1e9);
}

struct TraceInfo {
    std::string model;
    std::size_t L = 0;
    std::size_t T = 0;
    std::size_t d = 0;
    std::string source;

    static TraceInfo of(const ActivationTrace& trace, std::string source = {}) {
        return {trace.model_name(), trace.num_layers(), trace.seq_len(), trace.hidden_dim(), std::move(source)};
    }
};

[[nodiscard]] inline json config_json(const TraceInfo& info, const SelectionConfig& cfg) {
    return {{"tau", cfg.tau()},
            {"mode", std::string(to_string(cfg.mode()))},
            {"trace", {{"model", info.model}, {"L", info.L}, {"T", info.T}, {"d", info.d}, {"source", info.source}}}};
}

template <typename T>
[[nodiscard]] json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

/// Layers whose turnover counts toward the deep-layer band: the second half of the stack.
[[nodiscard]] inline std::size_t deep_band_start(std::size_t L) { return std::max<std::size_t>(1, L / 2); }

// ---------------------------------------------------------------------------------------
// cascade

[[nodiscard]] inline json cascade_report(const TraceInfo& info, const SelectionConfig& cfg,
                                         const CascadeRunRecord& run) {
    json layers = json::array();
    double jaccard_sum = 0.0;
    std::size_t jaccard_n = 0;
    double r_ind_sum = 0.0;
    double r_casc_sum = 0.0;
    double inherited_sum = 0.0;
    std::size_t misses = 0;
    std::size_t unexplained = 0;
    const std::size_t band = deep_band_start(run.per_layer.size());
    double deep_sum = 0.0;
    std::size_t deep_n = 0;
    std::optional<double> deep_min;
    std::optional<double> deep_max;

    for (const auto& rec : run.per_layer) {
        layers.push_back({{"layer", rec.layer},
                          {"r_independent", rec.r_independent},
                          {"r_cascade", rec.r_cascade},
                          {"r_inherited", optional_json(rec.r_inherited)},
                          {"r_valid", optional_json(rec.r_valid)},
                          {"jaccard_consecutive", optional_json(rec.jaccard_consecutive)},
                          {"jaccard_cascade_vs_independent", rec.jaccard_cascade_vs_independent},
                          {"adds", optional_json(rec.adds)},
                          {"removes", optional_json(rec.removes)},
                          {"turnover", optional_json(rec.turnover)},
                          {"gram_ops_independent", rec.gram_ops_independent},
                          {"gram_ops_cascade", rec.gram_ops_cascade},
                          {"missed_independent", rec.missed_independent},
                          {"unexplained_misses", rec.unexplained_misses}});
        r_ind_sum += static_cast<double>(rec.r_independent);
        r_casc_sum += static_cast<double>(rec.r_cascade);
        misses += rec.missed_independent;
        unexplained += rec.unexplained_misses;
        if (rec.jaccard_consecutive) {
            jaccard_sum += *rec.jaccard_consecutive;
            ++jaccard_n;
        }
        if (rec.r_inherited) {
            inherited_sum += static_cast<double>(*rec.r_inherited);
        }
        if (rec.turnover && rec.layer >= band) {
            deep_sum += *rec.turnover;
            ++deep_n;
            deep_min = std::min(deep_min.value_or(*rec.turnover), *rec.turnover);
            deep_max = std::max(deep_max.value_or(*rec.turnover), *rec.turnover);
        }
    }

    const std::uint64_t ind_ops = run.total_gram_ops_independent();
    const std::uint64_t casc_ops = run.total_gram_ops_cascade();
    const auto L = static_cast<double>(run.per_layer.size());
    const std::size_t cascade_steps = run.per_layer.size() - 1;

    json summary = {
        {"gram_ops_independent", ind_ops},
        {"gram_ops_cascade", casc_ops},
        {"savings", savings_fraction(casc_ops, ind_ops)},
        {"mean_jaccard", jaccard_n ? json(jaccard_sum / static_cast<double>(jaccard_n)) : json(nullptr)},
        {"mean_r_independent", r_ind_sum / L},
        {"mean_r_cascade", r_casc_sum / L},
        {"mean_r_inherited", cascade_steps ? json(inherited_sum / static_cast<double>(cascade_steps)) : json(nullptr)},
        {"deep_band", {{"first_layer", band}, {"last_layer", run.per_layer.size() - 1}}},
        {"mean_turnover_deep", deep_n ? json(deep_sum / static_cast<double>(deep_n)) : json(nullptr)},
        {"min_turnover_deep", optional_json(deep_min)},
        {"max_turnover_deep", optional_json(deep_max)},
        {"missed_independent", misses},
        {"unexplained_misses", unexplained},
    };

    const std::uint64_t d = info.d;
    json cost = {{"d", d},
                 {"selection_flops_independent", detail::checked_mul(ind_ops, d)},
                 {"selection_flops_cascade", detail::checked_mul(casc_ops, d)}};

    return {{"schema_version", kSchemaVersion},
            {"kind", "cascade"},
            {"config", config_json(info, cfg)},
            {"layers", std::move(layers)},
            {"summary", std::move(summary)},
            {"cost_model", std::move(cost)}};
}

struct AttentionSectionConfig {
    std::size_t heads = 2;
    std::size_t head_dim = 8;
    std::uint64_t seed = 0;
};

/// Bound audit of every layer's cascade set under seeded random projections.
[[nodiscard]] inline json attention_section(const ActivationTrace& trace, const CascadeRunRecord& run,
                                            const SelectionConfig& cfg, const AttentionSectionConfig& acfg) {
    Rng rng(acfg.seed);
    const AttentionWeights w = AttentionWeights::random(trace.hidden_dim(), acfg.head_dim, acfg.heads, rng);
    json per_layer = json::array();
    std::size_t violations = 0;
    std::size_t redundant = 0;
    std::size_t holds = 0;
    for (std::size_t l = 0; l < trace.num_layers(); ++l) {
        const RepSet& reps = run.cascade_sets.at(l);
        const RepAssignment assign = assign_nearest(row_normalize(trace.layer(l)), reps);
        for (std::size_t h = 0; h < w.num_heads(); ++h) {
            const BoundAudit audit = audit_attention_bound(trace.layer(l), w, reps, assign, cfg.tau(), h);
            violations += audit.violations;
            redundant += audit.redundant;
            holds += audit.hypothesis_holds;
            per_layer.push_back({{"layer", l},
                                 {"head", h},
                                 {"redundant", audit.redundant},
                                 {"hypothesis_holds", audit.hypothesis_holds},
                                 {"coverage", audit.coverage()},
                                 {"violations", audit.violations},
                                 {"max_error", audit.max_error},
                                 {"max_error_to_bound", audit.max_ratio}});
        }
    }
    return {{"heads", acfg.heads},
            {"head_dim", acfg.head_dim},
            {"seed", acfg.seed},
            {"set", "cascade"},
            {"per_layer", std::move(per_layer)},
            {"redundant", redundant},
            {"hypothesis_holds", holds},
            {"coverage", redundant ? static_cast<double>(holds) / static_cast<double>(redundant) : 1.0},
            {"violations", violations}};
}

/// Internal consistency of a cascade document; throws invariant_violation.
inline void check_cascade_report(const json& doc) {
    const json& s = doc.at("summary");
    const auto ind = s.at("gram_ops_independent").get<std::uint64_t>();
    const auto casc = s.at("gram_ops_cascade").get<std::uint64_t>();
    if (std::abs(s.at("savings").get<double>() - (1.0 - static_cast<double>(casc) / static_cast<double>(ind))) > 1e-9) {
        throw invariant_violation("report savings disagree with embedded gram-op counts");
    }
    std::uint64_t ind_sum = 0;
    std::uint64_t casc_sum = 0;
    for (const json& layer : doc.at("layers")) {
        ind_sum += layer.at("gram_ops_independent").get<std::uint64_t>();
        casc_sum += layer.at("gram_ops_cascade").get<std::uint64_t>();
    }
    if (ind_sum != ind || casc_sum != casc) {
        throw invariant_violation("per-layer gram ops do not sum to the summary totals");
    }
}

namespace detail {

[[nodiscard]] inline std::string opt_count(const json& v) {
    return v.is_null() ? "-" : std::to_string(v.get<std::uint64_t>());
}
[[nodiscard]] inline std::string opt_fixed3(const json& v) {
    return v.is_null() ? "-" : printf_string("%.3f", v.get<double>());
}
[[nodiscard]] inline std::string opt_percent(const json& v) { return v.is_null() ? "-" : percent(v.get<double>()); }

} // namespace detail

[[nodiscard]] inline std::string render_cascade_report(const json& doc) {
    using detail::opt_count;
    using detail::opt_fixed3;
    using detail::opt_percent;
    const json& c = doc.at("config");
    const json& tr = c.at("trace");
    std::string out = printf_string("model %s  L=%llu T=%llu d=%llu  tau=%.2f  mode=%s\n",
                                    tr.at("model").get<std::string>().c_str(),
                                    tr.at("L").get<unsigned long long>(), tr.at("T").get<unsigned long long>(),
                                    tr.at("d").get<unsigned long long>(), c.at("tau").get<double>(),
                                    c.at("mode").get<std::string>().c_str());
    out += printf_string("%5s %6s %7s %8s %5s %5s %8s %12s %12s\n", "layer", "r_ind", "r_casc", "jaccard", "adds",
                         "rem", "turn", "gram_ind", "gram_casc");
    for (const json& l : doc.at("layers")) {
        out += printf_string("%5llu %6llu %7llu %8s %5s %5s %8s %12llu %12llu\n", l.at("layer").get<unsigned long long>(),
                             l.at("r_independent").get<unsigned long long>(), l.at("r_cascade").get<unsigned long long>(),
                             opt_fixed3(l.at("jaccard_consecutive")).c_str(), opt_count(l.at("adds")).c_str(),
                             opt_count(l.at("removes")).c_str(), opt_percent(l.at("turnover")).c_str(),
                             l.at("gram_ops_independent").get<unsigned long long>(),
                             l.at("gram_ops_cascade").get<unsigned long long>());
    }
    const json& s = doc.at("summary");
    out += printf_string("gram ops: independent %llu, cascade %llu, savings %s\n",
                         s.at("gram_ops_independent").get<unsigned long long>(),
                         s.at("gram_ops_cascade").get<unsigned long long>(), percent(s.at("savings").get<double>()).c_str());
    out += printf_string("mean r: independent %.1f, cascade %.1f; mean consecutive jaccard %s\n",
                         s.at("mean_r_independent").get<double>(), s.at("mean_r_cascade").get<double>(),
                         opt_fixed3(s.at("mean_jaccard")).c_str());
    out += printf_string("deep-layer turnover (layers %llu-%llu): mean %s, range %s-%s\n",
                         s.at("deep_band").at("first_layer").get<unsigned long long>(),
                         s.at("deep_band").at("last_layer").get<unsigned long long>(),
                         opt_percent(s.at("mean_turnover_deep")).c_str(), opt_percent(s.at("min_turnover_deep")).c_str(),
                         opt_percent(s.at("max_turnover_deep")).c_str());
    out += printf_string("independent reps missed by cascade: %llu (uncovered by a kept rep: %llu)\n",
                         s.at("missed_independent").get<unsigned long long>(),
                         s.at("unexplained_misses").get<unsigned long long>());
    const json& cost = doc.at("cost_model");
    out += printf_string("selection FLOPs (x d=%llu): independent %s GFLOP, cascade %s GFLOP\n",
                         cost.at("d").get<unsigned long long>(),
                         gflop(cost.at("selection_flops_independent").get<std::uint64_t>()).c_str(),
                         gflop(cost.at("selection_flops_cascade").get<std::uint64_t>()).c_str());
    if (doc.contains("attention_error")) {
        const json& a = doc.at("attention_error");
        out += printf_string("attention bound audit (%llu heads, d_h=%llu): %llu redundant token-heads, "
                             "distance hypothesis holds for %s, violations %llu\n",
                             a.at("heads").get<unsigned long long>(), a.at("head_dim").get<unsigned long long>(),
                             a.at("redundant").get<unsigned long long>(), percent(a.at("coverage").get<double>()).c_str(),
                             a.at("violations").get<unsigned long long>());
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// select

[[nodiscard]] inline json select_report(const TraceInfo& info, const SelectionConfig& cfg, std::size_t layer,
                                        const IndependentSelection& sel) {
    const std::size_t r = sel.reps.size();
    const CompressionSummary comp = compression_summary(info.T, r);
    return {{"schema_version", kSchemaVersion},
            {"kind", "select"},
            {"config", config_json(info, cfg)},
            {"layer", layer},
            {"T", info.T},
            {"r", r},
            {"r_over_T", static_cast<double>(r) / static_cast<double>(info.T)},
            {"compression", comp.linear_ratio},
            {"attention_compression", comp.quadratic_ratio},
            {"gram_entry_count", sel.gram_entry_count},
            {"indices", sel.reps.indices()}};
}

[[nodiscard]] inline std::string render_select(const json& doc) {
    return printf_string("layer %llu: r=%llu r/T=%.2f compression=%.1fx\n", doc.at("layer").get<unsigned long long>(),
                         doc.at("r").get<unsigned long long>(), doc.at("r_over_T").get<double>(),
                         doc.at("compression").get<double>());
}

// ---------------------------------------------------------------------------------------
// costmodel

[[nodiscard]] inline std::vector<ScalingInput> default_scaling_rows() {
    return {{512, 240}, {1024, 280}, {2048, 320}, {4096, 380}, {8192, 450}};
}

[[nodiscard]] inline json costmodel_report(const CostModelInput& in, const std::vector<ScalingInput>& rows) {
    const SelectionFlops f = selection_flops(in);
    json scaling = json::array();
    for (const ScalingRow& row : scaling_table(in.L, rows)) {
        scaling.push_back({{"T", row.T},
                           {"r_bar", row.r_bar_estimate},
                           {"T_over_r", row.ratio_T_over_r},
                           {"savings_asymptotic", row.savings_asymptotic},
                           {"savings_exact", row.savings_exact},
                           {"selection_speedup", row.selection_speedup}});
    }
    return {{"schema_version", kSchemaVersion},
            {"kind", "costmodel"},
            {"input",
             {{"L", in.L},
              {"T", in.T},
              {"d", in.d},
              {"d_h", in.d_h},
              {"h", in.h},
              {"r_bar", in.r_bar},
              {"attention_r_bar", in.attention_r_bar.value_or(in.r_bar)}}},
            {"flops",
             {{"selection_independent", f.independent},
              {"selection_cascade", f.cascade},
              {"attention_compressed", f.attention_compressed},
              {"selection_savings", savings_fraction(f.cascade, f.independent)}}},
            {"scaling", std::move(scaling)}};
}

[[nodiscard]] inline std::string render_costmodel(const json& doc) {
    const json& in = doc.at("input");
    const json& f = doc.at("flops");
    auto u = [](const json& v) { return v.get<unsigned long long>(); };
    std::string out;
    out += printf_string("selection, independent: L*T^2*d = %llu*%llu^2*%llu = %llu FLOP = %s GFLOP\n", u(in.at("L")),
                         u(in.at("T")), u(in.at("d")), u(f.at("selection_independent")),
                         gflop(f.at("selection_independent").get<std::uint64_t>()).c_str());
    out += printf_string("selection, cascade: T*d*(T+(L-1)*r) = %llu*%llu*(%llu+%llu*%llu) = %llu FLOP = %s GFLOP\n",
                         u(in.at("T")), u(in.at("d")), u(in.at("T")), u(in.at("L")) - 1, u(in.at("r_bar")),
                         u(f.at("selection_cascade")), gflop(f.at("selection_cascade").get<std::uint64_t>()).c_str());
    out += printf_string("attention, compressed: L*2*r^2*d_h*h = %llu*2*%llu^2*%llu*%llu = %llu FLOP = %s GFLOP\n",
                         u(in.at("L")), u(in.at("attention_r_bar")), u(in.at("d_h")), u(in.at("h")),
                         u(f.at("attention_compressed")), gflop(f.at("attention_compressed").get<std::uint64_t>()).c_str());
    out += printf_string("selection saving from cascade: %s\n", percent(f.at("selection_savings").get<double>()).c_str());
    out += printf_string("scaling (L=%llu):\n", u(in.at("L")));
    out += printf_string("%7s %8s %6s %15s %15s %9s\n", "T", "r_bar", "T/r", "savings(asym)", "savings(exact)",
                         "S_select");
    for (const json& row : doc.at("scaling")) {
        out += printf_string("%7llu %8.1f %6.1f %15s %15s %8.1fx\n", u(row.at("T")), row.at("r_bar").get<double>(),
                             row.at("T_over_r").get<double>(), percent(row.at("savings_asymptotic").get<double>()).c_str(),
                             percent(row.at("savings_exact").get<double>()).c_str(),
                             row.at("selection_speedup").get<double>());
    }
    return out;
}

} // namespace ada::report
