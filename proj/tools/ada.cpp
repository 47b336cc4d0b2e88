// ada: representative selection, depth cascade and cost model on activation traces.

#include "ada/ada.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kInvariant = 4 };

struct Common {
    double tau = 0.30;
    std::string mode = "reps-only";
    std::string json_path;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--tau", c.tau, "Gram threshold; redundant when max |cos| >= 1 - tau^2")->capture_default_str();
    cmd->add_option("--mode", c.mode, "comparison set for selection")
        ->check(CLI::IsMember({"reps-only", "all-earlier"}))
        ->capture_default_str();
    cmd->add_option("--json", c.json_path, "write the JSON document here ('-' for stdout instead of text)");
}

ada::SelectionConfig selection_config(const Common& c) {
    return ada::SelectionConfig(c.tau, ada::parse_comparison_mode(c.mode));
}

/// Text to stdout unless JSON goes to stdout; JSON to a file when a path is given.
void emit(const nlohmann::json& doc, const std::string& text, const std::string& json_path) {
    if (json_path == "-") {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::cout << text;
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::trunc);
        if (!out) {
            throw ada::io_error("cannot open " + json_path + " for writing");
        }
        out << doc.dump(2) << '\n';
        if (!out) {
            throw ada::io_error("write failed for " + json_path);
        }
    }
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ada::io_error("cannot open " + path);
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ada::format_error(path + ": " + e.what());
    }
}

std::vector<ada::ScalingInput> parse_scaling(const std::vector<std::string>& specs) {
    std::vector<ada::ScalingInput> rows;
    for (const std::string& s : specs) {
        const auto colon = s.find(':');
        if (colon == std::string::npos) {
            throw ada::config_error("scaling row '" + s + "' must look like T:r_bar");
        }
        try {
            std::size_t used = 0;
            const std::string t_str = s.substr(0, colon);
            const std::string r_str = s.substr(colon + 1);
            const unsigned long long T = std::stoull(t_str, &used);
            if (used != t_str.size()) throw std::invalid_argument(t_str);
            const double r = std::stod(r_str, &used);
            if (used != r_str.size()) throw std::invalid_argument(r_str);
            rows.push_back({T, r});
        } catch (const std::logic_error&) {
            throw ada::config_error("scaling row '" + s + "' must look like T:r_bar");
        }
    }
    return rows;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gram-threshold representative selection and depth cascade on activation traces"};
    app.require_subcommand(1);

    // select
    Common sel_common;
    std::string sel_trace;
    std::size_t sel_layer = 0;
    auto* sel = app.add_subcommand("select", "independent selection on one layer");
    sel->add_option("trace", sel_trace, "trace file")->required();
    sel->add_option("--layer", sel_layer, "layer index")->capture_default_str();
    add_common(sel, sel_common);

    // cascade
    Common cas_common;
    std::string cas_trace;
    std::string cas_validation;
    bool cas_dedup = false;
    auto* cas = app.add_subcommand("cascade", "cascade over all layers, compared with independent selection");
    cas->add_option("trace", cas_trace, "trace file")->required();
    cas->add_option("--validation", cas_validation, "override validation scope")
        ->check(CLI::IsMember({"earlier-inherited", "earlier-valid"}));
    cas->add_flag("--dedup-added", cas_dedup, "cross-check added tokens against each other");
    add_common(cas, cas_common);

    // costmodel
    ada::CostModelInput cm;
    cm.L = 28;
    cm.T = 512;
    cm.d = 4096;
    cm.d_h = 256;
    cm.h = 16;
    cm.r_bar = 240;
    std::uint64_t cm_attention_r = 205;
    std::vector<std::string> cm_scaling;
    std::string cm_json;
    auto* cost = app.add_subcommand("costmodel", "selection and attention FLOP estimates");
    cost->add_option("--L", cm.L, "layers")->capture_default_str();
    cost->add_option("--T", cm.T, "sequence length")->capture_default_str();
    cost->add_option("--d", cm.d, "hidden size")->capture_default_str();
    cost->add_option("--d-h", cm.d_h, "head dimension")->capture_default_str();
    cost->add_option("--heads", cm.h, "attention heads")->capture_default_str();
    cost->add_option("--r-bar", cm.r_bar, "mean inherited representative count (cascade term)")->capture_default_str();
    cost->add_option("--attention-r-bar", cm_attention_r, "mean representative count (attention term)")
        ->capture_default_str();
    cost->add_option("--scaling", cm_scaling, "scaling rows as T:r_bar (default: 512:240 ... 8192:450)");
    cost->add_option("--json", cm_json, "write the JSON document here ('-' for stdout instead of text)");

    // synth
    ada::SynthConfig sc;
    std::string synth_mode = "residual";
    std::string synth_out;
    auto* syn = app.add_subcommand("synth", "write a synthetic trace");
    syn->add_option("--out,-o", synth_out, "output trace file")->required();
    syn->add_option("--synth-mode", synth_mode, "generator")
        ->check(CLI::IsMember({"residual", "opt-collapse", "constant"}))
        ->capture_default_str();
    syn->add_option("--T", sc.T, "tokens")->capture_default_str();
    syn->add_option("--d", sc.d, "hidden size")->capture_default_str();
    syn->add_option("--L", sc.L, "layers")->capture_default_str();
    syn->add_option("--lambda", sc.lambda_block, "residual block scale")->capture_default_str();
    syn->add_option("--clusters", sc.num_clusters, "layer-0 clusters")->capture_default_str();
    syn->add_option("--spread", sc.cluster_spread, "within-cluster angular noise")->capture_default_str();
    syn->add_flag("--renormalize", sc.renormalize, "restore row norms after each block");
    syn->add_option("--seed", sc.seed, "random seed")->capture_default_str();

    // report
    Common rep_common;
    std::string rep_trace;
    std::string rep_render;
    ada::report::AttentionSectionConfig rep_attn;
    auto* rep = app.add_subcommand("report", "cascade report with attention-bound audit, or render a saved report");
    rep->add_option("trace", rep_trace, "trace file");
    rep->add_option("--render", rep_render, "render an existing JSON document as text");
    rep->add_option("--seed", rep_attn.seed, "seed for the random attention projections")->capture_default_str();
    rep->add_option("--heads", rep_attn.heads, "attention heads")->capture_default_str();
    rep->add_option("--head-dim", rep_attn.head_dim, "head dimension")->capture_default_str();
    add_common(rep, rep_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        namespace rpt = ada::report;
        if (*sel) {
            const ada::SelectionConfig cfg = selection_config(sel_common);
            const ada::ActivationTrace trace = ada::read_trace(sel_trace);
            if (sel_layer >= trace.num_layers()) {
                throw ada::config_error("--layer " + std::to_string(sel_layer) + " out of range (L = " +
                                        std::to_string(trace.num_layers()) + ")");
            }
            const auto result = ada::select_independent(trace.layer(sel_layer), cfg);
            const auto doc = rpt::select_report(rpt::TraceInfo::of(trace, sel_trace), cfg, sel_layer, result);
            emit(doc, rpt::render_select(doc), sel_common.json_path);
        } else if (*cas) {
            const ada::SelectionConfig cfg = selection_config(cas_common);
            ada::CascadeOptions opts;
            opts.dedup_added = cas_dedup;
            if (!cas_validation.empty()) {
                opts.validation = cas_validation == "earlier-inherited" ? ada::ValidationScope::EarlierInherited
                                                                        : ada::ValidationScope::EarlierValid;
            }
            const ada::ActivationTrace trace = ada::read_trace(cas_trace);
            const auto run = ada::run_cascade(trace, cfg, opts);
            const auto doc = rpt::cascade_report(rpt::TraceInfo::of(trace, cas_trace), cfg, run);
            rpt::check_cascade_report(doc);
            emit(doc, rpt::render_cascade_report(doc), cas_common.json_path);
        } else if (*cost) {
            cm.attention_r_bar = cm_attention_r;
            const auto rows = cm_scaling.empty() ? rpt::default_scaling_rows() : parse_scaling(cm_scaling);
            const auto doc = rpt::costmodel_report(cm, rows);
            emit(doc, rpt::render_costmodel(doc), cm_json);
        } else if (*syn) {
            sc.mode = ada::parse_synth_mode(synth_mode);
            const ada::ActivationTrace trace = ada::generate_trace(sc);
            ada::write_trace(trace, synth_out);
            std::printf("wrote %s: model %s L=%zu T=%zu d=%zu\n", synth_out.c_str(), trace.model_name().c_str(),
                        trace.num_layers(), trace.seq_len(), trace.hidden_dim());
        } else if (*rep) {
            if (!rep_render.empty()) {
                const auto doc = read_json(rep_render);
                const std::string kind = doc.value("kind", "");
                if (kind == "cascade") {
                    rpt::check_cascade_report(doc);
                    std::cout << rpt::render_cascade_report(doc);
                } else if (kind == "select") {
                    std::cout << rpt::render_select(doc);
                } else if (kind == "costmodel") {
                    std::cout << rpt::render_costmodel(doc);
                } else {
                    throw ada::format_error(rep_render + ": unknown document kind '" + kind + "'");
                }
                return kOk;
            }
            if (rep_trace.empty()) {
                throw ada::config_error("report needs a trace file or --render");
            }
            const ada::SelectionConfig cfg = selection_config(rep_common);
            const ada::ActivationTrace trace = ada::read_trace(rep_trace);
            const auto run = ada::run_cascade(trace, cfg);
            auto doc = rpt::cascade_report(rpt::TraceInfo::of(trace, rep_trace), cfg, run);
            doc["attention_error"] = rpt::attention_section(trace, run, cfg, rep_attn);
            rpt::check_cascade_report(doc);
            emit(doc, rpt::render_cascade_report(doc), rep_common.json_path);
        }
    } catch (const ada::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const ada::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kData;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: malformed report document: %s\n", e.what());
        return kData;
    } catch (const ada::invariant_violation& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kInvariant;
    }
    return kOk;
}
