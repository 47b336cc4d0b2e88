#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <string>

using namespace ada;
namespace rpt = ada::report;

namespace {

nlohmann::json cascade_doc(const ActivationTrace& t, double tau = 0.3) {
    const SelectionConfig cfg(tau);
    return rpt::cascade_report(rpt::TraceInfo::of(t), cfg, run_cascade(t, cfg));
}

} // namespace

TEST(Report, Percent) {
    EXPECT_EQ(rpt::percent(1.899), "189.9%");
    EXPECT_EQ(rpt::percent(0.0), "0.0%");
    EXPECT_EQ(rpt::gflop(30064771072u), "30.1");
}

TEST(Report, CascadeSummaryIsConsistent) {
    const auto doc = cascade_doc(generate_trace(SynthConfig{}));
    EXPECT_NO_THROW(rpt::check_cascade_report(doc));
    const auto& s = doc["summary"];
    EXPECT_NEAR(s["savings"].get<double>(),
                1.0 - s["gram_ops_cascade"].get<double>() / s["gram_ops_independent"].get<double>(), 1e-12);
    EXPECT_EQ(doc["layers"].size(), 8u);
    EXPECT_TRUE(doc["layers"][0]["turnover"].is_null());
    EXPECT_EQ(s["deep_band"]["first_layer"], 4);
    EXPECT_EQ(doc["config"]["mode"], "reps-only");
}

TEST(Report, TamperedSavingsAreCaught) {
    auto doc = cascade_doc(generate_trace(SynthConfig{}));
    doc["summary"]["savings"] = doc["summary"]["savings"].get<double>() + 1e-6;
    EXPECT_THROW(rpt::check_cascade_report(doc), invariant_violation);
    doc = cascade_doc(generate_trace(SynthConfig{}));
    doc["layers"][2]["gram_ops_cascade"] = 1;
    EXPECT_THROW(rpt::check_cascade_report(doc), invariant_violation);
}

TEST(Report, ConstantTraceClosedForm) {
    SynthConfig c;
    c.mode = SynthMode::Constant;
    const auto doc = cascade_doc(generate_trace(c));
    const double T = 64, L = 8, r = doc["layers"][0]["r_cascade"].get<double>();
    EXPECT_NEAR(doc["summary"]["savings"].get<double>(), 1.0 - (T * T + (L - 1) * T * r) / (L * T * T), 1e-12);
    EXPECT_EQ(doc["summary"]["mean_turnover_deep"].get<double>(), 0.0);
    EXPECT_NE(rpt::render_cascade_report(doc).find("mean 0.0%, range 0.0%-0.0%"), std::string::npos);
}

TEST(Report, SingleLayerHasZeroSavings) {
    SynthConfig c;
    c.L = 1;
    const auto doc = cascade_doc(generate_trace(c));
    EXPECT_EQ(doc["summary"]["savings"].get<double>(), 0.0);
    EXPECT_TRUE(doc["summary"]["mean_jaccard"].is_null());
    const std::string text = rpt::render_cascade_report(doc);
    EXPECT_NE(text.find("savings 0.0%"), std::string::npos);
}

TEST(Report, RenderingIsAFunctionOfTheJson) {
    const auto doc = cascade_doc(generate_trace(SynthConfig{}));
    const auto reparsed = nlohmann::json::parse(doc.dump());
    EXPECT_EQ(rpt::render_cascade_report(doc), rpt::render_cascade_report(reparsed));
}

TEST(Report, TableColumns) {
    const std::string text = rpt::render_cascade_report(cascade_doc(generate_trace(SynthConfig{})));
    for (const char* col : {"layer", "r_ind", "r_casc", "jaccard", "adds", "rem", "turn"}) {
        EXPECT_NE(text.find(col), std::string::npos) << col;
    }
}

TEST(Report, SelectPrintedValuesMatchJson) {
    for (auto mode : {SynthMode::ResidualSmooth, SynthMode::Constant, SynthMode::OptCollapse}) {
        SynthConfig c;
        c.mode = mode;
        c.cluster_spread = 0.05;
        const auto t = generate_trace(c);
        const SelectionConfig cfg(0.3);
        for (std::size_t l : {0u, 1u}) {
            const auto doc = rpt::select_report(rpt::TraceInfo::of(t), cfg, l, select_independent(t.layer(l), cfg));
            const std::string line = rpt::render_select(doc);
            unsigned long long layer = 0, r = 0;
            double frac = 0, comp = 0;
            ASSERT_EQ(std::sscanf(line.c_str(), "layer %llu: r=%llu r/T=%lf compression=%lfx", &layer, &r, &frac, &comp), 4)
                << line;
            const auto back = nlohmann::json::parse(doc.dump());
            EXPECT_EQ(layer, back["layer"].get<unsigned long long>());
            EXPECT_EQ(r, back["r"].get<unsigned long long>());
            EXPECT_EQ(frac, std::stod(rpt::printf_string("%.2f", back["r_over_T"].get<double>())));
            EXPECT_EQ(comp, std::stod(rpt::printf_string("%.1f", back["compression"].get<double>())));
            EXPECT_EQ(back["indices"].size(), r);
        }
    }
}

TEST(Report, SelectOnSpecialTraces) {
    SynthConfig c;
    c.mode = SynthMode::OptCollapse;
    c.cluster_spread = 0.05;
    const auto t = generate_trace(c);
    const SelectionConfig cfg(0.3);
    EXPECT_EQ(rpt::render_select(rpt::select_report(rpt::TraceInfo::of(t), cfg, 0, select_independent(t.layer(0), cfg))),
              "layer 0: r=64 r/T=1.00 compression=1.0x\n");

    Matrix same(8, 3);
    for (std::size_t i = 0; i < 8; ++i) same(i, 1) = 1.0;
    const auto flat = fixture::trace_of({same});
    EXPECT_EQ(rpt::render_select(rpt::select_report(rpt::TraceInfo::of(flat), cfg, 0,
                                                    select_independent(flat.layer(0), cfg))),
              "layer 0: r=1 r/T=0.12 compression=8.0x\n");
}

TEST(Report, CostModelText) {
    CostModelInput in{28, 512, 4096, 256, 16, 240, 205, {}};
    const auto doc = rpt::costmodel_report(in, rpt::default_scaling_rows());
    const std::string text = rpt::render_costmodel(doc);
    EXPECT_NE(text.find("= 30064771072 FLOP = 30.1 GFLOP"), std::string::npos) << text;
    EXPECT_NE(text.find("= 14663286784 FLOP = 14.7 GFLOP"), std::string::npos) << text;
    EXPECT_NE(text.find("18.2x"), std::string::npos);
    EXPECT_EQ(doc["scaling"].size(), 5u);
    EXPECT_EQ(doc["flops"]["attention_compressed"].get<std::uint64_t>(), 9639526400u);

    const std::vector<ScalingInput> full{{512, 512.0}};
    const auto unit = rpt::costmodel_report(in, full);
    EXPECT_NE(rpt::render_costmodel(unit).find("1.0x"), std::string::npos);
}

TEST(Report, AttentionSection) {
    const auto t = generate_trace(SynthConfig{});
    const SelectionConfig cfg(0.3);
    const auto run = run_cascade(t, cfg);
    const auto a = rpt::attention_section(t, run, cfg, {2, 4, 1});
    EXPECT_EQ(a["per_layer"].size(), 16u);
    EXPECT_EQ(a["violations"].get<std::uint64_t>(), 0u);
    auto doc = rpt::cascade_report(rpt::TraceInfo::of(t), cfg, run);
    doc["attention_error"] = a;
    EXPECT_NE(rpt::render_cascade_report(doc).find("attention bound audit"), std::string::npos);
}
