#include "ada/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace ada;

TEST(GramOps, Independent) {
    EXPECT_EQ(gram_ops_independent(12, 512), 3145728u);
    EXPECT_EQ(gram_ops_independent(28, 512), 7340032u);
    EXPECT_EQ(gram_ops_independent(1, 1), 1u);
    EXPECT_THROW((void)gram_ops_independent(0, 5), config_error);
    EXPECT_THROW((void)gram_ops_independent(2, std::uint64_t{1} << 32), config_error);
}

TEST(GramOps, Cascade) {
    const std::vector<std::uint64_t> inh{4, 5}, valid{3, 5};
    // 10^2 + (16 + 6*3) + (25 + 5*5)
    EXPECT_EQ(gram_ops_cascade(10, inh, valid), 100u + 34u + 50u);
    EXPECT_EQ(gram_ops_cascade(10, {}, {}), 100u);
    const std::vector<std::uint64_t> one{1};
    EXPECT_THROW((void)gram_ops_cascade(10, inh, one), dimension_mismatch);
    const std::vector<std::uint64_t> big{11}, bigv{1};
    EXPECT_THROW((void)gram_ops_cascade(10, big, bigv), config_error);
    const std::vector<std::uint64_t> r3{3}, r4{4};
    EXPECT_THROW((void)gram_ops_cascade(10, r3, r4), config_error);
}

TEST(GramOps, ConstantRepsClosedForm) {
    // r inherited and all valid at each of L-1 steps: T^2 + (L-1) * T * r
    for (std::uint64_t r : {1u, 7u, 64u}) {
        const std::vector<std::uint64_t> rs(7, r);
        EXPECT_EQ(gram_ops_cascade(64, rs, rs), 64u * 64u + 7u * 64u * r);
    }
}

TEST(SelectionFlops, SmallCaseByHand) {
    CostModelInput in{2, 4, 3, 2, 5, 2, std::nullopt, {}};
    const auto f = selection_flops(in);
    EXPECT_EQ(f.independent, 2u * 16u * 3u);
    EXPECT_EQ(f.cascade, 4u * 3u * (4u + 1u * 2u));
    EXPECT_EQ(f.attention_compressed, 2u * 2u * 4u * 2u * 5u);
    in.attention_r_bar = 1;
    EXPECT_EQ(selection_flops(in).attention_compressed, 2u * 2u * 1u * 2u * 5u);
}

TEST(SelectionFlops, Validation) {
    CostModelInput in{28, 512, 4096, 256, 16, 240, std::nullopt, {}};
    EXPECT_NO_THROW((void)selection_flops(in));
    in.r_bar = 513;
    EXPECT_THROW((void)selection_flops(in), config_error);
    in.r_bar = 0;
    EXPECT_THROW((void)selection_flops(in), config_error);
    in.r_bar = 240;
    in.attention_r_bar = 0;
    EXPECT_THROW((void)selection_flops(in), config_error);
    in.attention_r_bar.reset();
    in.r_sequence = {1, 600};
    EXPECT_THROW((void)selection_flops(in), config_error);
    CostModelInput huge{std::uint64_t{1} << 40, std::uint64_t{1} << 20, 1024, 1, 1, 1, std::nullopt, {}};
    EXPECT_THROW((void)selection_flops(huge), config_error);
}

TEST(Scaling, Rows) {
    const std::vector<ScalingInput> rows{{512, 512.0}, {100, 25.0}};
    const auto out = scaling_table(4, rows);
    EXPECT_DOUBLE_EQ(out[0].selection_speedup, 1.0);
    EXPECT_DOUBLE_EQ(out[0].savings_asymptotic, 0.0);
    EXPECT_DOUBLE_EQ(out[0].savings_exact, 0.0);
    EXPECT_DOUBLE_EQ(out[1].ratio_T_over_r, 4.0);
    EXPECT_DOUBLE_EQ(out[1].savings_asymptotic, 0.75);
    EXPECT_DOUBLE_EQ(out[1].savings_exact, 1.0 - (100.0 + 3.0 * 25.0) / 400.0);
    const std::vector<ScalingInput> bad{{100, 0.0}};
    EXPECT_THROW((void)scaling_table(4, bad), config_error);
    const std::vector<ScalingInput> bad2{{100, 101.0}};
    EXPECT_THROW((void)scaling_table(4, bad2), config_error);
}

TEST(Scaling, ExactSavingsApproachAsymptoticWithDepth) {
    const std::vector<ScalingInput> row{{1000, 100.0}};
    double prev = -1.0;
    for (std::uint64_t L : {1u, 2u, 10u, 100u, 10000u}) {
        const auto r = scaling_table(L, row)[0];
        EXPECT_LE(r.savings_exact, r.savings_asymptotic);
        EXPECT_GT(r.savings_exact, prev);
        prev = r.savings_exact;
    }
    EXPECT_NEAR(prev, 0.9, 1e-3);
}

TEST(Compression, Ratios) {
    const auto c = compression_summary(512, 69);
    EXPECT_NEAR(c.linear_ratio, 7.42, 0.005);
    EXPECT_NEAR(compression_summary(512, 262).quadratic_ratio, 3.82, 0.005);
    EXPECT_THROW((void)compression_summary(5, 0), config_error);
    EXPECT_THROW((void)compression_summary(5, 6), config_error);
}

TEST(Savings, Fraction) {
    EXPECT_DOUBLE_EQ(savings_fraction(25, 100), 0.75);
    EXPECT_DOUBLE_EQ(savings_fraction(100, 100), 0.0);
    EXPECT_THROW((void)savings_fraction(1, 0), config_error);
}
