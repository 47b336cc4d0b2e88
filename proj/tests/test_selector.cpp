#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ada;

TEST(SelectionConfig, ValidatesTau) {
    EXPECT_THROW(SelectionConfig(0.0), config_error);
    EXPECT_THROW(SelectionConfig(1.0), config_error);
    EXPECT_THROW(SelectionConfig(-0.2), config_error);
    EXPECT_THROW(SelectionConfig(std::nan("")), config_error);
    EXPECT_DOUBLE_EQ(SelectionConfig(0.3).threshold(), 1.0 - 0.09);
    EXPECT_EQ(SelectionConfig(0.3).mode(), ComparisonMode::EarlierRepsOnly);
}

TEST(SelectionConfig, ThresholdIsInclusiveForRedundancy) {
    const SelectionConfig cfg(0.5);
    EXPECT_TRUE(cfg.is_redundant(0.75));
    EXPECT_FALSE(cfg.is_redundant(std::nextafter(0.75, 0.0)));
}

TEST(SelectionConfig, ParsesModes) {
    EXPECT_EQ(parse_comparison_mode("reps-only"), ComparisonMode::EarlierRepsOnly);
    EXPECT_EQ(parse_comparison_mode("all-earlier"), ComparisonMode::AllEarlier);
    EXPECT_THROW((void)parse_comparison_mode("all"), config_error);
    EXPECT_EQ(to_string(ComparisonMode::AllEarlier), "all-earlier");
}

TEST(Select, IdenticalRowsGiveOneRep) {
    Matrix x(6, 3);
    for (std::size_t t = 0; t < 6; ++t) {
        x(t, 0) = 1.0 + static_cast<double>(t);
        x(t, 1) = 2.0 * (1.0 + static_cast<double>(t));
    }
    const auto sel = select_independent(fixture::layer(x), SelectionConfig(0.3));
    EXPECT_EQ(sel.reps.indices(), std::vector<std::size_t>{0});
    EXPECT_EQ(sel.gram_entry_count, 36u);
}

TEST(Select, OrthogonalRowsAreAllReps) {
    Matrix x(5, 5);
    for (std::size_t t = 0; t < 5; ++t) {
        x(t, t) = 3.0;
    }
    for (auto mode : {ComparisonMode::AllEarlier, ComparisonMode::EarlierRepsOnly}) {
        EXPECT_EQ(select_independent(fixture::layer(x), SelectionConfig(0.3, mode)).reps.size(), 5u);
    }
}

TEST(Select, SignIsIgnored) {
    Matrix x(2, 2, {1.0, 1.0, -2.0, -2.0});
    EXPECT_EQ(select_independent(fixture::layer(x), SelectionConfig(0.3)).reps.size(), 1u);
}

TEST(Select, SingleToken) {
    const auto sel = select_independent(fixture::layer(Matrix(1, 3, {0.0, 1.0, 0.0})), SelectionConfig(0.3));
    EXPECT_EQ(sel.reps.indices(), std::vector<std::size_t>{0});
}

TEST(Select, ModesDifferOnAChain) {
    // 0 deg, 20 deg, 40 deg: 20 is redundant with 0; 40 is redundant with 20 but not with 0.
    const auto x = fixture::layer(fixture::planar({0, 20, 40}));
    EXPECT_EQ(select_independent(x, SelectionConfig(0.3, ComparisonMode::AllEarlier)).reps.indices(),
              std::vector<std::size_t>{0});
    EXPECT_EQ(select_independent(x, SelectionConfig(0.3, ComparisonMode::EarlierRepsOnly)).reps.indices(),
              (std::vector<std::size_t>{0, 2}));
}

TEST(Select, ZeroRowThrows) {
    Matrix x(3, 2, {1, 0, 0, 0, 0, 1});
    EXPECT_THROW((void)select_independent(fixture::layer(x), SelectionConfig(0.3)), zero_norm_row);
}

TEST(Select, MatchesNaiveScan) {
    Rng rng(11);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t T = 1 + rng.below(48);
        const std::size_t d = 2 + rng.below(10);
        const Matrix x = fixture::clustered(T, d, 1 + rng.below(6), rng.uniform(0.0, 0.6), rng);
        for (double tau : {0.1, 0.3, 0.5}) {
            for (bool reps_only : {false, true}) {
                const SelectionConfig cfg(tau, reps_only ? ComparisonMode::EarlierRepsOnly : ComparisonMode::AllEarlier);
                EXPECT_EQ(select_independent(fixture::layer(x), cfg).reps.indices(),
                          oracle::naive_select(x, tau, reps_only));
            }
        }
    }
}

TEST(Select, GammasSeparateRepsFromRedundant) {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const Matrix x = fixture::clustered(40, 6, 5, 0.3, rng);
        for (auto mode : {ComparisonMode::AllEarlier, ComparisonMode::EarlierRepsOnly}) {
            const SelectionConfig cfg(0.3, mode);
            const auto sel = select_independent(fixture::layer(x), cfg);
            EXPECT_NO_THROW(sel.reps.check_gammas(cfg));
            for (std::size_t t = 0; t < 40; ++t) {
                EXPECT_EQ(sel.reps.contains(t), !cfg.is_redundant(sel.reps.gammas()[t])) << t;
            }
            EXPECT_EQ(sel.reps.gammas()[0], 0.0);
        }
    }
}

TEST(Select, RepsOnlyIsASeparatedCover) {
    Rng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        const Matrix x = fixture::clustered(50, 8, 6, 0.4, rng);
        const SelectionConfig cfg(0.3);
        const auto reps = select_independent(fixture::layer(x), cfg).reps;
        const GramMatrix g = compute_gram(row_normalize(x));
        for (std::size_t a : reps.indices()) {
            for (std::size_t b : reps.indices()) {
                if (a != b) {
                    EXPECT_FALSE(cfg.is_redundant(std::abs(g(a, b))));
                }
            }
        }
        for (std::size_t t = 0; t < 50; ++t) {
            if (reps.contains(t)) {
                continue;
            }
            bool covered = false;
            for (std::size_t s : reps.indices()) {
                covered = covered || (s < t && cfg.is_redundant(std::abs(g(s, t))));
            }
            EXPECT_TRUE(covered) << t;
        }
    }
}

TEST(Gram, SymmetricUnitDiagonal) {
    Rng rng(2);
    const GramMatrix g = compute_gram(row_normalize(fixture::gaussian(12, 5, rng)));
    for (std::size_t s = 0; s < 12; ++s) {
        EXPECT_NEAR(g(s, s), 1.0, 1e-12);
        for (std::size_t t = 0; t < 12; ++t) {
            EXPECT_EQ(g(s, t), g(t, s));
            EXPECT_LE(std::abs(g(s, t)), 1.0 + 1e-12);
        }
    }
    EXPECT_THROW(GramMatrix(Matrix(2, 3)), dimension_mismatch);
    EXPECT_THROW(GramMatrix(Matrix(2, 2, {1.0, 0.5, 0.4, 1.0})), invariant_violation);
    EXPECT_THROW(GramMatrix(Matrix(2, 2, {2.0, 0.0, 0.0, 1.0})), invariant_violation);
}

TEST(RepSet, Validation) {
    EXPECT_THROW(RepSet(3, {}, std::vector<double>(3)), empty_rep_set);
    EXPECT_THROW(RepSet(3, {1}, std::vector<double>(3)), invariant_violation);
    EXPECT_THROW(RepSet(3, {0, 2, 1}, std::vector<double>(3)), invariant_violation);
    EXPECT_THROW(RepSet(3, {0, 0}, std::vector<double>(3)), invariant_violation);
    EXPECT_THROW(RepSet(3, {0, 3}, std::vector<double>(3)), invariant_violation);
    EXPECT_THROW(RepSet(3, {0}, std::vector<double>(2)), dimension_mismatch);
    const RepSet r = RepSet::from_indices(4, {2, 0});
    EXPECT_EQ(r.indices(), (std::vector<std::size_t>{0, 2}));
    EXPECT_TRUE(r.contains(2));
    EXPECT_FALSE(r.contains(1));
    EXPECT_FALSE(r.contains(99));
}

TEST(AssignNearest, PicksMaxAbsCosineAndBreaksTiesLow) {
    // reps 0 (0 deg) and 1 (90 deg); token 2 at 30 deg -> 0; token 3 at 120 deg -> 1;
    // token 4 at 45 deg ties -> 0; token 5 at 170 deg -> 0 via |cos|.
    Matrix x = fixture::planar({0, 90, 30, 120, 45, 170});
    x(1, 0) = 0.0;
    x(4, 0) = 1.0;
    x(4, 1) = 1.0;
    const RepSet reps = RepSet::from_indices(6, {0, 1});
    const auto a = assign_nearest(compute_gram(row_normalize(x)), reps);
    const auto b = assign_nearest(row_normalize(x), reps);
    EXPECT_EQ(a.nearest, (std::vector<std::size_t>{0, 1, 0, 1, 0, 0}));
    EXPECT_EQ(a.nearest, b.nearest);
    for (std::size_t t = 0; t < 6; ++t) {
        EXPECT_NEAR(a.similarity[t], b.similarity[t], 1e-15);
    }
    EXPECT_THROW((void)assign_nearest(row_normalize(x), RepSet::from_indices(5, {0})), dimension_mismatch);
}
