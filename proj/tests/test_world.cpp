#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "prefdyn/toy_world.hpp"

using namespace prefdyn;

TEST(ToySpaceLayout, SetsPartitionResponses) {
    std::array<int, 10> seen{};
    for (int r : ToySpace::kChosen) seen[r]++;
    for (int r : ToySpace::kRejected) seen[r]++;
    for (int r : ToySpace::kUnseen) seen[r]++;
    for (int r = 0; r < 10; ++r) EXPECT_EQ(seen[r], 1);
    for (int p = 0; p < ToySpace::kPrompts; ++p) EXPECT_EQ(ToySpace::optimal_of(p), p);
}

TEST(InitTargets, ScenarioOneRows) {
    const auto rows = init_targets(ScenarioId::S1);
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& row : rows) {
        for (int r = 0; r < 8; ++r) EXPECT_DOUBLE_EQ(row[r], 0.12);
        EXPECT_NEAR(row[8], 0.02, 1e-12);
        EXPECT_NEAR(row[9], 0.02, 1e-12);
    }
}

TEST(InitTargets, ScenarioFourRows) {
    const auto rows = init_targets(ScenarioId::S4);
    for (const auto& row : rows) {
        for (int r = 0; r < 8; ++r) EXPECT_DOUBLE_EQ(row[r], 0.02);
        EXPECT_NEAR(row[8], 0.42, 1e-12);
        EXPECT_NEAR(row[9], 0.42, 1e-12);
    }
}

TEST(InitTargets, MixedScenariosUseBothLevels) {
    const auto s2 = init_targets(ScenarioId::S2);
    const auto s3 = init_targets(ScenarioId::S3);
    for (int r : ToySpace::kChosen) {
        EXPECT_DOUBLE_EQ(s2[0][r], 0.02);
        EXPECT_DOUBLE_EQ(s3[0][r], 0.12);
    }
    for (int r : ToySpace::kRejected) {
        EXPECT_DOUBLE_EQ(s2[0][r], 0.12);
        EXPECT_DOUBLE_EQ(s3[0][r], 0.02);
    }
}

TEST(InitTargets, RowsSumToOneExactly) {
    for (ScenarioId s : {ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::S4}) {
        for (const auto& row : init_targets(s)) {
            double sum = 0.0;
            for (double v : row) {
                EXPECT_GE(v, 0.0);
                sum += v;
            }
            EXPECT_EQ(sum, 1.0);
        }
    }
}

TEST(SamplePairs, DiagonalChosenAndRejectedSet) {
    Rng rng(5, 1);
    const auto pairs = sample_pairs(64, rng);
    ASSERT_EQ(pairs.size(), 64u);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ(pairs[i].prompt, static_cast<int>(i % 4));
        EXPECT_EQ(pairs[i].chosen, pairs[i].prompt);
        EXPECT_GE(pairs[i].rejected, 4);
        EXPECT_LE(pairs[i].rejected, 7);
    }
}

TEST(SamplePairs, SeededDeterminism) {
    Rng a(123, 1), b(123, 1);
    const auto pa = sample_pairs(40, a);
    const auto pb = sample_pairs(40, b);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_EQ(pa[i].rejected, pb[i].rejected);
    }
    Rng c(124, 1);
    const auto pc = sample_pairs(40, c);
    bool any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) any_diff = any_diff || pa[i].rejected != pc[i].rejected;
    EXPECT_TRUE(any_diff);
}

TEST(SamplePairs, RejectedIndexIsUniform) {
    Rng rng(2024, 1);
    const int n = 400000;
    const auto pairs = sample_pairs(n, rng);
    std::array<int, 4> counts{};
    for (const auto& p : pairs) counts[p.rejected - 4]++;
    const double expected = n / 4.0;
    double chi2 = 0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // chi^2 with 3 dof: mean 3, sd sqrt(6); 3-sigma bound
    EXPECT_LT(chi2, 3.0 + 3.0 * std::sqrt(6.0));
}

TEST(SamplePairs, OtherChosenModeDrawsFromChosenSet) {
    Rng rng(9, 1);
    const auto pairs = sample_pairs(200, rng, PairingMode::OtherChosen);
    for (const auto& p : pairs) {
        EXPECT_GE(p.rejected, 0);
        EXPECT_LE(p.rejected, 3);
        EXPECT_NE(p.rejected, p.chosen);
    }
}

TEST(SamplePairs, RejectsBadBatchSize) {
    Rng rng(1, 1);
    EXPECT_THROW(sample_pairs(0, rng), std::invalid_argument);
}
