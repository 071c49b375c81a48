#include <gtest/gtest.h>

#include <cmath>

#include "prefdyn/oracle.hpp"
#include "prefdyn/trainer.hpp"

using namespace prefdyn;

TEST(FiniteDiff, DpoHandPoint) {
    const auto rep = finite_diff(ObjectiveSpec::dpo(0.5), {0.5, 0.5, 0.5, 0.5}, 2e-7);
    EXPECT_NEAR(rep.numeric.d_plus, -0.5, 1e-6);
    EXPECT_NEAR(rep.numeric.d_minus, 0.5, 1e-6);
    EXPECT_LT(rep.rel_err_plus, 1e-6);
    EXPECT_LT(rep.rel_err_minus, 1e-6);
}

TEST(FiniteDiff, RmAtEqualRewards) {
    const auto rep = finite_diff_rm({1.3, 1.3});
    EXPECT_NEAR(rep.numeric.d_plus, -0.5, 1e-6);
    EXPECT_NEAR(rep.numeric.d_minus, 0.5, 1e-6);
    EXPECT_LT(rep.rel_err_plus, 1e-9);
}

TEST(FiniteDiff, SlicNearHingeUsesOneSidedStencil) {
    // bracket is ~1e-9 away from the boundary: a central step would mix
    // branches, the one-sided fallback must still match the active formula
    const double pp = 0.3, pm = 0.25;
    const double margin = std::log(pp) - std::log(pm);
    const ObjectiveSpec spec = ObjectiveSpec::slic(margin + 1e-9, 0.1);
    const LikelihoodPoint p{pp, pm, 0.12, 0.12};
    ASSERT_TRUE(slic_hinge_active(p, spec));
    const auto rep = finite_diff(spec, p);
    EXPECT_LT(rep.rel_err_plus, 1e-5);
    EXPECT_LT(rep.rel_err_minus, 1e-5);
    EXPECT_NEAR(rep.analytic.d_plus, -(1.0 + 0.1) / pp, 1e-12);
}

TEST(FiniteDiff, RejectsStepsReachingBoundary) {
    EXPECT_THROW(finite_diff(ObjectiveSpec::dpo(0.5), {0.5, 1e-9, 0.5, 0.5}, 2.0),
                 std::invalid_argument);
}

TEST(FdBattery, AllObjectivesWithinTolerance) {
    for (Variant v : {Variant::Dpo, Variant::FlexDpo, Variant::SftDpo, Variant::Ipo, Variant::Slic,
                      Variant::SimPo, Variant::Rm}) {
        const auto worst = fd_battery(v, 300, 42);
        EXPECT_LT(worst.rel_err_plus, 1e-5) << variant_name(v) << " " << worst.description;
        EXPECT_LT(worst.rel_err_minus, 1e-5) << variant_name(v) << " " << worst.description;
    }
}

TEST(Corollary1, RoundingLevelOnly) {
    EXPECT_LT(check_corollary1(1000, 7), 1e-10);
    // forced ratios
    const GradientPair g3 = dpo_grad({0.3, 0.1, 0.2, 0.4}, ObjectiveSpec::dpo(0.3));
    EXPECT_NEAR(g3.d_minus / g3.d_plus, -3.0, 1e-10);
    const GradientPair g1 = dpo_grad({0.2, 0.2, 0.4, 0.1}, ObjectiveSpec::dpo(0.7));
    EXPECT_NEAR(g1.d_minus / g1.d_plus, -1.0, 1e-12);
}

TEST(Corollary2, DpoSlopesMatchTheory) {
    const auto rep = check_corollary2(ObjectiveSpec::dpo(0.1), 0.5);
    EXPECT_NEAR(rep.slope_plus, 0.1, 0.02);
    EXPECT_NEAR(rep.slope_minus, -0.9, 0.02);
    EXPECT_EQ(rep.class_plus, LimitKind::Zero);
    EXPECT_EQ(rep.class_minus, LimitKind::Infinity);
    ASSERT_GE(rep.grid.size(), 8u);
    for (std::size_t i = 1; i < rep.grid.size(); ++i) EXPECT_LT(rep.grid[i], rep.grid[i - 1]);
}

TEST(Corollary2, SftDpoChosenGradientPlateaus) {
    const double gamma = 0.5, pi_plus = 0.5;
    const auto rep = check_corollary2(ObjectiveSpec::sft_dpo(0.5, gamma), pi_plus);
    EXPECT_EQ(rep.class_plus, LimitKind::Constant);
    EXPECT_NEAR(rep.mag_plus.back(), gamma / pi_plus, 0.01);
    EXPECT_EQ(rep.class_minus, LimitKind::Infinity);
}

TEST(Corollary2, FlexSlopesFollowBetaMinus) {
    const auto rep = check_corollary2(ObjectiveSpec::flex_dpo(0.3, 0.2), 0.5);
    EXPECT_NEAR(rep.slope_plus, 0.2, 0.02);
    EXPECT_NEAR(rep.slope_minus, -0.8, 0.02);
}

TEST(Corollary2, SlopeStableUnderGridRefinement) {
    const auto coarse = check_corollary2(ObjectiveSpec::dpo(0.1), 0.5, 8);
    const auto fine = check_corollary2(ObjectiveSpec::dpo(0.1), 0.5, 16);
    EXPECT_LT(std::abs(coarse.slope_plus - fine.slope_plus), 0.005);
    EXPECT_LT(std::abs(coarse.slope_minus - fine.slope_minus), 0.005);
}

TEST(Corollary3, PassesOnScenarioOneRun) {
    TrainConfig cfg;
    cfg.epochs = 250;
    cfg.seed = 3;
    const auto result = run_dpo_training(cfg);
    ASSERT_FALSE(result.diverged);
    const auto rep = check_corollary3(result.log);
    EXPECT_TRUE(rep.pass) << rep.failure;
    EXPECT_LE(rep.max_row_sum_err, 1e-9);
    EXPECT_LE(rep.max_mass_residual, 1e-8);
}

TEST(Corollary3, RejectsMalformedLog) {
    MetricsLog log;
    log.rows.resize(3);
    const auto rep = check_corollary3(log);
    EXPECT_FALSE(rep.pass);
    EXPECT_NE(rep.failure.find("malformed"), std::string::npos);
}

TEST(Corollary3, FailsOnNormalizationViolation) {
    TrainConfig cfg;
    cfg.epochs = 120;
    cfg.seed = 4;
    auto result = run_dpo_training(cfg);
    result.log.dist_snapshots[40][2][5] += 1e-4; // corrupt one cell
    const auto rep = check_corollary3(result.log);
    EXPECT_FALSE(rep.pass);
    EXPECT_GT(rep.max_row_sum_err, 1e-9);
}

TEST(SimpoLemma, ThreeCases) {
    const auto inf_rep = check_simpo_lemma(ObjectiveSpec::simpo(0.5, 0.0, 1, 1), 0.5);
    EXPECT_TRUE(inf_rep.matches);
    EXPECT_EQ(inf_rep.sweep.class_minus, LimitKind::Infinity);

    const auto zero_rep = check_simpo_lemma(ObjectiveSpec::simpo(2.0, 0.0, 1, 1), 0.5);
    EXPECT_TRUE(zero_rep.matches);
    EXPECT_EQ(zero_rep.sweep.class_minus, LimitKind::Zero);

    const auto const_rep = check_simpo_lemma(ObjectiveSpec::simpo(1.0, 0.0, 1, 1), 0.5);
    EXPECT_TRUE(const_rep.matches);
    EXPECT_EQ(const_rep.sweep.class_minus, LimitKind::Constant);
    EXPECT_NEAR(const_rep.sweep.plateau_minus, 2.0, 0.02);
    EXPECT_LT(const_rep.plateau_rel_err, 0.01);
}

TEST(RmBalance, ExactlyZeroEverywhere) {
    EXPECT_EQ(check_rm_balance(1000, 11), 0.0);
    const GradientPair g = rm_grad({250.0, -250.0});
    EXPECT_EQ(g.d_plus + g.d_minus, 0.0);
    EXPECT_TRUE(std::isfinite(g.d_plus));
}
