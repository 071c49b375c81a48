#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "prefdyn/mlp_policy.hpp"
#include "prefdyn/rng.hpp"
#include "prefdyn/toy_world.hpp"

using namespace prefdyn;

namespace {

double loss_of(const MlpPolicy& policy, int prompt, const std::vector<double>& g) {
    const auto probs = policy.forward(prompt);
    double loss = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) loss += g[k] * probs[k];
    return loss;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

} // namespace

TEST(Forward, ZeroedOutputLayerIsUniform) {
    MlpPolicy policy(4, 8, 10, 123);
    for (double& w : policy.w3()) w = 0.0;
    for (double& b : policy.b3()) b = 0.0;
    const auto probs = policy.forward(2);
    for (double p : probs) EXPECT_DOUBLE_EQ(p, 0.1);
}

TEST(Forward, NormalizedAndDeterministic) {
    MlpPolicy policy(4, 64, 10, 7);
    for (int p = 0; p < 4; ++p) {
        const auto probs = policy.forward(p);
        double sum = 0;
        for (double v : probs) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    MlpPolicy twin(4, 64, 10, 7);
    EXPECT_EQ(policy.params(), twin.params());
    EXPECT_EQ(policy.forward(1), twin.forward(1));
    EXPECT_THROW(policy.forward(4), std::out_of_range);
    EXPECT_THROW(policy.forward(-1), std::out_of_range);
}

TEST(Backward, ZeroUpstreamGivesZeroGrad) {
    MlpPolicy policy(4, 16, 10, 5);
    const std::vector<double> zeros(10, 0.0);
    for (double g : policy.backward(0, zeros)) EXPECT_EQ(g, 0.0);
}

TEST(Backward, SoftmaxJacobianOneHotPattern) {
    // with upstream e_k, the logit gradient must be s_k(delta_ik - s_i),
    // which the b3 slot exposes directly
    MlpPolicy policy(4, 16, 10, 9);
    const auto probs = policy.forward(1);
    const int k = 4;
    std::vector<double> g(10, 0.0);
    g[k] = 1.0;
    const auto grad = policy.backward(1, g);
    // b3 gradient lives in the last n_responses entries of the flat layout
    const std::size_t off_b3 = policy.param_count() - 10;
    for (int i = 0; i < 10; ++i) {
        const double expect = probs[k] * ((i == k ? 1.0 : 0.0) - probs[i]);
        EXPECT_NEAR(grad[off_b3 + i], expect, 1e-15);
    }
    EXPECT_THROW(policy.backward(1, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(Backward, MatchesParameterFiniteDifferences) {
    MlpPolicy policy(4, 6, 10, 31);
    Rng rng(77);
    std::vector<double> g(10);
    for (double& v : g) v = rng.uniform(-1.0, 1.0);
    const int prompt = 2;
    const auto grad = policy.backward(prompt, g);
    const double h = 1e-5;
    int checked = 0;
    for (std::size_t i = 0; i < policy.param_count(); ++i) {
        const double saved = policy.params()[i];
        policy.params()[i] = saved + h;
        const double up = loss_of(policy, prompt, g);
        policy.params()[i] = saved - h;
        const double dn = loss_of(policy, prompt, g);
        policy.params()[i] = saved;
        const double numeric = (up - dn) / (2 * h);
        if (std::abs(numeric) < 1e-7 && std::abs(grad[i]) < 1e-7) continue; // untouched weight
        EXPECT_LT(rel(grad[i], numeric), 1e-4) << "param " << i;
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(Backward, DirectionalDerivative) {
    MlpPolicy policy(4, 64, 10, 11);
    Rng rng(13);
    std::vector<double> g(10);
    for (double& v : g) v = rng.uniform(-1.0, 1.0);
    const int prompt = 0;
    const auto grad = policy.backward(prompt, g);
    std::vector<double> dir(policy.param_count());
    for (double& v : dir) v = rng.uniform(-1.0, 1.0);
    double dot = 0;
    for (std::size_t i = 0; i < dir.size(); ++i) dot += grad[i] * dir[i];
    const double h = 1e-6;
    MlpPolicy up = policy, dn = policy;
    for (std::size_t i = 0; i < dir.size(); ++i) {
        up.params()[i] += h * dir[i];
        dn.params()[i] -= h * dir[i];
    }
    const double numeric = (loss_of(up, prompt, g) - loss_of(dn, prompt, g)) / (2 * h);
    EXPECT_LT(rel(dot, numeric), 1e-4);
}

TEST(ApplyUpdate, SgdSemantics) {
    std::vector<double> theta{2.0, -1.0};
    OptimizerState state(OptimizerKind::Sgd, theta.size());
    apply_update(theta, {0.5, -0.25}, state, 1.0);
    EXPECT_DOUBLE_EQ(theta[0], 1.5);
    EXPECT_DOUBLE_EQ(theta[1], -0.75);

    std::vector<double> frozen{0.3};
    apply_update(frozen, {0.0}, state, 1.0);
    EXPECT_DOUBLE_EQ(frozen[0], 0.3);
}

TEST(ApplyUpdate, AdamStepApproachesLearningRate) {
    std::vector<double> theta{0.0};
    OptimizerState state(OptimizerKind::Adam, 1);
    const double lr = 1e-3, g = 0.37;
    double prev = theta[0];
    double last_step = 0;
    for (int t = 0; t < 10000; ++t) {
        apply_update(theta, {g}, state, lr);
        last_step = prev - theta[0];
        prev = theta[0];
    }
    EXPECT_NEAR(last_step, lr, 1e-6);
}

TEST(ApplyUpdate, RejectsNonFiniteGradients) {
    std::vector<double> theta{1.0};
    OptimizerState state(OptimizerKind::Adam, 1);
    EXPECT_THROW(apply_update(theta, {std::nan("")}, state, 1e-3), std::runtime_error);
    EXPECT_THROW(apply_update(theta, {1e400 > 0 ? INFINITY : 0.0}, state, 1e-3), std::runtime_error);
    EXPECT_THROW(apply_update(theta, {0.0, 0.0}, state, 1e-3), std::invalid_argument);
}

TEST(FitToTargets, ReachesScenarioOneTargets) {
    MlpPolicy policy(4, 64, 10, 7);
    const auto targets = init_targets(ScenarioId::S1);
    fit_to_targets(policy, targets);
    for (int p = 0; p < 4; ++p) {
        const auto probs = policy.forward(p);
        for (int r = 0; r < 10; ++r) EXPECT_NEAR(probs[r], targets[p][r], 0.01);
    }
}

TEST(FitToTargets, ReachesScenarioFourTargets) {
    MlpPolicy policy(4, 64, 10, 7);
    const auto targets = init_targets(ScenarioId::S4);
    fit_to_targets(policy, targets);
    for (int p = 0; p < 4; ++p) {
        const auto probs = policy.forward(p);
        EXPECT_NEAR(probs[8], 0.42, 0.01);
        EXPECT_NEAR(probs[9], 0.42, 0.01);
    }
}

TEST(FitToTargets, AlreadyMatchedReturnsWithoutUpdates) {
    MlpPolicy policy(4, 32, 10, 21);
    fit_to_targets(policy, init_targets(ScenarioId::S1));
    std::vector<std::vector<double>> own_output;
    for (int p = 0; p < 4; ++p) own_output.push_back(policy.forward(p));
    const auto before = policy.params();
    fit_to_targets(policy, own_output);
    EXPECT_EQ(policy.params(), before);
}

TEST(FitToTargets, BudgetExhaustionCarriesResidual) {
    MlpPolicy policy(4, 64, 10, 7);
    try {
        fit_to_targets(policy, init_targets(ScenarioId::S1), /*max_steps=*/3);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_GT(e.residual, 0.01);
    }
}

TEST(ReferencePolicySnapshot, CachesForwardTable) {
    MlpPolicy policy(4, 32, 10, 3);
    const auto ref = ReferencePolicy::snapshot(policy);
    for (int p = 0; p < 4; ++p) {
        const auto probs = policy.forward(p);
        double sum = 0;
        for (int r = 0; r < 10; ++r) {
            EXPECT_EQ(ref(p, r), probs[r]);
            sum += ref(p, r);
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Serialization, RoundTripsBitExactly) {
    MlpPolicy policy(4, 64, 10, 99);
    fit_to_targets(policy, init_targets(ScenarioId::S2));
    const std::string path =
        (std::filesystem::temp_directory_path() / "prefdyn_policy_roundtrip.txt").string();
    save_policy(policy, path);
    const MlpPolicy loaded = load_policy(path);
    EXPECT_EQ(loaded.params(), policy.params());
    std::filesystem::remove(path);
}

TEST(Determinism, IdenticalSeedIdenticalTrajectory) {
    MlpPolicy a(4, 64, 10, 7);
    MlpPolicy b(4, 64, 10, 7);
    fit_to_targets(a, init_targets(ScenarioId::S1));
    fit_to_targets(b, init_targets(ScenarioId::S1));
    EXPECT_EQ(a.params(), b.params());
}
