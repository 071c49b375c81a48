#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prefdyn/metrics.hpp"
#include "prefdyn/mlp_policy.hpp"
#include "prefdyn/objectives.hpp"
#include "prefdyn/reward_net.hpp"
#include "prefdyn/toy_world.hpp"

namespace prefdyn {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
    ScenarioId scenario = ScenarioId::S1;
    ObjectiveSpec objective = ObjectiveSpec::dpo(0.1);
    long epochs = 500;
    int batch_size = 4; // one pass over all prompts per step
    double learning_rate = 1e-3;
    std::uint64_t seed = 7;
    long log_every = 1;
    OptimizerKind optimizer = OptimizerKind::Adam;
    PairingMode pairing = PairingMode::RejectedSet;
    int hidden = 64;
    long fit_max_steps = 50000;
    double fit_lr = 0.02;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
        if (log_every < 1) throw ConfigError("log_every must be >= 1");
        if (hidden < 1) throw ConfigError("hidden must be >= 1");
    }
};

inline std::vector<std::pair<std::string, std::string>> config_echo(const TrainConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("scenario", std::to_string(scenario_number(cfg.scenario)));
    kv.emplace_back("objective", variant_name(cfg.objective.variant));
    kv.emplace_back("beta", format_sig9(cfg.objective.beta));
    kv.emplace_back("beta_plus", format_sig9(cfg.objective.beta_plus));
    kv.emplace_back("beta_minus", format_sig9(cfg.objective.beta_minus));
    kv.emplace_back("gamma", format_sig9(cfg.objective.gamma));
    kv.emplace_back("eta", format_sig9(cfg.objective.eta));
    kv.emplace_back("delta", format_sig9(cfg.objective.delta));
    kv.emplace_back("margin_gamma", format_sig9(cfg.objective.margin_gamma));
    kv.emplace_back("len_plus", std::to_string(cfg.objective.len_plus));
    kv.emplace_back("len_minus", std::to_string(cfg.objective.len_minus));
    kv.emplace_back("epochs", std::to_string(cfg.epochs));
    kv.emplace_back("batch_size", std::to_string(cfg.batch_size));
    kv.emplace_back("learning_rate", format_sig9(cfg.learning_rate));
    kv.emplace_back("seed", std::to_string(cfg.seed));
    kv.emplace_back("log_every", std::to_string(cfg.log_every));
    kv.emplace_back("optimizer", cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd");
    kv.emplace_back("pairing", cfg.pairing == PairingMode::RejectedSet ? "rejected-set" : "other-chosen");
    kv.emplace_back("hidden", std::to_string(cfg.hidden));
    return kv;
}

struct TrainResult {
    MetricsLog log;
    MlpPolicy policy;
    bool diverged = false;
    std::string error;
};

namespace detail {

struct LikelihoodStats {
    MetricsRow row; // likelihood fields only
    std::vector<std::vector<double>> dists;
};

inline LikelihoodStats likelihood_stats(const MlpPolicy& policy) {
    LikelihoodStats st;
    st.row.avg_chosen = 0;
    st.row.min_chosen = 1;
    st.row.avg_rejected = 0;
    st.row.max_rejected = 0;
    st.row.avg_unseen = 0;
    for (int p = 0; p < ToySpace::kPrompts; ++p) {
        auto probs = policy.forward(p);
        const double diag = probs[ToySpace::optimal_of(p)];
        st.row.avg_chosen += diag;
        st.row.min_chosen = std::min(st.row.min_chosen, diag);
        for (int r : ToySpace::kRejected) {
            st.row.avg_rejected += probs[r];
            st.row.max_rejected = std::max(st.row.max_rejected, probs[r]);
        }
        for (int r : ToySpace::kUnseen) st.row.avg_unseen += probs[r];
        st.dists.push_back(std::move(probs));
    }
    st.row.avg_chosen /= ToySpace::kPrompts;
    st.row.avg_rejected /= ToySpace::kPrompts * ToySpace::kRejected.size();
    st.row.avg_unseen /= ToySpace::kPrompts * ToySpace::kUnseen.size();
    return st;
}

// Does the objective's implied reward rank the chosen response above the
// rejected one at this point?
inline bool implicit_reward_correct(const LikelihoodPoint& pt, const ObjectiveSpec& spec) {
    const double lpp = std::log(std::max(pt.pi_plus, 1e-300));
    const double lpm = std::log(std::max(pt.pi_minus, 1e-300));
    const double lp0p = std::log(std::max(pt.pi0_plus, 1e-300));
    const double lp0m = std::log(std::max(pt.pi0_minus, 1e-300));
    switch (spec.variant) {
        case Variant::FlexDpo:
            return spec.beta_plus * (lpp - lp0p) > spec.beta_minus * (lpm - lp0m);
        case Variant::SimPo:
            return spec.beta / spec.len_plus * lpp > spec.beta / spec.len_minus * lpm;
        case Variant::Slic:
            return lpp > lpm;
        default:
            return lpp - lp0p > lpm - lp0m;
    }
}

} // namespace detail

// DPO-family training on the toy world: SFT-fit to the scenario targets,
// snapshot the reference, then per epoch sample pairs, push per-pair
// likelihood gradients through the policy, and take one optimizer step on
// the batch average. Deterministic per seed.
inline TrainResult run_dpo_training(const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.objective.variant == Variant::Rm) {
        throw ConfigError("run_dpo_training: RM objective trains a reward net, not the policy");
    }
    MlpPolicy policy(ToySpace::kPrompts, cfg.hidden, ToySpace::kResponses, cfg.seed);
    fit_to_targets(policy, init_targets(cfg.scenario), cfg.fit_max_steps, cfg.fit_lr);
    const ReferencePolicy ref = ReferencePolicy::snapshot(policy);

    // sampling stream is independent of initialization, so pair sequences
    // match across scenarios at equal seed
    Rng pair_rng(cfg.seed, /*stream=*/1);
    OptimizerState opt(cfg.optimizer, policy.param_count());

    TrainResult result{MetricsLog{}, std::move(policy), false, ""};
    result.log.config = config_echo(cfg);

    auto log_epoch = [&](long epoch, double gplus, double gminus, double loss, double acc) {
        auto st = detail::likelihood_stats(result.policy);
        st.row.epoch = epoch;
        st.row.grad_plus_mean = gplus;
        st.row.grad_minus_mean = gminus;
        st.row.loss = loss;
        result.log.rows.push_back(st.row);
        result.log.dist_snapshots.push_back(std::move(st.dists));
        result.log.implicit_accuracy.push_back(acc);
    };
    log_epoch(0, 0.0, 0.0, 0.0, 0.0); // initial state after the SFT fit

    std::vector<double> grad(result.policy.param_count());
    std::vector<double> dloss_dprobs(ToySpace::kResponses);
    for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto pairs = sample_pairs(cfg.batch_size, pair_rng, cfg.pairing);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss_sum = 0, gplus_sum = 0, gminus_sum = 0;
        int correct = 0;
        bool finite = true;
        for (const auto& pr : pairs) {
            const auto probs = result.policy.forward(pr.prompt);
            const LikelihoodPoint pt{probs[pr.chosen], probs[pr.rejected],
                                     ref(pr.prompt, pr.chosen), ref(pr.prompt, pr.rejected)};
            const double loss = objective_loss(pt, cfg.objective);
            const GradientPair gp = objective_grad(pt, cfg.objective);
            if (!std::isfinite(loss) || !std::isfinite(gp.d_plus) || !std::isfinite(gp.d_minus)) {
                finite = false;
                break;
            }
            loss_sum += loss;
            gplus_sum += std::abs(gp.d_plus);
            gminus_sum += std::abs(gp.d_minus);
            correct += detail::implicit_reward_correct(pt, cfg.objective) ? 1 : 0;
            std::fill(dloss_dprobs.begin(), dloss_dprobs.end(), 0.0);
            dloss_dprobs[pr.chosen] = gp.d_plus;
            dloss_dprobs[pr.rejected] = gp.d_minus;
            const auto pg = result.policy.backward(pr.prompt, dloss_dprobs);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pg[i];
        }
        const double n = static_cast<double>(pairs.size());
        if (finite) {
            for (double& x : grad) x /= n;
            try {
                apply_update(result.policy.params(), grad, opt, cfg.learning_rate);
            } catch (const std::runtime_error&) {
                finite = false;
            }
        }
        if (!finite) {
            // instability is a finding: stop and hand back the log so far
            result.diverged = true;
            result.error = "non-finite loss or gradient at epoch " + std::to_string(epoch);
            return result;
        }
        if (epoch % cfg.log_every == 0) {
            log_epoch(epoch, gplus_sum / n, gminus_sum / n, loss_sum / n, correct / n);
        }
    }
    return result;
}

// The four Figure-3 scenarios under one base config; only the
// initialization differs between runs.
inline std::vector<TrainResult> run_scenario_suite(const TrainConfig& base) {
    std::vector<TrainResult> results;
    for (ScenarioId s : {ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::S4}) {
        TrainConfig cfg = base;
        cfg.scenario = s;
        results.push_back(run_dpo_training(cfg));
    }
    return results;
}

struct RmTrainResult {
    RewardLog log;
    RewardNet net;
    bool diverged = false;
    std::string error;
};

// Bradley-Terry reward-model training on the same pair stream the policy
// runs consume (identical seed -> identical pairs).
inline RmTrainResult run_rm_training(const TrainConfig& cfg, int reward_hidden = 32) {
    cfg.validate();
    if (cfg.objective.variant != Variant::Rm) {
        throw ConfigError("run_rm_training: objective.variant must be RM");
    }
    RewardNet net(ToySpace::kPrompts, ToySpace::kResponses, reward_hidden, cfg.seed);
    Rng pair_rng(cfg.seed, /*stream=*/1);
    OptimizerState opt(cfg.optimizer, net.param_count());
    RmTrainResult result{RewardLog{}, std::move(net), false, ""};
    result.log.config = config_echo(cfg);

    std::vector<double> grad(result.net.param_count());
    for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto pairs = sample_pairs(cfg.batch_size, pair_rng, cfg.pairing);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss_sum = 0, gplus_sum = 0, gminus_sum = 0;
        int correct = 0;
        for (const auto& pr : pairs) {
            const RewardPoint r{result.net.forward(pr.prompt, pr.chosen),
                                result.net.forward(pr.prompt, pr.rejected)};
            const GradientPair gp = rm_grad(r);
            loss_sum += rm_loss(r);
            gplus_sum += std::abs(gp.d_plus);
            gminus_sum += std::abs(gp.d_minus);
            correct += r.r_plus > r.r_minus ? 1 : 0;
            result.net.backward_into(pr.prompt, pr.chosen, gp.d_plus, grad);
            result.net.backward_into(pr.prompt, pr.rejected, gp.d_minus, grad);
        }
        const double n = static_cast<double>(pairs.size());
        for (double& x : grad) x /= n;
        try {
            apply_update(result.net.params(), grad, opt, cfg.learning_rate);
        } catch (const std::runtime_error& e) {
            result.diverged = true;
            result.error = e.what();
            return result;
        }
        if (epoch % cfg.log_every == 0) {
            result.log.rows.push_back(
                {epoch, correct / n, gplus_sum / n, gminus_sum / n, loss_sum / n});
        }
    }
    return result;
}

// One flex-DPO run per beta- value, everything else fixed.
inline std::vector<TrainResult> sweep_beta_minus(const TrainConfig& base,
                                                 const std::vector<double>& beta_minus_grid) {
    if (base.objective.variant != Variant::FlexDpo) {
        throw ConfigError("sweep_beta_minus: objective.variant must be flex-dpo");
    }
    std::vector<TrainResult> results;
    for (double bm : beta_minus_grid) {
        TrainConfig cfg = base;
        cfg.objective.beta_minus = bm;
        results.push_back(run_dpo_training(cfg));
    }
    return results;
}

// First logged epoch at which avg_rejected drops below the threshold;
// -1 if it never does.
inline long decline_epoch(const MetricsLog& log, double threshold = 0.01) {
    for (const auto& r : log.rows) {
        if (r.avg_rejected < threshold) return r.epoch;
    }
    return -1;
}

struct RunSummary {
    double peak_chosen = 0;
    long peak_epoch = 0;
    double final_chosen = 0;
    double final_rejected = 0;
    double final_unseen = 0;
    long rejected_decline_epoch = -1;
};

inline RunSummary summarize(const MetricsLog& log) {
    RunSummary s;
    for (const auto& r : log.rows) {
        if (r.avg_chosen > s.peak_chosen) {
            s.peak_chosen = r.avg_chosen;
            s.peak_epoch = r.epoch;
        }
    }
    if (!log.rows.empty()) {
        s.final_chosen = log.rows.back().avg_chosen;
        s.final_rejected = log.rows.back().avg_rejected;
        s.final_unseen = log.rows.back().avg_unseen;
    }
    s.rejected_decline_epoch = decline_epoch(log);
    return s;
}

} // namespace prefdyn
