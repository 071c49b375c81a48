#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace prefdyn {

// Per-pair likelihoods under the current policy (pi_plus/pi_minus for the
// chosen/rejected response) and under the frozen reference policy
// (pi0_plus/pi0_minus). All analytic losses below are functions of this point.
struct LikelihoodPoint {
    double pi_plus;
    double pi_minus;
    double pi0_plus;
    double pi0_minus;
};

// Partial derivatives of a per-pair loss with respect to the chosen and
// rejected likelihoods (or rewards, for the RM objective).
struct GradientPair {
    double d_plus;
    double d_minus;
};

struct RewardPoint {
    double r_plus;
    double r_minus;
};

enum class Variant { Dpo, FlexDpo, SftDpo, Ipo, Slic, SimPo, Rm };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Dpo: return "dpo";
        case Variant::FlexDpo: return "flex-dpo";
        case Variant::SftDpo: return "sft-dpo";
        case Variant::Ipo: return "ipo";
        case Variant::Slic: return "slic";
        case Variant::SimPo: return "simpo";
        case Variant::Rm: return "rm";
    }
    return "?";
}

// Objective selector plus the union of all hyperparameters. Only the fields
// of the selected variant are read; the rest keep their defaults.
struct ObjectiveSpec {
    Variant variant = Variant::Dpo;
    double beta = 0.1;        // Dpo, SftDpo, SimPo
    double beta_plus = 0.1;   // FlexDpo
    double beta_minus = 0.1;  // FlexDpo
    double gamma = 0.0;       // SftDpo SFT weight
    double eta = 0.1;         // Ipo regularization; Slic cross-entropy weight
    double delta = 0.0;       // Slic margin
    double margin_gamma = 0.0; // SimPo target reward margin
    int len_plus = 1;         // SimPo nominal |a+|
    int len_minus = 1;        // SimPo nominal |a-|

    static ObjectiveSpec dpo(double beta) {
        ObjectiveSpec s;
        s.variant = Variant::Dpo;
        s.beta = beta;
        warn_if_beta_out_of_regime(beta);
        return s;
    }
    static ObjectiveSpec flex_dpo(double beta_plus, double beta_minus) {
        ObjectiveSpec s;
        s.variant = Variant::FlexDpo;
        s.beta_plus = beta_plus;
        s.beta_minus = beta_minus;
        warn_if_beta_out_of_regime(std::max(beta_plus, beta_minus));
        return s;
    }
    static ObjectiveSpec sft_dpo(double beta, double gamma) {
        ObjectiveSpec s;
        s.variant = Variant::SftDpo;
        s.beta = beta;
        s.gamma = gamma;
        return s;
    }
    static ObjectiveSpec ipo(double eta) {
        ObjectiveSpec s;
        s.variant = Variant::Ipo;
        s.eta = eta;
        return s;
    }
    static ObjectiveSpec slic(double delta, double eta) {
        ObjectiveSpec s;
        s.variant = Variant::Slic;
        s.delta = delta;
        s.eta = eta;
        return s;
    }
    static ObjectiveSpec simpo(double beta, double margin_gamma, int len_plus, int len_minus) {
        ObjectiveSpec s;
        s.variant = Variant::SimPo;
        s.beta = beta;
        s.margin_gamma = margin_gamma;
        s.len_plus = len_plus;
        s.len_minus = len_minus;
        return s;
    }
    static ObjectiveSpec rm() {
        ObjectiveSpec s;
        s.variant = Variant::Rm;
        return s;
    }

private:
    // The degradation analysis assumes beta < 1; larger values are allowed
    // for exploration but flagged once.
    static void warn_if_beta_out_of_regime(double beta) {
        if (beta >= 1.0) {
            std::fprintf(stderr, "prefdyn: warning: beta=%g >= 1 leaves the vanishing-gradient regime\n", beta);
        }
    }
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow for large |x|
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// Bradley-Terry preference probability sigma(r+ - r-).
inline double bt_preference_prob(double r_plus, double r_minus) {
    return sigmoid(r_plus - r_minus);
}

namespace detail {

// Likelihoods live on (0, 1]; the trainer can drive a softmax output to
// numerical zero, so exact zeros are pulled up to 1e-300 before logs.
// Negative, NaN, or >1 inputs are outside the domain.
inline double checked_prob(double x, const char* name) {
    if (!(x >= 0.0) || x > 1.0 + 1e-9) {
        throw std::domain_error(std::string("likelihood out of (0,1]: ") + name + "=" + std::to_string(x));
    }
    return std::clamp(x, 1e-300, 1.0);
}

struct LogPoint {
    double lpp, lpm, lp0p, lp0m; // log pi+, log pi-, log pi0+, log pi0-
};

inline LogPoint logs(const LikelihoodPoint& p) {
    return {std::log(checked_prob(p.pi_plus, "pi_plus")),
            std::log(checked_prob(p.pi_minus, "pi_minus")),
            std::log(checked_prob(p.pi0_plus, "pi0_plus")),
            std::log(checked_prob(p.pi0_minus, "pi0_minus"))};
}

// log(alpha * z-term) of the flex objective: the loss is softplus of this.
inline double flex_log_odds(const LogPoint& q, double beta_plus, double beta_minus) {
    return beta_plus * (q.lp0p - q.lpp) + beta_minus * (q.lpm - q.lp0m);
}

} // namespace detail

// ---- Flex-DPO: separate temperatures for the chosen and rejected sides ----

inline double flex_dpo_loss(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const auto q = detail::logs(p);
    return softplus(detail::flex_log_odds(q, spec.beta_plus, spec.beta_minus));
}

inline GradientPair flex_dpo_grad(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const auto q = detail::logs(p);
    const double s = sigmoid(detail::flex_log_odds(q, spec.beta_plus, spec.beta_minus));
    return {-(spec.beta_plus * s) / detail::checked_prob(p.pi_plus, "pi_plus"),
            (spec.beta_minus * s) / detail::checked_prob(p.pi_minus, "pi_minus")};
}

// ---- Vanilla DPO: log(1 + alpha z^beta) ----
// Evaluated through the flex path with beta+ = beta- = beta, so a flex run at
// equal temperatures is bit-identical to a vanilla run.

inline ObjectiveSpec as_flex(const ObjectiveSpec& spec) {
    ObjectiveSpec f = spec;
    f.variant = Variant::FlexDpo;
    f.beta_plus = spec.beta;
    f.beta_minus = spec.beta;
    return f;
}

inline double dpo_loss(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    return flex_dpo_loss(p, as_flex(spec));
}

inline GradientPair dpo_grad(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    return flex_dpo_grad(p, as_flex(spec));
}

// ---- SFT-DPO: DPO plus gamma * (-log pi+) ----

inline double sft_dpo_loss(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const double lpp = std::log(detail::checked_prob(p.pi_plus, "pi_plus"));
    return dpo_loss(p, spec) - spec.gamma * lpp;
}

inline GradientPair sft_dpo_grad(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    GradientPair g = dpo_grad(p, spec);
    g.d_plus -= spec.gamma / detail::checked_prob(p.pi_plus, "pi_plus");
    return g;
}

// ---- IPO: squared deviation of the log odds from 1/(2 eta) ----

namespace detail {
inline double ipo_bracket(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const auto q = logs(p);
    return (q.lpp - q.lpm) + (q.lp0m - q.lp0p) - 1.0 / (2.0 * spec.eta);
}
} // namespace detail

inline double ipo_loss(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const double b = detail::ipo_bracket(p, spec);
    return b * b;
}

inline GradientPair ipo_grad(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const double b = detail::ipo_bracket(p, spec);
    return {2.0 * b / detail::checked_prob(p.pi_plus, "pi_plus"),
            -2.0 * b / detail::checked_prob(p.pi_minus, "pi_minus")};
}

// ---- SLiC: hinge on the log-likelihood margin plus cross-entropy pull ----

// Hinge state used by the gradient branch. The boundary delta == margin is
// classified inactive (limit from the satisfied side), keeping the
// subgradient choice deterministic.
inline bool slic_hinge_active(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const auto q = detail::logs(p);
    return spec.delta > q.lpp - q.lpm;
}

inline double slic_loss(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const auto q = detail::logs(p);
    return std::max(0.0, spec.delta - q.lpp + q.lpm) - spec.eta * q.lpp;
}

inline GradientPair slic_grad(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const double pp = detail::checked_prob(p.pi_plus, "pi_plus");
    const double pm = detail::checked_prob(p.pi_minus, "pi_minus");
    if (slic_hinge_active(p, spec)) {
        return {-(1.0 + spec.eta) / pp, 1.0 / pm};
    }
    return {-spec.eta / pp, 0.0};
}

// ---- SimPO: length-normalized log likelihoods with a reward margin ----

namespace detail {
inline double simpo_margin(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const auto q = logs(p);
    return (spec.beta / spec.len_plus) * q.lpp - (spec.beta / spec.len_minus) * q.lpm - spec.margin_gamma;
}
} // namespace detail

inline double simpo_loss(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    return softplus(-detail::simpo_margin(p, spec));
}

inline GradientPair simpo_grad(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    const double s = sigmoid(-detail::simpo_margin(p, spec));
    return {-(spec.beta / (spec.len_plus * detail::checked_prob(p.pi_plus, "pi_plus"))) * s,
            (spec.beta / (spec.len_minus * detail::checked_prob(p.pi_minus, "pi_minus"))) * s};
}

// Limit of d_minus as pi- -> 0: three cases depending on beta vs |a-|.
// The Constant case depends on the (fixed) pi+ at which it is evaluated.
struct SimpoLimit {
    enum class Kind { Zero, Infinity, Constant } kind;
    double value = 0.0; // beta*C/|a-| in the Constant case
};

inline SimpoLimit simpo_limit_class(const ObjectiveSpec& spec, double pi_plus) {
    const double len_minus = static_cast<double>(spec.len_minus);
    if (spec.beta > len_minus) return {SimpoLimit::Kind::Zero, 0.0};
    if (spec.beta < len_minus) return {SimpoLimit::Kind::Infinity, 0.0};
    const double lpp = std::log(detail::checked_prob(pi_plus, "pi_plus"));
    const double c = std::exp(-(spec.beta / spec.len_plus) * lpp + spec.margin_gamma);
    return {SimpoLimit::Kind::Constant, spec.beta * c / len_minus};
}

// ---- RM: Bradley-Terry MLE loss on rewards ----

inline double rm_loss(const RewardPoint& r) {
    return softplus(r.r_minus - r.r_plus);
}

// d_plus and d_minus are the same expression negated, so their sum is
// exactly zero in floating point.
inline GradientPair rm_grad(const RewardPoint& r) {
    const double s = sigmoid(r.r_minus - r.r_plus);
    return {-s, s};
}

// ---- Dispatch over the likelihood-domain objectives (all but RM) ----

inline double objective_loss(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    switch (spec.variant) {
        case Variant::Dpo: return dpo_loss(p, spec);
        case Variant::FlexDpo: return flex_dpo_loss(p, spec);
        case Variant::SftDpo: return sft_dpo_loss(p, spec);
        case Variant::Ipo: return ipo_loss(p, spec);
        case Variant::Slic: return slic_loss(p, spec);
        case Variant::SimPo: return simpo_loss(p, spec);
        case Variant::Rm: break;
    }
    throw std::invalid_argument("objective_loss: RM operates on rewards, not likelihoods");
}

inline GradientPair objective_grad(const LikelihoodPoint& p, const ObjectiveSpec& spec) {
    switch (spec.variant) {
        case Variant::Dpo: return dpo_grad(p, spec);
        case Variant::FlexDpo: return flex_dpo_grad(p, spec);
        case Variant::SftDpo: return sft_dpo_grad(p, spec);
        case Variant::Ipo: return ipo_grad(p, spec);
        case Variant::Slic: return slic_grad(p, spec);
        case Variant::SimPo: return simpo_grad(p, spec);
        case Variant::Rm: break;
    }
    throw std::invalid_argument("objective_grad: RM operates on rewards, not likelihoods");
}

} // namespace prefdyn
