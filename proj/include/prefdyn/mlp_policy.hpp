#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefdyn/rng.hpp"

namespace prefdyn {

enum class OptimizerKind { Adam, Sgd };

// First/second-moment buffers for Adam; unused in plain-descent mode.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    long step = 0;
    std::vector<double> m;
    std::vector<double> v;

    explicit OptimizerState(OptimizerKind k = OptimizerKind::Adam, std::size_t n = 0)
        : kind(k), m(k == OptimizerKind::Adam ? n : 0, 0.0), v(k == OptimizerKind::Adam ? n : 0, 0.0) {}
};

// One optimizer step on a flat parameter vector, in place.
// Non-finite gradient entries are a divergence signal and throw.
inline void apply_update(std::vector<double>& theta, const std::vector<double>& grad,
                         OptimizerState& state, double lr) {
    if (theta.size() != grad.size()) throw std::invalid_argument("apply_update: shape mismatch");
    for (double g : grad) {
        if (!std::isfinite(g)) throw std::runtime_error("apply_update: non-finite gradient entry");
    }
    if (state.kind == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
        ++state.step;
        return;
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    if (state.m.size() != theta.size()) {
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * g;
        state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * g * g;
        theta[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + kEps);
    }
}

// Three-layer tanh MLP from a one-hot prompt to a categorical distribution
// over responses. Parameters are packed into one flat vector so the
// optimizer and serialization stay generic; the layout is
// w1(HxP) b1(H) w2(HxH) b2(H) w3(RxH) b3(R), row major.
class MlpPolicy {
public:
    MlpPolicy(int n_prompts, int hidden, int n_responses, std::uint64_t seed)
        : p_(n_prompts), h_(hidden), r_(n_responses), theta_(param_count(), 0.0) {
        Rng rng(seed, /*stream=*/0);
        for (double& w : theta_) w = rng.uniform(-0.1, 0.1);
    }

    int n_prompts() const { return p_; }
    int hidden() const { return h_; }
    int n_responses() const { return r_; }
    std::size_t param_count() const {
        return static_cast<std::size_t>(h_ * p_ + h_ + h_ * h_ + h_ + r_ * h_ + r_);
    }

    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }

    std::span<double> w1() { return {theta_.data() + off_w1(), static_cast<std::size_t>(h_ * p_)}; }
    std::span<double> b1() { return {theta_.data() + off_b1(), static_cast<std::size_t>(h_)}; }
    std::span<double> w2() { return {theta_.data() + off_w2(), static_cast<std::size_t>(h_ * h_)}; }
    std::span<double> b2() { return {theta_.data() + off_b2(), static_cast<std::size_t>(h_)}; }
    std::span<double> w3() { return {theta_.data() + off_w3(), static_cast<std::size_t>(r_ * h_)}; }
    std::span<double> b3() { return {theta_.data() + off_b3(), static_cast<std::size_t>(r_)}; }

    // softmax over the final logits; checked to sum to 1 within 1e-9
    std::vector<double> forward(int prompt_index) const {
        Trace t;
        run_forward(prompt_index, t);
        double sum = 0.0;
        for (double s : t.probs) sum += s;
        if (std::abs(sum - 1.0) > 1e-9) throw std::runtime_error("forward: softmax output not normalized");
        return t.probs;
    }

    // Reverse-mode gradient of dloss_dprobs . probs through the softmax and
    // both tanh layers. Returns a flat gradient in the parameter layout.
    std::vector<double> backward(int prompt_index, std::span<const double> dloss_dprobs) const {
        if (dloss_dprobs.size() != static_cast<std::size_t>(r_)) {
            throw std::invalid_argument("backward: dloss_dprobs has wrong length");
        }
        Trace t;
        run_forward(prompt_index, t);
        std::vector<double> grad(param_count(), 0.0);

        // softmax jacobian: dL/dz_k = s_k * (g_k - sum_j g_j s_j)
        double dot = 0.0;
        for (int k = 0; k < r_; ++k) dot += dloss_dprobs[k] * t.probs[k];
        std::vector<double> dlogit(r_);
        for (int k = 0; k < r_; ++k) dlogit[k] = t.probs[k] * (dloss_dprobs[k] - dot);

        double* gw3 = grad.data() + off_w3();
        double* gb3 = grad.data() + off_b3();
        std::vector<double> dh2(h_, 0.0);
        const double* w3p = theta_.data() + off_w3();
        for (int k = 0; k < r_; ++k) {
            for (int j = 0; j < h_; ++j) {
                gw3[k * h_ + j] = dlogit[k] * t.h2[j];
                dh2[j] += w3p[k * h_ + j] * dlogit[k];
            }
            gb3[k] = dlogit[k];
        }

        std::vector<double> dz2(h_);
        for (int j = 0; j < h_; ++j) dz2[j] = dh2[j] * (1.0 - t.h2[j] * t.h2[j]);

        double* gw2 = grad.data() + off_w2();
        double* gb2 = grad.data() + off_b2();
        std::vector<double> dh1(h_, 0.0);
        const double* w2p = theta_.data() + off_w2();
        for (int j = 0; j < h_; ++j) {
            for (int i = 0; i < h_; ++i) {
                gw2[j * h_ + i] = dz2[j] * t.h1[i];
                dh1[i] += w2p[j * h_ + i] * dz2[j];
            }
            gb2[j] = dz2[j];
        }

        double* gw1 = grad.data() + off_w1();
        double* gb1 = grad.data() + off_b1();
        for (int i = 0; i < h_; ++i) {
            const double dz1 = dh1[i] * (1.0 - t.h1[i] * t.h1[i]);
            gw1[i * p_ + prompt_index] = dz1; // one-hot input selects one column
            gb1[i] = dz1;
        }
        return grad;
    }

private:
    struct Trace {
        std::vector<double> h1, h2, probs;
    };

    void run_forward(int prompt_index, Trace& t) const {
        if (prompt_index < 0 || prompt_index >= p_) throw std::out_of_range("forward: prompt index");
        t.h1.resize(h_);
        t.h2.resize(h_);
        t.probs.resize(r_);
        const double* w1p = theta_.data() + off_w1();
        const double* b1p = theta_.data() + off_b1();
        for (int i = 0; i < h_; ++i) t.h1[i] = std::tanh(w1p[i * p_ + prompt_index] + b1p[i]);
        const double* w2p = theta_.data() + off_w2();
        const double* b2p = theta_.data() + off_b2();
        for (int j = 0; j < h_; ++j) {
            double a = b2p[j];
            for (int i = 0; i < h_; ++i) a += w2p[j * h_ + i] * t.h1[i];
            t.h2[j] = std::tanh(a);
        }
        const double* w3p = theta_.data() + off_w3();
        const double* b3p = theta_.data() + off_b3();
        std::vector<double> logits(r_);
        double mx = -1e300;
        for (int k = 0; k < r_; ++k) {
            double a = b3p[k];
            for (int j = 0; j < h_; ++j) a += w3p[k * h_ + j] * t.h2[j];
            logits[k] = a;
            mx = std::max(mx, a);
        }
        double sum = 0.0;
        for (int k = 0; k < r_; ++k) {
            t.probs[k] = std::exp(logits[k] - mx);
            sum += t.probs[k];
        }
        for (int k = 0; k < r_; ++k) t.probs[k] /= sum;
    }

    std::size_t off_w1() const { return 0; }
    std::size_t off_b1() const { return off_w1() + h_ * p_; }
    std::size_t off_w2() const { return off_b1() + h_; }
    std::size_t off_b2() const { return off_w2() + h_ * h_; }
    std::size_t off_w3() const { return off_b2() + h_; }
    std::size_t off_b3() const { return off_w3() + r_ * h_; }

    int p_, h_, r_;
    std::vector<double> theta_;
};

// Frozen reference pi_0: the SFT policy is only ever queried at the
// (prompt, response) grid, so a cached output table is all we keep.
class ReferencePolicy {
public:
    ReferencePolicy() = default;

    static ReferencePolicy snapshot(const MlpPolicy& policy) {
        ReferencePolicy ref;
        ref.r_ = policy.n_responses();
        ref.table_.reserve(policy.n_prompts() * policy.n_responses());
        for (int p = 0; p < policy.n_prompts(); ++p) {
            const auto row = policy.forward(p);
            ref.table_.insert(ref.table_.end(), row.begin(), row.end());
        }
        return ref;
    }

    double operator()(int prompt, int response) const { return table_[prompt * r_ + response]; }
    int n_responses() const { return r_; }
    bool empty() const { return table_.empty(); }

private:
    int r_ = 0;
    std::vector<double> table_;
};

// Raised when fit_to_targets exhausts its step budget; carries the best
// residual reached.
struct FitError : std::runtime_error {
    double residual;
    explicit FitError(double res)
        : std::runtime_error("fit_to_targets: did not reach tolerance, residual=" + std::to_string(res)),
          residual(res) {}
};

// SFT simulation: cross-entropy fit of the policy outputs to target rows
// until every prompt matches within max_linf (default 0.01 Linf).
inline void fit_to_targets(MlpPolicy& policy, const std::vector<std::vector<double>>& targets,
                           long max_steps = 50000, double lr = 0.02, double max_linf = 0.01) {
    const int np = policy.n_prompts();
    const int nr = policy.n_responses();
    if (static_cast<int>(targets.size()) != np) throw std::invalid_argument("fit_to_targets: target row count");
    OptimizerState state(OptimizerKind::Adam, policy.param_count());
    std::vector<double> grad(policy.param_count());
    std::vector<double> g(nr);
    double residual = 0.0;
    for (long step = 0; step <= max_steps; ++step) {
        residual = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int p = 0; p < np; ++p) {
            const auto probs = policy.forward(p);
            for (int k = 0; k < nr; ++k) {
                residual = std::max(residual, std::abs(probs[k] - targets[p][k]));
                g[k] = -targets[p][k] / std::max(probs[k], 1e-300);
            }
            const auto pg = policy.backward(p, g);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pg[i];
        }
        if (residual <= max_linf) return;
        if (step == max_steps) break;
        for (double& x : grad) x /= np;
        apply_update(policy.params(), grad, state, lr);
    }
    throw FitError(residual);
}

// Plain text parameter snapshot; values round-trip exactly via %.17g.
inline void save_policy(const MlpPolicy& policy, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_policy: cannot open " + path);
    out << "prefdyn-mlp 1 " << policy.n_prompts() << " " << policy.hidden() << " "
        << policy.n_responses() << "\n";
    char buf[40];
    for (double w : policy.params()) {
        std::snprintf(buf, sizeof buf, "%.17g\n", w);
        out << buf;
    }
}

inline MlpPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    std::string magic;
    int version = 0, np = 0, h = 0, nr = 0;
    if (!(in >> magic >> version >> np >> h >> nr) || magic != "prefdyn-mlp" || version != 1) {
        throw std::runtime_error("load_policy: bad header in " + path);
    }
    MlpPolicy policy(np, h, nr, 0);
    for (double& w : policy.params()) {
        if (!(in >> w)) throw std::runtime_error("load_policy: truncated file " + path);
    }
    return policy;
}

} // namespace prefdyn
