#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "prefdyn/rng.hpp"

namespace prefdyn {

// Scalar reward model r(x, a): one-hot(prompt) ++ one-hot(response) through
// a tanh hidden layer to a single linear output. Flat parameter layout
// w1(HxD) b1(H) w2(H) b2(1), D = n_prompts + n_responses.
class RewardNet {
public:
    RewardNet(int n_prompts, int n_responses, int hidden, std::uint64_t seed)
        : np_(n_prompts), nr_(n_responses), h_(hidden), theta_(param_count(), 0.0) {
        Rng rng(seed, /*stream=*/0);
        for (double& w : theta_) w = rng.uniform(-0.1, 0.1);
    }

    std::size_t param_count() const {
        const int d = np_ + nr_;
        return static_cast<std::size_t>(h_ * d + h_ + h_ + 1);
    }

    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }

    double forward(int prompt, int response) const {
        check_index(prompt, response);
        const int d = np_ + nr_;
        const double* w1 = theta_.data();
        const double* b1 = theta_.data() + h_ * d;
        const double* w2 = b1 + h_;
        const double b2 = *(w2 + h_);
        double out = b2;
        for (int i = 0; i < h_; ++i) {
            // one-hot input: only columns `prompt` and `np_ + response` fire
            const double a = w1[i * d + prompt] + w1[i * d + np_ + response] + b1[i];
            out += w2[i] * std::tanh(a);
        }
        return out;
    }

    // Gradient of dloss_dr * r(prompt, response) w.r.t. the parameters,
    // accumulated into grad (so pair losses can sum both response terms).
    void backward_into(int prompt, int response, double dloss_dr, std::vector<double>& grad) const {
        check_index(prompt, response);
        if (grad.size() != param_count()) throw std::invalid_argument("backward_into: shape mismatch");
        const int d = np_ + nr_;
        const double* w1 = theta_.data();
        const double* b1 = theta_.data() + h_ * d;
        const double* w2 = b1 + h_;
        double* gw1 = grad.data();
        double* gb1 = grad.data() + h_ * d;
        double* gw2 = gb1 + h_;
        double* gb2 = gw2 + h_;
        for (int i = 0; i < h_; ++i) {
            const double t = std::tanh(w1[i * d + prompt] + w1[i * d + np_ + response] + b1[i]);
            gw2[i] += dloss_dr * t;
            const double dz = dloss_dr * w2[i] * (1.0 - t * t);
            gw1[i * d + prompt] += dz;
            gw1[i * d + np_ + response] += dz;
            gb1[i] += dz;
        }
        *gb2 += dloss_dr;
    }

private:
    void check_index(int prompt, int response) const {
        if (prompt < 0 || prompt >= np_ || response < 0 || response >= nr_) {
            throw std::out_of_range("RewardNet: index out of range");
        }
    }

    int np_, nr_, h_;
    std::vector<double> theta_;
};

} // namespace prefdyn
