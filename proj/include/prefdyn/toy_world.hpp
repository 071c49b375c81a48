#pragma once

#include <array>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefdyn/rng.hpp"

namespace prefdyn {

// The discrete 4-prompt x 10-response world. Responses 0..3 are the chosen
// set, 4..7 the rejected set, 8..9 never appear in preference pairs. The
// optimal response for prompt i is response i.
struct ToySpace {
    static constexpr int kPrompts = 4;
    static constexpr int kResponses = 10;
    static constexpr std::array<int, 4> kChosen = {0, 1, 2, 3};
    static constexpr std::array<int, 4> kRejected = {4, 5, 6, 7};
    static constexpr std::array<int, 2> kUnseen = {8, 9};

    static constexpr int optimal_of(int prompt) { return prompt; }
};

// On/off-policy initialization per Figure-3 scenario: on-policy responses
// start at likelihood 0.12, off-policy at 0.02.
enum class ScenarioId { S1 = 1, S2 = 2, S3 = 3, S4 = 4 };

struct ScenarioFlags {
    bool chosen_on_policy;
    bool rejected_on_policy;
};

inline ScenarioFlags scenario_flags(ScenarioId s) {
    switch (s) {
        case ScenarioId::S1: return {true, true};
        case ScenarioId::S2: return {false, true};
        case ScenarioId::S3: return {true, false};
        case ScenarioId::S4: return {false, false};
    }
    throw std::invalid_argument("scenario_flags: bad scenario");
}

inline int scenario_number(ScenarioId s) { return static_cast<int>(s); }

struct PreferencePair {
    int prompt;
    int chosen;
    int rejected;
};

// Which pool the rejected response is drawn from. RejectedSet matches the
// designated rejected dimensions; OtherChosen pairs against another
// prompt's optimal response instead (alternative reading, off by default).
enum class PairingMode { RejectedSet, OtherChosen };

constexpr double kOnPolicyInit = 0.12;
constexpr double kOffPolicyInit = 0.02;

// Target output rows for the SFT fit. Chosen/rejected cells get 0.12 or
// 0.02 by scenario; the leftover mass is split over the unseen cells, with
// the last cell absorbing rounding so each row sums to exactly 1.0 under
// left-to-right accumulation.
inline std::vector<std::vector<double>> init_targets(ScenarioId scenario) {
    const auto flags = scenario_flags(scenario);
    const double chosen_v = flags.chosen_on_policy ? kOnPolicyInit : kOffPolicyInit;
    const double rejected_v = flags.rejected_on_policy ? kOnPolicyInit : kOffPolicyInit;
    std::vector<std::vector<double>> rows(ToySpace::kPrompts, std::vector<double>(ToySpace::kResponses, 0.0));
    for (auto& row : rows) {
        for (int r : ToySpace::kChosen) row[r] = chosen_v;
        for (int r : ToySpace::kRejected) row[r] = rejected_v;
        double assigned = 0.0;
        for (int r = 0; r < 8; ++r) assigned += row[r];
        row[ToySpace::kUnseen[0]] = (1.0 - assigned) / 2.0;
        double partial = assigned + row[ToySpace::kUnseen[0]];
        row[ToySpace::kUnseen[1]] = 1.0 - partial;
    }
    return rows;
}

// batch_size preference pairs: prompts in fixed round-robin order, chosen
// always the prompt's optimal response, rejected drawn uniformly per pair.
inline std::vector<PreferencePair> sample_pairs(int batch_size, Rng& rng,
                                                PairingMode mode = PairingMode::RejectedSet) {
    if (batch_size < 1) throw std::invalid_argument("sample_pairs: batch_size < 1");
    std::vector<PreferencePair> pairs;
    pairs.reserve(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const int prompt = i % ToySpace::kPrompts;
        const int chosen = ToySpace::optimal_of(prompt);
        int rejected;
        if (mode == PairingMode::RejectedSet) {
            rejected = ToySpace::kRejected[rng.below(ToySpace::kRejected.size())];
        } else {
            // another prompt's optimal response
            const int k = static_cast<int>(rng.below(ToySpace::kChosen.size() - 1));
            rejected = k < chosen ? k : k + 1;
        }
        pairs.push_back({prompt, chosen, rejected});
    }
    return pairs;
}

// rows = prompts, columns = responses
inline void write_matrix_csv(const std::vector<std::vector<double>>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path);
    char buf[40];
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", row[c]);
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

} // namespace prefdyn
