#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace prefdyn {

// One logged epoch of a policy training run. Likelihood stats aggregate
// over prompts: chosen over the diagonal optimal responses, rejected and
// unseen over their whole index sets. Gradient means are mean |dl/dpi|
// over the epoch's pairs.
struct MetricsRow {
    long epoch = 0;
    double avg_chosen = 0, min_chosen = 0;
    double avg_rejected = 0, max_rejected = 0;
    double avg_unseen = 0;
    double grad_plus_mean = 0, grad_minus_mean = 0;
    double loss = 0;
};

inline constexpr const char* kMetricsCsvHeader =
    "epoch,avg_chosen,min_chosen,avg_rejected,max_rejected,avg_unseen,"
    "grad_plus_mean,grad_minus_mean,loss";

// Full record of one run: the resolved config (echoed into the manifest,
// not the CSV), the logged rows, and in-memory extras the CSV schema does
// not carry: per-epoch output distributions (for mass accounting) and the
// implicit-reward accuracy series (for the RM comparison).
struct MetricsLog {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<MetricsRow> rows;
    std::vector<std::vector<std::vector<double>>> dist_snapshots; // [row][prompt][response]
    std::vector<double> implicit_accuracy;                        // aligned with rows
};

inline std::string format_sig9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

inline std::string metrics_row_csv(const MetricsRow& r) {
    std::string line = std::to_string(r.epoch);
    for (double v : {r.avg_chosen, r.min_chosen, r.avg_rejected, r.max_rejected, r.avg_unseen,
                     r.grad_plus_mean, r.grad_minus_mean, r.loss}) {
        line += ',';
        line += format_sig9(v);
    }
    return line;
}

inline void write_metrics_csv(const MetricsLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    out << kMetricsCsvHeader << "\n";
    for (const auto& r : log.rows) out << metrics_row_csv(r) << "\n";
}

inline std::vector<MetricsRow> parse_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_metrics_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsCsvHeader) {
        throw std::runtime_error("parse_metrics_csv: unexpected header in " + path);
    }
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricsRow r;
        char c;
        if (!(ss >> r.epoch >> c >> r.avg_chosen >> c >> r.min_chosen >> c >> r.avg_rejected >> c >>
              r.max_rejected >> c >> r.avg_unseen >> c >> r.grad_plus_mean >> c >>
              r.grad_minus_mean >> c >> r.loss)) {
            throw std::runtime_error("parse_metrics_csv: bad row: " + line);
        }
        rows.push_back(r);
    }
    return rows;
}

// Reward-model runs log pairwise ranking accuracy instead of likelihoods.
struct RewardRow {
    long epoch = 0;
    double accuracy = 0;
    double grad_plus_mean = 0, grad_minus_mean = 0;
    double loss = 0;
};

inline constexpr const char* kRewardCsvHeader = "epoch,accuracy,grad_plus_mean,grad_minus_mean,loss";

struct RewardLog {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<RewardRow> rows;
};

inline void write_reward_csv(const RewardLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_reward_csv: cannot open " + path);
    out << kRewardCsvHeader << "\n";
    for (const auto& r : log.rows) {
        out << r.epoch << ',' << format_sig9(r.accuracy) << ',' << format_sig9(r.grad_plus_mean)
            << ',' << format_sig9(r.grad_minus_mean) << ',' << format_sig9(r.loss) << "\n";
    }
}

inline std::vector<RewardRow> parse_reward_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_reward_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kRewardCsvHeader) {
        throw std::runtime_error("parse_reward_csv: unexpected header in " + path);
    }
    std::vector<RewardRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        RewardRow r;
        char c;
        if (!(ss >> r.epoch >> c >> r.accuracy >> c >> r.grad_plus_mean >> c >> r.grad_minus_mean >>
              c >> r.loss)) {
            throw std::runtime_error("parse_reward_csv: bad row: " + line);
        }
        rows.push_back(r);
    }
    return rows;
}

} // namespace prefdyn
