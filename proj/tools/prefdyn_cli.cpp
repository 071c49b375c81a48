// prefdyn: preference-optimization dynamics lab on the 4x10 toy world.
// Subcommands: simulate | suite | sweep | verify | compare-rm.
// Exit codes: 0 success, 1 verification failure, 2 config error,
// 3 training divergence (partial logs are still written).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefdyn/metrics.hpp"
#include "prefdyn/oracle.hpp"
#include "prefdyn/svg_chart.hpp"
#include "prefdyn/trainer.hpp"
#include "prefdyn/version.hpp"

namespace fs = std::filesystem;
using namespace prefdyn;

namespace {

struct RawOptions {
    int scenario = 1;
    std::string objective = "dpo";
    double beta = 0.1;
    double beta_plus = 0.1;
    double beta_minus = 0.1;
    double gamma = 0.1;
    double eta = 0.1;
    double delta = 5.0;
    double margin_gamma = 0.0;
    int len_plus = 1;
    int len_minus = 1;
    long epochs = 500;
    int batch_size = 4;
    double learning_rate = 1e-3;
    std::uint64_t seed = 7;
    long log_every = 1;
    std::string optimizer = "adam";
    std::string pairing = "rejected-set";
    int hidden = 64;
    std::string out_dir;
};

std::string default_out_dir() {
    const char* env = std::getenv("PREFDYN_OUT");
    return env && *env ? env : "prefdyn_out";
}

void add_train_options(CLI::App* cmd, RawOptions& raw) {
    cmd->add_option("--scenario", raw.scenario, "Scenario 1-4 (on/off-policy initialization)")
        ->check(CLI::Range(1, 4));
    cmd->add_option("--objective", raw.objective, "dpo|flex-dpo|sft-dpo|ipo|slic|simpo");
    cmd->add_option("--beta", raw.beta, "temperature (dpo, sft-dpo, simpo)");
    cmd->add_option("--beta_plus,--beta-plus", raw.beta_plus, "chosen-side temperature (flex-dpo)");
    cmd->add_option("--beta_minus,--beta-minus", raw.beta_minus, "rejected-side temperature (flex-dpo)");
    cmd->add_option("--gamma", raw.gamma, "SFT weight (sft-dpo)");
    cmd->add_option("--eta", raw.eta, "regularization (ipo) / cross-entropy weight (slic)");
    cmd->add_option("--delta", raw.delta, "hinge margin (slic)");
    cmd->add_option("--margin_gamma,--margin-gamma", raw.margin_gamma, "target reward margin (simpo)");
    cmd->add_option("--len_plus,--len-plus", raw.len_plus, "nominal |a+| (simpo)")->check(CLI::PositiveNumber);
    cmd->add_option("--len_minus,--len-minus", raw.len_minus, "nominal |a-| (simpo)")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", raw.epochs, "training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--batch_size,--batch-size", raw.batch_size, "pairs per step")->check(CLI::PositiveNumber);
    cmd->add_option("--learning_rate,--learning-rate", raw.learning_rate, "optimizer step size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", raw.seed, "run seed");
    cmd->add_option("--log_every,--log-every", raw.log_every, "epochs between metric rows")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--optimizer", raw.optimizer, "adam|sgd");
    cmd->add_option("--pairing", raw.pairing, "rejected-set|other-chosen");
    cmd->add_option("--hidden", raw.hidden, "policy hidden width")->check(CLI::PositiveNumber);
    cmd->add_option("--out", raw.out_dir, "output directory (default $PREFDYN_OUT or ./prefdyn_out)");
    cmd->set_config("--config", "", "flat `key = value` config file (flags override file keys)");
}

ScenarioId to_scenario(int n) {
    switch (n) {
        case 1: return ScenarioId::S1;
        case 2: return ScenarioId::S2;
        case 3: return ScenarioId::S3;
        case 4: return ScenarioId::S4;
    }
    throw ConfigError("scenario must be 1..4");
}

TrainConfig to_config(const RawOptions& raw) {
    TrainConfig cfg;
    cfg.scenario = to_scenario(raw.scenario);
    if (raw.objective == "dpo") cfg.objective = ObjectiveSpec::dpo(raw.beta);
    else if (raw.objective == "flex-dpo") cfg.objective = ObjectiveSpec::flex_dpo(raw.beta_plus, raw.beta_minus);
    else if (raw.objective == "sft-dpo") cfg.objective = ObjectiveSpec::sft_dpo(raw.beta, raw.gamma);
    else if (raw.objective == "ipo") cfg.objective = ObjectiveSpec::ipo(raw.eta);
    else if (raw.objective == "slic") cfg.objective = ObjectiveSpec::slic(raw.delta, raw.eta);
    else if (raw.objective == "simpo")
        cfg.objective = ObjectiveSpec::simpo(raw.beta, raw.margin_gamma, raw.len_plus, raw.len_minus);
    else if (raw.objective == "rm") cfg.objective = ObjectiveSpec::rm();
    else throw ConfigError("unknown objective: " + raw.objective);
    cfg.epochs = raw.epochs;
    cfg.batch_size = raw.batch_size;
    cfg.learning_rate = raw.learning_rate;
    cfg.seed = raw.seed;
    cfg.log_every = raw.log_every;
    if (raw.optimizer == "adam") cfg.optimizer = OptimizerKind::Adam;
    else if (raw.optimizer == "sgd") cfg.optimizer = OptimizerKind::Sgd;
    else throw ConfigError("unknown optimizer: " + raw.optimizer);
    if (raw.pairing == "rejected-set") cfg.pairing = PairingMode::RejectedSet;
    else if (raw.pairing == "other-chosen") cfg.pairing = PairingMode::OtherChosen;
    else throw ConfigError("unknown pairing: " + raw.pairing);
    cfg.hidden = raw.hidden;
    cfg.validate();
    return cfg;
}

fs::path prepare_out_dir(const RawOptions& raw) {
    fs::path dir = raw.out_dir.empty() ? default_out_dir() : raw.out_dir;
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& config,
                    const std::vector<std::string>& files, double seconds) {
    std::string text;
    text += "tool = prefdyn " + std::string(kVersion) + "\n";
    text += "command = " + command + "\n";
    for (const auto& [k, v] : config) text += k + " = " + v + "\n";
    text += "wall_clock_seconds = " + format_sig9(seconds) + "\n";
    for (const auto& f : files) {
        if (!fs::exists(dir / f)) throw std::runtime_error("manifest: missing output file " + f);
        text += "file = " + f + "\n";
    }
    write_text_file((dir / "manifest.txt").string(), text);
}

std::vector<ChartSeries> likelihood_series(const std::vector<MetricsRow>& rows) {
    ChartSeries avg_c{"avg chosen", kColorChosenAvg, {}};
    ChartSeries min_c{"min chosen", kColorChosenMin, {}};
    ChartSeries avg_r{"avg rejected", kColorRejectedAvg, {}};
    ChartSeries max_r{"max rejected", kColorRejectedMax, {}};
    ChartSeries avg_u{"avg unseen", kColorUnseenAvg, {}};
    for (const auto& r : rows) {
        const double e = static_cast<double>(r.epoch);
        avg_c.points.emplace_back(e, r.avg_chosen);
        min_c.points.emplace_back(e, r.min_chosen);
        avg_r.points.emplace_back(e, r.avg_rejected);
        max_r.points.emplace_back(e, r.max_rejected);
        avg_u.points.emplace_back(e, r.avg_unseen);
    }
    return {avg_c, min_c, avg_r, max_r, avg_u};
}

std::vector<ChartSeries> gradient_series(const std::vector<MetricsRow>& rows) {
    ChartSeries gp{"mean |dl/dpi+|", kColorChosenAvg, {}};
    ChartSeries gm{"mean |dl/dpi-|", kColorRejectedAvg, {}};
    for (const auto& r : rows) {
        if (r.epoch == 0) continue; // no pairs consumed yet
        const double e = static_cast<double>(r.epoch);
        gp.points.emplace_back(e, r.grad_plus_mean);
        gm.points.emplace_back(e, r.grad_minus_mean);
    }
    return {gp, gm};
}

// Charts are re-derived from the CSV on disk, so re-rendering from the same
// CSV is bit-stable.
void render_run_charts(const fs::path& dir, const std::string& csv_name) {
    const auto rows = parse_metrics_csv((dir / csv_name).string());
    write_text_file((dir / "likelihood.svg").string(),
                    render_chart_svg({"likelihood dynamics", "epoch", "likelihood", false},
                                     likelihood_series(rows)));
    write_text_file((dir / "likelihood_log.svg").string(),
                    render_chart_svg({"likelihood dynamics (log scale)", "epoch", "likelihood", true},
                                     likelihood_series(rows)));
    write_text_file((dir / "gradients.svg").string(),
                    render_chart_svg({"gradient dynamics", "epoch", "mean |dl/dpi|", true},
                                     gradient_series(rows)));
}

int cmd_simulate(const RawOptions& raw) {
    const auto start = std::chrono::steady_clock::now();
    const TrainConfig cfg = to_config(raw);
    if (cfg.objective.variant == Variant::Rm) throw ConfigError("simulate: use compare-rm for the RM objective");
    const fs::path dir = prepare_out_dir(raw);
    const TrainResult result = run_dpo_training(cfg);
    write_metrics_csv(result.log, (dir / "metrics.csv").string());
    render_run_charts(dir, "metrics.csv");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "simulate", result.log.config,
                   {"metrics.csv", "likelihood.svg", "likelihood_log.svg", "gradients.svg"}, secs);
    if (result.diverged) {
        std::cerr << "training diverged: " << result.error << " (partial log written)\n";
        return 3;
    }
    std::cout << "wrote " << (dir / "metrics.csv").string() << "\n";
    return 0;
}

int cmd_suite(const RawOptions& raw) {
    const auto start = std::chrono::steady_clock::now();
    const TrainConfig base = to_config(raw);
    if (base.objective.variant == Variant::Rm) throw ConfigError("suite: RM objective not applicable");
    const fs::path dir = prepare_out_dir(raw);
    const auto results = run_scenario_suite(base);

    std::vector<std::string> files;
    std::vector<ChartSpec> specs;
    std::vector<std::vector<ChartSeries>> panels;

    // initial-state panel: one series per scenario (rows are identical
    // across prompts, so prompt 0 stands in)
    {
        ChartSpec spec{"initial state", "response", "likelihood", false, 480, 360};
        const char* colors[4] = {kColorChosenAvg, kColorRejectedAvg, kColorRejectedMax, kColorUnseenAvg};
        std::vector<ChartSeries> series;
        for (int s = 0; s < 4; ++s) {
            const auto targets = init_targets(to_scenario(s + 1));
            ChartSeries cs{"scenario " + std::to_string(s + 1), colors[s], {}};
            for (int r = 0; r < ToySpace::kResponses; ++r) cs.points.emplace_back(r, targets[0][r]);
            series.push_back(std::move(cs));
        }
        specs.push_back(spec);
        panels.push_back(std::move(series));
    }

    std::string summary = "scenario,peak_chosen,peak_epoch,final_chosen,final_rejected,final_unseen,decline_epoch\n";
    bool diverged = false;
    for (int s = 0; s < 4; ++s) {
        const std::string csv = "s" + std::to_string(s + 1) + ".csv";
        write_metrics_csv(results[s].log, (dir / csv).string());
        files.push_back(csv);
        const auto rows = parse_metrics_csv((dir / csv).string());
        specs.push_back({"scenario " + std::to_string(s + 1), "epoch", "likelihood", false, 480, 360});
        panels.push_back(likelihood_series(rows));
        const RunSummary sum = summarize(results[s].log);
        summary += std::to_string(s + 1) + ',' + format_sig9(sum.peak_chosen) + ',' +
                   std::to_string(sum.peak_epoch) + ',' + format_sig9(sum.final_chosen) + ',' +
                   format_sig9(sum.final_rejected) + ',' + format_sig9(sum.final_unseen) + ',' +
                   std::to_string(sum.rejected_decline_epoch) + "\n";
        diverged = diverged || results[s].diverged;
    }
    write_text_file((dir / "suite.svg").string(), render_panel_row_svg(specs, panels));
    write_text_file((dir / "summary.csv").string(), summary);
    files.push_back("suite.svg");
    files.push_back("summary.csv");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "suite", config_echo(base), files, secs);
    if (diverged) {
        std::cerr << "at least one scenario diverged (partial logs written)\n";
        return 3;
    }
    std::cout << "wrote " << (dir / "summary.csv").string() << "\n";
    return 0;
}

int cmd_sweep(const RawOptions& raw, const std::string& param, const std::string& grid_arg) {
    const auto start = std::chrono::steady_clock::now();
    if (param != "beta-minus" && param != "beta_minus") {
        throw ConfigError("sweep: only --param beta-minus is supported");
    }
    RawOptions base_raw = raw;
    base_raw.objective = "flex-dpo";
    const TrainConfig base = to_config(base_raw);
    std::vector<double> grid;
    std::stringstream ss(grid_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        grid.push_back(std::stod(tok));
        if (!(grid.back() > 0)) throw ConfigError("sweep: grid values must be > 0");
    }
    if (grid.empty()) throw ConfigError("sweep: empty grid");
    const fs::path dir = prepare_out_dir(raw);
    const auto results = sweep_beta_minus(base, grid);

    std::vector<std::string> files;
    ChartSeries decline{"decline-to-0.01 epoch", kColorRejectedAvg, {}};
    ChartSeries final_chosen{"final avg chosen", kColorChosenAvg, {}};
    std::string summary = "beta_minus,decline_epoch,final_chosen,final_rejected,peak_chosen\n";
    bool diverged = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "sweep_bm_%g.csv", grid[i]);
        write_metrics_csv(results[i].log, (dir / name).string());
        files.emplace_back(name);
        const RunSummary sum = summarize(results[i].log);
        decline.points.emplace_back(grid[i], static_cast<double>(sum.rejected_decline_epoch));
        final_chosen.points.emplace_back(grid[i], sum.final_chosen);
        summary += format_sig9(grid[i]) + ',' + std::to_string(sum.rejected_decline_epoch) + ',' +
                   format_sig9(sum.final_chosen) + ',' + format_sig9(sum.final_rejected) + ',' +
                   format_sig9(sum.peak_chosen) + "\n";
        diverged = diverged || results[i].diverged;
    }
    write_text_file((dir / "sweep.svg").string(),
                    render_panel_row_svg({{"rejected decline epoch", "beta-", "epoch", false, 480, 360},
                                          {"final chosen likelihood", "beta-", "likelihood", false, 480, 360}},
                                         {{decline}, {final_chosen}}));
    write_text_file((dir / "sweep_summary.csv").string(), summary);
    files.push_back("sweep.svg");
    files.push_back("sweep_summary.csv");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "sweep", config_echo(base), files, secs);
    if (diverged) return 3;
    std::cout << "wrote " << (dir / "sweep_summary.csv").string() << "\n";
    return 0;
}

struct CheckOutcome {
    std::string name;
    bool pass;
    std::string detail;
};

int cmd_verify(int points, std::uint64_t seed, const std::string& only, const std::string& sabotage) {
    std::vector<CheckOutcome> outcomes;
    auto wanted = [&](const std::string& name) {
        return only.empty() || name.find(only) != std::string::npos;
    };

    if (wanted("corollary1")) {
        const double err = check_corollary1(points, seed);
        outcomes.push_back({"corollary1", err < 1e-10, "max rel err " + format_sig9(err)});
    }
    for (Variant v : {Variant::Dpo, Variant::FlexDpo, Variant::SftDpo, Variant::Ipo, Variant::Slic,
                      Variant::SimPo, Variant::Rm}) {
        const std::string name = std::string("finite-diff-") + variant_name(v);
        if (!wanted(name)) continue;
        FiniteDiffReport worst;
        if (v == Variant::Dpo && sabotage == "dpo-grad-sign") {
            // negative control: feed the battery a sign-flipped analytic
            // gradient and let the oracle flag it
            Rng rng(seed, 17);
            auto log_uniform = [&](double lo, double hi) {
                return std::exp(rng.uniform(std::log(lo), std::log(hi)));
            };
            for (int i = 0; i < points; ++i) {
                const ObjectiveSpec spec = ObjectiveSpec::dpo(rng.uniform(0.05, 0.95));
                const LikelihoodPoint p{log_uniform(1e-3, 0.999), log_uniform(1e-3, 0.999),
                                        log_uniform(1e-3, 0.999), log_uniform(1e-3, 0.999)};
                FiniteDiffReport rep = finite_diff(spec, p);
                rep.analytic.d_plus = -rep.analytic.d_plus;
                rep.analytic.d_minus = -rep.analytic.d_minus;
                rep.rel_err_plus = relative_error(rep.analytic.d_plus, rep.numeric.d_plus);
                rep.rel_err_minus = relative_error(rep.analytic.d_minus, rep.numeric.d_minus);
                if (std::max(rep.rel_err_plus, rep.rel_err_minus) >
                    std::max(worst.rel_err_plus, worst.rel_err_minus)) {
                    worst = rep;
                }
            }
        } else {
            worst = fd_battery(v, points, seed);
        }
        const double err = std::max(worst.rel_err_plus, worst.rel_err_minus);
        outcomes.push_back({name, err < 1e-5, "max rel err " + format_sig9(err)});
    }
    if (wanted("corollary2")) {
        const auto rep = check_corollary2(ObjectiveSpec::dpo(0.1), 0.5);
        const bool ok = std::abs(rep.slope_plus - 0.1) <= 0.02 && std::abs(rep.slope_minus + 0.9) <= 0.02 &&
                        rep.class_plus == LimitKind::Zero && rep.class_minus == LimitKind::Infinity;
        outcomes.push_back({"corollary2", ok,
                            "slopes " + format_sig9(rep.slope_plus) + " / " + format_sig9(rep.slope_minus)});
    }
    if (wanted("corollary3")) {
        TrainConfig cfg;
        cfg.objective = ObjectiveSpec::dpo(0.1);
        cfg.epochs = 250;
        cfg.seed = seed;
        const auto result = run_dpo_training(cfg);
        const auto rep = check_corollary3(result.log);
        outcomes.push_back({"corollary3", rep.pass,
                            rep.pass ? "mass residual " + format_sig9(rep.max_mass_residual) : rep.failure});
    }
    if (wanted("rm-balance")) {
        const double dev = check_rm_balance(points, seed);
        outcomes.push_back({"rm-balance", dev == 0.0, "max |d+ + d-| = " + format_sig9(dev)});
    }
    if (wanted("simpo-lemma")) {
        bool ok = true;
        std::string detail;
        for (auto [beta, len] : {std::pair<double, int>{0.5, 1}, {2.0, 1}, {1.0, 1}}) {
            const auto rep = check_simpo_lemma(ObjectiveSpec::simpo(beta, 0.0, 1, len), 0.5);
            ok = ok && rep.matches;
            detail += std::string(limit_kind_name(rep.sweep.class_minus)) + " ";
        }
        outcomes.push_back({"simpo-lemma", ok, detail});
    }

    bool all_pass = true;
    for (const auto& o : outcomes) {
        std::printf("[%s] %-22s %s\n", o.pass ? "PASS" : "FAIL", o.name.c_str(), o.detail.c_str());
        all_pass = all_pass && o.pass;
    }
    if (outcomes.empty()) {
        std::cerr << "verify: no check matches --only " << only << "\n";
        return 2;
    }
    return all_pass ? 0 : 1;
}

double variance(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / xs.size();
}

int cmd_compare_rm(const RawOptions& raw) {
    const auto start = std::chrono::steady_clock::now();
    RawOptions dpo_raw = raw;
    if (dpo_raw.objective == "rm") dpo_raw.objective = "dpo";
    const TrainConfig dpo_cfg = to_config(dpo_raw);
    RawOptions rm_raw = raw;
    rm_raw.objective = "rm";
    const TrainConfig rm_cfg = to_config(rm_raw);
    const fs::path dir = prepare_out_dir(raw);

    const TrainResult dpo = run_dpo_training(dpo_cfg);
    const RmTrainResult rm = run_rm_training(rm_cfg);

    write_metrics_csv(dpo.log, (dir / "dpo_metrics.csv").string());
    write_reward_csv(rm.log, (dir / "rm_metrics.csv").string());

    // paired accuracy on the shared pair stream (epoch-0 policy row skipped:
    // no pairs were consumed there)
    std::string cmp = "epoch,dpo_accuracy,rm_accuracy\n";
    ChartSeries dpo_acc{"dpo implicit-reward accuracy", kColorChosenAvg, {}};
    ChartSeries rm_acc{"rm accuracy", kColorRejectedAvg, {}};
    std::vector<double> dpo_series, rm_series;
    const std::size_t n = std::min(rm.log.rows.size(), dpo.log.rows.size() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const long epoch = rm.log.rows[i].epoch;
        const double da = dpo.log.implicit_accuracy[i + 1];
        const double ra = rm.log.rows[i].accuracy;
        cmp += std::to_string(epoch) + ',' + format_sig9(da) + ',' + format_sig9(ra) + "\n";
        dpo_acc.points.emplace_back(static_cast<double>(epoch), da);
        rm_acc.points.emplace_back(static_cast<double>(epoch), ra);
        dpo_series.push_back(da);
        rm_series.push_back(ra);
    }
    write_text_file((dir / "comparison.csv").string(), cmp);
    write_text_file((dir / "accuracy.svg").string(),
                    render_chart_svg({"pairwise ranking accuracy", "epoch", "accuracy", false},
                                     {dpo_acc, rm_acc}));

    ChartSeries dgp{"dpo mean |d+|", kColorChosenAvg, {}};
    ChartSeries dgm{"dpo mean |d-|", kColorRejectedAvg, {}};
    ChartSeries rgp{"rm mean |d+|", kColorChosenMin, {}};
    ChartSeries rgm{"rm mean |d-|", kColorUnseenAvg, {}};
    for (const auto& r : dpo.log.rows) {
        if (r.epoch == 0) continue;
        dgp.points.emplace_back(static_cast<double>(r.epoch), r.grad_plus_mean);
        dgm.points.emplace_back(static_cast<double>(r.epoch), r.grad_minus_mean);
    }
    for (const auto& r : rm.log.rows) {
        rgp.points.emplace_back(static_cast<double>(r.epoch), r.grad_plus_mean);
        rgm.points.emplace_back(static_cast<double>(r.epoch), r.grad_minus_mean);
    }
    write_text_file((dir / "gradients_compare.svg").string(),
                    render_chart_svg({"gradient magnitudes", "epoch", "mean |grad|", true},
                                     {dgp, dgm, rgp, rgm}));

    auto tail = [](const std::vector<double>& xs, std::size_t k) {
        return std::vector<double>(xs.end() - std::min(k, xs.size()), xs.end());
    };
    double rm_balance_dev = 0;
    for (const auto& r : rm.log.rows) {
        rm_balance_dev = std::max(rm_balance_dev, std::abs(r.grad_plus_mean - r.grad_minus_mean));
    }
    std::string stability;
    stability += "dpo_accuracy_variance_full = " + format_sig9(variance(dpo_series)) + "\n";
    stability += "rm_accuracy_variance_full = " + format_sig9(variance(rm_series)) + "\n";
    stability += "dpo_accuracy_variance_last100 = " + format_sig9(variance(tail(dpo_series, 100))) + "\n";
    stability += "rm_accuracy_variance_last100 = " + format_sig9(variance(tail(rm_series, 100))) + "\n";
    stability += "rm_grad_balance_max_dev = " + format_sig9(rm_balance_dev) + "\n";
    write_text_file((dir / "stability_summary.txt").string(), stability);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, "compare-rm", config_echo(dpo_cfg),
                   {"dpo_metrics.csv", "rm_metrics.csv", "comparison.csv", "accuracy.svg",
                    "gradients_compare.svg", "stability_summary.txt"},
                   secs);
    if (dpo.diverged || rm.diverged) return 3;
    std::cout << "wrote " << (dir / "stability_summary.txt").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"prefdyn: preference-optimization dynamics lab"};
    app.require_subcommand(1);

    RawOptions raw;
    auto* simulate = app.add_subcommand("simulate", "one training run with metrics and charts");
    add_train_options(simulate, raw);
    auto* suite = app.add_subcommand("suite", "all four on/off-policy scenarios");
    add_train_options(suite, raw);

    auto* sweep = app.add_subcommand("sweep", "hyperparameter sweep (beta-minus)");
    std::string sweep_param = "beta-minus";
    std::string sweep_grid = "0.02,0.05,0.08,0.1";
    sweep->add_option("--param", sweep_param, "swept hyperparameter (beta-minus)");
    sweep->add_option("--grid", sweep_grid, "comma-separated values");
    add_train_options(sweep, raw);

    auto* verify = app.add_subcommand("verify", "run the oracle battery");
    int verify_points = 1000;
    std::uint64_t verify_seed = 42;
    std::string verify_only, verify_sabotage;
    verify->add_option("--points", verify_points, "points per check")->check(CLI::PositiveNumber);
    verify->add_option("--seed", verify_seed, "battery seed");
    verify->add_option("--only", verify_only, "run checks whose name contains this substring");
    verify->add_option("--sabotage", verify_sabotage, "fault injection (test-only): dpo-grad-sign")
        ->group(""); // hidden
    auto* compare = app.add_subcommand("compare-rm", "DPO vs reward-model training on one pair stream");
    add_train_options(compare, raw);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(raw);
        if (suite->parsed()) return cmd_suite(raw);
        if (sweep->parsed()) return cmd_sweep(raw, sweep_param, sweep_grid);
        if (verify->parsed()) return cmd_verify(verify_points, verify_seed, verify_only, verify_sabotage);
        if (compare->parsed()) return cmd_compare_rm(raw);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
