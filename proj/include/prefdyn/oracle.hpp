#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefdyn/metrics.hpp"
#include "prefdyn/objectives.hpp"
#include "prefdyn/rng.hpp"
#include "prefdyn/toy_world.hpp"

namespace prefdyn {

inline double relative_error(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-12});
}

struct FiniteDiffReport {
    std::string description;
    GradientPair analytic{};
    GradientPair numeric{};
    double rel_err_plus = 0;
    double rel_err_minus = 0;
    double h_plus = 0;
    double h_minus = 0;
};

namespace detail {

// Central difference, falling back to a one-sided stencil when crossing the
// SLiC hinge would mix branches.
template <typename Eval, typename SameBranch>
double diff_one_coord(const Eval& eval, double x, double h, const SameBranch& same_branch) {
    const bool up_ok = same_branch(x + h);
    const bool dn_ok = same_branch(x - h);
    if (up_ok && dn_ok) return (eval(x + h) - eval(x - h)) / (2.0 * h);
    if (dn_ok) return (eval(x) - eval(x - h)) / h;
    if (up_ok) return (eval(x + h) - eval(x)) / h;
    throw std::runtime_error("finite_diff: step straddles a branch boundary in both directions");
}

} // namespace detail

// Numeric gradient of a likelihood-domain objective at p. h is scaled per
// coordinate (default 1e-6 * coordinate); steps must stay inside (0, 1).
inline FiniteDiffReport finite_diff(const ObjectiveSpec& spec, const LikelihoodPoint& p,
                                    double h_scale = 1e-6) {
    FiniteDiffReport rep;
    rep.description = std::string(variant_name(spec.variant)) + " at pi+=" + format_sig9(p.pi_plus) +
                      " pi-=" + format_sig9(p.pi_minus);
    rep.analytic = objective_grad(p, spec);
    rep.h_plus = h_scale * p.pi_plus;
    rep.h_minus = h_scale * p.pi_minus;
    if (p.pi_plus - rep.h_plus <= 0 || p.pi_plus + rep.h_plus >= 1 || p.pi_minus - rep.h_minus <= 0 ||
        p.pi_minus + rep.h_minus >= 1) {
        throw std::invalid_argument("finite_diff: h reaches the domain boundary");
    }
    const bool center_branch = spec.variant == Variant::Slic ? slic_hinge_active(p, spec) : false;
    auto branch_plus = [&](double x) {
        if (spec.variant != Variant::Slic) return true;
        LikelihoodPoint q = p;
        q.pi_plus = x;
        return slic_hinge_active(q, spec) == center_branch;
    };
    auto branch_minus = [&](double x) {
        if (spec.variant != Variant::Slic) return true;
        LikelihoodPoint q = p;
        q.pi_minus = x;
        return slic_hinge_active(q, spec) == center_branch;
    };
    auto eval_plus = [&](double x) {
        LikelihoodPoint q = p;
        q.pi_plus = x;
        return objective_loss(q, spec);
    };
    auto eval_minus = [&](double x) {
        LikelihoodPoint q = p;
        q.pi_minus = x;
        return objective_loss(q, spec);
    };
    rep.numeric.d_plus = detail::diff_one_coord(eval_plus, p.pi_plus, rep.h_plus, branch_plus);
    rep.numeric.d_minus = detail::diff_one_coord(eval_minus, p.pi_minus, rep.h_minus, branch_minus);
    rep.rel_err_plus = relative_error(rep.analytic.d_plus, rep.numeric.d_plus);
    rep.rel_err_minus = relative_error(rep.analytic.d_minus, rep.numeric.d_minus);
    return rep;
}

// Same check on the RM objective's reward coordinates.
inline FiniteDiffReport finite_diff_rm(const RewardPoint& r, double h_scale = 1e-6) {
    FiniteDiffReport rep;
    rep.description = "rm at r+=" + format_sig9(r.r_plus) + " r-=" + format_sig9(r.r_minus);
    rep.analytic = rm_grad(r);
    rep.h_plus = h_scale * std::max(std::abs(r.r_plus), 1.0);
    rep.h_minus = h_scale * std::max(std::abs(r.r_minus), 1.0);
    rep.numeric.d_plus =
        (rm_loss({r.r_plus + rep.h_plus, r.r_minus}) - rm_loss({r.r_plus - rep.h_plus, r.r_minus})) /
        (2.0 * rep.h_plus);
    rep.numeric.d_minus =
        (rm_loss({r.r_plus, r.r_minus + rep.h_minus}) - rm_loss({r.r_plus, r.r_minus - rep.h_minus})) /
        (2.0 * rep.h_minus);
    rep.rel_err_plus = relative_error(rep.analytic.d_plus, rep.numeric.d_plus);
    rep.rel_err_minus = relative_error(rep.analytic.d_minus, rep.numeric.d_minus);
    return rep;
}

// Worst-case finite-difference error of one objective over seeded random
// interior points (random hyperparameters per point).
inline FiniteDiffReport fd_battery(Variant variant, int n_points, std::uint64_t seed,
                                   double h_scale = 1e-6) {
    Rng rng(seed, /*stream=*/17);
    FiniteDiffReport worst;
    auto log_uniform = [&](double lo, double hi) {
        return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    };
    for (int i = 0; i < n_points; ++i) {
        FiniteDiffReport rep;
        if (variant == Variant::Rm) {
            rep = finite_diff_rm({rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)}, h_scale);
        } else {
            ObjectiveSpec spec;
            spec.variant = variant;
            spec.beta = rng.uniform(0.05, 0.95);
            spec.beta_plus = rng.uniform(0.05, 0.95);
            spec.beta_minus = rng.uniform(0.05, 0.95);
            spec.gamma = rng.uniform(0.0, 1.0);
            spec.eta = rng.uniform(0.05, 1.0);
            spec.delta = rng.uniform(0.0, 5.0);
            spec.margin_gamma = rng.uniform(0.0, 1.0);
            spec.len_plus = 1 + static_cast<int>(rng.below(5));
            spec.len_minus = 1 + static_cast<int>(rng.below(5));
            const LikelihoodPoint p{log_uniform(1e-3, 0.999), log_uniform(1e-3, 0.999),
                                    log_uniform(1e-3, 0.999), log_uniform(1e-3, 0.999)};
            rep = finite_diff(spec, p, h_scale);
        }
        if (std::max(rep.rel_err_plus, rep.rel_err_minus) >
            std::max(worst.rel_err_plus, worst.rel_err_minus)) {
            worst = rep;
        }
    }
    return worst;
}

// ---- asymptotic sweeps ----

enum class LimitKind { Zero, Infinity, Constant };

inline const char* limit_kind_name(LimitKind k) {
    switch (k) {
        case LimitKind::Zero: return "zero";
        case LimitKind::Infinity: return "infinity";
        case LimitKind::Constant: return "constant";
    }
    return "?";
}

// Gradient magnitudes along a geometric pi- sweep with fitted log-log
// slopes over the final decade.
struct LimitSweepReport {
    std::vector<double> grid; // strictly decreasing pi- values
    std::vector<double> mag_plus;
    std::vector<double> mag_minus;
    double slope_plus = 0;
    double slope_minus = 0;
    LimitKind class_plus = LimitKind::Constant;
    LimitKind class_minus = LimitKind::Constant;
    double plateau_minus = 0; // |d_minus| at the smallest pi-
};

inline std::vector<double> sweep_grid(double from = 1e-1, double to = 1e-12, int per_decade = 8) {
    const double lf = std::log10(from), lt = std::log10(to);
    const int n = static_cast<int>(std::lround((lf - lt) * per_decade));
    std::vector<double> grid;
    grid.reserve(n + 1);
    for (int i = 0; i <= n; ++i) grid.push_back(std::pow(10.0, lf + (lt - lf) * i / n));
    return grid;
}

namespace detail {

// least-squares slope of log(mag) against log(x), final decade only
inline double loglog_slope_final_decade(const std::vector<double>& grid,
                                        const std::vector<double>& mag) {
    const double cutoff = grid.back() * 10.0 * (1.0 + 1e-9);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] <= cutoff && mag[i] > 0) {
            xs.push_back(std::log(grid[i]));
            ys.push_back(std::log(mag[i]));
        }
    }
    if (xs.size() < 8) throw std::runtime_error("loglog_slope: fewer than 8 usable points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    return num / den;
}

// Oscillating magnitudes mean the asymptotic regime was never reached.
inline void require_monotone_final_decade(const std::vector<double>& grid,
                                          const std::vector<double>& mag) {
    const double cutoff = grid.back() * 10.0 * (1.0 + 1e-9);
    int dir = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] > cutoff) continue;
        const double d = mag[i] - mag[i - 1];
        if (std::abs(d) <= 1e-9 * std::max(mag[i], mag[i - 1])) continue;
        const int s = d > 0 ? 1 : -1;
        if (dir == 0) dir = s;
        else if (dir != s) throw std::runtime_error("limit sweep: non-monotone data in final decade");
    }
}

// Magnitude ~ (pi-)^slope: positive slope vanishes as pi- -> 0, negative
// slope diverges. Dead zone 0.02 reads as a plateau.
inline LimitKind classify_slope(double slope) {
    if (slope >= 0.02) return LimitKind::Zero;
    if (slope <= -0.02) return LimitKind::Infinity;
    return LimitKind::Constant;
}

} // namespace detail

// Sweep the rejected likelihood toward zero at fixed pi+ and classify both
// gradient components. References are held at the on-policy init value.
inline LimitSweepReport check_corollary2(const ObjectiveSpec& spec, double pi_plus,
                                         int per_decade = 8) {
    LimitSweepReport rep;
    rep.grid = sweep_grid(1e-1, 1e-12, per_decade);
    for (double pm : rep.grid) {
        const GradientPair g = objective_grad({pi_plus, pm, kOnPolicyInit, kOnPolicyInit}, spec);
        rep.mag_plus.push_back(std::abs(g.d_plus));
        rep.mag_minus.push_back(std::abs(g.d_minus));
    }
    detail::require_monotone_final_decade(rep.grid, rep.mag_plus);
    detail::require_monotone_final_decade(rep.grid, rep.mag_minus);
    rep.slope_plus = detail::loglog_slope_final_decade(rep.grid, rep.mag_plus);
    rep.slope_minus = detail::loglog_slope_final_decade(rep.grid, rep.mag_minus);
    rep.class_plus = detail::classify_slope(rep.slope_plus);
    rep.class_minus = detail::classify_slope(rep.slope_minus);
    rep.plateau_minus = rep.mag_minus.back();
    return rep;
}

// Corollary-1 identity d-/d+ = -pi+/pi-: worst relative error over seeded
// random interior points.
inline double check_corollary1(int n_points, std::uint64_t seed) {
    if (n_points < 1) throw std::invalid_argument("check_corollary1: n_points < 1");
    Rng rng(seed, /*stream=*/11);
    auto log_uniform = [&](double lo, double hi) {
        return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    };
    double worst = 0;
    for (int i = 0; i < n_points; ++i) {
        const ObjectiveSpec spec = ObjectiveSpec::dpo(rng.uniform(0.05, 0.95));
        const LikelihoodPoint p{log_uniform(1e-6, 0.999), log_uniform(1e-6, 0.999),
                                log_uniform(1e-3, 0.999), log_uniform(1e-3, 0.999)};
        const GradientPair g = dpo_grad(p, spec);
        const double expect = -p.pi_plus / p.pi_minus;
        worst = std::max(worst, std::abs(g.d_minus / g.d_plus - expect) / std::abs(expect));
    }
    return worst;
}

// Mass-accounting check over a training log's distribution snapshots.
struct Corollary3Report {
    bool pass = false;
    std::string failure;
    double max_row_sum_err = 0;      // |sum - 1| over all logged dists
    double max_mass_residual = 0;    // |d(unseen) + d(chosen+rejected)| per prompt/epoch
    bool unseen_increased = false;   // first vs last logged epoch
    bool rejected_decreased = false;
};

inline Corollary3Report check_corollary3(const MetricsLog& log) {
    Corollary3Report rep;
    if (log.dist_snapshots.size() < 2 || log.dist_snapshots.size() != log.rows.size()) {
        rep.failure = "malformed log: missing or misaligned distribution snapshots";
        return rep;
    }
    auto set_masses = [](const std::vector<double>& dist) {
        double seen = 0, unseen = 0;
        for (int r : ToySpace::kChosen) seen += dist[r];
        for (int r : ToySpace::kRejected) seen += dist[r];
        for (int r : ToySpace::kUnseen) unseen += dist[r];
        return std::pair<double, double>{seen, unseen};
    };
    for (const auto& snap : log.dist_snapshots) {
        if (static_cast<int>(snap.size()) != ToySpace::kPrompts) {
            rep.failure = "malformed log: snapshot prompt count";
            return rep;
        }
        for (const auto& dist : snap) {
            double sum = 0;
            for (double v : dist) sum += v;
            rep.max_row_sum_err = std::max(rep.max_row_sum_err, std::abs(sum - 1.0));
        }
    }
    for (std::size_t e = 1; e < log.dist_snapshots.size(); ++e) {
        for (int p = 0; p < ToySpace::kPrompts; ++p) {
            const auto [seen0, unseen0] = set_masses(log.dist_snapshots[e - 1][p]);
            const auto [seen1, unseen1] = set_masses(log.dist_snapshots[e][p]);
            rep.max_mass_residual =
                std::max(rep.max_mass_residual, std::abs((unseen1 - unseen0) + (seen1 - seen0)));
        }
    }
    rep.unseen_increased = log.rows.back().avg_unseen > log.rows.front().avg_unseen;
    rep.rejected_decreased = log.rows.back().avg_rejected < log.rows.front().avg_rejected;
    if (rep.max_row_sum_err > 1e-9) rep.failure = "row sum violates normalization";
    else if (rep.max_mass_residual > 1e-8) rep.failure = "mass accounting residual too large";
    else if (!rep.unseen_increased) rep.failure = "unseen mass did not increase";
    else if (!rep.rejected_decreased) rep.failure = "rejected mass did not decrease";
    else rep.pass = true;
    return rep;
}

// Numeric verification of the SimPO d_minus limit against the analytic
// three-case rule.
struct SimpoLemmaReport {
    LimitSweepReport sweep;
    SimpoLimit analytic;
    bool matches = false;
    double plateau_rel_err = 0; // Constant case only
};

inline SimpoLemmaReport check_simpo_lemma(const ObjectiveSpec& spec, double pi_plus) {
    if (spec.variant != Variant::SimPo) throw std::invalid_argument("check_simpo_lemma: not a SimPO spec");
    SimpoLemmaReport rep;
    rep.sweep = check_corollary2(spec, pi_plus);
    rep.analytic = simpo_limit_class(spec, pi_plus);
    const LimitKind numeric = rep.sweep.class_minus;
    switch (rep.analytic.kind) {
        case SimpoLimit::Kind::Zero: rep.matches = numeric == LimitKind::Zero; break;
        case SimpoLimit::Kind::Infinity: rep.matches = numeric == LimitKind::Infinity; break;
        case SimpoLimit::Kind::Constant:
            rep.plateau_rel_err = relative_error(rep.analytic.value, rep.sweep.plateau_minus);
            rep.matches = numeric == LimitKind::Constant && rep.plateau_rel_err < 0.01;
            break;
    }
    return rep;
}

// Exact gradient balance of the RM objective: max |d+ + d-| over random
// reward points (should be identically zero).
inline double check_rm_balance(int n_points, std::uint64_t seed) {
    Rng rng(seed, /*stream=*/13);
    double worst = 0;
    for (int i = 0; i < n_points; ++i) {
        const GradientPair g = rm_grad({rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)});
        worst = std::max(worst, std::abs(g.d_plus + g.d_minus));
    }
    return worst;
}

} // namespace prefdyn
