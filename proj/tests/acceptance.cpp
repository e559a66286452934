// Acceptance suite: one [PASS]/[FAIL] line per criterion. Optional arguments
// select criteria by name, e.g. `acceptance AC1 AC7`.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rare/errors.hpp"
#include "rare/gev.hpp"
#include "rare/gklt.hpp"
#include "rare/harness/experiment.hpp"
#include "rare/harness/presets.hpp"
#include "rare/mc.hpp"
#include "rare/resampler.hpp"
#include "rare/returns.hpp"

using namespace rare;
using namespace rare::harness;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
        pass = pass && ok;
    }
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

std::vector<State> ou_init(std::size_t n, std::uint64_t seed) {
    Engine rng(seed);
    return sample_initial_states(SystemSpec::ornstein_uhlenbeck(1, 1), n, rng);
}

// Tolerances
constexpr double kAc1CLo = 1.8, kAc1CHi = 2.4;
constexpr double kAc1Ratio = 4.0, kAc1RatioTol = 0.5;
constexpr double kAc1Cost = 16.0, kAc1CostTol = 4.0;
constexpr double kAc2Sigmas = 3.0;
constexpr double kAc2RelErrTol = 0.30;
constexpr double kAc3MeanTol = 0.10;
constexpr double kAc4Factor = 3.0;
constexpr double kAc5Telescope = 1e-10;
constexpr double kAc6ParamTol = 0.02;
constexpr int kAc6Coverage = 90;
constexpr double kAc7Asymptotic = 0.01;
constexpr double kAc7Builders = 1e-12;
constexpr double kAc8MaxReturn = 1e4;

Outcome ac1() {
    Outcome o;
    const auto t = optimal_tilt(2.0);
    o.check(t.C >= kAc1CLo && t.C <= kAc1CHi, fmt("C*=%.2f", t.C));
    o.check(std::abs(t.rel_err_ratio - kAc1Ratio) <= kAc1RatioTol, fmt("rel-err ratio %.3f", t.rel_err_ratio));
    o.check(std::abs(t.cost_factor - kAc1Cost) <= kAc1CostTol, fmt("cost factor %.2f", t.cost_factor));
    return o;
}

Outcome ac2() {
    Outcome o;
    const double gamma = gaussian_tail(2.0);
    Engine rng(20);
    std::normal_distribution<double> normal;
    std::vector<double> big(1000000);
    for (auto& x : big) x = normal(rng);
    const auto est = estimate_tail_mc(big, 2.0);
    const double sd = std::sqrt(gamma * (1 - gamma) / 1e6);
    o.check(std::abs(est.gamma_hat - gamma) <= kAc2Sigmas * sd,
            fmt("gamma_hat=%.6f vs %.6f", est.gamma_hat, gamma));

    std::vector<double> estimates;
    std::vector<double> sample(1000);
    for (int k = 0; k < 100; ++k) {
        for (auto& x : sample) x = normal(rng);
        estimates.push_back(estimate_tail_mc(sample, 2.0).gamma_hat);
    }
    const double re = empirical_rel_err(estimates, gamma).rel_err;
    const double theory = 1.0 / std::sqrt(1000 * gamma);
    o.check(std::abs(re / theory - 1.0) <= kAc2RelErrTol, fmt("rel-err %.4f vs %.4f", re, theory));
    return o;
}

double mean_estimate(const RunResult& r, std::size_t j) {
    double s = 0.0;
    int n = 0;
    for (const auto& e : r.experiments) {
        if (!e.ok) continue;
        s += e.estimates[j];
        ++n;
    }
    return s / n;
}

Outcome ac3() {
    Outcome o;
    const auto gpa = run_experiment(preset_config("ou-re"));
    const auto mc = run_experiment(preset_config("ou-re-mc"));
    const double gamma = gaussian_tail(2.0, 0.5);
    const double mean = mean_estimate(gpa, 0);
    o.check(std::abs(mean / gamma - 1.0) <= kAc3MeanTol, fmt("mean %.4e vs %.4e", mean, gamma));
    // One GPA experiment against one MC estimate.
    const double gpa_cost = gpa.experiments.at(0).cost;
    o.check(gpa_cost == mc.ledger.estimate_cost, fmt("cost %.0f vs %.0f", gpa_cost, mc.ledger.estimate_cost));
    const double re_gpa = gpa.rel_err.at(0).rel_err.at(0);
    const double re_mc = mc.rel_err.at(0).rel_err.at(0);
    o.check(re_gpa < re_mc, fmt("rel-err GPA %.3f < MC %.3f", re_gpa, re_mc));
    return o;
}

Outcome ac4() {
    Outcome o;
    auto cfg = preset_config("ou-mean-re");
    cfg.tilts = {4.0};
    cfg.thresholds = {2.0, 3.5};
    const auto r = run_experiment(cfg);
    const auto& rep = r.rel_err.at(0);
    const double near = rep.mean_dev.at(0);
    const double far = rep.mean_dev.at(1);
    o.check(kAc4Factor * near <= far, fmt("mean dev %.4f at a=2, %.4f at a=3.5", near, far));
    return o;
}

Outcome ac5() {
    Outcome o;
    const auto spec = SystemSpec::ornstein_uhlenbeck(1, 1);
    const auto obs = Observable::position();
    const std::vector<double> a{0.0, 0.5, 1.0, 1.5};
    const auto init = ou_init(500, 51);
    const StreamKey base{51, 0, 0, 0, StreamTag::Integrate};

    TiltConfig end_cfg;
    end_cfg.C = 0.0;
    const auto gpa = run_gpa(spec, obs, end_cfg, init, base);
    const auto plain = run_plain(spec, obs, end_cfg, init, base, {1, true});
    std::vector<double> ends;
    for (const auto& p : plain.final.particles) ends.push_back(p.phi);
    const auto gpa_est = estimate_tail_gpa(gpa.final, gpa.ledger, end_cfg, a);
    bool same = true;
    for (std::size_t j = 0; j < a.size(); ++j) same = same && gpa_est[j] == estimate_tail_mc(ends, a[j]).gamma_hat;
    o.check(same, "GPA C=0 equals MC");

    TiltConfig int_cfg = end_cfg;
    int_cfg.weight_form = WeightForm::IntegratedObservable;
    const double window = 0.25;
    const auto g = run_gklt(spec, obs, int_cfg, init, base);
    const auto gklt_est = estimate_tail_fixed_thresholds(g.backward, g.resampling.ledger, int_cfg, window, a);
    // Without resampling every slot is its own lineage.
    std::vector<double> maxima;
    for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(init.size()); ++n) {
        BackwardTrajectory bt;
        bt.dt = spec.dt;
        for (std::size_t e = 0; e < plain.segments.epochs.size(); ++e) {
            const auto row = plain.segments.epochs[e].row(n);
            for (Eigen::Index k = e == 0 ? 0 : 1; k < row.size(); ++k) bt.values.push_back(row(k));
        }
        maxima.push_back(time_averages(bt, window).max());
    }
    same = maxima.size() == g.backward.size();
    for (std::size_t j = 0; j < a.size(); ++j) same = same && gklt_est[j] == estimate_tail_mc(maxima, a[j]).gamma_hat;
    o.check(same, "GKLT C=0 equals MC");

    TiltConfig tilted;
    tilted.C = 3.0;
    const auto run = run_resampling(spec, obs, tilted, init, {52, 0, 0, 0, StreamTag::Integrate}, {1, true});
    const auto bts = reconstruct_backward(run.ancestry, run.segments);
    const long steps = steps_on_grid(tilted.tau, spec.dt, "tau");
    const auto direct = estimate_tail_gpa(run.final, run.ledger, tilted, a);
    const auto path = estimate_tail_gpa_reconstructed(bts, run.ledger, tilted, steps, a);
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(path[j] / direct[j] - 1.0));
    o.check(worst <= kAc5Telescope, fmt("telescoping rel diff %.2e", worst));
    return o;
}

Outcome ac6() {
    Outcome o;
    {
        Engine rng(61);
        std::extreme_value_distribution<double> gumbel(0.0, 1.0);
        std::vector<double> s(100000);
        for (auto& x : s) x = gumbel(rng);
        const auto fit = fit_gev_mle(block_maxima(std::span<const double>(s), 1));
        const bool ok = std::abs(fit.params.mu) <= kAc6ParamTol && std::abs(fit.params.sigma - 1) <= kAc6ParamTol &&
                        std::abs(fit.params.zeta) <= kAc6ParamTol;
        o.check(ok, fmt("Gumbel fit (%.4f, %.4f, %.4f)", fit.params.mu, fit.params.sigma, fit.params.zeta));
    }
    {
        Engine rng(62);
        std::normal_distribution<double> normal;
        std::vector<double> s(10000);
        int wald = 0;
        int profile = 0;
        for (int rep = 0; rep < 100; ++rep) {
            for (auto& x : s) x = normal(rng);
            const auto fit = fit_gev_mle(block_maxima(std::span<const double>(s), 100));
            const auto w = zeta_interval(fit, CiMethod::Wald);
            const auto p = zeta_interval(fit, CiMethod::Profile);
            wald += (w.contains(0.0)) ? 1 : 0;
            profile += (p.contains(0.0)) ? 1 : 0;
        }
        o.check(wald >= kAc6Coverage, fmt("Wald zeta coverage %.0f/100 (profile %.0f/100)", wald, profile));
    }
    {
        Engine rng(63);
        std::normal_distribution<double> normal;
        std::vector<double> s(100000);
        for (auto& x : s) x = normal(rng);
        const auto fit = fit_gev_mle(block_maxima(std::span<const double>(s), 100));
        const auto ci = tail_interval(fit, 2.0, 0.95, 1.0);
        const double exact = gaussian_tail(2.0);
        o.check(ci.contains(exact), fmt("tail CI [%.5f, %.5f] vs %.5f", ci.lo, ci.hi, exact));
    }
    return o;
}

Outcome ac7() {
    Outcome o;
    o.check(return_time_from_probability(1.0 - std::exp(-1.0)) == 1.0, "r(1-1/e) = 1");
    double worst = 0.0;
    for (double p = 1e-3; p >= 1e-12; p /= 3.0) worst = std::max(worst, std::abs(return_time_from_probability(p) * p - 1));
    o.check(worst <= kAc7Asymptotic, fmt("max |r p - 1| = %.2e", worst));

    Engine rng(71);
    std::normal_distribution<double> normal;
    std::vector<double> s(20000);
    for (auto& x : s) x = normal(rng);
    const std::size_t L = 20;
    const auto block = curve_from_block_series(s, L);
    const auto maxima = block_maxima(std::span<const double>(s), L).values;
    std::vector<RankedPair> pairs;
    for (double m : maxima) pairs.push_back({m, 1.0 / static_cast<double>(maxima.size())});
    const auto ranked = curve_from_ranked(pairs, Provenance::MC);
    bool agree = ranked.points.size() == block.points.size();
    double diff = 0.0;
    for (std::size_t i = 0; agree && i < block.points.size(); ++i) {
        agree = ranked.points[i].threshold == block.points[i].threshold;
        diff = std::max(diff, std::abs(ranked.points[i].return_time / block.points[i].return_time - 1));
    }
    o.check(agree && diff <= kAc7Builders, fmt("builders differ by %.2e", diff));
    return o;
}

struct BandCheck {
    int checked = 0;
    int outside = 0;
    double worst_log10 = 0.0;
};

BandCheck within_band(const ReturnCurve& curve, const ReturnCurve& control) {
    BandCheck b;
    for (int i = 0; i <= 400; ++i) {
        const double a = 0.01 * i;
        const auto rc = control.return_time_at(a);
        const auto r = curve.return_time_at(a);
        if (!rc || !r || *rc > kAc8MaxReturn) continue;
        ++b.checked;
        b.worst_log10 = std::max(b.worst_log10, std::abs(std::log10(*r / *rc)));
        if (*r < *control.band_at(a, false) || *r > *control.band_at(a, true)) ++b.outside;
    }
    return b;
}

Outcome ac8() {
    Outcome o;
    const auto control = run_control(preset_config("ou-gpa-control"));
    const auto gpa = run_experiment(preset_config("ou-gpa-small"));
    const auto gev = run_experiment(preset_config("ou-gpa-gev"));
    const auto mc = run_experiment(preset_config("ou-gpa-mc"));
    o.check(gpa.ledger.total() == 3e3 && gev.ledger.estimate_cost == 3e3 && mc.ledger.estimate_cost == 3e3,
            "costs 3e3");
    const auto bg = within_band(gpa.curve, control.curve);
    const auto be = within_band(gev.curve, control.curve);
    o.check(bg.checked > 0 && bg.outside == 0,
            fmt("GPA outside band at %.0f/%.0f thresholds, max |log10 r/r_ctl| %.2f", bg.outside, bg.checked,
                bg.worst_log10));
    o.check(be.checked > 0 && be.outside == 0,
            fmt("GEV outside band at %.0f/%.0f thresholds, max |log10 r/r_ctl| %.2f", be.outside, be.checked,
                be.worst_log10));
    const double samples = mc.config.budget;
    const double rmc = mc.curve.max_return_time();
    const double rgev = gev.curve.max_return_time();
    o.check(rmc <= samples && rgev > 10 * samples, fmt("max r: MC %.3g, GEV %.3g, samples %.0f", rmc, rgev, samples));
    return o;
}

Outcome ac9() {
    Outcome o;
    const auto spec = SystemSpec::lorenz96(32, 64.0);
    State s{Eigen::VectorXd::Constant(32, 64.0), 0.0};
    for (int i = 0; i < 1000; ++i) s = step_lorenz96(s, spec);
    const double drift = (s.values.array() - 64.0).abs().maxCoeff();
    o.check(drift <= 1e-12, fmt("hyperplane drift %.1e", drift));

    Engine rng(91);
    std::uniform_real_distribution<double> u(-10, 10);
    Eigen::VectorXd x(32);
    for (auto& v : x) v = u(rng);
    State a{x, 0.0};
    Eigen::VectorXd rolled(32);
    for (int l = 0; l < 32; ++l) rolled((l + 5) % 32) = x(l);
    State b{rolled, 0.0};
    for (int i = 0; i < 200; ++i) {
        a = step_lorenz96(a, spec);
        b = step_lorenz96(b, spec);
    }
    bool equivariant = true;
    for (int l = 0; l < 32; ++l) equivariant = equivariant && b.values((l + 5) % 32) == a.values(l);
    o.check(equivariant, "rotation equivariance");

    const auto r = run_experiment(preset_config("l96-gpa"));
    int failed = 0;
    for (const auto& e : r.experiments) failed += e.ok ? 0 : 1;
    o.check(failed == 0, fmt("%.0f/%.0f experiments failed", failed, static_cast<double>(r.experiments.size())));
    bool monotone = !r.curve.points.empty();
    for (std::size_t i = 1; i < r.curve.points.size(); ++i) {
        monotone = monotone && r.curve.points[i].return_time <= r.curve.points[i - 1].return_time;
    }
    o.check(monotone, fmt("monotone curve, %.0f points", static_cast<double>(r.curve.points.size())));
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome ac10() {
    Outcome o;
    const auto root = std::filesystem::temp_directory_path() / "rare_acceptance";
    std::filesystem::remove_all(root);
    for (const char* name : {"ou-gpa-small", "ou-gpa-gev", "ou-gklt-max"}) {
        auto cfg = preset_config(name);
        if (cfg.method == Method::GKLT) cfg.experiments = 10;
        const auto d1 = root / (std::string(name) + "-1");
        const auto d4 = root / (std::string(name) + "-4");
        write_outputs(run_experiment(cfg, {1}), d1);
        write_outputs(run_experiment(cfg, {4}), d4);
        bool same = true;
        int files = 0;
        for (const auto& entry : std::filesystem::directory_iterator(d1)) {
            if (entry.path().extension() != ".csv") continue;
            ++files;
            same = same && slurp(entry.path()) == slurp(d4 / entry.path().filename());
        }
        o.check(same && files > 0, std::string(name) + " " + std::to_string(files) + " csv files identical");
    }
    std::filesystem::remove_all(root);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
        {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10},
    };
    const std::set<std::string> wanted(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        if (!wanted.empty() && !wanted.count(name)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << " (" << fmt("%.1f", secs)
                  << " s)" << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
