#include "rare/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rare/csv.hpp"
#include "rare/errors.hpp"
#include "rare/gklt.hpp"
#include "rare/parallel.hpp"

namespace rare::harness {

double CostLedger::total() const {
    double sum = 0.0;
    for (const auto& e : entries) sum += e.cost;
    return sum;
}

bool RunResult::all_failed() const {
    if (experiments.empty()) return false;
    return std::none_of(experiments.begin(), experiments.end(), [](const ExperimentRecord& r) { return r.ok; });
}

namespace {

// Stream namespaces keep brute-force and control draws apart from the
// resampling experiments.
constexpr std::uint64_t brute_force_space = 1ull << 40;
constexpr std::uint64_t control_space = 2ull << 40;

std::vector<State> initial_states(const ExperimentConfig& cfg, std::uint64_t experiment, std::size_t count) {
    Engine rng = make_stream({cfg.seed, experiment, 0, 0, StreamTag::Initial});
    InitialStateOptions opts;
    opts.burn_in = cfg.burn_in;
    return sample_initial_states(cfg.system, count, rng, opts);
}

TiltConfig tilt_config(const ExperimentConfig& cfg, double C) {
    TiltConfig t;
    t.C = C;
    t.weight_form = cfg.method == Method::GKLT ? WeightForm::IntegratedObservable : WeightForm::EndValueDifference;
    t.tau = cfg.tau;
    t.t_final = cfg.t_final;
    return t;
}

long windows_per_trajectory(const ExperimentConfig& cfg) {
    return cfg.time_average() ? std::lround(cfg.t_final / cfg.window) : 1;
}

// Curve blocks per t_final, and samples (end values or window averages) per curve block.
long trajectories_per_block(const ExperimentConfig& cfg) {
    return cfg.block_length > 0.0 ? std::lround(cfg.block_length / cfg.t_final) : 1;
}

long samples_per_block(const ExperimentConfig& cfg) {
    return trajectories_per_block(cfg) * windows_per_trajectory(cfg);
}

TiltedWindow mean_std(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return {mean, v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0};
}

std::vector<double> row_maxima(const Eigen::MatrixXd& m) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).maxCoeff();
    return out;
}

// Band of `main` widened to the spread of every repetition's curve.
void band_from_repetitions(ReturnCurve& main, const std::vector<const ReturnCurve*>& reps) {
    for (auto& p : main.points) {
        double lo = INFINITY;
        double hi = 0.0;
        int count = 0;
        for (const auto* c : reps) {
            if (auto r = c->return_time_at(p.threshold)) {
                lo = std::min(lo, *r);
                hi = std::max(hi, *r);
                ++count;
            }
        }
        if (count > 0) {
            p.band_lo = lo;
            p.band_hi = hi;
            p.n_experiments = count;
        }
    }
}

void add_rel_err(RunResult& result, const std::string& method, const std::vector<const ExperimentRecord*>& records) {
    const auto& cfg = result.config;
    if (cfg.thresholds.empty()) return;
    std::vector<std::vector<double>> table;
    for (const auto* r : records) {
        if (r->ok && r->estimates.size() == cfg.thresholds.size()) table.push_back(r->estimates);
    }
    if (table.size() < 2) {
        result.diagnostics.push_back(method + ": fewer than two successful experiments, no relative error");
        return;
    }
    const auto gamma = reference_probabilities(cfg, cfg.thresholds);
    if (!gamma) {
        result.diagnostics.push_back(method + ": no reference probabilities, no relative error");
        return;
    }
    std::vector<double> th;
    std::vector<double> g;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < cfg.thresholds.size(); ++j) {
        if ((*gamma)[j] > 0.0) {
            th.push_back(cfg.thresholds[j]);
            g.push_back((*gamma)[j]);
            keep.push_back(j);
        }
    }
    if (keep.empty()) return;
    for (auto& row : table) {
        std::vector<double> kept;
        for (auto j : keep) kept.push_back(row[j]);
        row = std::move(kept);
    }
    result.rel_err.push_back(make_rel_err_report(method, th, g, table));
}

std::string tilt_label(double C) { return "C=" + format_double(C); }

// ---- resampling methods --------------------------------------------------

void run_one_resampling(const ExperimentConfig& cfg, const Observable& obs, ExperimentRecord& rec,
                        AncestryLog* ancestry) {
    const TiltConfig tc = tilt_config(cfg, rec.tilt);
    const std::uint64_t id = rec.tilt_index * static_cast<std::uint64_t>(cfg.experiments) + static_cast<std::uint64_t>(rec.index);
    const auto init = initial_states(cfg, id, cfg.particles);
    const StreamKey base{cfg.seed, id, 0, 0, StreamTag::Integrate};
    const double n = static_cast<double>(cfg.particles);
    rec.cost = n;
    try {
        if (cfg.method == Method::GPA) {
            const auto run = run_gpa(cfg.system, obs, tc, init, base);
            rec.curve = curve_from_ranked(gpa_weighted_pairs(run.final, run.ledger, tc), Provenance::GPA);
            std::vector<double> ends;
            for (const auto& p : run.final.particles) ends.push_back(p.phi);
            rec.curve.tilted = mean_std(ends);
            rec.estimates = estimate_tail_gpa(run.final, run.ledger, tc, cfg.thresholds);
            if (ancestry) *ancestry = run.ancestry;
        } else {
            const auto run = run_gklt(cfg.system, obs, tc, init, base);
            std::vector<double> maxima;
            for (const auto& bt : run.backward) maxima.push_back(time_averages(bt, cfg.window).max());
            rec.estimates =
                estimate_tail_fixed_thresholds(run.backward, run.resampling.ledger, tc, cfg.window, cfg.thresholds);
            if (cfg.gklt_estimator == GkltEstimator::PerTrajectoryMax) {
                rec.curve = curve_from_ranked(
                    estimate_per_trajectory_max(run.backward, run.resampling.ledger, tc, cfg.window), Provenance::GKLT);
            } else {
                rec.curve = curve_from_probabilities(cfg.thresholds, rec.estimates, Provenance::GKLT);
            }
            rec.curve.tilted = mean_std(maxima);
            if (ancestry) *ancestry = run.resampling.ancestry;
        }
    } catch (const ExtinctionError& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.cost = n * static_cast<double>(e.epoch()) / static_cast<double>(tc.epochs());
    } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
    }
}

RunResult run_resampling_batch(const ExperimentConfig& cfg, const RunOptions& options) {
    RunResult result;
    result.config = cfg;
    const Observable obs = make_observable(cfg);
    const auto K = static_cast<std::size_t>(cfg.experiments);
    const std::size_t jobs = cfg.tilts.size() * K;
    result.experiments.resize(jobs);
    result.ancestry.resize(cfg.tilts.size());
    for (std::size_t j = 0; j < jobs; ++j) {
        auto& rec = result.experiments[j];
        rec.tilt_index = j / K;
        rec.tilt = cfg.tilts[rec.tilt_index];
        rec.index = static_cast<int>(j % K);
    }
    parallel_for(jobs, options.workers, [&](std::size_t j) {
        auto& rec = result.experiments[j];
        run_one_resampling(cfg, obs, rec, rec.index == 0 ? &result.ancestry[rec.tilt_index] : nullptr);
    });

    std::vector<std::vector<ReturnCurve>> groups(cfg.tilts.size());
    for (std::size_t t = 0; t < cfg.tilts.size(); ++t) {
        CostEntry entry;
        entry.method = to_string(cfg.method);
        entry.tilt = cfg.tilts[t];
        std::vector<const ExperimentRecord*> recs;
        for (std::size_t k = 0; k < K; ++k) {
            const auto& rec = result.experiments[t * K + k];
            ++entry.experiments;
            entry.cost += rec.cost;
            if (!rec.ok) {
                ++entry.failed;
                continue;
            }
            recs.push_back(&rec);
            if (!rec.curve.points.empty()) groups[t].push_back(rec.curve);
        }
        result.ledger.entries.push_back(entry);
        add_rel_err(result, to_string(cfg.method) + " " + tilt_label(cfg.tilts[t]), recs);
    }
    result.ledger.estimate_cost = result.ledger.total();

    std::erase_if(groups, [](const auto& g) { return g.empty(); });
    if (groups.empty()) {
        result.curve.provenance = cfg.method;
        result.diagnostics.push_back("no successful experiment produced a curve");
        return result;
    }
    AverageOptions avg;
    avg.filter = cfg.filter;
    avg.half_width = cfg.half_width;
    result.curve = average_curve_groups(groups, avg);
    return result;
}

// ---- brute force ---------------------------------------------------------

std::vector<double> gev_grid(const GevFit& fit, double samples) {
    auto p = [&](double x) { return tail_from_gev(fit, x, samples); };
    const double s = fit.params.sigma;
    double lo = fit.params.mu;
    for (int i = 0; i < 200 && p(lo) < 0.5; ++i) lo -= s;
    double hi = fit.params.mu;
    double upper = INFINITY;
    if (fit.params.zeta < 0.0) upper = fit.params.mu - s / fit.params.zeta;
    for (int i = 0; i < 400 && p(hi) > 1e-9 && hi + s < upper; ++i) hi += s;
    if (hi + s >= upper) hi = upper - 1e-9 * s;
    std::vector<double> grid;
    constexpr int points = 200;
    for (int i = 0; i < points; ++i) grid.push_back(lo + (hi - lo) * i / (points - 1));
    return grid;
}

ReturnCurve gev_curve(const GevFit& fit, double samples) {
    const auto grid = gev_grid(fit, samples);
    std::vector<double> probs;
    for (double x : grid) probs.push_back(tail_from_gev(fit, x, samples));
    ReturnCurve curve = curve_from_probabilities(grid, probs, Provenance::GEV);
    for (auto& pt : curve.points) {
        const Interval ci = tail_interval(fit, pt.threshold, 0.95, samples);
        pt.band_lo = ci.hi < 1.0 ? return_time_from_probability(ci.hi) : 0.0;
        pt.band_hi = ci.lo > 0.0 ? return_time_from_probability(ci.lo) : INFINITY;
    }
    return curve;
}

struct BruteForceOutcome {
    ReturnCurve curve;
    std::vector<double> estimates;
    std::vector<ReturnCurve> extra;
    std::vector<LabeledFit> fits;
};

BruteForceOutcome brute_force_repetition(const ExperimentConfig& cfg, int rep, unsigned workers) {
    const auto sample = sample_brute_force(cfg, rep, workers);
    BruteForceOutcome out;
    if (cfg.method == Method::MC) {
        const auto values = cfg.time_average() ? row_maxima(sample.averages) : sample.end_values;
        out.curve = curve_from_block_series(values, static_cast<std::size_t>(trajectories_per_block(cfg)), Provenance::MC);
        for (double a : cfg.thresholds) {
            const auto est = estimate_tail_mc(values, a);
            const double tb = static_cast<double>(trajectories_per_block(cfg));
            out.estimates.push_back(tb == 1.0 ? est.gamma_hat : -std::expm1(tb * std::log1p(-est.gamma_hat)));
        }
        return out;
    }
    const double samples = static_cast<double>(samples_per_block(cfg));
    for (std::size_t i = 0; i < cfg.block_sizes.size(); ++i) {
        const std::size_t m = cfg.block_sizes[i];
        LabeledFit lf;
        lf.block_size = m;
        ReturnCurve curve;
        curve.provenance = Provenance::GEV;
        try {
            const auto bm = cfg.time_average() ? block_maxima(sample.averages, m)
                                               : block_maxima(sample.end_values, m, BlockLayout::EndParticleBlocks);
            lf.fit = fit_gev_mle(bm);
            curve = gev_curve(*lf.fit, samples);
            if (i == 0) {
                for (double a : cfg.thresholds) out.estimates.push_back(tail_from_gev(*lf.fit, a, samples));
            }
        } catch (const Error& e) {
            lf.error = e.what();
            if (i == 0) throw;
        }
        if (i == 0) out.curve = std::move(curve);
        else out.extra.push_back(std::move(curve));
        out.fits.push_back(std::move(lf));
    }
    return out;
}

RunResult run_brute_force_batch(const ExperimentConfig& cfg, const RunOptions& options) {
    RunResult result;
    result.config = cfg;
    const auto K = static_cast<std::size_t>(cfg.experiments);
    result.experiments.resize(K);
    std::vector<BruteForceOutcome> outcomes(K);
    for (std::size_t k = 0; k < K; ++k) {
        auto& rec = result.experiments[k];
        rec.index = static_cast<int>(k);
        rec.cost = std::round(cfg.budget);
        try {
            outcomes[k] = brute_force_repetition(cfg, static_cast<int>(k), options.workers);
            rec.curve = outcomes[k].curve;
            rec.estimates = outcomes[k].estimates;
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    }
    CostEntry entry;
    entry.method = to_string(cfg.method);
    std::vector<const ExperimentRecord*> recs;
    std::vector<const ReturnCurve*> reps;
    for (const auto& rec : result.experiments) {
        ++entry.experiments;
        entry.cost += rec.cost;
        if (!rec.ok) {
            ++entry.failed;
            continue;
        }
        recs.push_back(&rec);
        reps.push_back(&rec.curve);
    }
    result.ledger.entries.push_back(entry);
    result.ledger.estimate_cost = std::round(cfg.budget);
    std::string label = to_string(cfg.method);
    if (cfg.method == Method::GEV) label += " m=" + std::to_string(cfg.block_sizes.front());
    add_rel_err(result, label, recs);

    if (result.experiments.front().ok) {
        result.curve = result.experiments.front().curve;
        if (K > 1) band_from_repetitions(result.curve, reps);
        result.fits = outcomes.front().fits;
        for (std::size_t i = 0; i < outcomes.front().extra.size(); ++i) {
            result.extra_curves.push_back(outcomes.front().extra[i]);
            result.extra_labels.push_back("m=" + std::to_string(cfg.block_sizes[i + 1]));
        }
    } else {
        result.curve.provenance = cfg.method;
        result.diagnostics.push_back("first repetition failed: " + result.experiments.front().error);
    }
    return result;
}

}  // namespace

BruteForceSample sample_brute_force(const ExperimentConfig& cfg, int repetition, unsigned workers) {
    const auto total = static_cast<std::size_t>(std::llround(cfg.budget));
    if (total < 1) throw ConfigError("budget must be at least one trajectory");
    const Observable obs = make_observable(cfg);
    const long steps = steps_on_grid(cfg.t_final, cfg.system.dt, "t_final");
    const std::size_t chunk = std::max<std::size_t>(1, std::min<std::size_t>(total, (1u << 22) / (steps + 1)));
    TiltConfig tc;
    tc.C = 0.0;
    tc.tau = cfg.t_final;
    tc.t_final = cfg.t_final;
    const long windows = windows_per_trajectory(cfg);

    BruteForceSample out;
    if (cfg.time_average()) out.averages.resize(static_cast<Eigen::Index>(total), windows);
    else out.end_values.reserve(total);
    for (std::size_t first = 0, c = 0; first < total; first += chunk, ++c) {
        const std::size_t n = std::min(chunk, total - first);
        const std::uint64_t id = brute_force_space | (static_cast<std::uint64_t>(repetition) << 20) | c;
        const auto init = initial_states(cfg, id, n);
        const auto run = run_plain(cfg.system, obs, tc, init, {cfg.seed, id, 0, 0, StreamTag::Integrate},
                                   {workers, cfg.time_average()});
        if (!cfg.time_average()) {
            for (const auto& p : run.final.particles) out.end_values.push_back(p.phi);
            continue;
        }
        const auto& seg = run.segments.epochs.front();
        BackwardTrajectory bt;
        bt.dt = cfg.system.dt;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = seg.row(static_cast<Eigen::Index>(i));
            bt.values.resize(static_cast<std::size_t>(row.size()));
            for (Eigen::Index k = 0; k < row.size(); ++k) bt.values[static_cast<std::size_t>(k)] = row(k);
            const auto avg = time_averages(bt, cfg.window);
            for (long j = 0; j < windows; ++j) {
                out.averages(static_cast<Eigen::Index>(first + i), j) = avg.values[static_cast<std::size_t>(j)];
            }
        }
    }
    return out;
}

std::optional<std::vector<double>> reference_probabilities(const ExperimentConfig& cfg,
                                                           const std::vector<double>& thresholds) {
    std::vector<double> out;
    if (!cfg.reference_series.empty()) {
        std::ifstream in(cfg.reference_series);
        if (!in) throw ConfigError("cannot open reference series " + cfg.reference_series);
        const auto series = read_series_csv(in);
        const auto per_block = static_cast<std::size_t>(samples_per_block(cfg));
        const std::size_t blocks = series.size() / per_block;
        if (blocks < 1) throw InputError("reference series shorter than one block");
        std::vector<double> maxima(blocks);
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto first = series.begin() + static_cast<std::ptrdiff_t>(b * per_block);
            maxima[b] = *std::max_element(first, first + static_cast<std::ptrdiff_t>(per_block));
        }
        for (double a : thresholds) out.push_back(estimate_tail_mc(maxima, a).gamma_hat);
        return out;
    }
    if (cfg.system.kind != SystemKind::OrnsteinUhlenbeck || cfg.time_average() || cfg.observable != "position" ||
        trajectories_per_block(cfg) != 1) {
        return std::nullopt;
    }
    // Initial draws follow the exact stationary law; Euler-Maruyama relaxes
    // the variance towards its own fixed point σ²/(λ(2 - λ dt)).
    const auto& s = cfg.system;
    const double v0 = s.ou_sigma * s.ou_sigma / (2.0 * s.ou_lambda);
    double v = v0;
    if (!s.ou_exact) {
        const double vinf = s.ou_sigma * s.ou_sigma / (s.ou_lambda * (2.0 - s.ou_lambda * s.dt));
        const double n = static_cast<double>(steps_on_grid(cfg.t_final, s.dt, "t_final"));
        v = vinf + (v0 - vinf) * std::pow(1.0 - s.ou_lambda * s.dt, 2.0 * n);
    }
    for (double a : thresholds) out.push_back(gaussian_tail(a, v));
    return out;
}

RunResult run_control(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    RunResult result;
    result.config = cfg;
    const auto chunks = static_cast<std::size_t>(cfg.control_chunks);
    const auto units = static_cast<long>(std::floor(cfg.budget / static_cast<double>(chunks) + 1e-9));
    if (units < 2 * trajectories_per_block(cfg)) throw ConfigError("control budget too small for its chunks");
    const long steps_per_unit = steps_on_grid(cfg.t_final, cfg.system.dt, "t_final");
    const long window_steps = cfg.time_average() ? steps_on_grid(cfg.window, cfg.system.dt, "window") : steps_per_unit;
    const long per_unit = windows_per_trajectory(cfg);
    const Observable obs = make_observable(cfg);

    std::vector<std::vector<double>> series(chunks);
    parallel_for(chunks, options.workers, [&](std::size_t c) {
        const std::uint64_t id = control_space | c;
        auto init = initial_states(cfg, id, 1);
        Eigen::VectorXd x = init.front().values;
        Integrator integ(cfg.system);
        Engine rng = make_stream({cfg.seed, id, 0, 0, StreamTag::Control});
        auto& out = series[c];
        out.reserve(static_cast<std::size_t>(units * per_unit));
        double prev = obs(x);
        for (long u = 0; u < units * per_unit; ++u) {
            double acc = 0.0;
            for (long k = 0; k < window_steps; ++k) {
                integ.step(x, rng);
                const double cur = obs(x);
                acc += 0.5 * (prev + cur);
                prev = cur;
            }
            if (!std::isfinite(prev)) throw InputError("control run produced a non-finite state");
            out.push_back(cfg.time_average() ? acc * cfg.system.dt / cfg.window : prev);
        }
    });

    const auto per_block = static_cast<std::size_t>(samples_per_block(cfg));
    std::vector<ReturnCurve> chunk_curves;
    for (std::size_t c = 0; c < chunks; ++c) {
        ExperimentRecord rec;
        rec.index = static_cast<int>(c);
        rec.cost = static_cast<double>(units);
        chunk_curves.push_back(curve_from_block_series(series[c], per_block, Provenance::Control));
        result.experiments.push_back(std::move(rec));
        result.series.insert(result.series.end(), series[c].begin(), series[c].end());
    }
    result.curve = curve_from_block_series(result.series, per_block, Provenance::Control);
    std::vector<const ReturnCurve*> reps;
    for (const auto& c : chunk_curves) reps.push_back(&c);
    if (chunks > 1) band_from_repetitions(result.curve, reps);

    CostEntry entry;
    entry.method = to_string(Method::Control);
    entry.experiments = static_cast<int>(chunks);
    entry.cost = static_cast<double>(units) * static_cast<double>(chunks);
    result.ledger.entries.push_back(entry);
    result.ledger.estimate_cost = entry.cost;
    result.diagnostics.insert(result.diagnostics.end(), result.curve.diagnostics.begin(),
                              result.curve.diagnostics.end());
    return result;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    switch (cfg.method) {
        case Method::GPA:
        case Method::GKLT: return run_resampling_batch(cfg, options);
        case Method::MC:
        case Method::GEV: return run_brute_force_batch(cfg, options);
        case Method::Control: return run_control(cfg, options);
    }
    throw ConfigError("unknown method");
}

// ---- persistence ---------------------------------------------------------

namespace {

using nlohmann::json;

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

std::string target_name(const ExperimentConfig& cfg) {
    return cfg.time_average() ? "window_average_max" : "end_value";
}

}  // namespace

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
    const auto& cfg = result.config;
    std::filesystem::create_directories(dir);
    write_text(dir / "config.yaml", emit_config(cfg));

    {
        std::vector<ReturnCurve> curves{result.curve};
        std::vector<std::string> labels{"mean"};
        curves.insert(curves.end(), result.extra_curves.begin(), result.extra_curves.end());
        labels.insert(labels.end(), result.extra_labels.begin(), result.extra_labels.end());
        std::ofstream out(dir / "curves.csv", std::ios::binary);
        write_curves_csv(out, curves, labels);
    }
    if (cfg.method != Method::Control) {
        std::vector<ReturnCurve> curves;
        std::vector<std::string> labels;
        for (const auto& r : result.experiments) {
            if (!r.ok) continue;
            curves.push_back(r.curve);
            labels.push_back("t" + std::to_string(r.tilt_index) + "_k" + std::to_string(r.index));
        }
        std::ofstream out(dir / "experiment_curves.csv", std::ios::binary);
        write_curves_csv(out, curves, labels);
    }
    {
        std::ofstream out(dir / "estimates.csv", std::ios::binary);
        out << "method,tilt,experiment,status,threshold,estimate\n";
        const bool tilted = cfg.method == Method::GPA || cfg.method == Method::GKLT;
        for (const auto& r : result.experiments) {
            const std::string prefix = to_string(cfg.method) + ',' + (tilted ? format_double(r.tilt) : "") + ',' +
                                       std::to_string(r.index) + ',' + (r.ok ? "ok" : "failed") + ',';
            for (std::size_t j = 0; j < r.estimates.size(); ++j) {
                out << prefix << format_double(cfg.thresholds[j]) << ',' << format_double(r.estimates[j]) << '\n';
            }
        }
    }
    {
        std::ofstream out(dir / "ledger.csv", std::ios::binary);
        out << "method,tilt,experiments,failed,cost\n";
        for (const auto& e : result.ledger.entries) {
            out << e.method << ',' << (e.tilt ? format_double(*e.tilt) : "") << ',' << e.experiments << ','
                << e.failed << ',' << format_double(e.cost) << '\n';
        }
        out << "total,," << result.experiments.size() << ",,"
            << format_double(result.ledger.total()) << '\n';
    }
    {
        json j;
        j["name"] = cfg.name;
        j["method"] = to_string(cfg.method);
        j["observable"] = cfg.observable;
        j["target"] = target_name(cfg);
        j["system"] = cfg.system.kind == SystemKind::Lorenz96 ? "lorenz96" : "ou";
        j["estimate_cost"] = result.ledger.estimate_cost;
        j["total_cost"] = result.ledger.total();
        j["entries"] = json::array();
        for (const auto& e : result.ledger.entries) {
            json row{{"method", e.method}, {"experiments", e.experiments}, {"failed", e.failed}, {"cost", e.cost}};
            row["tilt"] = e.tilt ? json(*e.tilt) : json(nullptr);
            j["entries"].push_back(row);
        }
        write_text(dir / "ledger.json", j.dump(2) + "\n");
    }
    {
        json j = json::array();
        for (const auto& f : result.fits) {
            json row{{"block_size", f.block_size}};
            if (f.fit) {
                const auto& g = *f.fit;
                row["mu"] = g.params.mu;
                row["sigma"] = g.params.sigma;
                row["zeta"] = g.params.zeta;
                row["log_likelihood"] = g.log_likelihood;
                row["maxima"] = g.maxima.size();
                row["layout"] = to_string(g.layout);
                json cov = json::array();
                for (int r = 0; r < 3; ++r) cov.push_back({g.covariance(r, 0), g.covariance(r, 1), g.covariance(r, 2)});
                row["covariance"] = cov;
                row["zeta_ci_wald"] = interval_json(zeta_interval(g, CiMethod::Wald));
                row["zeta_ci_profile"] = interval_json(zeta_interval(g, CiMethod::Profile));
                row["warnings"] = g.diagnostics.warnings;
            } else {
                row["error"] = f.error;
            }
            j.push_back(row);
        }
        write_text(dir / "fits.json", j.dump(2) + "\n");
    }
    {
        std::ofstream out(dir / "relerr.csv", std::ios::binary);
        write_rel_err_csv(out, result.rel_err);
    }
    {
        json j;
        j["diagnostics"] = result.diagnostics;
        j["curve_diagnostics"] = result.curve.diagnostics;
        j["failures"] = json::array();
        for (const auto& r : result.experiments) {
            if (!r.ok) j["failures"].push_back({{"tilt", r.tilt}, {"experiment", r.index}, {"error", r.error}});
        }
        write_text(dir / "diagnostics.json", j.dump(2) + "\n");
    }
    for (std::size_t t = 0; t < result.ancestry.size(); ++t) {
        if (result.ancestry[t].records.empty()) continue;
        std::ofstream out(dir / ("ancestry_t" + std::to_string(t) + ".csv"), std::ios::binary);
        result.ancestry[t].write_csv(out);
    }
    if (!result.series.empty()) {
        std::ofstream out(dir / "series.csv", std::ios::binary);
        out << "value\n";
        for (double v : result.series) out << format_double(v) << '\n';
    }
}

}  // namespace rare::harness
