#include "rare/gklt.hpp"

#include <algorithm>
#include <cmath>

#include "rare/errors.hpp"

namespace rare {

double TimeAverageSeries::max() const {
    if (values.empty()) throw InputError("empty time-average series");
    return *std::max_element(values.begin(), values.end());
}

std::vector<BackwardTrajectory> reconstruct_backward(const AncestryLog& ancestry, const SegmentStore& segments) {
    const int epochs = ancestry.epochs;
    const std::size_t n = ancestry.particle_count;
    if (epochs < 1 || static_cast<int>(segments.epochs.size()) != epochs) {
        throw IntegrityError("segment store does not cover every epoch", epochs, 0);
    }
    const auto width = segments.epochs.front().cols();
    const long steps = static_cast<long>(width) - 1;
    for (int i = 0; i < epochs; ++i) {
        const auto& seg = segments.epochs[static_cast<std::size_t>(i)];
        if (static_cast<std::size_t>(seg.rows()) != n || seg.cols() != width) {
            throw IntegrityError("segment shape mismatch", i + 1, 0);
        }
    }

    std::vector<std::vector<std::size_t>> parents;
    parents.reserve(static_cast<std::size_t>(epochs));
    for (int i = 1; i <= epochs; ++i) parents.push_back(ancestry.parent_of(i));

    std::vector<BackwardTrajectory> out;
    out.reserve(n);
    std::vector<std::size_t> lineage(static_cast<std::size_t>(epochs));
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t current = s;
        for (int i = epochs; i >= 1; --i) {
            current = parents[static_cast<std::size_t>(i - 1)][current];
            lineage[static_cast<std::size_t>(i - 1)] = current;
        }
        BackwardTrajectory bt;
        bt.dt = segments.dt;
        bt.source = s;
        bt.values.resize(static_cast<std::size_t>(epochs * steps + 1));
        for (int i = 0; i < epochs; ++i) {
            const auto& seg = segments.epochs[static_cast<std::size_t>(i)];
            const auto row = static_cast<Eigen::Index>(lineage[static_cast<std::size_t>(i)]);
            const auto offset = static_cast<std::size_t>(i * steps);
            for (long k = 0; k <= steps; ++k) bt.values[offset + static_cast<std::size_t>(k)] = seg(row, k);
        }
        double integral = 0.0;
        for (std::size_t k = 1; k < bt.values.size(); ++k) integral += 0.5 * bt.dt * (bt.values[k - 1] + bt.values[k]);
        bt.integral = integral;
        out.push_back(std::move(bt));
    }
    return out;
}

TimeAverageSeries time_averages(const BackwardTrajectory& bt, double window) {
    const long k = steps_on_grid(window, bt.dt, "time-average window");
    if (bt.values.size() < 2) throw InputError("backward trajectory too short");
    const long total = static_cast<long>(bt.values.size()) - 1;
    if (k > total) throw ConfigError("time-average window longer than the trajectory");
    const long count = total / k;
    TimeAverageSeries series;
    series.window = window;
    series.values.reserve(static_cast<std::size_t>(count));
    for (long j = 0; j < count; ++j) {
        double acc = 0.0;
        for (long s = j * k + 1; s <= (j + 1) * k; ++s) {
            acc += 0.5 * (bt.values[static_cast<std::size_t>(s - 1)] + bt.values[static_cast<std::size_t>(s)]);
        }
        series.values.push_back(acc * bt.dt / window);
    }
    return series;
}

std::vector<double> estimate_tail_fixed_thresholds(std::span<const BackwardTrajectory> bts, const WeightLedger& ledger,
                                                   const TiltConfig& cfg, double window,
                                                   std::span<const double> thresholds) {
    if (bts.empty()) throw InputError("no backward trajectories");
    const double log_z = ledger.log_z_sum();
    std::vector<double> weight(bts.size());
    std::vector<double> block_max(bts.size());
    for (std::size_t n = 0; n < bts.size(); ++n) {
        weight[n] = std::exp(-cfg.C * bts[n].integral + log_z);
        block_max[n] = time_averages(bts[n], window).max();
    }
    std::vector<double> out;
    out.reserve(thresholds.size());
    for (double a : thresholds) {
        double sum = 0.0;
        for (std::size_t n = 0; n < bts.size(); ++n) {
            if (block_max[n] > a) sum += weight[n];
        }
        out.push_back(sum / static_cast<double>(bts.size()));
    }
    return out;
}

std::vector<RankedPair> estimate_per_trajectory_max(std::span<const BackwardTrajectory> bts,
                                                    const WeightLedger& ledger, const TiltConfig& cfg, double window) {
    if (bts.empty()) throw InputError("no backward trajectories");
    const double log_z = ledger.log_z_sum();
    const auto n = static_cast<double>(bts.size());
    std::vector<RankedPair> pairs;
    pairs.reserve(bts.size());
    for (const auto& bt : bts) {
        pairs.push_back({time_averages(bt, window).max(), std::exp(-cfg.C * bt.integral + log_z) / n});
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const RankedPair& a, const RankedPair& b) { return a.threshold > b.threshold; });
    return pairs;
}

std::vector<double> estimate_tail_gpa_reconstructed(std::span<const BackwardTrajectory> bts,
                                                    const WeightLedger& ledger, const TiltConfig& cfg,
                                                    long steps_per_epoch, std::span<const double> thresholds) {
    if (bts.empty()) throw InputError("no backward trajectories");
    const int epochs = static_cast<int>(ledger.epochs.size());
    std::vector<double> log_factor(bts.size());
    for (std::size_t n = 0; n < bts.size(); ++n) {
        const auto& v = bts[n].values;
        if (static_cast<long>(v.size()) != epochs * steps_per_epoch + 1) {
            throw InputError("backward trajectory length does not match the ledger");
        }
        double acc = 0.0;
        for (int i = 0; i < epochs; ++i) {
            const double start = v[static_cast<std::size_t>(i * steps_per_epoch)];
            const double end = v[static_cast<std::size_t>((i + 1) * steps_per_epoch)];
            acc += -cfg.C * (end - start) + ledger.epochs[static_cast<std::size_t>(i)].log_z;
        }
        log_factor[n] = acc;
    }
    std::vector<double> out;
    out.reserve(thresholds.size());
    for (double a : thresholds) {
        double sum = 0.0;
        for (std::size_t n = 0; n < bts.size(); ++n) {
            if (bts[n].values.back() > a) sum += std::exp(log_factor[n]);
        }
        out.push_back(sum / static_cast<double>(bts.size()));
    }
    return out;
}

GkltRun run_gklt(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg, std::span<const State> init,
                 const StreamKey& base, unsigned workers) {
    if (cfg.weight_form != WeightForm::IntegratedObservable) {
        throw ConfigError("GKLT uses integrated-observable weights");
    }
    GkltRun run;
    run.resampling = run_resampling(spec, obs, cfg, init, base, {workers, true});
    run.backward = reconstruct_backward(run.resampling.ancestry, run.resampling.segments);
    return run;
}

}  // namespace rare
