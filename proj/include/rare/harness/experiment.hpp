#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rare/gev.hpp"
#include "rare/harness/config.hpp"
#include "rare/mc.hpp"
#include "rare/resampler.hpp"
#include "rare/returns.hpp"

namespace rare::harness {

/// Cost of one tilt value (or of a tilt-free method), in particle-T_f units.
struct CostEntry {
    std::string method;
    std::optional<double> tilt;
    int experiments = 0;
    int failed = 0;
    double cost = 0.0;
};

struct CostLedger {
    std::vector<CostEntry> entries;
    /// Cost behind the reported estimate: every experiment and tilt for the
    /// resampling methods, a single repetition's budget for MC, GEV and
    /// control runs.
    double estimate_cost = 0.0;

    double total() const;
};

struct ExperimentRecord {
    std::size_t tilt_index = 0;
    double tilt = 0.0;
    int index = 0;
    bool ok = true;
    std::string error;
    double cost = 0.0;
    /// Estimates at cfg.thresholds.
    std::vector<double> estimates;
    ReturnCurve curve;
};

struct LabeledFit {
    std::size_t block_size = 0;
    std::optional<GevFit> fit;
    std::string error;
};

struct RunResult {
    ExperimentConfig config;
    ReturnCurve curve;
    std::vector<ExperimentRecord> experiments;
    /// Extra curves with labels (one per additional GEV block size).
    std::vector<ReturnCurve> extra_curves;
    std::vector<std::string> extra_labels;
    /// GEV fits of the first repetition, one per block size.
    std::vector<LabeledFit> fits;
    std::vector<RelErrReport> rel_err;
    CostLedger ledger;
    /// Ancestry of the first experiment per tilt value.
    std::vector<AncestryLog> ancestry;
    /// Control archive: end values at t_final spacing, or contiguous window averages.
    std::vector<double> series;
    std::vector<std::string> diagnostics;

    bool all_failed() const;
};

struct RunOptions {
    unsigned workers = 1;
};

/// Dispatches on cfg.method. Failed experiments are recorded, not retried.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Long brute-force reference: control_chunks independent runs whose total
/// cost is cfg.budget. Band = min/max over the per-chunk curves.
RunResult run_control(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Brute-force samples shared by MC and GEV: end values, or per-trajectory
/// window averages (rows = trajectories, columns = windows).
struct BruteForceSample {
    std::vector<double> end_values;
    Eigen::MatrixXd averages;
};

BruteForceSample sample_brute_force(const ExperimentConfig& cfg, int repetition, unsigned workers);

/// Exact or archived P(X > a) for the configured target, if one is known.
std::optional<std::vector<double>> reference_probabilities(const ExperimentConfig& cfg,
                                                           const std::vector<double>& thresholds);

/// curves.csv, estimates.csv, ledger.csv, ledger.json, fits.json,
/// relerr.csv, diagnostics.json, config.yaml, ancestry_*.csv, series.csv.
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

}  // namespace rare::harness
