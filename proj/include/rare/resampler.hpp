#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rare/dynamics.hpp"
#include "rare/returns.hpp"
#include "rare/rng.hpp"

namespace rare {

enum class WeightForm {
    /// exp(C (φ(x_{t_i}) - φ(x_{t_{i-1}}))): telescopes, targets end values.
    EndValueDifference,
    /// exp(C ∫_{t_{i-1}}^{t_i} φ dt): targets time averages.
    IntegratedObservable,
};

struct TiltConfig {
    double C = 0.0;
    WeightForm weight_form = WeightForm::EndValueDifference;
    double tau = 0.1;
    double t_final = 2.0;

    /// Checks tau > 0 and t_final = k * tau with k >= 1.
    void validate() const;
    int epochs() const;
};

struct Particle {
    State state;
    double phi = 0.0;              ///< φ at the current time
    double phi_epoch_start = 0.0;  ///< φ at t_{i-1}, after any clone perturbation
    double phi_root = 0.0;         ///< φ at t = 0 of the lineage's initial particle
    double integral = 0.0;         ///< trapezoidal ∫ φ dt over the current epoch
    std::size_t root = 0;
    std::size_t parent = 0;
    bool is_clone = false;
};

struct Ensemble {
    std::vector<Particle> particles;
    int epoch = 0;  ///< completed resampling epochs
    std::size_t initial_count = 0;
};

/// Weights of one resampling epoch. Raw weights are kept as logarithms;
/// normalized weights have mean one.
struct EpochWeights {
    std::vector<double> log_raw;
    std::vector<double> normalized;
    double log_z = 0.0;

    double z() const { return std::exp(log_z); }
    double raw(std::size_t n) const { return std::exp(log_raw[n]); }
};

struct WeightLedger {
    std::vector<EpochWeights> epochs;
    /// log Π Z_i, accumulated in log space.
    double log_z_sum() const;
};

struct AncestryRecord {
    int epoch = 0;             ///< resampling epoch, 1-based
    std::size_t child_id = 0;  ///< slot after resampling
    std::size_t parent_id = 0; ///< slot during the epoch
    double raw_weight = 0.0;   ///< parent's unnormalised weight
    double z = 0.0;
};

struct AncestryLog {
    std::size_t particle_count = 0;
    int epochs = 0;
    std::vector<AncestryRecord> records;

    /// parent_of(i)[child] for resampling epoch i; throws IntegrityError
    /// on gaps or out-of-range ids.
    std::vector<std::size_t> parent_of(int epoch) const;
    /// Flat table: epoch,child_id,parent_id,raw_weight,Z_i
    void write_csv(std::ostream& out) const;
};

/// Observable along every slot's segment, one matrix per epoch with
/// rows = slots and steps_per_epoch + 1 columns (both endpoints).
struct SegmentStore {
    double dt = 0.0;
    std::vector<Eigen::MatrixXd> epochs;
};

/// Normalises log weights: Z = mean(exp(log_raw)), W = exp(log_raw - log Z).
/// Throws OverflowError when the largest exponent exceeds the double range.
EpochWeights normalize_log_weights(std::vector<double> log_raw);

EpochWeights compute_weights_end_value(const Ensemble& ensemble, const Observable& obs, const TiltConfig& cfg);
EpochWeights compute_weights_integrated(const Ensemble& ensemble, const Observable& obs, const TiltConfig& cfg);

/// floor(W_n + u_n) per particle, with E[count] = W_n exactly for u uniform on [0,1).
std::vector<int> copy_counts(std::span<const double> normalized, std::span<const double> uniforms);

/// Clone/kill step: particle n leaves floor(W_n + u_n) copies, u_n uniform
/// on [0,1); surplus copies are killed uniformly without replacement and a
/// deficit is filled by cloning uniform survivors with replacement. Appends
/// one record per new slot to `log` when given. Throws ExtinctionError if no
/// copy survives.
Ensemble clone_kill(const Ensemble& ensemble, const EpochWeights& weights, Engine& rng,
                    std::vector<AncestryRecord>* log = nullptr);

struct ResamplingOptions {
    unsigned workers = 1;
    bool store_segments = false;
};

struct ResamplingRun {
    Ensemble final;
    WeightLedger ledger;
    AncestryLog ancestry;
    SegmentStore segments;
    /// Particle count times integrated time, in units of t_final.
    double cost = 0.0;
};

/// Integrate-weight-resample loop for either weight form. Integration noise
/// for slot n in epoch i comes from the stream (base.seed, base.experiment,
/// n, i); resampling draws from (base.seed, base.experiment, 0, i, Resample).
ResamplingRun run_resampling(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg,
                             std::span<const State> init, const StreamKey& base,
                             const ResamplingOptions& options = {});

/// Genealogical particle analysis; cfg.weight_form must be EndValueDifference.
ResamplingRun run_gpa(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg,
                      std::span<const State> init, const StreamKey& base, const ResamplingOptions& options = {});

/// The same particles on the same streams with no weighting or resampling:
/// plain Monte Carlo trajectories.
ResamplingRun run_plain(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg,
                        std::span<const State> init, const StreamKey& base, const ResamplingOptions& options = {});

/// Telescoped estimator (1/N) Σ 1{φ_T > a} e^{C φ_0} e^{-C φ_T} Π Z_i.
std::vector<double> estimate_tail_gpa(const Ensemble& final, const WeightLedger& ledger, const TiltConfig& cfg,
                                      std::span<const double> thresholds);

/// Per-particle (φ_T, mass) pairs; summing masses from the top reproduces the
/// estimator above. Sorted by descending φ_T.
std::vector<RankedPair> gpa_weighted_pairs(const Ensemble& final, const WeightLedger& ledger, const TiltConfig& cfg);

}  // namespace rare
