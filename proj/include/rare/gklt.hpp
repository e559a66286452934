#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rare/resampler.hpp"
#include "rare/returns.hpp"

namespace rare {

/// Observable along one final particle's lineage on [0, t_final], spliced
/// from the per-epoch segments of its ancestors.
struct BackwardTrajectory {
    std::vector<double> values;
    double dt = 0.0;
    double integral = 0.0;  ///< trapezoidal ∫_0^{t_final} φ̂ dt
    std::size_t source = 0; ///< final slot
};

/// Non-overlapping window averages (1/T) ∫_{jT}^{(j+1)T} φ̂ dt, j = 0 .. floor(t_final/T) - 1.
struct TimeAverageSeries {
    double window = 0.0;
    std::vector<double> values;

    double max() const;
};

/// Walks the ancestry from the last resampling epoch back to the first and
/// splices the stored segments. Throws IntegrityError on a broken lineage.
std::vector<BackwardTrajectory> reconstruct_backward(const AncestryLog& ancestry, const SegmentStore& segments);

/// T must be a multiple of dt and at most the trajectory length.
TimeAverageSeries time_averages(const BackwardTrajectory& bt, double window);

/// (1/N) Σ 1{some window average > a} e^{-C ∫ φ̂} Π Z_i for each threshold.
std::vector<double> estimate_tail_fixed_thresholds(std::span<const BackwardTrajectory> bts, const WeightLedger& ledger,
                                                   const TiltConfig& cfg, double window,
                                                   std::span<const double> thresholds);

/// One (max window average, p_n) per trajectory, p_n = e^{-C ∫ φ̂} Π Z_i / N,
/// sorted by descending threshold.
std::vector<RankedPair> estimate_per_trajectory_max(std::span<const BackwardTrajectory> bts,
                                                    const WeightLedger& ledger, const TiltConfig& cfg, double window);

/// GPA tail estimate recomputed from reconstructed paths: the product of
/// every applied end-value weight factor along each lineage, instead of the
/// telescoped first/last form.
std::vector<double> estimate_tail_gpa_reconstructed(std::span<const BackwardTrajectory> bts,
                                                    const WeightLedger& ledger, const TiltConfig& cfg,
                                                    long steps_per_epoch, std::span<const double> thresholds);

struct GkltRun {
    ResamplingRun resampling;
    std::vector<BackwardTrajectory> backward;
};

/// Resampler with integrated weights, segments stored, backward
/// trajectories reconstructed.
GkltRun run_gklt(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg, std::span<const State> init,
                 const StreamKey& base, unsigned workers = 1);

}  // namespace rare
