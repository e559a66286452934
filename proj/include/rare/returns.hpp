#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rare {

enum class Provenance { MC, GEV, GPA, GKLT, Control };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// A threshold and the probability mass attached to it.
struct RankedPair {
    double threshold = 0.0;
    double probability = 0.0;
};

/// Mean and standard deviation of a method's tilted end distribution; the
/// averaging filter keeps thresholds within mean ± half_width * stddev.
struct TiltedWindow {
    double mean = 0.0;
    double stddev = 0.0;
};

struct ReturnPoint {
    double threshold = 0.0;
    double probability = 0.0;
    double return_time = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    int n_experiments = 1;
};

/// Points are stored by descending threshold, so return times are
/// non-increasing along the vector.
struct ReturnCurve {
    Provenance provenance = Provenance::MC;
    std::vector<ReturnPoint> points;
    std::optional<TiltedWindow> tilted;
    std::vector<std::string> diagnostics;

    /// Log-linear interpolation of the return time at `threshold`; empty
    /// outside the curve's threshold range.
    std::optional<double> return_time_at(double threshold) const;
    std::optional<double> band_at(double threshold, bool upper) const;
    double max_return_time() const;
};

/// -1 / log(1 - p), accurate for small p.
double return_time_from_probability(double p);

/// Return times from (threshold, mass) pairs: the exceedance probability of
/// a threshold is the summed mass of every pair at or above it. Pairs may
/// come unsorted; ties collapse into one point. Points whose cumulative
/// probability reaches one are dropped with a diagnostic.
ReturnCurve curve_from_ranked(std::span<const RankedPair> pairs, Provenance provenance);

/// Each (threshold, exceedance probability) becomes one point directly.
ReturnCurve curve_from_probabilities(std::span<const double> thresholds, std::span<const double> probabilities,
                                     Provenance provenance);

/// Block-maxima curve of a long series: blocks of `block_length` samples,
/// candidate thresholds at the distinct block maxima, exceedance frequency
/// (1/K) #{a_k >= a}. Return times are in blocks.
ReturnCurve curve_from_block_series(std::span<const double> series, std::size_t block_length,
                                    Provenance provenance = Provenance::Control);

struct AverageOptions {
    /// Common threshold grid; empty means `grid_points` equally spaced
    /// thresholds across the union of the curves' ranges, or every curve
    /// threshold when grid_points is 0.
    std::vector<double> grid;
    std::size_t grid_points = 100;
    /// Apply the tilted-window filter to curves that carry one.
    bool filter = false;
    double half_width = 0.5;
};

/// Mean return time across curves at each grid threshold, band = min/max.
/// Curves never contribute outside their own threshold range.
ReturnCurve average_curves(std::span<const ReturnCurve> curves, const AverageOptions& options = {});

/// Two-stage mean: average within each group (one group per C), then
/// average the group means. The band spans every contributing experiment.
ReturnCurve average_curve_groups(std::span<const std::vector<ReturnCurve>> groups,
                                 const AverageOptions& options = {});

/// CSV columns: curve,provenance,threshold,probability,return_time,band_lo,band_hi,n_experiments
void write_curves_csv(std::ostream& out, std::span<const ReturnCurve> curves, std::span<const std::string> labels = {});
std::vector<ReturnCurve> read_curves_csv(std::istream& in, std::vector<std::string>* labels = nullptr);

}  // namespace rare
