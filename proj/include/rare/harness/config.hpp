#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rare/dynamics.hpp"
#include "rare/returns.hpp"

namespace rare::harness {

using Method = Provenance;

enum class GkltEstimator { FixedThreshold, PerTrajectoryMax };

/// One experiment batch. Timing fields are in model time units; costs are
/// in particle-T_f units (one particle integrated over one t_final).
struct ExperimentConfig {
    std::string name = "custom";
    SystemSpec system;
    std::string observable = "position";
    Method method = Method::GPA;
    std::vector<double> tilts;
    std::size_t particles = 100;
    double tau = 0.1;
    double t_final = 2.0;
    /// Time-average window T; 0 targets end values instead.
    double window = 0.0;
    /// GEV block sizes; the first one drives the main curve.
    std::vector<std::size_t> block_sizes;
    int experiments = 1;
    /// Block length of control curves in time units; 0 means t_final.
    double block_length = 0.0;
    /// Cost of one MC, GEV or control estimate.
    double budget = 0.0;
    /// Thresholds for per-experiment estimates and relative errors.
    std::vector<double> thresholds;
    GkltEstimator gklt_estimator = GkltEstimator::PerTrajectoryMax;
    bool filter = true;
    double half_width = 0.5;
    int control_chunks = 10;
    /// Lorenz '96 spin-up before initial states are drawn.
    double burn_in = 1000.0;
    /// Archived control series used as the probability reference.
    std::string reference_series;
    std::uint64_t seed = 1;
    std::string output = "out";

    bool time_average() const { return window > 0.0; }
    /// Throws ConfigError listing every problem found.
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

std::string to_string(GkltEstimator e);
GkltEstimator gklt_estimator_from_string(const std::string& s);

Observable make_observable(const ExperimentConfig& cfg);

/// YAML text with nested `system` section.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string emit_config(const ExperimentConfig& cfg);

}  // namespace rare::harness
