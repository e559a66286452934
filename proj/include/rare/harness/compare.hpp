#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rare/returns.hpp"

namespace rare::harness {

/// What compare needs from one run's output directory.
struct Bundle {
    std::string label;
    std::string method;
    std::string observable;
    std::string target;
    double estimate_cost = 0.0;
    ReturnCurve curve;
};

Bundle load_bundle(const std::filesystem::path& dir);

struct ComparisonRow {
    double threshold = 0.0;
    /// Return time per bundle; NaN where a curve does not reach.
    std::vector<double> return_times;
    /// log10(r / r_control) per bundle; NaN without a control value.
    std::vector<double> log_deviation;
};

struct ComparisonReport {
    std::vector<std::string> labels;
    std::vector<ComparisonRow> rows;
    /// Longest return time each bundle resolves.
    std::vector<double> longest;
    /// Index of the control bundle, or -1.
    int control = -1;
};

/// Needs at least two bundles with matching observables and targets;
/// non-control estimate costs must agree within 5%.
ComparisonReport compare_methods(const std::vector<Bundle>& bundles, std::size_t grid_points = 50);

void write_comparison_csv(std::ostream& out, const ComparisonReport& report);
void write_resolved_csv(std::ostream& out, const ComparisonReport& report);

}  // namespace rare::harness
