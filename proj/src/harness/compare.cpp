#include "rare/harness/compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "rare/csv.hpp"
#include "rare/errors.hpp"

namespace rare::harness {

Bundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream lj(dir / "ledger.json");
    if (!lj) throw InputError("no ledger.json in " + dir.string());
    const auto j = nlohmann::json::parse(lj);
    Bundle b;
    b.label = j.value("name", dir.filename().string());
    b.method = j.at("method").get<std::string>();
    b.observable = j.at("observable").get<std::string>();
    b.target = j.at("target").get<std::string>();
    b.estimate_cost = j.at("estimate_cost").get<double>();
    std::ifstream cf(dir / "curves.csv");
    if (!cf) throw InputError("no curves.csv in " + dir.string());
    std::vector<std::string> labels;
    auto curves = read_curves_csv(cf, &labels);
    const auto it = std::find(labels.begin(), labels.end(), "mean");
    if (it == labels.end()) throw InputError("curves.csv in " + dir.string() + " has no mean curve");
    b.curve = std::move(curves[static_cast<std::size_t>(it - labels.begin())]);
    return b;
}

ComparisonReport compare_methods(const std::vector<Bundle>& bundles, std::size_t grid_points) {
    if (bundles.size() < 2) throw InputError("compare needs at least two bundles");
    ComparisonReport report;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        const auto& b = bundles[i];
        if (b.observable != bundles.front().observable || b.target != bundles.front().target) {
            throw InputError("bundles '" + b.label + "' and '" + bundles.front().label +
                             "' estimate different observables");
        }
        if (b.method == "Control" && report.control < 0) report.control = static_cast<int>(i);
        report.labels.push_back(b.label);
    }
    double ref = -1.0;
    for (const auto& b : bundles) {
        if (b.method == "Control") continue;
        if (ref < 0.0) {
            ref = b.estimate_cost;
        } else if (std::abs(b.estimate_cost - ref) > 0.05 * std::max(ref, b.estimate_cost)) {
            throw InputError("cost of '" + b.label + "' (" + format_double(b.estimate_cost) +
                             ") differs from " + format_double(ref) + " by more than 5%");
        }
    }

    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& b : bundles) {
        report.longest.push_back(b.curve.max_return_time());
        if (b.curve.points.empty()) continue;
        lo = std::min(lo, b.curve.points.back().threshold);
        hi = std::max(hi, b.curve.points.front().threshold);
    }
    if (!std::isfinite(lo)) return report;
    const std::size_t n = std::max<std::size_t>(grid_points, 2);
    for (std::size_t g = 0; g < n; ++g) {
        ComparisonRow row;
        row.threshold = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(n - 1);
        std::optional<double> control;
        if (report.control >= 0) control = bundles[static_cast<std::size_t>(report.control)].curve.return_time_at(row.threshold);
        for (const auto& b : bundles) {
            const auto r = b.curve.return_time_at(row.threshold);
            row.return_times.push_back(r.value_or(NAN));
            row.log_deviation.push_back(r && control ? std::log10(*r / *control) : NAN);
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report) {
    out << "threshold";
    for (const auto& l : report.labels) out << ",r_" << l;
    for (const auto& l : report.labels) out << ",logdev_" << l;
    out << '\n';
    for (const auto& row : report.rows) {
        out << format_double(row.threshold);
        for (double r : row.return_times) out << ',' << format_double(r);
        for (double d : row.log_deviation) out << ',' << format_double(d);
        out << '\n';
    }
}

void write_resolved_csv(std::ostream& out, const ComparisonReport& report) {
    out << "bundle,longest_return_time\n";
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
        out << report.labels[i] << ',' << format_double(report.longest[i]) << '\n';
    }
}

}  // namespace rare::harness
