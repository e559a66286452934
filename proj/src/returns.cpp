#include "rare/returns.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "rare/csv.hpp"
#include "rare/errors.hpp"

namespace rare {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::MC: return "MC";
        case Provenance::GEV: return "GEV";
        case Provenance::GPA: return "GPA";
        case Provenance::GKLT: return "GKLT";
        case Provenance::Control: return "Control";
    }
    return "unknown";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "MC") return Provenance::MC;
    if (s == "GEV") return Provenance::GEV;
    if (s == "GPA") return Provenance::GPA;
    if (s == "GKLT") return Provenance::GKLT;
    if (s == "Control") return Provenance::Control;
    throw InputError("unknown provenance '" + s + "'");
}

double return_time_from_probability(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("return time needs a probability in (0,1)");
    return -1.0 / std::log1p(-p);
}

namespace {

// Index i with points[i].threshold >= x >= points[i+1].threshold, or npos.
std::optional<std::size_t> bracket(const std::vector<ReturnPoint>& pts, double x) {
    if (pts.empty() || x > pts.front().threshold || x < pts.back().threshold) return std::nullopt;
    const auto it = std::lower_bound(pts.begin(), pts.end(), x,
                                     [](const ReturnPoint& p, double v) { return p.threshold > v; });
    // it->threshold <= x
    if (it == pts.begin()) return std::size_t{0};
    return static_cast<std::size_t>(it - pts.begin()) - 1;
}

template <typename Get>
std::optional<double> log_interp(const std::vector<ReturnPoint>& pts, double x, Get get) {
    const auto i = bracket(pts, x);
    if (!i) return std::nullopt;
    const auto& hi = pts[*i];
    if (hi.threshold == x || *i + 1 == pts.size()) return get(hi);
    const auto& lo = pts[*i + 1];
    const double t = (x - lo.threshold) / (hi.threshold - lo.threshold);
    return std::exp((1.0 - t) * std::log(get(lo)) + t * std::log(get(hi)));
}

ReturnPoint make_point(double threshold, double probability) {
    ReturnPoint p;
    p.threshold = threshold;
    p.probability = probability;
    p.return_time = return_time_from_probability(probability);
    p.band_lo = p.return_time;
    p.band_hi = p.return_time;
    return p;
}

}  // namespace

std::optional<double> ReturnCurve::return_time_at(double threshold) const {
    return log_interp(points, threshold, [](const ReturnPoint& p) { return p.return_time; });
}

std::optional<double> ReturnCurve::band_at(double threshold, bool upper) const {
    return log_interp(points, threshold, [upper](const ReturnPoint& p) { return upper ? p.band_hi : p.band_lo; });
}

double ReturnCurve::max_return_time() const {
    double r = 0.0;
    for (const auto& p : points) r = std::max(r, p.return_time);
    return r;
}

ReturnCurve curve_from_ranked(std::span<const RankedPair> pairs, Provenance provenance) {
    std::vector<RankedPair> sorted(pairs.begin(), pairs.end());
    for (const auto& p : sorted) {
        if (!(p.probability >= 0.0) || !std::isfinite(p.threshold)) {
            throw InputError("ranked pairs need finite thresholds and non-negative masses");
        }
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const RankedPair& a, const RankedPair& b) { return a.threshold > b.threshold; });
    ReturnCurve curve;
    curve.provenance = provenance;
    double cumulative = 0.0;
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double a = sorted[i].threshold;
        while (i < sorted.size() && sorted[i].threshold == a) cumulative += sorted[i++].probability;
        if (cumulative > 0.0 && cumulative < 1.0) {
            curve.points.push_back(make_point(a, cumulative));
        } else {
            ++undefined;
        }
    }
    if (undefined > 0) {
        curve.diagnostics.push_back(std::to_string(undefined) +
                                    " threshold(s) dropped: cumulative probability outside (0,1)");
    }
    return curve;
}

ReturnCurve curve_from_probabilities(std::span<const double> thresholds, std::span<const double> probabilities,
                                     Provenance provenance) {
    if (thresholds.size() != probabilities.size()) throw InputError("threshold and probability counts differ");
    std::vector<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < thresholds.size(); ++i) rows.emplace_back(thresholds[i], probabilities[i]);
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    ReturnCurve curve;
    curve.provenance = provenance;
    std::size_t undefined = 0;
    for (const auto& [a, p] : rows) {
        if (p > 0.0 && p < 1.0) curve.points.push_back(make_point(a, p));
        else ++undefined;
    }
    if (undefined > 0) {
        curve.diagnostics.push_back(std::to_string(undefined) + " threshold(s) dropped: probability outside (0,1)");
    }
    return curve;
}

ReturnCurve curve_from_block_series(std::span<const double> series, std::size_t block_length, Provenance provenance) {
    if (block_length < 1) throw ConfigError("block length must be positive");
    if (series.size() < 2 * block_length) throw InputError("series shorter than two blocks");
    const std::size_t blocks = series.size() / block_length;
    std::vector<double> maxima(blocks);
    for (std::size_t k = 0; k < blocks; ++k) {
        const auto first = series.begin() + static_cast<std::ptrdiff_t>(k * block_length);
        maxima[k] = *std::max_element(first, first + static_cast<std::ptrdiff_t>(block_length));
    }
    std::sort(maxima.begin(), maxima.end(), std::greater<>());
    ReturnCurve curve;
    curve.provenance = provenance;
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < blocks;) {
        const double a = maxima[i];
        while (i < blocks && maxima[i] == a) ++i;
        const double p = static_cast<double>(i) / static_cast<double>(blocks);
        if (p < 1.0) curve.points.push_back(make_point(a, p));
        else ++undefined;
    }
    if (undefined > 0) {
        curve.diagnostics.push_back(std::to_string(undefined) +
                                    " threshold(s) dropped: every block exceeds them");
    }
    return curve;
}

namespace {

struct Range {
    double lo;
    double hi;
};

std::optional<Range> curve_range(const ReturnCurve& c) {
    if (c.points.empty()) return std::nullopt;
    return Range{c.points.back().threshold, c.points.front().threshold};
}

std::vector<double> build_grid(std::span<const ReturnCurve* const> curves, const AverageOptions& options) {
    std::vector<double> grid = options.grid;
    if (grid.empty()) {
        if (options.grid_points == 0) {
            for (const auto* c : curves) {
                for (const auto& p : c->points) grid.push_back(p.threshold);
            }
        } else {
            double lo = INFINITY;
            double hi = -INFINITY;
            for (const auto* c : curves) {
                if (auto r = curve_range(*c)) {
                    lo = std::min(lo, r->lo);
                    hi = std::max(hi, r->hi);
                }
            }
            if (std::isfinite(lo)) {
                if (options.grid_points == 1 || lo == hi) {
                    grid.push_back(hi);
                } else {
                    for (std::size_t i = 0; i < options.grid_points; ++i) {
                        const double t = static_cast<double>(i) / static_cast<double>(options.grid_points - 1);
                        grid.push_back(i + 1 == options.grid_points ? hi : lo + t * (hi - lo));
                    }
                }
            }
        }
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

bool passes_filter(const ReturnCurve& c, double a, const AverageOptions& options) {
    if (!options.filter || !c.tilted) return true;
    const double half = options.half_width * c.tilted->stddev;
    return a >= c.tilted->mean - half && a <= c.tilted->mean + half;
}

// Weighted pool-adjacent-violators fit making return times non-increasing
// along the (descending-threshold) point order. Returns the number of
// points changed.
std::size_t enforce_monotone(std::vector<ReturnPoint>& pts) {
    struct Block {
        double value;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (const auto& p : pts) {
        blocks.push_back({p.return_time, static_cast<double>(std::max(p.n_experiments, 1)), 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].value < blocks.back().value) {
            const Block b = blocks.back();
            blocks.pop_back();
            auto& a = blocks.back();
            a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
            a.weight += b.weight;
            a.count += b.count;
        }
    }
    std::size_t changed = 0;
    std::size_t i = 0;
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k < b.count; ++k, ++i) {
            auto& p = pts[i];
            if (p.return_time != b.value) {
                ++changed;
                p.return_time = b.value;
                p.probability = -std::expm1(-1.0 / b.value);
                p.band_lo = std::min(p.band_lo, b.value);
                p.band_hi = std::max(p.band_hi, b.value);
            }
        }
    }
    return changed;
}

ReturnCurve average_on_grid(std::span<const ReturnCurve* const> curves, const std::vector<double>& grid,
                            const AverageOptions& options) {
    if (curves.empty()) throw InputError("no curves to average");
    ReturnCurve out;
    out.provenance = curves.front()->provenance;
    std::size_t omitted = 0;
    std::size_t filtered = 0;
    for (double a : grid) {
        double sum = 0.0;
        double lo = INFINITY;
        double hi = 0.0;
        int count = 0;
        int experiments = 0;
        for (const auto* c : curves) {
            const auto r = c->return_time_at(a);
            if (!r) continue;
            if (!passes_filter(*c, a, options)) {
                ++filtered;
                continue;
            }
            sum += *r;
            lo = std::min(lo, c->band_at(a, false).value_or(*r));
            hi = std::max(hi, c->band_at(a, true).value_or(*r));
            ++count;
            const auto i = bracket(c->points, a);
            experiments += c->points[*i].n_experiments;
        }
        if (count == 0) {
            ++omitted;
            continue;
        }
        ReturnPoint p;
        p.threshold = a;
        p.return_time = sum / count;
        p.probability = -std::expm1(-1.0 / p.return_time);
        p.band_lo = lo;
        p.band_hi = hi;
        p.n_experiments = experiments;
        out.points.push_back(p);
    }
    if (const auto changed = enforce_monotone(out.points); changed > 0) {
        out.diagnostics.push_back(std::to_string(changed) + " averaged point(s) pooled to keep return times monotone");
    }
    if (filtered > 0) out.diagnostics.push_back(std::to_string(filtered) + " point(s) removed by the tilted-window filter");
    if (omitted > 0) out.diagnostics.push_back(std::to_string(omitted) + " grid threshold(s) without any contributing curve");
    return out;
}

}  // namespace

ReturnCurve average_curves(std::span<const ReturnCurve> curves, const AverageOptions& options) {
    std::vector<const ReturnCurve*> ptrs;
    for (const auto& c : curves) ptrs.push_back(&c);
    return average_on_grid(ptrs, build_grid(ptrs, options), options);
}

ReturnCurve average_curve_groups(std::span<const std::vector<ReturnCurve>> groups, const AverageOptions& options) {
    std::vector<const ReturnCurve*> all;
    for (const auto& g : groups) {
        for (const auto& c : g) all.push_back(&c);
    }
    if (all.empty()) throw InputError("no curves to average");
    AverageOptions stage = options;
    stage.grid = build_grid(all, options);
    std::vector<ReturnCurve> means;
    std::vector<std::string> notes;
    for (const auto& g : groups) {
        if (g.empty()) continue;
        means.push_back(average_curves(g, stage));
        for (auto& d : means.back().diagnostics) notes.push_back(std::move(d));
        means.back().diagnostics.clear();
    }
    stage.filter = false;
    ReturnCurve out = average_curves(means, stage);
    notes.insert(notes.end(), out.diagnostics.begin(), out.diagnostics.end());
    out.diagnostics = std::move(notes);
    return out;
}

void write_curves_csv(std::ostream& out, std::span<const ReturnCurve> curves, std::span<const std::string> labels) {
    out << "curve,provenance,threshold,probability,return_time,band_lo,band_hi,n_experiments\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const std::string label = i < labels.size() ? labels[i] : std::to_string(i);
        for (const auto& p : curves[i].points) {
            out << label << ',' << to_string(curves[i].provenance) << ',' << format_double(p.threshold) << ','
                << format_double(p.probability) << ',' << format_double(p.return_time) << ','
                << format_double(p.band_lo) << ',' << format_double(p.band_hi) << ',' << p.n_experiments << '\n';
        }
    }
}

std::vector<ReturnCurve> read_curves_csv(std::istream& in, std::vector<std::string>* labels) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty curve file");
    std::vector<ReturnCurve> curves;
    std::vector<std::string> names;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw InputError("curve row needs 8 fields: " + line);
        auto [it, inserted] = index.emplace(f[0], curves.size());
        if (inserted) {
            curves.emplace_back();
            curves.back().provenance = provenance_from_string(f[1]);
            names.push_back(f[0]);
        }
        ReturnPoint p;
        p.threshold = parse_double(f[2]);
        p.probability = parse_double(f[3]);
        p.return_time = parse_double(f[4]);
        p.band_lo = parse_double(f[5]);
        p.band_hi = parse_double(f[6]);
        p.n_experiments = std::stoi(f[7]);
        curves[it->second].points.push_back(p);
    }
    if (labels) *labels = std::move(names);
    return curves;
}

}  // namespace rare
