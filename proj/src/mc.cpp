#include "rare/mc.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "rare/csv.hpp"
#include "rare/errors.hpp"

namespace rare {

double gaussian_tail(double a) { return 0.5 * std::erfc(a / std::sqrt(2.0)); }

double gaussian_tail(double a, double variance) {
    if (!(variance > 0.0)) throw DomainError("variance must be positive");
    return gaussian_tail(a / std::sqrt(variance));
}

TailEstimate estimate_tail_mc(std::span<const double> samples, double threshold) {
    if (samples.empty()) throw InputError("no samples");
    std::size_t hits = 0;
    for (double x : samples) hits += x > threshold ? 1 : 0;
    TailEstimate est;
    est.n_samples = samples.size();
    est.threshold = threshold;
    est.gamma_hat = static_cast<double>(hits) / static_cast<double>(samples.size());
    est.theoretical_rel_err =
        hits > 0 ? 1.0 / std::sqrt(static_cast<double>(samples.size()) * est.gamma_hat) : INFINITY;
    return est;
}

RelErr empirical_rel_err(std::span<const double> estimates, double gamma) {
    if (estimates.size() < 2) throw InputError("relative error needs at least two experiments");
    if (!(gamma > 0.0)) throw DomainError("relative error is undefined for a zero probability");
    const double k = static_cast<double>(estimates.size());
    double sq = 0.0;
    for (double g : estimates) sq += (g - gamma) * (g - gamma);
    const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / k;
    return {std::sqrt(sq / k) / gamma, std::abs(mean - gamma) / gamma};
}

TiltOracle tilted_gaussian_oracle(double a, double C) {
    TiltOracle o;
    o.C = C;
    o.gamma = gaussian_tail(a);
    o.plain_variance = o.gamma - o.gamma * o.gamma;
    o.variance = C == 0.0 ? o.plain_variance : std::exp(C * C) * gaussian_tail(a + C) - o.gamma * o.gamma;
    o.cost_factor = o.plain_variance / o.variance;
    o.rel_err_ratio = std::sqrt(o.cost_factor);
    return o;
}

TiltOracle optimal_tilt(double a, double step) {
    if (!(step > 0.0)) throw DomainError("grid step must be positive");
    TiltOracle best = tilted_gaussian_oracle(a, 0.0);
    const auto n = static_cast<long>(std::floor(2.0 * a / step + 1e-9));
    for (long i = 1; i <= n; ++i) {
        const TiltOracle o = tilted_gaussian_oracle(a, static_cast<double>(i) * step);
        if (o.variance < best.variance) best = o;
    }
    return best;
}

RelErrReport make_rel_err_report(const std::string& method, std::span<const double> thresholds,
                                 std::span<const double> gamma, const std::vector<std::vector<double>>& estimates) {
    if (thresholds.size() != gamma.size()) throw InputError("threshold and probability counts differ");
    RelErrReport r;
    r.method = method;
    r.experiments = static_cast<int>(estimates.size());
    r.thresholds.assign(thresholds.begin(), thresholds.end());
    r.gamma.assign(gamma.begin(), gamma.end());
    std::vector<double> column(estimates.size());
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
        for (std::size_t k = 0; k < estimates.size(); ++k) {
            if (estimates[k].size() != thresholds.size()) throw InputError("ragged estimate table");
            column[k] = estimates[k][j];
        }
        const RelErr e = empirical_rel_err(column, gamma[j]);
        r.rel_err.push_back(e.rel_err);
        r.mean_dev.push_back(e.mean_dev);
    }
    return r;
}

void write_rel_err_csv(std::ostream& out, std::span<const RelErrReport> reports) {
    out << "method,threshold,gamma,rel_err,mean_dev,experiments\n";
    for (const auto& r : reports) {
        for (std::size_t j = 0; j < r.thresholds.size(); ++j) {
            out << r.method << ',' << format_double(r.thresholds[j]) << ',' << format_double(r.gamma[j]) << ','
                << format_double(r.rel_err[j]) << ',' << format_double(r.mean_dev[j]) << ',' << r.experiments
                << '\n';
        }
    }
}

}  // namespace rare
