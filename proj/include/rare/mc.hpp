#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rare {

/// P(X > a) for X ~ N(0, 1).
double gaussian_tail(double a);
/// P(X > a) for X ~ N(0, variance).
double gaussian_tail(double a, double variance);

struct TailEstimate {
    double gamma_hat = 0.0;
    std::size_t n_samples = 0;
    double threshold = 0.0;
    /// 1 / sqrt(N γ̂); infinite when γ̂ = 0.
    double theoretical_rel_err = 0.0;
};

/// Fraction of samples strictly above the threshold.
TailEstimate estimate_tail_mc(std::span<const double> samples, double threshold);

struct RelErr {
    double rel_err = 0.0;
    double mean_dev = 0.0;
};

/// sqrt(mean (γ̂_k - γ)^2) / γ and |mean γ̂ - γ| / γ. Needs K >= 2 and γ > 0.
RelErr empirical_rel_err(std::span<const double> estimates, double gamma);

struct TiltOracle {
    double C = 0.0;
    double gamma = 0.0;
    double variance = 0.0;        ///< of one tilted sample's weighted indicator
    double plain_variance = 0.0;  ///< γ - γ²
    double rel_err_ratio = 1.0;   ///< plain rel-err / tilted rel-err
    double cost_factor = 1.0;     ///< plain variance / tilted variance
};

/// Sampling N(C, 1) and weighting by e^{-CX + C²/2}: the estimator variance
/// is e^{C²} P(N(0,1) > a + C) - γ².
TiltOracle tilted_gaussian_oracle(double a, double C);

/// Grid search over [0, 2a] with the given step for the smallest variance.
TiltOracle optimal_tilt(double a, double step = 0.01);

struct RelErrReport {
    std::string method;
    int experiments = 0;
    std::vector<double> thresholds;
    std::vector<double> gamma;
    std::vector<double> rel_err;
    std::vector<double> mean_dev;
};

/// Builds a report from per-experiment estimates (estimates[k][j] for
/// experiment k, threshold j) against exact probabilities.
RelErrReport make_rel_err_report(const std::string& method, std::span<const double> thresholds,
                                 std::span<const double> gamma, const std::vector<std::vector<double>>& estimates);

/// Columns: method,threshold,gamma,rel_err,mean_dev,experiments
void write_rel_err_csv(std::ostream& out, std::span<const RelErrReport> reports);

}  // namespace rare
