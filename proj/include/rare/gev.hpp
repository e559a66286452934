#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rare {

/// Location, scale and shape of G(x) = exp(-[1 + ζ (x - μ)/σ]^{-1/ζ}).
template <typename Scalar = double>
struct GevParams {
    Scalar mu{0};
    Scalar sigma{1};
    Scalar zeta{0};
};

namespace gev_detail {

/// (1/ζ) log(1 + ζ z), with a series for small ζ. Caller checks support.
template <typename Scalar>
Scalar reduced_log(Scalar z, Scalar zeta) {
    using std::abs;
    using std::log1p;
    if (abs(zeta) < Scalar(1e-6)) return z - zeta * z * z / Scalar(2) + zeta * zeta * z * z * z / Scalar(3);
    return log1p(zeta * z) / zeta;
}

}  // namespace gev_detail

template <typename Scalar>
Scalar gev_cdf(const GevParams<Scalar>& p, Scalar x) {
    using std::abs;
    using std::exp;
    using std::log1p;
    const Scalar z = (x - p.mu) / p.sigma;
    if (abs(p.zeta) < Scalar(1e-12)) return exp(-exp(-z));
    if (Scalar(1) + p.zeta * z <= Scalar(0)) return p.zeta > Scalar(0) ? Scalar(0) : Scalar(1);
    return exp(-exp(-log1p(p.zeta * z) / p.zeta));
}

/// log G(x); -inf below the lower endpoint, 0 above the upper one.
template <typename Scalar>
Scalar gev_log_cdf(const GevParams<Scalar>& p, Scalar x) {
    using std::abs;
    using std::exp;
    using std::log1p;
    const Scalar z = (x - p.mu) / p.sigma;
    if (abs(p.zeta) < Scalar(1e-12)) return -exp(-z);
    if (Scalar(1) + p.zeta * z <= Scalar(0)) {
        return p.zeta > Scalar(0) ? -std::numeric_limits<Scalar>::infinity() : Scalar(0);
    }
    return -exp(-log1p(p.zeta * z) / p.zeta);
}

/// G^{-1}(q) for q in (0, 1).
template <typename Scalar>
Scalar gev_quantile(const GevParams<Scalar>& p, Scalar q) {
    using std::abs;
    using std::expm1;
    using std::log;
    const Scalar y = -log(q);
    if (abs(p.zeta) < Scalar(1e-12)) return p.mu - p.sigma * log(y);
    return p.mu + p.sigma * expm1(-p.zeta * log(y)) / p.zeta;
}

template <typename Scalar>
Scalar gev_log_density(const GevParams<Scalar>& p, Scalar x) {
    using std::exp;
    using std::log;
    using std::log1p;
    const Scalar z = (x - p.mu) / p.sigma;
    if (!(p.sigma > Scalar(0)) || Scalar(1) + p.zeta * z <= Scalar(0)) {
        return -std::numeric_limits<Scalar>::infinity();
    }
    const Scalar s = gev_detail::reduced_log(z, p.zeta);
    return -log(p.sigma) - log1p(p.zeta * z) - s - exp(-s);
}

template <typename Scalar>
Scalar gev_log_likelihood(const GevParams<Scalar>& p, std::span<const double> data) {
    Scalar sum{0};
    for (double x : data) {
        const Scalar l = gev_log_density(p, Scalar(x));
        if (!(l > -std::numeric_limits<Scalar>::infinity())) return l;
        sum += l;
    }
    return sum;
}

enum class BlockLayout {
    /// End values of many independent runs, grouped m at a time.
    EndParticleBlocks,
    /// For each window index j, maxima over groups of m trajectories.
    PerTimeStepAcrossTrajectories,
    /// Consecutive samples of one long record.
    SingleLongSeries,
};

std::string to_string(BlockLayout layout);
BlockLayout block_layout_from_string(const std::string& s);

struct BlockMaximaSeries {
    std::vector<double> values;
    std::size_t block_size = 1;
    BlockLayout layout = BlockLayout::SingleLongSeries;
};

/// Non-overlapping maxima of consecutive groups of m; needs at least 2m samples.
BlockMaximaSeries block_maxima(std::span<const double> source, std::size_t m,
                               BlockLayout layout = BlockLayout::SingleLongSeries);

/// `averages` has one row per trajectory and one column per window index;
/// each column yields floor(rows / m) maxima.
BlockMaximaSeries block_maxima(const Eigen::MatrixXd& averages, std::size_t m);

enum class CiMethod { Wald, Profile };

struct FitOptions {
    /// Largest accepted |∂ℓ/∂θ_i| / sqrt(H_ii) at the optimum.
    double stationarity_tol = 1e-4;
    int max_restarts = 4;
};

struct FitDiagnostics {
    int starts = 0;
    int evaluations = 0;
    int restarts = 0;
    bool converged = false;
    /// Gradient of the log-likelihood scaled by the curvature, per parameter.
    Eigen::Vector3d scaled_gradient = Eigen::Vector3d::Zero();
    std::vector<std::string> warnings;
};

struct GevFit {
    GevParams<double> params;
    double log_likelihood = 0.0;
    /// Inverse observed information in (μ, σ, ζ) order.
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    std::size_t block_size = 1;
    BlockLayout layout = BlockLayout::SingleLongSeries;
    std::vector<double> maxima;
    FitDiagnostics diagnostics;
};

/// Maximum-likelihood GEV fit by multi-start Nelder-Mead with a Newton
/// polish. Throws ConvergenceError for degenerate data or when no start
/// reaches a stationary point.
GevFit fit_gev_mle(const BlockMaximaSeries& maxima, const FitOptions& options = {});

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Confidence interval for ζ: Wald from the covariance, or profile
/// likelihood (maximising over μ, σ at fixed ζ).
Interval zeta_interval(const GevFit& fit, CiMethod method = CiMethod::Wald, double level = 0.95);

/// P(X > x) ≈ 1 - G(x)^{1/m} for the underlying samples. With `samples`
/// = s, the probability that the largest of s samples exceeds x,
/// 1 - G(x)^{s/m}.
double tail_from_gev(const GevFit& fit, double x, double samples = 1.0);
/// Delta-method interval for tail_from_gev.
Interval tail_interval(const GevFit& fit, double x, double level = 0.95, double samples = 1.0);

struct ReturnLevel {
    double level = 0.0;
    Interval ci;
};

/// Level exceeded by a block maximum once every r blocks: 1 - G(x) = 1/r.
/// Throws DomainError for r <= 1.
ReturnLevel return_level(const GevFit& fit, double r, double level = 0.95);

/// Two-sided standard-normal quantile for a confidence level.
double normal_quantile_two_sided(double level);

}  // namespace rare
