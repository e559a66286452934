#include "rare/gev.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rare/errors.hpp"
#include "rare/nelder_mead.hpp"

namespace rare {

std::string to_string(BlockLayout layout) {
    switch (layout) {
        case BlockLayout::EndParticleBlocks: return "end_particle_blocks";
        case BlockLayout::PerTimeStepAcrossTrajectories: return "per_time_step_across_trajectories";
        case BlockLayout::SingleLongSeries: return "single_long_series";
    }
    return "unknown";
}

BlockLayout block_layout_from_string(const std::string& s) {
    if (s == "end_particle_blocks") return BlockLayout::EndParticleBlocks;
    if (s == "per_time_step_across_trajectories") return BlockLayout::PerTimeStepAcrossTrajectories;
    if (s == "single_long_series") return BlockLayout::SingleLongSeries;
    throw ConfigError("unknown block layout '" + s + "'");
}

BlockMaximaSeries block_maxima(std::span<const double> source, std::size_t m, BlockLayout layout) {
    if (m < 1) throw ConfigError("block size must be positive");
    if (source.size() < 2 * m) {
        throw InputError("block maxima need at least " + std::to_string(2 * m) + " samples, got " +
                         std::to_string(source.size()));
    }
    BlockMaximaSeries out;
    out.block_size = m;
    out.layout = layout;
    const std::size_t blocks = source.size() / m;
    out.values.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto first = source.begin() + static_cast<std::ptrdiff_t>(b * m);
        out.values.push_back(*std::max_element(first, first + static_cast<std::ptrdiff_t>(m)));
    }
    return out;
}

BlockMaximaSeries block_maxima(const Eigen::MatrixXd& averages, std::size_t m) {
    if (m < 1) throw ConfigError("block size must be positive");
    const auto rows = static_cast<std::size_t>(averages.rows());
    if (rows < 2 * m) {
        throw InputError("block maxima need at least " + std::to_string(2 * m) + " trajectories, got " +
                         std::to_string(rows));
    }
    BlockMaximaSeries out;
    out.block_size = m;
    out.layout = BlockLayout::PerTimeStepAcrossTrajectories;
    const std::size_t blocks = rows / m;
    out.values.reserve(blocks * static_cast<std::size_t>(averages.cols()));
    for (Eigen::Index j = 0; j < averages.cols(); ++j) {
        for (std::size_t b = 0; b < blocks; ++b) {
            out.values.push_back(
                averages.col(j).segment(static_cast<Eigen::Index>(b * m), static_cast<Eigen::Index>(m)).maxCoeff());
        }
    }
    return out;
}

double normal_quantile_two_sided(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
    const double tail = 0.5 * (1.0 - level);
    double lo = 0.0;
    double hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

using Vec3 = Eigen::Vector3d;

GevParams<double> to_params(const Vec3& theta) { return {theta(0), theta(1), theta(2)}; }

double negative_log_likelihood(const Vec3& theta, std::span<const double> data) {
    if (!(theta(1) > 0.0)) return INFINITY;
    const double l = gev_log_likelihood(to_params(theta), data);
    return std::isfinite(l) ? -l : INFINITY;
}

Vec3 fd_steps(const Vec3& theta) {
    const double scale = theta(1);
    return {1e-4 * scale, 1e-4 * scale, 1e-4};
}

Vec3 fd_gradient(const Vec3& theta, std::span<const double> data) {
    const Vec3 h = fd_steps(theta);
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        Vec3 up = theta;
        Vec3 dn = theta;
        up(i) += h(i);
        dn(i) -= h(i);
        g(i) = (negative_log_likelihood(up, data) - negative_log_likelihood(dn, data)) / (2.0 * h(i));
    }
    return g;
}

Eigen::Matrix3d fd_hessian(const Vec3& theta, std::span<const double> data) {
    const Vec3 h = fd_steps(theta);
    const double f0 = negative_log_likelihood(theta, data);
    Eigen::Matrix3d H;
    for (int i = 0; i < 3; ++i) {
        Vec3 up = theta;
        Vec3 dn = theta;
        up(i) += h(i);
        dn(i) -= h(i);
        H(i, i) = (negative_log_likelihood(up, data) - 2.0 * f0 + negative_log_likelihood(dn, data)) / (h(i) * h(i));
        for (int j = i + 1; j < 3; ++j) {
            Vec3 pp = theta, pm = theta, mp = theta, mm = theta;
            pp(i) += h(i); pp(j) += h(j);
            pm(i) += h(i); pm(j) -= h(j);
            mp(i) -= h(i); mp(j) += h(j);
            mm(i) -= h(i); mm(j) -= h(j);
            H(i, j) = (negative_log_likelihood(pp, data) - negative_log_likelihood(pm, data) -
                       negative_log_likelihood(mp, data) + negative_log_likelihood(mm, data)) /
                      (4.0 * h(i) * h(j));
            H(j, i) = H(i, j);
        }
    }
    return H;
}

Vec3 scaled_gradient(const Vec3& g, const Eigen::Matrix3d& H) {
    Vec3 s;
    for (int i = 0; i < 3; ++i) s(i) = std::abs(g(i)) / std::sqrt(std::max(std::abs(H(i, i)), 1e-300));
    return s;
}

// Search runs in (μ, log σ, ζ) so σ stays positive.
Vec3 from_search(const Eigen::VectorXd& v) { return {v(0), std::exp(v(1)), v(2)}; }

Eigen::VectorXd to_search(const Vec3& theta) {
    Eigen::VectorXd v(3);
    v << theta(0), std::log(theta(1)), theta(2);
    return v;
}

// A few Newton steps on the finite-difference Hessian, accepted only when
// they lower the objective.
Vec3 newton_polish(Vec3 theta, std::span<const double> data) {
    double f = negative_log_likelihood(theta, data);
    for (int it = 0; it < 8; ++it) {
        const Vec3 g = fd_gradient(theta, data);
        const Eigen::Matrix3d H = fd_hessian(theta, data);
        Eigen::LDLT<Eigen::Matrix3d> ldlt(H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
        Vec3 step = ldlt.solve(g);
        bool improved = false;
        for (double t = 1.0; t > 1e-4; t *= 0.5) {
            const Vec3 cand = theta - t * step;
            const double fc = negative_log_likelihood(cand, data);
            if (fc <= f) {
                improved = fc < f;
                theta = cand;
                f = fc;
                break;
            }
        }
        if (!improved) break;
    }
    return theta;
}

Eigen::Matrix3d covariance_from_hessian(const Eigen::Matrix3d& H, std::vector<std::string>& warnings) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(0.5 * (H + H.transpose()));
    Eigen::Vector3d inv = Eigen::Vector3d::Zero();
    bool clamped = false;
    for (int i = 0; i < 3; ++i) {
        const double ev = eig.eigenvalues()(i);
        if (ev > 1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff()) inv(i) = 1.0 / ev;
        else clamped = true;
    }
    if (clamped) warnings.emplace_back("observed information not positive definite; covariance is a pseudo-inverse");
    Eigen::Matrix3d cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (cov + cov.transpose());
}

}  // namespace

GevFit fit_gev_mle(const BlockMaximaSeries& series, const FitOptions& options) {
    const auto& data = series.values;
    if (data.size() < 3) throw InputError("GEV fit needs at least 3 maxima");
    for (double x : data) {
        if (!std::isfinite(x)) throw InputError("non-finite block maximum");
    }
    const double n = static_cast<double>(data.size());
    const double mean = std::accumulate(data.begin(), data.end(), 0.0) / n;
    double var = 0.0;
    for (double x : data) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    if (!(var > 0.0) || std::sqrt(var) <= 1e-12 * std::max(1.0, std::abs(mean))) {
        throw ConvergenceError("degenerate block maxima: zero spread, scale collapses to 0");
    }

    GevFit fit;
    fit.block_size = series.block_size;
    fit.layout = series.layout;
    fit.maxima = data;
    if (data.size() < 30) fit.diagnostics.warnings.emplace_back("fewer than 30 maxima; estimates are unreliable");

    // Gumbel method-of-moments start.
    constexpr double euler_gamma = 0.5772156649015329;
    const double sigma0 = std::sqrt(6.0 * var) / M_PI;
    const double mu0 = mean - euler_gamma * sigma0;
    const std::array<double, 3> zeta_starts{0.0, 0.1, -0.1};

    auto objective = [&](const Eigen::VectorXd& v) { return negative_log_likelihood(from_search(v), data); };
    Eigen::VectorXd step(3);
    step << 0.1 * sigma0, 0.1, 0.05;

    Vec3 best = Vec3::Zero();
    double best_value = INFINITY;
    for (double z0 : zeta_starts) {
        const Vec3 start{mu0, sigma0, z0};
        if (!std::isfinite(negative_log_likelihood(start, data))) continue;
        ++fit.diagnostics.starts;
        const auto r = nelder_mead(objective, to_search(start), step);
        fit.diagnostics.evaluations += r.evaluations;
        if (r.value < best_value) {
            best_value = r.value;
            best = from_search(r.x);
        }
    }
    if (!std::isfinite(best_value)) throw ConvergenceError("no feasible starting point for the GEV fit");

    Vec3 grad_scaled = Vec3::Constant(INFINITY);
    for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
        best = newton_polish(best, data);
        const Vec3 g = fd_gradient(best, data);
        const Eigen::Matrix3d H = fd_hessian(best, data);
        grad_scaled = scaled_gradient(g, H);
        if (grad_scaled.maxCoeff() < options.stationarity_tol) {
            fit.diagnostics.converged = true;
            break;
        }
        ++fit.diagnostics.restarts;
        Eigen::VectorXd small = step * std::pow(0.1, attempt + 1);
        const auto r = nelder_mead(objective, to_search(best), small);
        fit.diagnostics.evaluations += r.evaluations;
        if (r.value <= negative_log_likelihood(best, data)) best = from_search(r.x);
    }
    fit.params = to_params(best);
    fit.log_likelihood = -negative_log_likelihood(best, data);
    fit.diagnostics.scaled_gradient = grad_scaled;
    if (!fit.diagnostics.converged) {
        std::ostringstream msg;
        msg << "GEV fit did not reach a stationary point: best (mu, sigma, zeta) = (" << best(0) << ", " << best(1)
            << ", " << best(2) << "), scaled gradient = (" << grad_scaled(0) << ", " << grad_scaled(1) << ", "
            << grad_scaled(2) << ")";
        throw ConvergenceError(msg.str());
    }
    if (fit.params.sigma <= 1e-10 * std::max(1.0, std::abs(fit.params.mu))) {
        throw ConvergenceError("GEV scale collapsed to zero");
    }
    fit.covariance = covariance_from_hessian(fd_hessian(best, data), fit.diagnostics.warnings);
    return fit;
}

namespace {

// max over (μ, σ) of ℓ at fixed ζ.
double profile_log_likelihood(const GevFit& fit, double zeta, Eigen::Vector2d& warm) {
    std::span<const double> data = fit.maxima;
    auto objective = [&](const Eigen::VectorXd& v) {
        return negative_log_likelihood(Vec3{v(0), std::exp(v(1)), zeta}, data);
    };
    Eigen::VectorXd start(2);
    start << warm(0), warm(1);
    if (!std::isfinite(objective(start))) {
        // Move μ to keep every maximum inside the support.
        const double lo = *std::min_element(data.begin(), data.end());
        const double hi = *std::max_element(data.begin(), data.end());
        start << (zeta > 0 ? lo : hi), std::log(std::max(fit.params.sigma, (hi - lo) * std::abs(zeta) + 1e-3));
    }
    Eigen::VectorXd step(2);
    step << 0.1 * fit.params.sigma, 0.1;
    const auto r = nelder_mead(objective, start, step);
    if (std::isfinite(r.value)) warm = r.x;
    return -r.value;
}

}  // namespace

Interval zeta_interval(const GevFit& fit, CiMethod method, double level) {
    const double z = normal_quantile_two_sided(level);
    if (method == CiMethod::Wald) {
        const double se = std::sqrt(std::max(0.0, fit.covariance(2, 2)));
        return {fit.params.zeta - z * se, fit.params.zeta + z * se};
    }
    // Profile: 2 (ℓ_max - ℓ_p(ζ)) = z², searched outward then bisected.
    const double cutoff = fit.log_likelihood - 0.5 * z * z;
    const double se = std::sqrt(std::max(fit.covariance(2, 2), 1e-6));
    auto bound = [&](double direction) {
        Eigen::Vector2d warm(fit.params.mu, std::log(fit.params.sigma));
        double inside = fit.params.zeta;
        double outside = inside;
        double width = se;
        for (int i = 0; i < 60; ++i) {
            outside = fit.params.zeta + direction * width;
            if (profile_log_likelihood(fit, outside, warm) < cutoff) break;
            inside = outside;
            width *= 2.0;
        }
        for (int i = 0; i < 50; ++i) {
            const double mid = 0.5 * (inside + outside);
            Eigen::Vector2d w(fit.params.mu, std::log(fit.params.sigma));
            if (profile_log_likelihood(fit, mid, w) >= cutoff) inside = mid;
            else outside = mid;
        }
        return 0.5 * (inside + outside);
    };
    return {bound(-1.0), bound(1.0)};
}

double tail_from_gev(const GevFit& fit, double x, double samples) {
    const double log_g = gev_log_cdf(fit.params, x);
    return -std::expm1(log_g * samples / static_cast<double>(fit.block_size));
}

namespace {

template <typename F>
Vec3 param_gradient(const GevFit& fit, F&& f) {
    const Vec3 theta{fit.params.mu, fit.params.sigma, fit.params.zeta};
    const Vec3 h = fd_steps(theta);
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        Vec3 up = theta;
        Vec3 dn = theta;
        up(i) += h(i);
        dn(i) -= h(i);
        g(i) = (f(to_params(up)) - f(to_params(dn))) / (2.0 * h(i));
    }
    return g;
}

}  // namespace

Interval tail_interval(const GevFit& fit, double x, double level, double samples) {
    const double z = normal_quantile_two_sided(level);
    const double p = tail_from_gev(fit, x, samples);
    const double m = static_cast<double>(fit.block_size) / samples;
    const Vec3 g = param_gradient(fit, [&](const GevParams<double>& q) { return -std::expm1(gev_log_cdf(q, x) / m); });
    const double sd = std::sqrt(std::max(0.0, g.dot(fit.covariance * g)));
    return {std::max(0.0, p - z * sd), std::min(1.0, p + z * sd)};
}

ReturnLevel return_level(const GevFit& fit, double r, double level) {
    if (!(r > 1.0)) throw DomainError("return period must exceed 1");
    const double q = 1.0 - 1.0 / r;
    ReturnLevel out;
    out.level = gev_quantile(fit.params, q);
    const double z = normal_quantile_two_sided(level);
    const Vec3 g = param_gradient(fit, [&](const GevParams<double>& p) { return gev_quantile(p, q); });
    const double sd = std::sqrt(std::max(0.0, g.dot(fit.covariance * g)));
    out.ci = {out.level - z * sd, out.level + z * sd};
    return out;
}

}  // namespace rare
