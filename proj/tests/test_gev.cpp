#include <doctest.h>

#include <cmath>
#include <random>

#include "rare/errors.hpp"
#include "rare/gev.hpp"
#include "rare/rng.hpp"

using namespace rare;

namespace {

std::vector<double> gumbel_sample(std::size_t n, std::uint64_t seed, double mu = 0.0, double sigma = 1.0) {
    Engine rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = mu - sigma * std::log(-std::log(uniform01(rng) * (1.0 - 1e-16) + 1e-300));
    return out;
}

std::vector<double> gev_sample(std::size_t n, std::uint64_t seed, GevParams<double> p) {
    Engine rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = gev_quantile(p, uniform01(rng) * (1.0 - 2e-16) + 1e-16);
    return out;
}

}  // namespace

TEST_CASE("GEV cdf values") {
    CHECK(gev_cdf(GevParams<double>{0, 1, 0.2}, 1.0) == doctest::Approx(0.6690626526678188).epsilon(1e-14));
    CHECK(gev_cdf(GevParams<double>{0, 1, 0.0}, 0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    // below the lower endpoint of a Fréchet-type law, above the upper one of a Weibull-type law
    CHECK(gev_cdf(GevParams<double>{0, 1, 0.5}, -3.0) == 0.0);
    CHECK(gev_cdf(GevParams<double>{0, 1, -0.5}, 3.0) == 1.0);
    // the small-ζ series joins the Gumbel limit smoothly
    CHECK(gev_cdf(GevParams<double>{0, 1, 1e-9}, 1.3) == doctest::Approx(gev_cdf(GevParams<double>{0, 1, 0.0}, 1.3)).epsilon(1e-8));
}

TEST_CASE("quantile inverts the cdf") {
    for (double z : {-0.3, 0.0, 0.25}) {
        const GevParams<double> p{1.5, 0.7, z};
        for (double q : {0.01, 0.5, 0.99}) CHECK(gev_cdf(p, gev_quantile(p, q)) == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("density integrates to one") {
    const GevParams<double> p{0.0, 1.0, 0.1};
    double sum = 0.0;
    const double h = 1e-3;
    for (double x = -5.0; x < 80.0; x += h) sum += std::exp(gev_log_density(p, x + 0.5 * h)) * h;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("block maxima of a long series") {
    const std::vector<double> s{1, 5, 2, 3, 9, 0, 4};
    const auto bm = block_maxima(s, 2);
    CHECK(bm.values == std::vector<double>{5, 3, 9});
    CHECK(bm.block_size == 2);
    CHECK_THROWS_AS(block_maxima(std::vector<double>{1, 2, 3}, 2), InputError);
    CHECK_THROWS_AS(block_maxima(s, 0), ConfigError);
}

TEST_CASE("block maxima per time step across trajectories") {
    Eigen::MatrixXd avg(4, 2);
    avg << 1, 8,
           3, 2,
           0, 5,
           7, 6;
    const auto bm = block_maxima(avg, 2);
    CHECK(bm.layout == BlockLayout::PerTimeStepAcrossTrajectories);
    CHECK(bm.values == std::vector<double>{3, 7, 8, 6});
}

TEST_CASE("Gumbel MLE recovers its parameters") {
    const auto data = gumbel_sample(20000, 17, 2.0, 0.5);
    BlockMaximaSeries bm{data, 1, BlockLayout::SingleLongSeries};
    const auto fit = fit_gev_mle(bm);
    CHECK(fit.diagnostics.converged);
    CHECK(fit.params.mu == doctest::Approx(2.0).epsilon(0.02));
    CHECK(fit.params.sigma == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::abs(fit.params.zeta) < 0.03);
    CHECK(fit.diagnostics.scaled_gradient.maxCoeff() < 1e-4);
    // The covariance is roughly the inverse Fisher information / n.
    CHECK(std::sqrt(fit.covariance(2, 2)) == doctest::Approx(0.0049).epsilon(0.2));
}

TEST_CASE("Fréchet and Weibull shapes are recovered") {
    for (double z : {0.3, -0.3}) {
        const auto data = gev_sample(20000, 23, {0.0, 1.0, z});
        const auto fit = fit_gev_mle({data, 1, BlockLayout::SingleLongSeries});
        CHECK(fit.params.zeta == doctest::Approx(z).epsilon(0.1));
        const auto wald = zeta_interval(fit, CiMethod::Wald);
        const auto prof = zeta_interval(fit, CiMethod::Profile);
        CHECK(wald.contains(fit.params.zeta));
        CHECK(prof.contains(fit.params.zeta));
        // Wald and profile intervals agree for a large sample.
        CHECK(prof.lo == doctest::Approx(wald.lo).epsilon(0.05));
        CHECK(prof.hi == doctest::Approx(wald.hi).epsilon(0.05));
    }
}

TEST_CASE("degenerate maxima fail to fit") {
    std::vector<double> flat(50, 1.0);
    CHECK_THROWS_AS(fit_gev_mle({flat, 1, BlockLayout::SingleLongSeries}), ConvergenceError);
    CHECK_THROWS_AS(fit_gev_mle({{1.0, 2.0}, 1, BlockLayout::SingleLongSeries}), InputError);
}

TEST_CASE("few maxima give a warning") {
    const auto data = gumbel_sample(20, 4);
    const auto fit = fit_gev_mle({data, 1, BlockLayout::SingleLongSeries});
    CHECK_FALSE(fit.diagnostics.warnings.empty());
}

TEST_CASE("tail inversion and return levels") {
    GevFit fit;
    fit.params = {0.0, 1.0, 0.0};
    fit.block_size = 1;
    fit.covariance = Eigen::Matrix3d::Identity() * 1e-4;
    CHECK(tail_from_gev(fit, 1.0) == doctest::Approx(1.0 - std::exp(-std::exp(-1.0))).epsilon(1e-14));
    fit.block_size = 10;
    // 1 - G^{1/10} = 1 - exp(-e^{-x}/10)
    CHECK(tail_from_gev(fit, 2.0) == doctest::Approx(-std::expm1(-std::exp(-2.0) / 10.0)).epsilon(1e-14));
    CHECK(tail_from_gev(fit, 2.0, 10.0) == doctest::Approx(1.0 - std::exp(-std::exp(-2.0))).epsilon(1e-14));
    const auto ci = tail_interval(fit, 2.0);
    CHECK(ci.contains(tail_from_gev(fit, 2.0)));

    const auto rl = return_level(fit, 100.0);
    CHECK(gev_cdf(fit.params, rl.level) == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(rl.ci.contains(rl.level));
    CHECK_THROWS_AS(return_level(fit, 1.0), DomainError);
}

TEST_CASE("normal quantile") {
    CHECK(normal_quantile_two_sided(0.95) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK_THROWS_AS(normal_quantile_two_sided(1.0), DomainError);
}

TEST_CASE("layout names round-trip") {
    for (auto l : {BlockLayout::EndParticleBlocks, BlockLayout::PerTimeStepAcrossTrajectories,
                   BlockLayout::SingleLongSeries}) {
        CHECK(block_layout_from_string(to_string(l)) == l);
    }
}
