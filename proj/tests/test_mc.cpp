#include <doctest.h>

#include <cmath>
#include <random>

#include "rare/errors.hpp"
#include "rare/mc.hpp"
#include "rare/rng.hpp"

using namespace rare;

TEST_CASE("Gaussian tail values") {
    CHECK(gaussian_tail(2.0) == doctest::Approx(0.022750131948179216).epsilon(1e-14));
    CHECK(gaussian_tail(2.0, 0.5) == doctest::Approx(0.0023388674905236353).epsilon(1e-14));
    CHECK(gaussian_tail(3.5, 0.5) == doctest::Approx(3.7154918617070644e-07).epsilon(1e-13));
}

TEST_CASE("MC tail estimate") {
    const std::vector<double> s{1, 2, 3};
    const auto e = estimate_tail_mc(s, 2.5);
    CHECK(e.gamma_hat == doctest::Approx(1.0 / 3.0));
    CHECK(e.theoretical_rel_err == doctest::Approx(1.0));
    CHECK(estimate_tail_mc(s, 0.0).gamma_hat == 1.0);
    CHECK(std::isinf(estimate_tail_mc(s, 5.0).theoretical_rel_err));
    CHECK_THROWS_AS(estimate_tail_mc(std::vector<double>{}, 0.0), InputError);
}

TEST_CASE("empirical relative error") {
    const double g = 0.1;
    const auto same = empirical_rel_err(std::vector<double>{g, g, g}, g);
    CHECK(same.rel_err == doctest::Approx(0.0));
    CHECK(same.mean_dev == doctest::Approx(0.0));
    const auto split = empirical_rel_err(std::vector<double>{0.0, 2 * g}, g);
    CHECK(split.rel_err == doctest::Approx(1.0));
    CHECK(split.mean_dev == doctest::Approx(0.0));
    CHECK_THROWS_AS(empirical_rel_err(std::vector<double>{0.1, 0.2}, 0.0), DomainError);
    CHECK_THROWS_AS(empirical_rel_err(std::vector<double>{0.1}, 0.1), InputError);
}

TEST_CASE("MC estimator is unbiased on a known Gaussian") {
    Engine rng(2024);
    std::normal_distribution<double> normal;
    const double a = 1.5;
    const double gamma = gaussian_tail(a);
    const int K = 1000;
    const int N = 1000;
    double mean = 0.0;
    std::vector<double> est;
    for (int k = 0; k < K; ++k) {
        std::vector<double> s(N);
        for (auto& x : s) x = normal(rng);
        est.push_back(estimate_tail_mc(s, a).gamma_hat);
        mean += est.back() / K;
    }
    const double se = std::sqrt(gamma * (1 - gamma) / (static_cast<double>(N) * K));
    CHECK(std::abs(mean - gamma) < 4 * se);
    const auto re = empirical_rel_err(est, gamma);
    CHECK(re.rel_err == doctest::Approx(1.0 / std::sqrt(N * gamma)).epsilon(0.3));
}

TEST_CASE("tilt oracle") {
    const auto none = tilted_gaussian_oracle(2.0, 0.0);
    CHECK(none.rel_err_ratio == 1.0);
    CHECK(none.variance == doctest::Approx(none.gamma - none.gamma * none.gamma));
    const auto best = optimal_tilt(2.0);
    CHECK(best.C == doctest::Approx(2.22).epsilon(1e-9));
    CHECK(best.rel_err_ratio == doctest::Approx(4.359).epsilon(1e-3));
    CHECK(best.cost_factor == doctest::Approx(19.0).epsilon(1e-2));
}
