#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rare/errors.hpp"
#include "rare/returns.hpp"
#include "rare/rng.hpp"

using namespace rare;

TEST_CASE("return time from probability") {
    CHECK(return_time_from_probability(1.0 - std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    for (double p : {1e-3, 1e-5, 1e-9}) CHECK(std::abs(return_time_from_probability(p) * p - 1.0) < 0.01);
    CHECK_THROWS_AS(return_time_from_probability(0.0), DomainError);
    CHECK_THROWS_AS(return_time_from_probability(1.0), DomainError);
}

TEST_CASE("ranked pairs with uniform mass") {
    std::vector<RankedPair> pairs;
    for (int k = 1; k <= 100; ++k) pairs.push_back({static_cast<double>(k), 0.01});
    const auto c = curve_from_ranked(pairs, Provenance::MC);
    // threshold k has 101 - k pairs at or above it; k = 1 reaches probability 1 and is dropped
    REQUIRE(c.points.size() == 99);
    CHECK(c.diagnostics.size() == 1);
    for (const auto& p : c.points) {
        const double k = p.threshold;
        CHECK(p.return_time == doctest::Approx(-1.0 / std::log(1.0 - (101.0 - k) / 100.0)).epsilon(1e-12));
    }
    // descending thresholds, non-increasing return times
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        CHECK(c.points[i - 1].threshold > c.points[i].threshold);
        CHECK(c.points[i - 1].return_time >= c.points[i].return_time);
    }
}

TEST_CASE("uniform-mass return times match simulated waiting times") {
    // Exceeding rank k happens with probability q = (101 - k)/100 per block;
    // the mean waiting time 1/q is bracketed by r and r + 1.
    Engine rng(99);
    for (int k : {60, 90, 99}) {
        const double q = (101.0 - k) / 100.0;
        const double r = -1.0 / std::log(1.0 - q);
        double total = 0.0;
        const int events = 20000;
        for (int e = 0; e < events; ++e) {
            int wait = 1;
            while (uniform01(rng) >= q) ++wait;
            total += wait;
        }
        const double mean_wait = total / events;
        CHECK(mean_wait > r * 0.97);
        CHECK(mean_wait < (r + 1.0) * 1.03);
    }
}

TEST_CASE("ties collapse and input order does not matter") {
    const std::vector<RankedPair> a{{1.0, 0.1}, {3.0, 0.2}, {1.0, 0.1}, {2.0, 0.05}};
    const std::vector<RankedPair> b{{3.0, 0.2}, {2.0, 0.05}, {1.0, 0.1}, {1.0, 0.1}};
    const auto ca = curve_from_ranked(a, Provenance::GPA);
    const auto cb = curve_from_ranked(b, Provenance::GPA);
    REQUIRE(ca.points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(ca.points[i].probability == cb.points[i].probability);
    CHECK(ca.points[2].probability == doctest::Approx(0.45));
}

TEST_CASE("negative masses are rejected") {
    const std::vector<RankedPair> bad{{1.0, -0.1}};
    CHECK_THROWS_AS(curve_from_ranked(bad, Provenance::MC), InputError);
}

TEST_CASE("block series curve") {
    // blocks of 2: maxima 5, 3, 9, 4
    const std::vector<double> s{1, 5, 2, 3, 9, 0, 4, 1};
    const auto c = curve_from_block_series(s, 2);
    REQUIRE(c.points.size() == 3);  // the lowest maximum is exceeded by every block
    CHECK(c.points[0].threshold == 9.0);
    CHECK(c.points[0].probability == doctest::Approx(0.25));
    CHECK(c.points[2].threshold == 4.0);
    CHECK(c.points[2].probability == doctest::Approx(0.75));
    CHECK_THROWS_AS(curve_from_block_series(std::vector<double>{1, 2, 3}, 2), InputError);
}

TEST_CASE("one exceeding block among K") {
    std::vector<double> s(1000, 0.0);
    s[517] = 1.0;
    const auto c = curve_from_block_series(s, 1);
    REQUIRE(c.points.size() == 1);
    CHECK(c.points[0].return_time == doctest::Approx(1000.0).epsilon(1e-3));
}

TEST_CASE("ranked and block-series builders agree") {
    Engine rng(5);
    std::normal_distribution<double> normal;
    std::vector<double> s(5000);
    for (auto& x : s) x = normal(rng);
    const std::size_t L = 10;
    const auto block = curve_from_block_series(s, L);
    std::vector<RankedPair> pairs;
    for (std::size_t k = 0; k < s.size() / L; ++k) {
        double m = s[k * L];
        for (std::size_t i = 1; i < L; ++i) m = std::max(m, s[k * L + i]);
        pairs.push_back({m, 1.0 / static_cast<double>(s.size() / L)});
    }
    const auto ranked = curve_from_ranked(pairs, Provenance::Control);
    REQUIRE(ranked.points.size() == block.points.size());
    for (std::size_t i = 0; i < block.points.size(); ++i) {
        CHECK(ranked.points[i].threshold == block.points[i].threshold);
        CHECK(std::abs(ranked.points[i].return_time / block.points[i].return_time - 1.0) < 1e-12);
    }
}

TEST_CASE("interpolation is log-linear and never extrapolates") {
    ReturnCurve c;
    c.points = {{2.0, 0.0, 100.0, 100.0, 100.0, 1}, {1.0, 0.0, 10.0, 10.0, 10.0, 1}};
    CHECK(*c.return_time_at(1.5) == doctest::Approx(std::sqrt(1000.0)));
    CHECK(*c.return_time_at(2.0) == doctest::Approx(100.0));
    CHECK_FALSE(c.return_time_at(2.1).has_value());
    CHECK_FALSE(c.return_time_at(0.9).has_value());
}

TEST_CASE("averaging") {
    ReturnCurve a;
    a.points = {{2.0, 0.0, 10.0, 10.0, 10.0, 1}, {1.0, 0.0, 2.0, 2.0, 2.0, 1}};
    ReturnCurve b;
    b.points = {{2.0, 0.0, 30.0, 30.0, 30.0, 1}, {1.0, 0.0, 6.0, 6.0, 6.0, 1}};

    AverageOptions exact;
    exact.grid_points = 0;
    SUBCASE("single curve is the identity") {
        const std::vector<ReturnCurve> one{a};
        const auto m = average_curves(one, exact);
        REQUIRE(m.points.size() == 2);
        CHECK(m.points[0].return_time == doctest::Approx(10.0));
        CHECK(m.points[1].return_time == doctest::Approx(2.0));
    }
    SUBCASE("r and 3r average to 2r with band (r, 3r)") {
        const std::vector<ReturnCurve> two{a, b};
        const auto m = average_curves(two, exact);
        CHECK(m.points[0].return_time == doctest::Approx(20.0));
        CHECK(m.points[0].band_lo == doctest::Approx(10.0));
        CHECK(m.points[0].band_hi == doctest::Approx(30.0));
        CHECK(m.points[0].n_experiments == 2);
    }
    SUBCASE("no extrapolation beyond a curve's range") {
        ReturnCurve c;
        c.points = {{3.0, 0.0, 50.0, 50.0, 50.0, 1}, {2.5, 0.0, 40.0, 40.0, 40.0, 1}};
        const std::vector<ReturnCurve> two{a, c};
        const auto m = average_curves(two, exact);
        for (const auto& p : m.points) CHECK(p.n_experiments == 1);
        CHECK(m.points.front().return_time == doctest::Approx(50.0));
        CHECK(m.points.back().return_time == doctest::Approx(2.0));
    }
    SUBCASE("tilted-window filter") {
        ReturnCurve f = b;
        f.tilted = TiltedWindow{1.0, 0.2};  // keeps [0.9, 1.1]
        const std::vector<ReturnCurve> two{a, f};
        AverageOptions opt = exact;
        opt.filter = true;
        const auto m = average_curves(two, opt);
        CHECK(m.points[0].return_time == doctest::Approx(10.0));  // only a at 2.0
        CHECK(m.points[1].return_time == doctest::Approx(4.0));
    }
    SUBCASE("two-stage mean") {
        const std::vector<std::vector<ReturnCurve>> groups{{a, a, a}, {b}};
        const auto m = average_curve_groups(groups, exact);
        CHECK(m.points[0].return_time == doctest::Approx(20.0));
        CHECK(m.points[0].n_experiments == 4);
    }
}

TEST_CASE("curve CSV round-trip") {
    ReturnCurve a;
    a.provenance = Provenance::GEV;
    a.points = {{2.0, 0.1, 9.49122, 5.0, 20.0, 3}, {1.0, 0.3, 2.8037, 2.0, 4.0, 3}};
    std::vector<ReturnCurve> curves{a};
    std::stringstream ss;
    write_curves_csv(ss, curves);
    std::vector<std::string> labels;
    const auto back = read_curves_csv(ss, &labels);
    REQUIRE(back.size() == 1);
    CHECK(labels[0] == "0");
    CHECK(back[0].provenance == Provenance::GEV);
    CHECK(back[0].points[1].band_hi == 4.0);
    CHECK(back[0].points[0].return_time == 9.49122);
}
