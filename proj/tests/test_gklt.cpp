#include <doctest.h>

#include <cmath>

#include "rare/errors.hpp"
#include "rare/gklt.hpp"

using namespace rare;

namespace {

std::vector<State> ou_init(std::size_t n, std::uint64_t seed) {
    Engine rng(seed);
    return sample_initial_states(SystemSpec::ornstein_uhlenbeck(1, 1), n, rng);
}

TiltConfig gklt_cfg(double C) {
    TiltConfig cfg;
    cfg.C = C;
    cfg.weight_form = WeightForm::IntegratedObservable;
    cfg.tau = 0.1;
    cfg.t_final = 2.0;
    return cfg;
}

}  // namespace

TEST_CASE("time averages over non-overlapping windows") {
    BackwardTrajectory bt;
    bt.dt = 0.5;
    bt.values = {0, 1, 2, 3, 4, 5, 6, 7, 8};  // linear, t in [0, 4]
    const auto avg = time_averages(bt, 1.0);
    REQUIRE(avg.values.size() == 4);
    CHECK(avg.values[0] == doctest::Approx(1.0));
    CHECK(avg.values[3] == doctest::Approx(7.0));
    CHECK(avg.max() == doctest::Approx(7.0));
    CHECK_THROWS_AS(time_averages(bt, 5.0), ConfigError);
    CHECK_THROWS_AS(time_averages(bt, 0.7), ConfigError);
}

TEST_CASE("backward reconstruction follows parents") {
    AncestryLog log;
    log.particle_count = 2;
    log.epochs = 2;
    // epoch 1: both children from slot 1; epoch 2: child 0 <- 1, child 1 <- 0
    log.records = {{1, 0, 1, 1, 1}, {1, 1, 1, 1, 1}, {2, 0, 1, 1, 1}, {2, 1, 0, 1, 1}};
    SegmentStore seg;
    seg.dt = 1.0;
    Eigen::MatrixXd e1(2, 2);
    e1 << 10, 11, 20, 21;
    Eigen::MatrixXd e2(2, 2);
    e2 << 30, 31, 40, 41;
    seg.epochs = {e1, e2};
    const auto bts = reconstruct_backward(log, seg);
    REQUIRE(bts.size() == 2);
    // final slot 0: epoch 2 parent 1 (row 1: 40,41); epoch 1 parent of 1 is 1 (row 1: 20,21)
    CHECK(bts[0].values == std::vector<double>{20, 40, 41});
    CHECK(bts[1].values == std::vector<double>{20, 30, 31});
}

TEST_CASE("C = 0 GKLT matches plain runs bit for bit") {
    const auto spec = SystemSpec::ornstein_uhlenbeck(1, 1);
    const auto cfg = gklt_cfg(0.0);
    const auto init = ou_init(50, 3);
    const StreamKey base{1, 2, 0, 0, StreamTag::Integrate};
    const auto g = run_gklt(spec, Observable::position(), cfg, init, base);
    const auto plain = run_plain(spec, Observable::position(), cfg, init, base, {1, true});
    for (std::size_t n = 0; n < 50; ++n) {
        CHECK(g.backward[n].values.back() == plain.final.particles[n].phi);
        for (std::size_t e = 0; e < plain.segments.epochs.size(); ++e) {
            CHECK(g.resampling.segments.epochs[e].row(static_cast<Eigen::Index>(n)) ==
                  plain.segments.epochs[e].row(static_cast<Eigen::Index>(n)));
        }
    }
    const std::vector<double> a{0.0, 0.5};
    const auto est = estimate_tail_fixed_thresholds(g.backward, g.resampling.ledger, cfg, 0.25, a);
    for (std::size_t j = 0; j < a.size(); ++j) {
        int hits = 0;
        for (const auto& bt : g.backward) hits += time_averages(bt, 0.25).max() > a[j] ? 1 : 0;
        CHECK(est[j] == static_cast<double>(hits) / 50.0);
    }
}

TEST_CASE("reconstructed lineages are continuous at epoch boundaries") {
    const auto spec = SystemSpec::ornstein_uhlenbeck(1, 1);
    const auto cfg = gklt_cfg(0.5);
    const auto init = ou_init(40, 5);
    const auto g = run_gklt(spec, Observable::position(), cfg, init, {2, 0, 0, 0, StreamTag::Integrate});
    for (const auto& bt : g.backward) {
        CHECK(bt.values.size() == 201);
        for (std::size_t k = 1; k < bt.values.size(); ++k) CHECK(std::abs(bt.values[k] - bt.values[k - 1]) < 1.0);
    }
}

TEST_CASE("per-trajectory max pairs are sorted and sum to the weighted total") {
    const auto spec = SystemSpec::ornstein_uhlenbeck(1, 1);
    const auto cfg = gklt_cfg(0.05);
    const auto init = ou_init(100, 6);
    const auto g = run_gklt(spec, Observable::position(), cfg, init, {3, 0, 0, 0, StreamTag::Integrate});
    const auto pairs = estimate_per_trajectory_max(g.backward, g.resampling.ledger, cfg, 0.25);
    REQUIRE(pairs.size() == 100);
    for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i - 1].threshold >= pairs[i].threshold);
    // Lowest threshold minus a bit: every trajectory counts.
    const std::vector<double> a{pairs.back().threshold - 1e-9};
    double sum = 0.0;
    for (const auto& p : pairs) sum += p.probability;
    const auto est = estimate_tail_fixed_thresholds(g.backward, g.resampling.ledger, cfg, 0.25, a);
    CHECK(est[0] == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("GPA telescoping equals the product along reconstructed paths") {
    const auto spec = SystemSpec::ornstein_uhlenbeck(1, 1);
    TiltConfig cfg;
    cfg.C = 3.0;
    const auto init = ou_init(100, 7);
    const StreamKey base{4, 0, 0, 0, StreamTag::Integrate};
    const auto run = run_resampling(spec, Observable::position(), cfg, init, base, {1, true});
    const auto bts = reconstruct_backward(run.ancestry, run.segments);
    const std::vector<double> a{0.0, 1.0, 1.5, 2.0};
    const auto direct = estimate_tail_gpa(run.final, run.ledger, cfg, a);
    const auto path = estimate_tail_gpa_reconstructed(bts, run.ledger, cfg, 10, a);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(path[j] == doctest::Approx(direct[j]).epsilon(1e-10));
}

TEST_CASE("GKLT needs integrated weights") {
    TiltConfig cfg;
    const auto init = ou_init(4, 1);
    CHECK_THROWS_AS(run_gklt(SystemSpec::ornstein_uhlenbeck(1, 1), Observable::position(), cfg, init, {}),
                    ConfigError);
}
