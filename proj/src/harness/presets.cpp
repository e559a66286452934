#include "rare/harness/presets.hpp"

#include "rare/errors.hpp"

namespace rare::harness {

namespace {

ExperimentConfig ou_base(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.system = SystemSpec::ornstein_uhlenbeck(1.0, 1.0, 1e-2);
    c.particles = 100;
    c.tau = 0.1;
    c.t_final = 2.0;
    return c;
}

ExperimentConfig ou_gklt(const std::string& name, GkltEstimator est) {
    auto c = ou_base(name);
    c.method = Method::GKLT;
    c.window = 0.25;
    c.tilts = {0.01, 0.03, 0.05, 0.07};
    c.experiments = 100;
    c.gklt_estimator = est;
    for (int i = 0; i <= 16; ++i) c.thresholds.push_back(0.25 * i);
    return c;
}

ExperimentConfig ou_gpa(const std::string& name, std::vector<double> tilts, int k, std::size_t n) {
    auto c = ou_base(name);
    c.method = Method::GPA;
    c.tilts = std::move(tilts);
    c.experiments = k;
    c.particles = n;
    return c;
}

ExperimentConfig brute(ExperimentConfig c, const std::string& name, Method m, double budget, int k) {
    c.name = name;
    c.method = m;
    c.budget = budget;
    c.experiments = k;
    c.tilts.clear();
    if (m == Method::GEV) c.block_sizes = {10, 100};
    if (m == Method::Control) {
        c.experiments = 1;
        c.thresholds.clear();
    }
    return c;
}

ExperimentConfig l96_gpa(const std::string& name, std::size_t n) {
    ExperimentConfig c;
    c.name = name;
    c.system = SystemSpec::lorenz96(32, 64.0, 1e-3, 1e-3);
    c.observable = "energy";
    c.method = Method::GPA;
    c.tilts = {3.2e-3, 6.4e-3};
    c.particles = n;
    c.tau = 0.08;
    c.t_final = 1.28;
    c.experiments = 10;
    c.burn_in = 100.0;
    return c;
}

std::vector<Preset> build() {
    std::vector<Preset> p;
    const auto gklt_b = ou_gklt("ou-gklt", GkltEstimator::FixedThreshold);
    const auto gklt = ou_gklt("ou-gklt-max", GkltEstimator::PerTrajectoryMax);
    p.push_back({"ou-gklt", "OU window averages, GKLT fixed thresholds, 4 tilts x 100 experiments", gklt_b});
    p.push_back({"ou-gklt-max", "OU window averages, GKLT per-trajectory maxima", gklt});
    p.push_back({"ou-gklt-mc", "OU window averages, brute force at the GKLT cost", brute(gklt, "ou-gklt-mc", Method::MC, 4e4, 100)});
    p.push_back({"ou-gklt-gev", "OU window averages, GEV at the GKLT cost", brute(gklt, "ou-gklt-gev", Method::GEV, 4e4, 100)});
    p.push_back({"ou-gklt-control", "OU window averages, long control run", brute(gklt, "ou-gklt-control", Method::Control, 1e6, 1)});

    const auto small = ou_gpa("ou-gpa-small", {2, 3, 4}, 10, 100);
    p.push_back({"ou-gpa-small", "OU end values, GPA, 3 tilts x 10 experiments", small});
    p.push_back({"ou-gpa-mc", "OU end values, brute force at the GPA cost", brute(small, "ou-gpa-mc", Method::MC, 3e3, 10)});
    p.push_back({"ou-gpa-gev", "OU end values, GEV at the GPA cost", brute(small, "ou-gpa-gev", Method::GEV, 3e3, 10)});
    p.push_back({"ou-gpa-control", "OU end values, long control run", brute(small, "ou-gpa-control", Method::Control, 1e6, 1)});
    p.push_back({"ou-gpa-c", "OU end values, GPA, tilts 1..10 x 30 experiments",
                 ou_gpa("ou-gpa-c", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 30, 100)});

    auto mean_re = ou_gpa("ou-mean-re", {2, 3, 4}, 100, 1000);
    for (int i = 0; i <= 14; ++i) mean_re.thresholds.push_back(0.25 * i);
    p.push_back({"ou-mean-re", "OU end values, GPA mean deviation across thresholds", mean_re});
    auto re = ou_gpa("ou-re", {4}, 100, 1000);
    re.thresholds = {2.0};
    p.push_back({"ou-re", "OU end values, GPA relative error at a = 2", re});
    p.push_back({"ou-re-mc", "OU end values, brute-force relative error at a = 2", brute(re, "ou-re-mc", Method::MC, 1000, 100)});
    auto re_gev = brute(re, "ou-re-gev", Method::GEV, 1000, 100);
    re_gev.block_sizes = {10};
    p.push_back({"ou-re-gev", "OU end values, GEV relative error at a = 2", re_gev});
    auto spread = ou_gpa("ou-re-spread", {2, 3, 4}, 100, 1000);
    spread.filter = false;
    p.push_back({"ou-re-spread", "OU end values, GPA curve spread over 100 experiments", spread});
    auto spread_gev = brute(spread, "ou-re-spread-gev", Method::GEV, 1000, 100);
    spread_gev.block_sizes = {10};
    p.push_back({"ou-re-spread-gev", "OU end values, GEV curve spread over 100 experiments", spread_gev});

    const auto l96 = l96_gpa("l96-gpa", 2000);
    p.push_back({"l96-gpa", "Lorenz '96 energy, GPA with 2000 particles", l96});
    p.push_back({"l96-gpa-5000", "Lorenz '96 energy, GPA with 5000 particles", l96_gpa("l96-gpa-5000", 5000)});
    p.push_back({"l96-mc", "Lorenz '96 energy, brute force at the 2000-particle GPA cost", brute(l96, "l96-mc", Method::MC, 4e4, 1)});
    p.push_back({"l96-gev", "Lorenz '96 energy, GEV at the 2000-particle GPA cost", brute(l96, "l96-gev", Method::GEV, 4e4, 1)});
    p.push_back({"l96-control", "Lorenz '96 energy, control run", brute(l96, "l96-control", Method::Control, 1e6, 1)});

    auto series = ou_gklt("series-gklt", GkltEstimator::PerTrajectoryMax);
    series.tau = 0.25;
    series.tilts = {0.01, 0.05};
    series.experiments = 3;
    series.thresholds.clear();
    p.push_back({"series-gklt",
                 "GKLT with tau equal to the window; set reference_series to an archived control series", series});
    return p;
}

}  // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = build();
    return all;
}

ExperimentConfig preset_config(const std::string& name) {
    for (const auto& p : presets()) {
        if (p.name == name) return p.config;
    }
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const auto& p : presets()) msg += " " + p.name;
    throw ConfigError(msg);
}

}  // namespace rare::harness
