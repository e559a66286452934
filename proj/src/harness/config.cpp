#include "rare/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rare/csv.hpp"
#include "rare/errors.hpp"

namespace rare::harness {

std::string to_string(GkltEstimator e) {
    return e == GkltEstimator::FixedThreshold ? "fixed_threshold" : "per_trajectory_max";
}

GkltEstimator gklt_estimator_from_string(const std::string& s) {
    if (s == "fixed_threshold") return GkltEstimator::FixedThreshold;
    if (s == "per_trajectory_max") return GkltEstimator::PerTrajectoryMax;
    throw ConfigError("unknown GKLT estimator '" + s + "'");
}

Observable make_observable(const ExperimentConfig& cfg) {
    if (cfg.observable == "position") return Observable::position();
    if (cfg.observable == "energy") return Observable::energy();
    throw ConfigError("unknown observable '" + cfg.observable + "'");
}

namespace {

bool on_grid(double duration, double dt) {
    const double k = duration / dt;
    return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k);
}

}  // namespace

void ExperimentConfig::validate() const {
    std::vector<std::string> problems;
    try {
        system.validate();
    } catch (const ConfigError& e) {
        problems.emplace_back(e.what());
    }
    try {
        make_observable(*this).check_compatible(system);
    } catch (const ConfigError& e) {
        problems.emplace_back(e.what());
    }
    const double dt = system.dt;
    auto timing = [&](double value, const char* what, bool allow_zero) {
        if (allow_zero && value == 0.0) return;
        if (!(value > 0.0)) problems.push_back(std::string(what) + " must be positive");
        else if (dt > 0.0 && !on_grid(value, dt)) problems.push_back(std::string(what) + " is not a multiple of dt");
    };
    timing(t_final, "t_final", false);
    timing(window, "window", true);
    timing(block_length, "block_length", true);
    if (experiments < 1) problems.emplace_back("experiments must be at least 1");
    if (window > t_final) problems.emplace_back("window longer than t_final");
    if (time_average() && t_final > 0.0 && !on_grid(t_final, window)) {
        problems.emplace_back("t_final is not a multiple of window");
    }
    if (block_length > 0.0 && t_final > 0.0 && !on_grid(block_length, t_final)) {
        problems.emplace_back("block_length is not a multiple of t_final");
    }

    const bool tilted = method == Method::GPA || method == Method::GKLT;
    if (tilted) {
        timing(tau, "tau", false);
        if (tau > 0.0 && t_final > 0.0 && !on_grid(t_final, tau)) problems.emplace_back("t_final is not a multiple of tau");
        if (tilts.empty()) problems.emplace_back("tilt constants are required for GPA and GKLT");
        if (particles < 1) problems.emplace_back("particles must be positive");
        for (double c : tilts) {
            if (!std::isfinite(c)) problems.emplace_back("tilt constants must be finite");
        }
    } else if (!(budget > 0.0)) {
        problems.emplace_back("budget must be positive for MC, GEV and control runs");
    }
    if (method == Method::GPA && time_average()) problems.emplace_back("GPA targets end values; set window to 0");
    if (method == Method::GKLT && !time_average()) problems.emplace_back("GKLT needs a positive window");
    if (method == Method::GKLT && gklt_estimator == GkltEstimator::FixedThreshold && thresholds.empty()) {
        problems.emplace_back("fixed-threshold GKLT needs thresholds");
    }
    if (method == Method::GEV) {
        if (block_sizes.empty()) problems.emplace_back("GEV needs at least one block size");
        for (auto m : block_sizes) {
            if (m < 1) problems.emplace_back("block sizes must be positive");
        }
    }
    if (method == Method::Control && control_chunks < 1) problems.emplace_back("control_chunks must be at least 1");
    if (!(half_width > 0.0)) problems.emplace_back("half_width must be positive");
    if (!(burn_in >= 0.0)) problems.emplace_back("burn_in must be non-negative");

    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
}

namespace {

template <typename T>
T get(const YAML::Node& node, const char* key, T fallback) {
    const auto n = node[key];
    if (!n) return fallback;
    return n.as<T>();
}

template <typename T>
std::vector<T> get_list(const YAML::Node& node, const char* key, std::vector<T> fallback) {
    const auto n = node[key];
    if (!n) return fallback;
    if (n.IsScalar()) return {n.as<T>()};
    return n.as<std::vector<T>>();
}

void check_keys(const YAML::Node& node, const std::set<std::string>& known, const std::string& where,
                std::vector<std::string>& problems) {
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!known.count(key)) problems.push_back("unknown key '" + key + "' in " + where);
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("config must be a mapping");

    std::vector<std::string> problems;
    check_keys(root,
               {"name", "seed", "output", "system", "observable", "method", "tilts", "particles", "tau", "t_final",
                "window", "block_sizes", "experiments", "block_length", "budget", "thresholds", "gklt_estimator",
                "filter", "half_width", "control_chunks", "burn_in", "reference_series"},
               "config", problems);

    ExperimentConfig cfg;
    try {
        cfg.name = get<std::string>(root, "name", cfg.name);
        cfg.seed = get<std::uint64_t>(root, "seed", cfg.seed);
        cfg.output = get<std::string>(root, "output", cfg.output);
        if (const auto sys = root["system"]) {
            check_keys(sys, {"kind", "lambda", "sigma", "exact", "sites", "forcing", "epsilon", "dt"}, "system",
                       problems);
            const auto kind = get<std::string>(sys, "kind", "ou");
            if (kind == "ou") cfg.system = SystemSpec::ornstein_uhlenbeck(1.0, 1.0);
            else if (kind == "lorenz96") cfg.system = SystemSpec::lorenz96(32, 64.0);
            else problems.push_back("unknown system kind '" + kind + "'");
            auto& s = cfg.system;
            s.ou_lambda = get<double>(sys, "lambda", s.ou_lambda);
            s.ou_sigma = get<double>(sys, "sigma", s.ou_sigma);
            s.ou_exact = get<bool>(sys, "exact", s.ou_exact);
            s.l96_sites = get<int>(sys, "sites", s.l96_sites);
            s.l96_forcing = get<double>(sys, "forcing", s.l96_forcing);
            s.clone_epsilon = get<double>(sys, "epsilon", s.clone_epsilon);
            s.dt = get<double>(sys, "dt", s.dt);
        }
        cfg.observable = get<std::string>(root, "observable", cfg.observable);
        cfg.method = provenance_from_string(get<std::string>(root, "method", to_string(cfg.method)));
        cfg.tilts = get_list<double>(root, "tilts", cfg.tilts);
        cfg.particles = get<std::size_t>(root, "particles", cfg.particles);
        cfg.tau = get<double>(root, "tau", cfg.tau);
        cfg.t_final = get<double>(root, "t_final", cfg.t_final);
        cfg.window = get<double>(root, "window", cfg.window);
        cfg.block_sizes = get_list<std::size_t>(root, "block_sizes", cfg.block_sizes);
        cfg.experiments = get<int>(root, "experiments", cfg.experiments);
        cfg.block_length = get<double>(root, "block_length", cfg.block_length);
        cfg.budget = get<double>(root, "budget", cfg.budget);
        cfg.thresholds = get_list<double>(root, "thresholds", cfg.thresholds);
        cfg.gklt_estimator =
            gklt_estimator_from_string(get<std::string>(root, "gklt_estimator", to_string(cfg.gklt_estimator)));
        cfg.filter = get<bool>(root, "filter", cfg.filter);
        cfg.half_width = get<double>(root, "half_width", cfg.half_width);
        cfg.control_chunks = get<int>(root, "control_chunks", cfg.control_chunks);
        cfg.burn_in = get<double>(root, "burn_in", cfg.burn_in);
        cfg.reference_series = get<std::string>(root, "reference_series", cfg.reference_series);
    } catch (const YAML::Exception& e) {
        problems.push_back(std::string("bad value: ") + e.what());
    } catch (const Error& e) {
        problems.emplace_back(e.what());
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

struct Num {
    double v;
};

YAML::Emitter& operator<<(YAML::Emitter& out, Num n) { return out << format_double(n.v); }

YAML::Emitter& emit_list(YAML::Emitter& out, const std::vector<double>& values) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double v : values) out << Num{v};
    return out << YAML::EndSeq;
}

}  // namespace

std::string emit_config(const ExperimentConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.name;
    out << YAML::Key << "seed" << YAML::Value << cfg.seed;
    out << YAML::Key << "output" << YAML::Value << cfg.output;
    out << YAML::Key << "system" << YAML::Value << YAML::BeginMap;
    const auto& s = cfg.system;
    out << YAML::Key << "kind" << YAML::Value << (s.kind == SystemKind::Lorenz96 ? "lorenz96" : "ou");
    out << YAML::Key << "lambda" << YAML::Value << Num{s.ou_lambda};
    out << YAML::Key << "sigma" << YAML::Value << Num{s.ou_sigma};
    out << YAML::Key << "exact" << YAML::Value << s.ou_exact;
    out << YAML::Key << "sites" << YAML::Value << s.l96_sites;
    out << YAML::Key << "forcing" << YAML::Value << Num{s.l96_forcing};
    out << YAML::Key << "epsilon" << YAML::Value << Num{s.clone_epsilon};
    out << YAML::Key << "dt" << YAML::Value << Num{s.dt};
    out << YAML::EndMap;
    out << YAML::Key << "observable" << YAML::Value << cfg.observable;
    out << YAML::Key << "method" << YAML::Value << to_string(cfg.method);
    out << YAML::Key << "tilts" << YAML::Value;
    emit_list(out, cfg.tilts);
    out << YAML::Key << "particles" << YAML::Value << cfg.particles;
    out << YAML::Key << "tau" << YAML::Value << Num{cfg.tau};
    out << YAML::Key << "t_final" << YAML::Value << Num{cfg.t_final};
    out << YAML::Key << "window" << YAML::Value << Num{cfg.window};
    out << YAML::Key << "block_sizes" << YAML::Value << YAML::Flow << cfg.block_sizes;
    out << YAML::Key << "experiments" << YAML::Value << cfg.experiments;
    out << YAML::Key << "block_length" << YAML::Value << Num{cfg.block_length};
    out << YAML::Key << "budget" << YAML::Value << Num{cfg.budget};
    out << YAML::Key << "thresholds" << YAML::Value;
    emit_list(out, cfg.thresholds);
    out << YAML::Key << "gklt_estimator" << YAML::Value << to_string(cfg.gklt_estimator);
    out << YAML::Key << "filter" << YAML::Value << cfg.filter;
    out << YAML::Key << "half_width" << YAML::Value << Num{cfg.half_width};
    out << YAML::Key << "control_chunks" << YAML::Value << cfg.control_chunks;
    out << YAML::Key << "burn_in" << YAML::Value << Num{cfg.burn_in};
    out << YAML::Key << "reference_series" << YAML::Value << cfg.reference_series;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace rare::harness
