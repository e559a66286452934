#include "rare/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rare/errors.hpp"

namespace rare {

SystemSpec SystemSpec::ornstein_uhlenbeck(double lambda, double sigma, double dt) {
    SystemSpec spec;
    spec.kind = SystemKind::OrnsteinUhlenbeck;
    spec.ou_lambda = lambda;
    spec.ou_sigma = sigma;
    spec.dt = dt;
    return spec;
}

SystemSpec SystemSpec::lorenz96(int sites, double forcing, double epsilon, double dt) {
    SystemSpec spec;
    spec.kind = SystemKind::Lorenz96;
    spec.l96_sites = sites;
    spec.l96_forcing = forcing;
    spec.clone_epsilon = epsilon;
    spec.dt = dt;
    return spec;
}

void SystemSpec::validate() const {
    std::ostringstream problems;
    if (!(dt > 0.0) || !std::isfinite(dt)) problems << " dt must be positive;";
    if (!(clone_epsilon >= 0.0)) problems << " clone_epsilon must be >= 0;";
    if (kind == SystemKind::OrnsteinUhlenbeck) {
        if (!(ou_lambda > 0.0)) problems << " ou_lambda must be positive;";
        if (!(ou_sigma >= 0.0)) problems << " ou_sigma must be >= 0;";
    } else {
        if (l96_sites < 4) problems << " Lorenz '96 needs at least 4 sites;";
        if (!std::isfinite(l96_forcing)) problems << " forcing must be finite;";
    }
    if (const auto text = problems.str(); !text.empty()) {
        throw ConfigError("invalid system:" + text);
    }
}

void Observable::check_compatible(const SystemSpec& spec) const {
    switch (kind) {
        case ObservableKind::Position:
            if (spec.dimension() != 1) throw ConfigError("position observable needs a scalar state");
            break;
        case ObservableKind::Energy:
            if (spec.kind != SystemKind::Lorenz96) {
                throw ConfigError("energy observable is defined for Lorenz '96 only");
            }
            break;
        case ObservableKind::Custom:
            if (!custom) throw ConfigError("custom observable '" + tag + "' has no function");
            break;
    }
}

double Observable::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    switch (kind) {
        case ObservableKind::Position:
            return x(0);
        case ObservableKind::Energy:
            return x.squaredNorm() / (2.0 * static_cast<double>(x.size()));
        case ObservableKind::Custom:
            return custom(x);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite()) throw InputError(std::string(what) + ": non-finite state");
}

double ou_decay(const SystemSpec& spec) {
    return spec.ou_exact ? std::exp(-spec.ou_lambda * spec.dt) : 1.0;
}

double ou_noise_scale(const SystemSpec& spec) {
    if (spec.ou_exact) {
        return spec.ou_sigma *
               std::sqrt(-std::expm1(-2.0 * spec.ou_lambda * spec.dt) / (2.0 * spec.ou_lambda));
    }
    return spec.ou_sigma * std::sqrt(spec.dt);
}

// Shared by step_ou and Integrator so both produce identical bits.
inline double ou_update(double x, double draw, const SystemSpec& spec, double decay, double noise) {
    if (spec.ou_exact) return x * decay + noise * draw;
    return x - spec.ou_lambda * x * spec.dt + noise * draw;
}

}  // namespace

State step_ou(const State& state, const SystemSpec& spec, double gaussian_draw) {
    if (spec.kind != SystemKind::OrnsteinUhlenbeck) throw ConfigError("step_ou on a non-OU system");
    require_finite(state.values, "step_ou");
    if (!std::isfinite(gaussian_draw)) throw InputError("step_ou: non-finite draw");
    State next;
    next.values.resize(state.values.size());
    const double decay = ou_decay(spec);
    const double noise = ou_noise_scale(spec);
    for (Eigen::Index i = 0; i < state.values.size(); ++i) {
        next.values(i) = ou_update(state.values(i), gaussian_draw, spec, decay, noise);
    }
    next.time = state.time + spec.dt;
    return next;
}

State step_lorenz96(const State& state, const SystemSpec& spec) {
    if (spec.kind != SystemKind::Lorenz96) throw ConfigError("step_lorenz96 on a non-Lorenz system");
    require_finite(state.values, "step_lorenz96");
    if (state.values.size() != spec.l96_sites) throw InputError("step_lorenz96: state has wrong length");
    State next{state.values, state.time + spec.dt};
    Integrator integrator(spec);
    integrator.step_deterministic(next.values);
    return next;
}

State perturb_clone(const State& state, const SystemSpec& spec, std::span<const double> uniform_draws) {
    State next = state;
    if (spec.clone_epsilon == 0.0) return next;
    const auto n = std::min<std::size_t>(uniform_draws.size(), static_cast<std::size_t>(state.values.size()));
    for (std::size_t i = 0; i < n; ++i) {
        next.values(static_cast<Eigen::Index>(i)) += spec.clone_epsilon * uniform_draws[i];
    }
    return next;
}

std::vector<double> evaluate_observable(const Trajectory& traj, const Observable& obs) {
    std::vector<double> out;
    out.reserve(traj.states.size());
    for (const auto& s : traj.states) {
        if (obs.kind == ObservableKind::Position && s.values.size() != 1) {
            throw ConfigError("position observable needs a scalar state");
        }
        out.push_back(obs(s.values));
    }
    return out;
}

double estimate_resampling_time(std::span<const double> series, double dt, double tolerance) {
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw DomainError("tolerance must lie in (0,1)");
    const std::size_t n = series.size();
    if (n < 4) throw InputError("series too short for an autocorrelation estimate");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> centered(n);
    double variance = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        centered[t] = series[t] - mean;
        variance += centered[t] * centered[t];
    }
    if (!(variance > 0.0)) {
        throw NotFoundError("constant series: autocorrelation is undefined", 1.0);
    }
    double best = 1.0;
    for (std::size_t lag = 1; lag <= n / 2; ++lag) {
        double acc = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) acc += centered[t] * centered[t + lag];
        const double rho = acc / variance;
        best = std::min(best, std::abs(rho));
        if (std::abs(rho) <= tolerance) {
            if (n < 10 * lag) {
                throw InputError("series shorter than 10x the decorrelation lag");
            }
            return static_cast<double>(lag) * dt;
        }
    }
    throw NotFoundError("no lag within half the series reaches the autocorrelation tolerance", best);
}

Integrator::Integrator(const SystemSpec& spec)
    : spec_(spec), normal_(0.0, 1.0), ou_decay_(ou_decay(spec)), ou_noise_(ou_noise_scale(spec)) {
    if (spec.kind == SystemKind::Lorenz96) {
        const auto n = spec.l96_sites;
        k1_.resize(n);
        k2_.resize(n);
        k3_.resize(n);
        k4_.resize(n);
        tmp_.resize(n);
    }
}

void Integrator::step(Eigen::Ref<Eigen::VectorXd> x, Engine& rng) {
    if (spec_.kind == SystemKind::OrnsteinUhlenbeck) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x(i) = ou_update(x(i), normal_(rng), spec_, ou_decay_, ou_noise_);
        }
        return;
    }
    step_deterministic(x);
}

void Integrator::step_deterministic(Eigen::Ref<Eigen::VectorXd> x) {
    const double dt = spec_.dt;
    if (spec_.kind == SystemKind::OrnsteinUhlenbeck) {
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = ou_update(x(i), 0.0, spec_, ou_decay_, 0.0);
        return;
    }
    const double f = spec_.l96_forcing;
    lorenz96_tendency(x, f, k1_);
    tmp_ = x + 0.5 * dt * k1_;
    lorenz96_tendency(tmp_, f, k2_);
    tmp_ = x + 0.5 * dt * k2_;
    lorenz96_tendency(tmp_, f, k3_);
    tmp_ = x + dt * k3_;
    lorenz96_tendency(tmp_, f, k4_);
    x += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

std::vector<State> sample_initial_states(const SystemSpec& spec, std::size_t count, Engine& rng,
                                         const InitialStateOptions& options) {
    spec.validate();
    std::vector<State> out;
    out.reserve(count);
    if (spec.kind == SystemKind::OrnsteinUhlenbeck) {
        std::normal_distribution<double> normal(0.0, spec.ou_sigma / std::sqrt(2.0 * spec.ou_lambda));
        for (std::size_t i = 0; i < count; ++i) {
            State s;
            s.values = Eigen::VectorXd::Constant(1, normal(rng));
            out.push_back(std::move(s));
        }
        return out;
    }

    Integrator integrator(spec);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(spec.l96_sites, spec.l96_forcing);
    for (Eigen::Index l = 0; l < x.size(); ++l) x(l) += 0.01 * (2.0 * uniform01(rng) - 1.0);
    const long burn_steps = std::lround(options.burn_in / spec.dt);
    for (long s = 0; s < burn_steps; ++s) integrator.step(x, rng);

    double spacing = options.spacing;
    if (spacing <= 0.0) {
        // Site-0 record at 10-step resolution over 100 time units.
        const long stride = 10;
        const long samples = std::lround(100.0 / (spec.dt * stride));
        std::vector<double> record;
        record.reserve(static_cast<std::size_t>(samples));
        for (long k = 0; k < samples; ++k) {
            for (long s = 0; s < stride; ++s) integrator.step(x, rng);
            record.push_back(x(0));
        }
        spacing = estimate_resampling_time(record, spec.dt * stride, 0.05);
    }
    const long spacing_steps = std::max(1L, std::lround(spacing / spec.dt));
    for (std::size_t i = 0; i < count; ++i) {
        for (long s = 0; s < spacing_steps; ++s) integrator.step(x, rng);
        out.push_back(State{x, 0.0});
    }
    return out;
}

long steps_on_grid(double duration, double dt, const char* what) {
    if (!(duration > 0.0) || !(dt > 0.0)) {
        throw ConfigError(std::string(what) + " must be positive");
    }
    const double ratio = duration / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError(std::string(what) + " is not an integer multiple of dt");
    }
    return static_cast<long>(rounded);
}

}  // namespace rare
