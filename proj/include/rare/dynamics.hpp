#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rare/rng.hpp"

namespace rare {

enum class SystemKind { OrnsteinUhlenbeck, Lorenz96 };

/// Parameters of a trajectory source.
struct SystemSpec {
    SystemKind kind = SystemKind::OrnsteinUhlenbeck;
    double ou_lambda = 1.0;
    double ou_sigma = 1.0;
    /// Sample the exact Gaussian OU transition instead of Euler-Maruyama.
    bool ou_exact = false;
    int l96_sites = 32;
    double l96_forcing = 64.0;
    /// Half-width of the uniform perturbation added to cloned particles.
    double clone_epsilon = 0.0;
    double dt = 1e-2;

    static SystemSpec ornstein_uhlenbeck(double lambda, double sigma, double dt = 1e-2);
    static SystemSpec lorenz96(int sites, double forcing, double epsilon = 1e-3, double dt = 1e-3);

    /// Throws ConfigError listing every violated invariant.
    void validate() const;
    int dimension() const noexcept { return kind == SystemKind::Lorenz96 ? l96_sites : 1; }
    bool operator==(const SystemSpec&) const = default;
};

struct State {
    Eigen::VectorXd values;
    double time = 0.0;
};

struct Trajectory {
    std::vector<State> states;
    std::uint64_t particle_id = 0;
};

enum class ObservableKind { Position, Energy, Custom };

/// Scalar function of the state: φ in X_t = φ(x_t).
struct Observable {
    ObservableKind kind = ObservableKind::Position;
    std::string tag = "position";
    std::function<double(const Eigen::VectorXd&)> custom;

    static Observable position() { return {}; }
    static Observable energy() { return {ObservableKind::Energy, "energy", {}}; }
    static Observable make_custom(std::string tag, std::function<double(const Eigen::VectorXd&)> f) {
        return {ObservableKind::Custom, std::move(tag), std::move(f)};
    }

    /// Throws ConfigError when the observable does not apply to the system.
    void check_compatible(const SystemSpec& spec) const;
    double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Lorenz '96 right-hand side x_{l-1}(x_{l+1} - x_{l-2}) + R - x_l, indices mod J.
template <typename Derived, typename OutDerived>
void lorenz96_tendency(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar forcing,
                       const Eigen::MatrixBase<OutDerived>& out_) {
    auto& out = const_cast<Eigen::MatrixBase<OutDerived>&>(out_);
    const Eigen::Index n = x.size();
    for (Eigen::Index l = 0; l < n; ++l) {
        const auto xm1 = x((l + n - 1) % n);
        const auto xm2 = x((l + n - 2) % n);
        const auto xp1 = x((l + 1) % n);
        out(l) = xm1 * (xp1 - xm2) + forcing - x(l);
    }
}

/// Euler-Maruyama step x - λ x dt + σ √dt ξ (or the exact transition when
/// spec.ou_exact is set).
State step_ou(const State& state, const SystemSpec& spec, double gaussian_draw);

/// One classical RK4 step of size spec.dt.
State step_lorenz96(const State& state, const SystemSpec& spec);

/// Adds clone_epsilon * draw componentwise; draws lie in [-1, 1].
State perturb_clone(const State& state, const SystemSpec& spec, std::span<const double> uniform_draws);

std::vector<double> evaluate_observable(const Trajectory& traj, const Observable& obs);

/// Smallest lag (in time units, lag >= 1 step) at which the mean-removed,
/// variance-normalised autocorrelation drops to `tolerance` in magnitude.
/// Throws NotFoundError (carrying the smallest |autocorrelation| seen) when
/// no lag up to half the series qualifies.
double estimate_resampling_time(std::span<const double> series, double dt, double tolerance = 0.05);

/// In-place integrator with preallocated RK4 workspace. Not thread-safe;
/// use one per worker.
class Integrator {
public:
    explicit Integrator(const SystemSpec& spec);

    /// Advances x by one dt; draws Gaussian noise from rng for OU.
    void step(Eigen::Ref<Eigen::VectorXd> x, Engine& rng);
    /// Deterministic part only (OU with zero noise, L96 RK4).
    void step_deterministic(Eigen::Ref<Eigen::VectorXd> x);

    const SystemSpec& spec() const noexcept { return spec_; }

private:
    SystemSpec spec_;
    std::normal_distribution<double> normal_;
    double ou_decay_;
    double ou_noise_;
    Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_;
};

/// Options for drawing initial conditions from (an approximation of) the
/// invariant measure.
struct InitialStateOptions {
    /// Lorenz '96 spin-up before sampling, in time units.
    double burn_in = 1000.0;
    /// Spacing between samples; <= 0 estimates it from the autocorrelation
    /// of site 0 during burn-in.
    double spacing = 0.0;
};

/// OU: iid draws from N(0, σ²/(2λ)). Lorenz '96: one long run from a
/// perturbed x_l = R start, subsampled at decorrelated intervals.
std::vector<State> sample_initial_states(const SystemSpec& spec, std::size_t count, Engine& rng,
                                         const InitialStateOptions& options = {});

/// Number of dt steps in `duration`; throws ConfigError unless duration is
/// an integer multiple of dt to 1e-9 relative.
long steps_on_grid(double duration, double dt, const char* what);

}  // namespace rare
