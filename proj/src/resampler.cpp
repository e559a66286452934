#include "rare/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "rare/csv.hpp"
#include "rare/errors.hpp"
#include "rare/parallel.hpp"

namespace rare {

void TiltConfig::validate() const {
    std::ostringstream problems;
    if (!std::isfinite(C)) problems << " C must be finite;";
    if (!(tau > 0.0)) problems << " tau must be positive;";
    if (!(t_final > 0.0)) problems << " t_final must be positive;";
    if (tau > 0.0 && t_final > 0.0) {
        const double ratio = t_final / tau;
        if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
            problems << " t_final must be an integer multiple of tau;";
        }
    }
    if (const auto text = problems.str(); !text.empty()) throw ConfigError("invalid tilt:" + text);
}

int TiltConfig::epochs() const { return static_cast<int>(std::lround(t_final / tau)); }

double WeightLedger::log_z_sum() const {
    double sum = 0.0;
    for (const auto& e : epochs) sum += e.log_z;
    return sum;
}

std::vector<std::size_t> AncestryLog::parent_of(int epoch) const {
    constexpr auto unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> parents(particle_count, unset);
    for (const auto& r : records) {
        if (r.epoch != epoch) continue;
        if (r.child_id >= particle_count || r.parent_id >= particle_count) {
            throw IntegrityError("ancestry id out of range", epoch, r.child_id);
        }
        if (parents[r.child_id] != unset) {
            throw IntegrityError("child recorded twice", epoch, r.child_id);
        }
        parents[r.child_id] = r.parent_id;
    }
    for (std::size_t c = 0; c < particle_count; ++c) {
        if (parents[c] == unset) throw IntegrityError("child without parent", epoch, c);
    }
    return parents;
}

void AncestryLog::write_csv(std::ostream& out) const {
    out << "epoch,child_id,parent_id,raw_weight,Z_i\n";
    for (const auto& r : records) {
        out << r.epoch << ',' << r.child_id << ',' << r.parent_id << ',' << format_double(r.raw_weight) << ','
            << format_double(r.z) << '\n';
    }
}

EpochWeights normalize_log_weights(std::vector<double> log_raw) {
    if (log_raw.empty()) throw InputError("no weights to normalise");
    const double max_exponent = *std::max_element(log_raw.begin(), log_raw.end());
    if (!std::isfinite(max_exponent) || max_exponent > std::log(std::numeric_limits<double>::max())) {
        std::ostringstream msg;
        msg << "tilt weight overflows: max exponent " << max_exponent << "; reduce C";
        throw OverflowError(msg.str(), max_exponent);
    }
    double acc = 0.0;
    for (double l : log_raw) acc += std::exp(l - max_exponent);
    EpochWeights w;
    w.log_z = max_exponent + std::log(acc / static_cast<double>(log_raw.size()));
    w.normalized.reserve(log_raw.size());
    for (double l : log_raw) w.normalized.push_back(std::exp(l - w.log_z));
    w.log_raw = std::move(log_raw);
    return w;
}

EpochWeights compute_weights_end_value(const Ensemble& ensemble, const Observable& obs, const TiltConfig& cfg) {
    std::vector<double> log_raw;
    log_raw.reserve(ensemble.particles.size());
    for (const auto& p : ensemble.particles) {
        log_raw.push_back(cfg.C * (obs(p.state.values) - p.phi_epoch_start));
    }
    return normalize_log_weights(std::move(log_raw));
}

EpochWeights compute_weights_integrated(const Ensemble& ensemble, const Observable&, const TiltConfig& cfg) {
    std::vector<double> log_raw;
    log_raw.reserve(ensemble.particles.size());
    for (const auto& p : ensemble.particles) log_raw.push_back(cfg.C * p.integral);
    return normalize_log_weights(std::move(log_raw));
}

std::vector<int> copy_counts(std::span<const double> normalized, std::span<const double> uniforms) {
    if (normalized.size() != uniforms.size()) throw InputError("copy_counts: size mismatch");
    std::vector<int> counts(normalized.size());
    for (std::size_t n = 0; n < normalized.size(); ++n) {
        // floor(W + u) without forming W + u, which can round up to the next integer.
        const double whole = std::floor(normalized[n]);
        const double frac = normalized[n] - whole;
        counts[n] = static_cast<int>(whole) + (uniforms[n] >= 1.0 - frac ? 1 : 0);
    }
    return counts;
}

Ensemble clone_kill(const Ensemble& ensemble, const EpochWeights& weights, Engine& rng,
                    std::vector<AncestryRecord>* log) {
    const std::size_t n_particles = ensemble.particles.size();
    const std::size_t target = ensemble.initial_count ? ensemble.initial_count : n_particles;
    const int epoch = ensemble.epoch + 1;
    if (weights.normalized.size() != n_particles) throw InputError("clone_kill: weight count mismatch");

    std::vector<double> u(n_particles);
    for (auto& x : u) x = uniform01(rng);
    const auto counts = copy_counts(weights.normalized, u);

    struct Child {
        std::size_t parent;
        bool clone;
    };
    std::vector<Child> children;
    children.reserve(target + target / 4);
    for (std::size_t n = 0; n < n_particles; ++n) {
        for (int c = 0; c < counts[n]; ++c) children.push_back({n, c > 0});
    }
    if (children.empty()) {
        throw ExtinctionError("all particles killed at epoch " + std::to_string(epoch), epoch);
    }

    if (children.size() > target) {
        // Selection sampling keeps `target` children uniformly, in order.
        std::vector<Child> kept;
        kept.reserve(target);
        std::size_t needed = target;
        const std::size_t total = children.size();
        for (std::size_t i = 0; i < total && needed > 0; ++i) {
            if (uniform01(rng) * static_cast<double>(total - i) < static_cast<double>(needed)) {
                kept.push_back(children[i]);
                --needed;
            }
        }
        children = std::move(kept);
    } else if (children.size() < target) {
        const std::size_t survivors = children.size();
        std::uniform_int_distribution<std::size_t> pick(0, survivors - 1);
        while (children.size() < target) children.push_back({children[pick(rng)].parent, true});
    }

    Ensemble next;
    next.epoch = epoch;
    next.initial_count = target;
    next.particles.reserve(target);
    const double z = weights.z();
    for (std::size_t slot = 0; slot < children.size(); ++slot) {
        const auto& child = children[slot];
        Particle p = ensemble.particles[child.parent];
        p.parent = child.parent;
        p.is_clone = child.clone;
        p.integral = 0.0;
        next.particles.push_back(std::move(p));
        if (log) log->push_back({epoch, slot, child.parent, weights.raw(child.parent), z});
    }
    return next;
}

namespace {

Ensemble initial_ensemble(const Observable& obs, std::span<const State> init) {
    Ensemble ens;
    ens.initial_count = init.size();
    ens.particles.reserve(init.size());
    for (std::size_t n = 0; n < init.size(); ++n) {
        Particle p;
        p.state = init[n];
        p.state.time = 0.0;
        p.phi = obs(p.state.values);
        p.phi_epoch_start = p.phi;
        p.phi_root = p.phi;
        p.root = n;
        p.parent = n;
        ens.particles.push_back(std::move(p));
    }
    return ens;
}

void integrate_epoch(Ensemble& ens, const SystemSpec& spec, const Observable& obs, long steps, int epoch,
                     double epoch_end, const StreamKey& base, unsigned workers, Eigen::MatrixXd* segment) {
    const double dt = spec.dt;
    if (segment) segment->resize(static_cast<Eigen::Index>(ens.particles.size()), steps + 1);
    parallel_for(ens.particles.size(), workers, [&](std::size_t slot) {
        Particle& p = ens.particles[slot];
        StreamKey key = base;
        key.particle = slot;
        key.epoch = static_cast<std::uint64_t>(epoch);
        if (p.is_clone && spec.clone_epsilon > 0.0) {
            key.tag = StreamTag::Perturb;
            Engine prng = make_stream(key);
            std::vector<double> draws(static_cast<std::size_t>(p.state.values.size()));
            for (auto& d : draws) d = 2.0 * uniform01(prng) - 1.0;
            p.state = perturb_clone(p.state, spec, draws);
            p.phi = obs(p.state.values);
        }
        key.tag = StreamTag::Integrate;
        Engine rng = make_stream(key);
        Integrator integrator(spec);
        const auto row = static_cast<Eigen::Index>(slot);
        double prev = p.phi;
        p.phi_epoch_start = prev;
        if (segment) (*segment)(row, 0) = prev;
        double integral = 0.0;
        for (long s = 1; s <= steps; ++s) {
            integrator.step(p.state.values, rng);
            const double cur = obs(p.state.values);
            integral += 0.5 * dt * (prev + cur);
            if (segment) (*segment)(row, s) = cur;
            prev = cur;
        }
        if (!p.state.values.allFinite()) {
            throw InputError("trajectory diverged in epoch " + std::to_string(epoch));
        }
        p.phi = prev;
        p.integral = integral;
        p.state.time = epoch_end;
    });
}

void check_inputs(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg, std::span<const State> init) {
    spec.validate();
    cfg.validate();
    obs.check_compatible(spec);
    steps_on_grid(cfg.tau, spec.dt, "tau");
    if (init.empty()) throw InputError("no initial states");
    for (const auto& s : init) {
        if (s.values.size() != spec.dimension()) throw InputError("initial state has wrong dimension");
    }
}

}  // namespace

ResamplingRun run_resampling(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg,
                             std::span<const State> init, const StreamKey& base, const ResamplingOptions& options) {
    check_inputs(spec, obs, cfg, init);
    const long steps = steps_on_grid(cfg.tau, spec.dt, "tau");
    const int epochs = cfg.epochs();

    ResamplingRun run;
    run.final = initial_ensemble(obs, init);
    run.ancestry.particle_count = init.size();
    run.ancestry.epochs = epochs;
    run.ancestry.records.reserve(init.size() * static_cast<std::size_t>(epochs));
    run.segments.dt = spec.dt;
    if (options.store_segments) run.segments.epochs.resize(static_cast<std::size_t>(epochs));

    for (int i = 1; i <= epochs; ++i) {
        auto* segment = options.store_segments ? &run.segments.epochs[static_cast<std::size_t>(i - 1)] : nullptr;
        integrate_epoch(run.final, spec, obs, steps, i, cfg.tau * i, base, options.workers, segment);
        auto weights = cfg.weight_form == WeightForm::EndValueDifference
                           ? compute_weights_end_value(run.final, obs, cfg)
                           : compute_weights_integrated(run.final, obs, cfg);
        StreamKey rkey = base;
        rkey.particle = 0;
        rkey.epoch = static_cast<std::uint64_t>(i);
        rkey.tag = StreamTag::Resample;
        Engine rrng = make_stream(rkey);
        run.final = clone_kill(run.final, weights, rrng, &run.ancestry.records);
        run.ledger.epochs.push_back(std::move(weights));
    }
    run.cost = static_cast<double>(init.size());
    return run;
}

ResamplingRun run_gpa(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg,
                      std::span<const State> init, const StreamKey& base, const ResamplingOptions& options) {
    if (cfg.weight_form != WeightForm::EndValueDifference) {
        throw ConfigError("GPA uses end-value-difference weights");
    }
    return run_resampling(spec, obs, cfg, init, base, options);
}

ResamplingRun run_plain(const SystemSpec& spec, const Observable& obs, const TiltConfig& cfg,
                        std::span<const State> init, const StreamKey& base, const ResamplingOptions& options) {
    check_inputs(spec, obs, cfg, init);
    const long steps = steps_on_grid(cfg.tau, spec.dt, "tau");
    const int epochs = cfg.epochs();
    ResamplingRun run;
    run.final = initial_ensemble(obs, init);
    run.segments.dt = spec.dt;
    if (options.store_segments) run.segments.epochs.resize(static_cast<std::size_t>(epochs));
    for (int i = 1; i <= epochs; ++i) {
        auto* segment = options.store_segments ? &run.segments.epochs[static_cast<std::size_t>(i - 1)] : nullptr;
        integrate_epoch(run.final, spec, obs, steps, i, cfg.tau * i, base, options.workers, segment);
        run.final.epoch = i;
    }
    run.cost = static_cast<double>(init.size());
    return run;
}

std::vector<double> estimate_tail_gpa(const Ensemble& final, const WeightLedger& ledger, const TiltConfig& cfg,
                                      std::span<const double> thresholds) {
    const auto n = final.particles.size();
    if (n == 0) throw InputError("empty ensemble");
    const double log_z = ledger.log_z_sum();
    std::vector<double> weight(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& p = final.particles[k];
        weight[k] = std::exp(cfg.C * p.phi_root - cfg.C * p.phi + log_z);
    }
    std::vector<double> out;
    out.reserve(thresholds.size());
    for (double a : thresholds) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (final.particles[k].phi > a) sum += weight[k];
        }
        out.push_back(sum / static_cast<double>(n));
    }
    return out;
}

std::vector<RankedPair> gpa_weighted_pairs(const Ensemble& final, const WeightLedger& ledger, const TiltConfig& cfg) {
    const auto n = final.particles.size();
    if (n == 0) throw InputError("empty ensemble");
    const double log_z = ledger.log_z_sum();
    std::vector<RankedPair> pairs;
    pairs.reserve(n);
    for (const auto& p : final.particles) {
        pairs.push_back({p.phi, std::exp(cfg.C * p.phi_root - cfg.C * p.phi + log_z) / static_cast<double>(n)});
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const RankedPair& a, const RankedPair& b) { return a.threshold > b.threshold; });
    return pairs;
}

}  // namespace rare
