#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rare/csv.hpp"
#include "rare/errors.hpp"
#include "rare/gev.hpp"
#include "rare/harness/compare.hpp"
#include "rare/harness/experiment.hpp"
#include "rare/harness/presets.hpp"
#include "rare/returns.hpp"

namespace fs = std::filesystem;
using namespace rare;
using namespace rare::harness;

namespace {

constexpr int exit_config = 2;
constexpr int exit_failed = 3;

struct Common {
    std::string preset;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> budget;
    unsigned workers = 1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--preset", c.preset, "Named preset (see `preset list`)");
    cmd->add_option("--config", c.config, "YAML experiment config");
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--seed", c.seed, "Override the seed");
    cmd->add_option("--budget", c.budget, "Override the cost budget (particle-t_final units)");
    cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& c) {
    if (c.preset.empty() == c.config.empty()) throw ConfigError("give exactly one of --preset or --config");
    ExperimentConfig cfg = c.preset.empty() ? load_config(c.config) : preset_config(c.preset);
    if (c.seed) cfg.seed = *c.seed;
    if (c.budget) cfg.budget = *c.budget;
    if (!c.out.empty()) cfg.output = c.out;
    return cfg;
}

int finish(const RunResult& result) {
    write_outputs(result, result.config.output);
    std::cout << result.config.name << ": " << to_string(result.config.method) << ", "
              << result.experiments.size() << " experiment(s), estimate cost "
              << format_double(result.ledger.estimate_cost) << ", total cost " << format_double(result.ledger.total())
              << ", outputs in " << result.config.output << "\n";
    for (const auto& d : result.diagnostics) std::cout << "  note: " << d << "\n";
    if (result.all_failed()) {
        std::cerr << "every experiment failed\n";
        return exit_failed;
    }
    return 0;
}

std::vector<double> read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return read_series_csv(in);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rare-event estimation: MC, GPA, GKLT and GEV on OU and Lorenz '96"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "Run an experiment batch");
    add_common(run, run_opts);

    Common control_opts;
    auto* control = app.add_subcommand("control", "Long brute-force control run");
    add_common(control, control_opts);
    int chunks = 0;
    control->add_option("--chunks", chunks, "Independent sub-runs for the deviation band");

    std::vector<std::string> bundles;
    std::string compare_out = "comparison";
    auto* compare = app.add_subcommand("compare", "Compare output directories at matched cost");
    compare->add_option("dirs", bundles, "Run output directories")->required();
    compare->add_option("--out", compare_out, "Report directory");

    auto* preset = app.add_subcommand("preset", "Inspect presets");
    preset->require_subcommand(1);
    auto* preset_list = preset->add_subcommand("list", "List presets");
    std::string show_name;
    auto* preset_show = preset->add_subcommand("show", "Print a preset as YAML");
    preset_show->add_option("name", show_name)->required();

    std::string fit_input;
    std::size_t fit_block = 0;
    std::string fit_layout = "single_long_series";
    std::string fit_out;
    auto* fit = app.add_subcommand("fit-gev", "Fit a GEV to block maxima of a series");
    fit->add_option("--input", fit_input, "CSV series (first column)")->required();
    fit->add_option("--block", fit_block, "Block size m")->required();
    fit->add_option("--layout", fit_layout, "Layout tag stored with the fit");
    fit->add_option("--out", fit_out, "JSON output file (default stdout)");

    std::string curve_input;
    std::size_t curve_block = 1;
    std::string curve_out;
    auto* curve = app.add_subcommand("curve", "Block-maxima return curve of a series");
    curve->add_option("--input", curve_input, "CSV series (first column)")->required();
    curve->add_option("--block-length", curve_block, "Samples per block");
    curve->add_option("--out", curve_out, "CSV output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto cfg = resolve(run_opts);
            return finish(run_experiment(cfg, {run_opts.workers}));
        }
        if (control->parsed()) {
            auto cfg = resolve(control_opts);
            cfg.method = Method::Control;
            if (chunks > 0) cfg.control_chunks = chunks;
            return finish(run_control(cfg, {control_opts.workers}));
        }
        if (compare->parsed()) {
            std::vector<Bundle> loaded;
            for (const auto& d : bundles) loaded.push_back(load_bundle(d));
            const auto report = compare_methods(loaded);
            fs::create_directories(compare_out);
            std::ofstream table(fs::path(compare_out) / "comparison.csv", std::ios::binary);
            write_comparison_csv(table, report);
            std::ofstream resolved(fs::path(compare_out) / "resolved.csv", std::ios::binary);
            write_resolved_csv(resolved, report);
            for (std::size_t i = 0; i < report.labels.size(); ++i) {
                std::cout << report.labels[i] << ": longest return time " << format_double(report.longest[i]) << "\n";
            }
            return 0;
        }
        if (preset_list->parsed()) {
            for (const auto& p : presets()) std::cout << p.name << "\t" << p.description << "\n";
            return 0;
        }
        if (preset_show->parsed()) {
            std::cout << emit_config(preset_config(show_name));
            return 0;
        }
        if (fit->parsed()) {
            const auto series = read_series(fit_input);
            const auto gf = fit_gev_mle(block_maxima(series, fit_block, block_layout_from_string(fit_layout)));
            nlohmann::json j{{"block_size", fit_block},
                             {"mu", gf.params.mu},
                             {"sigma", gf.params.sigma},
                             {"zeta", gf.params.zeta},
                             {"log_likelihood", gf.log_likelihood},
                             {"maxima", gf.maxima.size()},
                             {"warnings", gf.diagnostics.warnings}};
            const auto wald = zeta_interval(gf, CiMethod::Wald);
            const auto prof = zeta_interval(gf, CiMethod::Profile);
            j["zeta_ci_wald"] = {wald.lo, wald.hi};
            j["zeta_ci_profile"] = {prof.lo, prof.hi};
            if (fit_out.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                std::ofstream(fit_out) << j.dump(2) << "\n";
            }
            return 0;
        }
        if (curve->parsed()) {
            const auto series = read_series(curve_input);
            const std::vector<ReturnCurve> curves{curve_from_block_series(series, curve_block, Provenance::Control)};
            if (curve_out.empty()) {
                write_curves_csv(std::cout, curves);
            } else {
                std::ofstream out(curve_out, std::ios::binary);
                write_curves_csv(out, curves);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const ConvergenceError& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        return exit_failed;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
