// blowctl: numerical laboratory for steering the 1D controlled heat equation
// into a prescribed blowup. Subcommands build the special initial data
// (construct), run the three-phase feedback experiment (control), sweep
// initial-data perturbations (stability), precompute the steering kernel
// (riccati) and re-run diagnostics on stored trajectories (diagnose).

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>

#include "blowctl/experiments.hpp"
#include "blowctl/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSearch = 3;
constexpr int kExitRun = 4;

blowctl::ExperimentConfig load_config(const std::string& config_path) {
    if (config_path.empty()) return blowctl::default_config();
    return blowctl::parse_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedback-controlled blowup laboratory for the 1D heat equation"};
    app.set_version_flag("--version", blowctl::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    app.add_option("--config", config_path, "key=value config file (defaults when omitted)");
    app.add_option("--out", out_dir, "output directory for artifacts");

    auto* construct = app.add_subcommand(
        "construct", "search the two-parameter data family and persist the blowup data");

    std::string y0_source = "zero";
    bool no_construct = false;
    std::string cache_path;
    auto* control = app.add_subcommand(
        "control", "run the three-phase feedback experiment toward the prescribed blowup");
    control->add_option("--y0", y0_source, "initial data: zero | target | CSV field path");
    control->add_flag("--no-construct", no_construct,
                      "fail instead of constructing the target on demand");
    control->add_option("--cache", cache_path, "steering kernel cache file");

    std::string sizes_csv;
    auto* stability = app.add_subcommand(
        "stability", "perturb the constructed data and record the blowup response");
    stability->add_option("--sizes", sizes_csv, "comma-separated perturbation sizes");

    auto* riccati = app.add_subcommand("riccati", "solve and cache the steering kernel");
    std::string riccati_cache = "riccati.cache";
    riccati->add_option("--cache", riccati_cache, "cache file to write");

    auto* diagnose = app.add_subcommand(
        "diagnose", "re-run diagnostics on a stored control trajectory");

    CLI11_PARSE(app, argc, argv);

    try {
        const blowctl::ExperimentConfig cfg = load_config(config_path);

        if (construct->parsed()) {
            const auto outcome = blowctl::cmd_construct(cfg, out_dir);
            if (!outcome.ok) {
                std::cerr << "construct: search failed (s_exit = " << outcome.shooting.s_exit
                          << ", exit mode " << blowctl::exit_mode_name(outcome.shooting.exit_mode)
                          << ")\n";
                return kExitSearch;
            }
            std::cout << "construct: d* = (" << outcome.shooting.d0_star << ", "
                      << outcome.shooting.d1_star << "), s_exit = " << outcome.shooting.s_exit
                      << ", exit mode " << blowctl::exit_mode_name(outcome.shooting.exit_mode)
                      << "\n";
            return kExitOk;
        }
        if (control->parsed()) {
            const auto summary =
                blowctl::cmd_control(cfg, out_dir, y0_source, no_construct, cache_path);
            if (!summary.ok) {
                std::cerr << "control: run failed: " << summary.failure << "\n";
                return kExitRun;
            }
            std::cout << "control: T* = " << summary.t_star << " (|T*-T| = " << summary.time_err
                      << "), a* = " << summary.a_star << " (|a*-a| = " << summary.point_err
                      << "), " << (summary.pass_time && summary.pass_point ? "PASS" : "FAIL")
                      << " vs epsilon\n";
            return summary.pass_time && summary.pass_point ? kExitOk : kExitRun;
        }
        if (stability->parsed()) {
            std::vector<double> sizes = cfg.sizes;
            if (!sizes_csv.empty()) sizes = blowctl::parse_sizes_list(sizes_csv);
            const auto report = blowctl::cmd_stability(cfg, out_dir, sizes);
            for (const auto& row : report.rows) {
                std::cout << "stability: sigma = " << row.sigma << ", |dT| = " << row.delta_t
                          << ", |da| = " << row.delta_a
                          << (row.converged ? "" : " (not converged)") << "\n";
            }
            return report.ok ? kExitOk : kExitRun;
        }
        if (riccati->parsed()) {
            blowctl::cmd_riccati_cache(cfg, riccati_cache);
            std::cout << "riccati: cache written to " << riccati_cache << "\n";
            return kExitOk;
        }
        if (diagnose->parsed()) {
            blowctl::cmd_diagnose(cfg, out_dir);
            std::cout << "diagnose: reports written under " << out_dir << "/diagnose\n";
            return kExitOk;
        }
    } catch (const blowctl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const blowctl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRun;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRun;
    }
    return kExitOk;
}
