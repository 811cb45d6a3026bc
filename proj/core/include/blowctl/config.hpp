#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blowctl/errors.hpp"

namespace blowctl {

/// Flat experiment configuration. Every field maps to one key of the
/// key=value config file; unknown and duplicate keys are rejected.
struct ExperimentConfig {
    // geometry
    double domain_lo = 0.0;
    double domain_hi = 2.0;
    double omega_lo = 0.1;
    double omega_hi = 1.9;
    double a = 1.0;
    int n = 401;

    // timing
    double t_total = 0.1;    // key "T"
    double t1 = -1.0;        // key "T1"; default exp(-s0)
    double epsilon = 0.05;
    double eps_hat = -1.0;   // default epsilon/8
    double eps_hat1 = -1.0;  // default T1/8

    // construction
    double p = 2.0;
    double s0 = 7.5;
    double k0 = 1.0;
    double epsilon0 = 0.22;
    double a_bound = 30.0;  // key "A"
    double mu = 0.8;
    double eta0 = 1.0;
    int budget = 12;

    // numerics
    double blowup_threshold = 1e5;
    double floor_eps = 1e-6;
    double base_dt = 1e-5;     // cap for the adaptive nonlinear step
    double control_dt = 2e-5;  // fixed step of the steering/smoothing phases
    double safety = 0.05;
    int n_knots = 128;
    double reg_eps = -1.0;  // < 0: auto (1e-10 * steering horizon)
    int checkpoint_stride = 4;

    // experiments
    std::vector<double> sizes = {0.0, 1e-3, 1e-2};
    std::string out_dir = "out";

    /// Applies the derived defaults (T1, eps_hat, eps_hat1) and validates
    /// every invariant. Throws ConfigError with a description on failure.
    void finalize();

    /// Canonical sorted key=value text (the "effective config" echo).
    std::string canonical_string() const;

    /// FNV-1a hash of the canonical string, as fixed-width hex.
    std::string hash() const;
};

ExperimentConfig default_config();

/// Strict parse of a key=value file: '#' comments and blank lines allowed,
/// unknown keys, duplicate keys and malformed values rejected with the key
/// and line number. The result is finalized.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

std::vector<double> parse_sizes_list(const std::string& csv);

}  // namespace blowctl
