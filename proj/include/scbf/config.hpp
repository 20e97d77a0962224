#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scbf/dynamics.hpp"
#include "scbf/theory.hpp"

namespace scbf {

inline constexpr const char* kVersion = "scbf 1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Recipe for an initial field or forcing.
///   zero
///   random      slope, seed, energy (target ||u||_2^2, 0 keeps raw), k_max
///   kolmogorov  amplitude, wavenumber: projected (A sin(k y), 0, ...)
///   snapshot    path (field-core snapshot file)
///   offset      base field plus perturbation (DA initial state only; base is the truth)
struct FieldSpec {
    std::string kind = "zero";
    double slope = -4.0;
    std::uint64_t seed = 1;
    double energy = 0.0;
    double k_max = 0.0;
    double amplitude = 0.0;
    int wavenumber = 1;
    std::string path;
    std::vector<FieldSpec> perturbation;  ///< offset kind: exactly one entry
};

struct RunConfig {
    nlohmann::json echo;  ///< normalized config with every default filled in

    int dim = 2;
    int n = 64;
    double side_length = 6.283185307179586;
    double dealias_fraction = 2.0 / 3.0;

    double mu = 1.0;
    double alpha = 0.0;
    double beta = 1.0;
    double varpi = 2.0;
    bool convection = true;
    FieldSpec forcing;

    NoiseKind noise_kind = NoiseKind::additive;
    double epsilon = 0.0;
    QWienerSpec qwiener;

    InterpolantKind interpolant_kind = InterpolantKind::spectral;
    double theta = 1.0;
    std::optional<double> c0;
    int c0_trials = 200;
    std::uint64_t c0_seed = 7;

    double sigma = 0.0;
    FieldSpec truth_init;
    FieldSpec da_init;

    StepperConfig stepper;

    int n_members = 2;
    std::vector<double> moment_orders{1.0, 2.0};
    double weighted_delta = 0.0;
    bool truth_only = false;  ///< ensemble of the truth alone (moment diagnostics)

    std::string fit_kind = "exponential";
    std::optional<double> fit_t_start;
    std::optional<double> fit_t_end;
    std::string fit_input;
    std::string fit_column = "err_l2sq";

    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
};

/// Parses and validates; unknown keys and wrong types raise ConfigError
/// naming the offending field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Objects built from a config.
struct RunSetup {
    Grid grid;
    ModelParams params;
    NoiseModel noise;
    NoiseConstants noise_constants;
    InterpolantSpec interpolant;
    std::optional<double> c0_estimate_raw;  ///< set when c0 was estimated
    VelocityField truth0;
    VelocityField da0;
};

RunSetup realize(const RunConfig& cfg);
VelocityField realize_field(const FieldSpec& spec, const Grid& grid);

/// Threshold inputs of the configured run at its sigma.
ThresholdInputs threshold_inputs(const RunConfig& cfg, const RunSetup& setup);

/// Worker count: SCBF_THREADS if set and positive, otherwise hardware concurrency.
int thread_count();

}  // namespace scbf
