#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scbf/dynamics.hpp"

namespace scbf {

/// Everything one ensemble needs. assimilation == nullptr runs the truth only
/// from truth_init.
struct EnsembleSpec {
    const ModelParams* params = nullptr;
    const NoiseModel* noise = nullptr;
    const AssimilationConfig* assimilation = nullptr;
    std::optional<VelocityField> truth_init;
    StepperConfig stepper;
    int n_members = 2;
    std::uint64_t master_seed = 0;
    int threads = 1;
    std::vector<double> moment_orders{1.0, 2.0};
    /// Every member uses stream 0 (degenerate ensemble, for checks only).
    bool force_identical_streams = false;
    std::string config_echo;
};

struct MemberSeries {
    std::uint64_t member = 0;
    std::vector<double> err_l2sq;
    std::vector<double> zeta_l2sq;
    std::vector<double> int_zeta_vsq;
};

struct EnsembleResult {
    int n_members = 0;   ///< members that finished
    int n_excluded = 0;  ///< members dropped after a numerical failure
    std::vector<std::uint64_t> excluded_members;
    std::vector<std::string> exclusion_reasons;
    std::vector<double> times;
    std::vector<double> mean_err_l2sq;
    std::vector<double> stderr_err_l2sq;
    std::vector<double> moment_orders;
    std::vector<std::vector<double>> mean_zeta_l2sq_p;    ///< E ||zeta||_2^{2p} per order
    std::vector<std::vector<double>> stderr_zeta_l2sq_p;
    std::vector<MemberSeries> members;
    std::uint64_t substep_events = 0;
    std::string config_echo;
};

/// Runs members on `threads` workers; aggregation follows member order.
/// More than 10% excluded members fails the run with BlowUpError.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

/// Mean and standard error of each column of per-member series.
void mean_and_stderr(const std::vector<std::vector<double>>& rows, std::vector<double>& mean, std::vector<double>& se);

enum class FitKind { exponential, polynomial };
std::string to_string(FitKind k);

struct RateFit {
    double rate = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    int n_used = 0;
    FitKind kind = FitKind::exponential;
};

constexpr double kFitFloor = 1e-13;

/// Least squares of ln v against t over samples in [t_start, t_end] with
/// v > floor; rate = -slope. Needs at least 8 such samples (FitError).
RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& v, double t_start, double t_end,
                             double floor = kFitFloor);

/// Least squares of ln v against ln t; requires t_start > 0.
RateFit fit_polynomial_rate(const std::vector<double>& t, const std::vector<double>& v, double t_start, double t_end,
                            double floor = kFitFloor);

struct MomentSeries {
    double p = 1.0;
    std::vector<double> mean;
    std::vector<double> stderr_;
    double first_quarter = 0.0;  ///< time average over the first quarter of records
    double last_quarter = 0.0;
    double plateau = 0.0;        ///< time average over the second half
    double plateau_stderr = 0.0; ///< mean member standard error over the second half
    bool bounded = false;        ///< last_quarter <= 1.5 first_quarter
};

struct MomentReport {
    std::vector<MomentSeries> orders;
    bool all_bounded() const;
};

/// E ||zeta(t)||_2^{2p} for each p in [1, 4] and the no-growth verdict.
MomentReport moment_tracker(const EnsembleResult& ens, const std::vector<double>& p_orders);

/// plateau(p=2) >= plateau(p=1)^2 - 3 stderr(p=2).
bool jensen_check(const MomentSeries& p1, const MomentSeries& p2);

struct WeightedParams {
    double mu = 1.0;
    double alpha = 0.0;
    double sigma = 0.0;
    double L = 0.0;
    double delta = 0.0;
    double c0 = 1.0;
    double theta = 1.0;
};

/// rho(t) = ((2 alpha + sigma)/(1 + delta) - L) t - (2/mu) int_0^t ||zeta||_V^2.
double weight_exponent(const WeightedParams& w, double t, double int_zeta_vsq);

/// e^{rho(t)} ||z(t)||_2^2 along one trajectory.
std::vector<double> weighted_contraction_series(const Trajectory& traj, const WeightedParams& w);

struct WeightedDiagnostic {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderr_;
    double initial = 0.0;    ///< ||z_0||_2^2 (ensemble mean)
    double worst_ratio = 0.0;///< max_t mean / (initial (1 + 5 stderr_rel + allowance))
    bool within_bound = false;
};

/// Ensemble version; throws ConfigError if sigma > mu/(c0 theta^2) or V-norm
/// integrals are missing.
WeightedDiagnostic weighted_contraction_diagnostic(const EnsembleResult& ens, const WeightedParams& w,
                                                   double allowance = 0.1);

struct BoundCheck {
    bool pass = false;
    double worst_ratio = 0.0;   ///< max_t mean / allowed
    double worst_time = 0.0;
};

/// mean_err(t) <= err(0) e^{-rate t} (1 + 5 stderr_rel(t) + allowance) at every record.
BoundCheck check_exponential_bound(const EnsembleResult& ens, double rate, double allowance = 0.1);

/// Columns t, mean_err_l2sq, stderr_err_l2sq, then mean/stderr of
/// ||zeta||^{2p} per moment order.
void write_ensemble_csv(std::ostream& os, const EnsembleResult& ens, const std::vector<std::string>& preamble = {});

}  // namespace scbf
