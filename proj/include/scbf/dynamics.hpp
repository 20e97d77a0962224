#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scbf/field.hpp"
#include "scbf/interpolant.hpp"
#include "scbf/noise.hpp"
#include "scbf/operators.hpp"

namespace scbf {

struct StepperConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    int record_stride = 1;
    int snapshot_stride = 0;        ///< 0 disables in-memory snapshots
    bool implicit_nudging = false;  ///< spectral interpolant only
    int max_halvings = 4;
    std::string scheme = "imex-euler-maruyama";

    /// Number of steps round(t_end / dt).
    std::uint64_t n_steps() const;
};

struct AssimilationConfig {
    double sigma = 0.0;
    InterpolantSpec interpolant;
    VelocityField truth_init;
    VelocityField da_init;
};

/// Wiener basis plus coefficient; a disabled model (epsilon = 0) means no noise.
struct NoiseModel {
    WienerBasis basis;
    NoiseCoefficient coeff;

    bool enabled() const { return coeff.enabled(); }
};

struct TruthState {
    double t = 0.0;
    std::uint64_t step = 0;
    VelocityField zeta;
};

/// Truth and assimilated fields. The error z = Z - zeta is carried
/// explicitly so that shared additive noise cancels exactly; Z is derived.
struct PairState {
    double t = 0.0;
    std::uint64_t step = 0;
    VelocityField zeta;
    VelocityField error;
    NormBundle error_norms;

    VelocityField z_da() const { return zeta + error; }
};

PairState make_pair_state(const VelocityField& truth_init, const VelocityField& da_init, double varpi);

/// Time integrator with reusable work buffers for one trajectory.
///
/// IMEX Euler-Maruyama: mu A + alpha implicit, convection, damping, forcing
/// and (by default) nudging explicit. Truth and assimilated copies use the
/// same increment. A step whose explicit damping or nudging factor would
/// overshoot (h * rate > 1) or that produces non-finite values is retried
/// with dt halved, at most max_halvings times.
class Integrator {
public:
    Integrator(const ModelParams& params, const NoiseModel* noise, const StepperConfig& stepper,
               const AssimilationConfig* assimilation = nullptr);

    void step_truth(TruthState& state, const RngStream& rng);
    void step_pair(PairState& state, const RngStream& rng);

    /// Steps that needed the halving fallback so far.
    std::uint64_t substep_events() const { return substep_events_; }

private:
    struct Work;
    bool substep(SpectralField& zeta, SpectralField* err, double h, const std::vector<double>* coeffs, bool check_cfl,
                 double t);
    void advance(SpectralField& zeta, SpectralField* err, double t, std::uint64_t step, const RngStream& rng);

    const ModelParams* params_;
    const NoiseModel* noise_;
    StepperConfig stepper_;
    const AssimilationConfig* assim_;
    std::shared_ptr<Work> work_;
    std::uint64_t substep_events_ = 0;
};

/// One step of the truth system.
TruthState step_truth(const TruthState& state, const ModelParams& params, const NoiseModel* noise,
                      const StepperConfig& stepper, const RngStream& rng);

/// One step of the coupled pair.
PairState step_pair(const PairState& state, const ModelParams& params, const NoiseModel* noise,
                    const AssimilationConfig& config, const StepperConfig& stepper, const RngStream& rng);

struct TrajectoryRecord {
    double t = 0.0;
    NormBundle zeta;
    NormBundle da;
    NormBundle err;
    double zeta_dot_f = 0.0;    ///< (zeta, f)
    double int_zeta_vsq = 0.0;  ///< int_0^t ||zeta||_V^2 ds, trapezoidal at every step
};

struct Snapshot {
    double t = 0.0;
    VelocityField zeta;
    std::optional<VelocityField> da;
};

struct Trajectory {
    bool paired = false;
    bool noise_enabled = false;
    std::vector<TrajectoryRecord> records;
    std::vector<Snapshot> snapshots;
    std::uint64_t substep_events = 0;
};

/// Runs the truth alone (assimilation == nullptr, initial state `truth_init`)
/// or the coupled pair. The member index selects the random stream.
Trajectory run_trajectory(const VelocityField& truth_init, const ModelParams& params, const NoiseModel* noise,
                          const AssimilationConfig* assimilation, const StepperConfig& stepper,
                          std::uint64_t master_seed, std::uint64_t member = 0);

/// Energy trace of the truth component for energy_balance_residual.
EnergyTrace energy_trace(const Trajectory& traj);

/// Columns t, zeta_l2sq, zeta_vsq, zeta_lp, da_l2sq, err_l2sq, err_vsq.
/// Each line of `preamble` is written first, prefixed by "# ".
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& preamble = {});

struct RegimeReport {
    RegimeInfo regime;
    std::string noise_kind;
    bool noise_enabled = false;
    std::string summary;
};

/// Re-checks the well-posedness case of params (throws ConfigError).
RegimeReport validate_regime(const ModelParams& params, const NoiseModel* noise);

}  // namespace scbf
