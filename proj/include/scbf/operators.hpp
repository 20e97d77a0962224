#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "scbf/field.hpp"

namespace scbf {

/// Well-posedness case of the (dim, varpi, mu beta) triple.
struct RegimeInfo {
    int table_case = 0;         ///< 1, 2 or 3
    std::string exponent_class; ///< "subcritical" | "critical" | "supercritical"
    std::string description;
};

/// Classifies (dim, varpi) and checks the admissible cases
///   I: d=2, varpi >= 1;  II: d=3, varpi > 3;  III: d=3, varpi = 3 with 2 mu beta >= 1.
/// Throws ConfigError naming the violated case otherwise.
RegimeInfo classify_regime(int dim, double mu, double beta, double varpi);

/// Physical constants of the damped flow. The constructor validates the regime.
struct ModelParams {
    ModelParams(double mu, double alpha, double beta, double varpi, VelocityField forcing,
                bool convection = true);

    double mu;
    double alpha;
    double beta;
    double varpi;
    VelocityField forcing;
    /// Switch for linear verification runs; the model itself always has it on.
    bool convection;
    RegimeInfo regime;

    int dim() const { return forcing.dim(); }
    const Grid& grid() const { return forcing.grid(); }
};

/// Stokes operator: multiplication by |k|^2.
VelocityField apply_stokes(const VelocityField& u);

/// Skew-symmetrized trilinear form 1/2[((u.grad)v, w) - ((u.grad)w, v)] by grid quadrature.
double trilinear_b(const VelocityField& u, const VelocityField& v, const VelocityField& w);

/// Projected, dealiased skew convection 1/2[(u.grad)u + div(u u)].
VelocityField convection_B(const VelocityField& u);

/// Projected, dealiased |u|^(varpi-1) u.
VelocityField damping_K(const VelocityField& u, double varpi);

/// Pointwise monotonicity gap
///   (a-b).(|a|^(w-1)a - |b|^(w-1)b) - 2^(1-w)|a-b|^(w+1)
/// for two vectors of equal length.
double monotonicity_gap_pointwise(std::span<const double> a, std::span<const double> b, double varpi);

/// <u-v, K(u)-K(v)> - 2^(1-varpi) ||u-v||_{varpi+1}^{varpi+1}, grid quadrature.
double damping_monotonicity_gap(const VelocityField& u, const VelocityField& v, double varpi);

/// ||f||_{V*}^2 = ||A^{-1/2} f||_2^2.
double forcing_dual_norm_sq(const VelocityField& f);

struct EnergySample {
    NormBundle norms;            ///< norms of the state at norms.time
    double forcing_work = 0.0;   ///< (u, f)
};

struct EnergyTrace {
    bool noise_enabled = false;
    std::vector<EnergySample> samples;
};

/// max_t | ||u(t)||^2 - ||u0||^2 + 2 int (mu v + alpha l2 + beta lp - (u,f)) ds |
/// with trapezoidal quadrature. Throws ConfigError if the trace has noise.
double energy_balance_residual(const EnergyTrace& trace, const ModelParams& params);

/// Reusable buffers for the nonlinear drift terms of one field.
class DriftKernel {
public:
    explicit DriftKernel(const Grid& grid);

    /// Transforms u to physical space and fills conv (skew convection, if
    /// requested) and damp (|u|^(varpi-1)u), both dealiased and projected.
    /// Returns max |u|.
    double evaluate(const SpectralField& u, double varpi, bool with_convection, SpectralField& conv,
                    SpectralField& damp);

    /// Physical values of the last evaluated field.
    const VectorField& physical() const { return phys_; }

private:
    Grid grid_;
    VectorField phys_;
    VectorField adv_;
    std::vector<double> tmp_phys_;
    std::vector<cplx> tmp_spec_;
};

}  // namespace scbf
