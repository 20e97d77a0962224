#pragma once

#include <cstdint>
#include <string>

#include "scbf/field.hpp"

namespace scbf {

enum class InterpolantKind { volume, spectral };

/// Observation operator I_theta.
struct InterpolantSpec {
    InterpolantKind kind = InterpolantKind::spectral;
    double theta = 1.0;
    double c0 = 1.0;
    int cells_per_axis = 0;  ///< volume kind only: ceil(side_length / theta)

    /// Spectral projection onto |k| <= 1/theta, c0 = 1.
    static InterpolantSpec spectral(double theta);
    /// Cell averages on ceil(L/theta)^dim cells; c0 must still be estimated.
    static InterpolantSpec volume(const Grid& grid, double theta, double c0 = 1.0);
};

std::string to_string(InterpolantKind kind);
InterpolantKind interpolant_kind_from_string(const std::string& s);

/// Piecewise-constant cell averages (not divergence-free in general). Grid
/// node i stands for the control volume [x_i - h/2, x_i + h/2).
VectorField apply_volume_interpolant(const InterpolantSpec& spec, const VectorField& u);
VectorField apply_volume_interpolant(const InterpolantSpec& spec, const VelocityField& u);

/// Fourier truncation to |k| <= 1/theta.
VelocityField apply_spectral_interpolant(const InterpolantSpec& spec, const VelocityField& u);
/// Same truncation applied in place to raw coefficients.
void spectral_truncate_in_place(const InterpolantSpec& spec, SpectralField& u);

/// P I_theta(u) restricted to the dealiased modes, as used by the nudging term.
SpectralField nudging_projection(const InterpolantSpec& spec, const SpectralField& u_hat, const VectorField* u_phys);

/// ||u - I u||_2^2 / (theta^2 (||u||_2^2 + ||u||_V^2)).
double interpolation_ratio(const InterpolantSpec& spec, const VelocityField& u);

/// Maximum interpolation_ratio over n_trials random fields with slope -4
/// spectra. For the volume kind spec.c0 is set to 1.5 times that maximum;
/// for the spectral kind spec.c0 stays 1. Returns the raw maximum.
double estimate_c0(InterpolantSpec& spec, const Grid& grid, int n_trials, std::uint64_t seed);

}  // namespace scbf
