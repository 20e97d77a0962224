#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scbf/grid.hpp"

namespace scbf {

/// Arbitrary real vector field sampled on the grid, one array per component.
struct VectorField {
    explicit VectorField(const Grid& g);

    Grid grid;
    std::vector<std::vector<double>> comp;

    int dim() const { return grid.dim(); }
};

/// Arbitrary vector field in half-layout Fourier coefficients.
struct SpectralField {
    explicit SpectralField(const Grid& g);

    Grid grid;
    std::vector<std::vector<cplx>> comp;

    int dim() const { return grid.dim(); }
    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(double a);
};

SpectralField to_spectral(const VectorField& u);
VectorField to_physical(const SpectralField& u);

/// Divergence-free, zero-mean field. Only produced by projection or by
/// operations that preserve the constraint.
class VelocityField {
public:
    /// Zero field.
    explicit VelocityField(const Grid& g);

    const Grid& grid() const { return coeffs_.grid; }
    int dim() const { return coeffs_.grid.dim(); }
    const SpectralField& spectral() const { return coeffs_; }
    VectorField physical() const { return to_physical(coeffs_); }

    /// Wraps coefficients that are already solenoidal and zero-mean.
    /// No check is performed; callers outside the library should use leray_project.
    static VelocityField trusted(SpectralField coeffs);

    VelocityField& operator+=(const VelocityField& o);
    VelocityField& operator-=(const VelocityField& o);
    VelocityField& operator*=(double a);

private:
    explicit VelocityField(SpectralField coeffs) : coeffs_(std::move(coeffs)) {}
    SpectralField coeffs_;
};

VelocityField operator+(VelocityField a, const VelocityField& b);
VelocityField operator-(VelocityField a, const VelocityField& b);
VelocityField operator*(double a, VelocityField u);

/// In-place Helmholtz projection; also removes the mean and Nyquist modes.
void project_in_place(SpectralField& u);
/// In-place 2/3-rule truncation (keeps only dealiased slots).
void dealias_in_place(SpectralField& u);
/// Makes the m_last = 0 plane Hermitian-consistent (and n/2 plane, if present).
void hermitian_fix(SpectralField& u);

VelocityField leray_project(const VectorField& raw);
VelocityField leray_project(SpectralField raw);

struct NormBundle {
    double l2_sq = 0.0;  ///< ||u||_2^2
    double v_sq = 0.0;   ///< ||grad u||_2^2
    double lp = 0.0;     ///< ||u||_{varpi+1}^{varpi+1}
    double time = 0.0;
};

/// l2_sq and v_sq from spectral sums, lp from grid quadrature.
NormBundle norms(const VelocityField& u, double varpi, double time = 0.0);
/// Spectral-only part of norms (lp left at 0).
NormBundle spectral_norms(const SpectralField& u);
/// ||u||_{p}^{p} by grid quadrature with |u| the Euclidean magnitude.
double lp_power(const VectorField& u, double p);
/// (u, v) in L^2 via Parseval.
double inner(const SpectralField& u, const SpectralField& v);
/// sup_x |u(x)|.
double max_magnitude(const VectorField& u);
/// L^2 norm of the spectral divergence.
double divergence_l2(const SpectralField& u);

/// Random smooth solenoidal field with E(|k|) ~ |k|^slope on the dealiased
/// wavenumbers; deterministic in seed. k_max > 0 restricts to |k| <= k_max.
VelocityField random_divfree_field(const Grid& grid, double energy_spectrum_slope, std::uint64_t seed,
                                   double k_max = 0.0);

/// Rescales u so that ||u||_2^2 equals l2_sq (zero fields are left alone).
VelocityField with_energy(VelocityField u, double l2_sq);

/// Snapshot text format: header "dim,n,side_length", one value line, then
/// one row per grid point (row-major) with comma-separated components.
/// Leading lines starting with '#' are comments.
void write_snapshot(std::ostream& os, const VectorField& u, const std::vector<std::string>& preamble = {});
void write_snapshot(const std::string& path, const VectorField& u, const std::vector<std::string>& preamble = {});
VectorField read_snapshot(std::istream& is);
VectorField read_snapshot(const std::string& path);

}  // namespace scbf
