#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace scbf {

using cplx = std::complex<double>;

struct GridTables;

/// Uniform periodic grid on the torus [0, side_length)^dim.
///
/// Spectral data uses the real-to-complex half layout: the last axis keeps
/// indices 0..n/2, the others are stored in FFT order.
class Grid {
public:
    Grid(int dim, int n, double side_length = 6.283185307179586,
         double dealias_fraction = 2.0 / 3.0);

    int dim() const { return dim_; }
    int n() const { return n_; }
    double side_length() const { return side_length_; }
    double dealias_fraction() const { return dealias_fraction_; }

    /// Number of physical points n^dim.
    std::size_t size() const { return size_; }
    /// Number of stored complex coefficients n^(dim-1) (n/2+1).
    std::size_t spectral_size() const { return spectral_size_; }

    double spacing() const { return side_length_ / n_; }
    double cell_volume() const;
    /// |Q| = side_length^dim.
    double measure() const;
    /// 2 pi / side_length.
    double wavenumber_unit() const;
    /// Largest retained |m_i| under the dealiasing rule.
    int dealias_cutoff() const { return cutoff_; }

    /// Signed integer wavenumber of spectral slot s (unused axes are 0).
    const std::array<int, 3>& mode(std::size_t s) const;
    /// Physical |k|^2 of slot s.
    double k2(std::size_t s) const;
    /// Physical wavevector component j of slot s.
    double k(std::size_t s, int j) const;
    /// Multiplicity of slot s in full-spectrum sums (1 or 2).
    double weight(std::size_t s) const;
    /// True if some |m_i| equals n/2.
    bool nyquist(std::size_t s) const;
    /// True if all |m_i| are within the dealiasing cutoff and s is not Nyquist.
    bool dealiased(std::size_t s) const;
    /// Spectral slot holding integer wavenumber m; m must satisfy m_last >= 0.
    std::size_t slot(const std::array<int, 3>& m) const;
    /// Physical point index of integer coordinates (row-major).
    std::size_t point(const std::array<int, 3>& j) const;

    /// Forward transform with 1/N scaling: u(x) = sum_m c_m e^{i k.x}.
    void forward(const double* in, cplx* out) const;
    /// Inverse transform (unscaled synthesis); input is left untouched.
    void inverse(const cplx* in, double* out) const;

    bool operator==(const Grid& other) const;
    bool operator!=(const Grid& other) const { return !(*this == other); }

private:
    int dim_;
    int n_;
    double side_length_;
    double dealias_fraction_;
    int cutoff_;
    std::size_t size_;
    std::size_t spectral_size_;
    std::shared_ptr<const GridTables> tables_;
};

/// Smallest nonzero Stokes eigenvalue on zero-mean torus fields, (2 pi / L)^2.
double poincare_lambda1(const Grid& grid);

}  // namespace scbf
