#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scbf/field.hpp"

namespace scbf {

/// Truncated eigen-expansion of the Q-Wiener process.
struct QWienerSpec {
    int n_modes = 0;                  ///< 0 selects (n/4)^dim
    double spectrum_decay = 0.0;      ///< exponent s in mu_k ~ |k|^-s; 0 selects dim + 2
    double trace_normalization = 1.0; ///< target Tr Q
    std::string basis = "fourier-stokes";
};

/// One real divergence-free mode q(x) = sqrt(2/|Q|) e cos(k.x) (or sin).
struct WienerMode {
    std::array<int, 3> m{0, 0, 0};
    std::array<double, 3> e{0.0, 0.0, 0.0};
    bool sine = false;
    double eigenvalue = 0.0;
    std::size_t slot = 0;
};

/// Eigenpairs (mu_k, q_k) realized on a grid.
struct WienerBasis {
    Grid grid;
    QWienerSpec spec;
    std::vector<WienerMode> modes;
    double trace = 0.0;
};

WienerBasis build_wiener_basis(const Grid& grid, const QWienerSpec& spec);

/// Samples q_k on the grid (physical space).
VectorField mode_field(const WienerBasis& basis, std::size_t k);

enum class NoiseKind { additive, multiplicative };

struct NoiseCoefficient {
    NoiseKind kind = NoiseKind::additive;
    double epsilon = 0.0;

    bool enabled() const { return epsilon > 0.0; }
};

struct NoiseConstants {
    double K = 0.0;
    double K_tilde = 0.0;
    double L = 0.0;
    double trace_q = 0.0;
    double upsilon_hs_norm_sq = 0.0;
};

/// Closed-form growth and Lipschitz constants of the coefficient.
NoiseConstants noise_constants(const WienerBasis& basis, const NoiseCoefficient& coeff);

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the generator for (master seed, member, step, salt): each
/// argument is folded in with one SplitMix64 round, in that order.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t member, std::uint64_t step,
                          std::uint64_t salt = 0);

/// Per-trajectory random stream. Increments depend only on (seed, member, step).
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t member) : master_(master_seed), member_(member) {}

    std::mt19937_64 engine(std::uint64_t step, std::uint64_t salt = 0) const {
        return std::mt19937_64(stream_seed(master_, member_, step, salt));
    }
    std::uint64_t master_seed() const { return master_; }
    std::uint64_t member() const { return member_; }

private:
    std::uint64_t master_;
    std::uint64_t member_;
};

/// Coefficients sqrt(mu_k dt) xi_k in basis order.
std::vector<double> sample_wiener_coefficients(const WienerBasis& basis, double dt, std::mt19937_64& engine);

/// sum_k a_k q_k as a solenoidal field.
VelocityField assemble_increment(const WienerBasis& basis, const std::vector<double>& coeffs);

/// sum_k sqrt(mu_k) q_k xi_k sqrt(dt).
VelocityField sample_wiener_increment(const WienerBasis& basis, double dt, std::mt19937_64& engine);

/// Splits a full-step coefficient vector into `parts` Brownian-bridge
/// sub-increments that sum exactly to the original.
std::vector<std::vector<double>> split_increment(const WienerBasis& basis, const std::vector<double>& coeffs,
                                                 double dt, int parts, std::mt19937_64& engine);

/// Upsilon(u) dW: additive eps dW; multiplicative eps P(u * dW) with the
/// componentwise product, dealiased.
VelocityField apply_noise_coefficient(const NoiseCoefficient& coeff, const VelocityField& u,
                                      const VelocityField& dW);

/// sup_x |dW(x)| over grid points.
double sup_norm(const VelocityField& u);

}  // namespace scbf
