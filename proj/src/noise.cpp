#include "scbf/noise.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "scbf/errors.hpp"

namespace scbf {

namespace {

bool in_half_space(const std::array<int, 3>& m, int dim) {
    for (int d = dim - 1; d >= 0; --d) {
        if (m[d] > 0) return true;
        if (m[d] < 0) return false;
    }
    return false;
}

std::array<double, 3> normalized(std::array<double, 3> v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (double& x : v) x /= n;
    return v;
}

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

WienerBasis build_wiener_basis(const Grid& grid, const QWienerSpec& spec) {
    const int dim = grid.dim();
    WienerBasis basis{grid, spec, {}, 0.0};
    if (spec.basis != "fourier-stokes") throw ConfigError("noise.basis must be \"fourier-stokes\"");
    if (basis.spec.spectrum_decay == 0.0) basis.spec.spectrum_decay = dim + 2.0;
    if (!(basis.spec.spectrum_decay > dim)) throw ConfigError("noise.spectrum_decay must exceed the dimension");
    if (!(spec.trace_normalization > 0.0)) throw ConfigError("noise.trace must be positive");
    int target = spec.n_modes;
    if (target == 0) {
        target = 1;
        for (int d = 0; d < dim; ++d) target *= grid.n() / 4;
    }
    if (target < 0) throw ConfigError("noise.n_modes must be positive");

    // Candidate wavevectors: one per +-k pair, inside the dealiased box.
    const int c = grid.dealias_cutoff();
    std::vector<std::array<int, 3>> ks;
    for (int a = -c; a <= c; ++a)
        for (int b = -c; b <= c; ++b)
            for (int e = (dim == 3 ? -c : 0); e <= (dim == 3 ? c : 0); ++e) {
                std::array<int, 3> m{a, b, e};
                if (in_half_space(m, dim)) ks.push_back(m);
            }
    std::sort(ks.begin(), ks.end(), [](const auto& x, const auto& y) {
        const int nx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        const int ny = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        return std::tie(nx, x) < std::tie(ny, y);
    });

    const double unit = grid.wavenumber_unit();
    for (const auto& m : ks) {
        if (static_cast<int>(basis.modes.size()) >= target) break;
        std::array<double, 3> kv{unit * m[0], unit * m[1], unit * m[2]};
        std::vector<std::array<double, 3>> pol;
        if (dim == 2) {
            pol.push_back(normalized({-kv[1], kv[0], 0.0}));
        } else {
            int axis = 0;
            for (int d = 1; d < 3; ++d)
                if (std::abs(m[d]) < std::abs(m[axis])) axis = d;
            std::array<double, 3> ax{0.0, 0.0, 0.0};
            ax[axis] = 1.0;
            const auto e1 = normalized(cross(kv, ax));
            const auto e2 = normalized(cross(normalized(kv), e1));
            pol.push_back(e1);
            pol.push_back(e2);
        }
        const double kmag = std::sqrt(kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]);
        const double mu = std::pow(kmag, -basis.spec.spectrum_decay);
        for (const auto& e : pol)
            for (bool sine : {false, true}) {
                if (static_cast<int>(basis.modes.size()) >= target) break;
                WienerMode w;
                w.m = m;
                w.e = e;
                w.sine = sine;
                w.eigenvalue = mu;
                w.slot = grid.slot(m);
                basis.modes.push_back(w);
            }
    }
    if (static_cast<int>(basis.modes.size()) < target) throw ConfigError("noise.n_modes exceeds resolved modes");
    double sum = 0.0;
    for (const auto& w : basis.modes) sum += w.eigenvalue;
    for (auto& w : basis.modes) w.eigenvalue *= spec.trace_normalization / sum;
    basis.trace = 0.0;
    for (const auto& w : basis.modes) basis.trace += w.eigenvalue;
    return basis;
}

VelocityField assemble_increment(const WienerBasis& basis, const std::vector<double>& coeffs) {
    const Grid& g = basis.grid;
    const int dim = g.dim();
    SpectralField c(g);
    const double norm = std::sqrt(2.0 / g.measure());
    for (std::size_t k = 0; k < basis.modes.size(); ++k) {
        const auto& w = basis.modes[k];
        const double a = 0.5 * norm * coeffs[k];
        const cplx phase = w.sine ? cplx(0.0, -a) : cplx(a, 0.0);
        for (int d = 0; d < dim; ++d) c.comp[d][w.slot] += phase * w.e[d];
        if (w.m[dim - 1] == 0) {
            std::array<int, 3> neg{-w.m[0], -w.m[1], -w.m[2]};
            const std::size_t sc = g.slot(neg);
            for (int d = 0; d < dim; ++d) c.comp[d][sc] += std::conj(phase) * w.e[d];
        }
    }
    return VelocityField::trusted(std::move(c));
}

VectorField mode_field(const WienerBasis& basis, std::size_t k) {
    std::vector<double> coeffs(basis.modes.size(), 0.0);
    coeffs[k] = 1.0;
    return assemble_increment(basis, coeffs).physical();
}

NoiseConstants noise_constants(const WienerBasis& basis, const NoiseCoefficient& coeff) {
    NoiseConstants c;
    c.trace_q = basis.trace;
    const double e2 = coeff.epsilon * coeff.epsilon;
    if (coeff.kind == NoiseKind::additive) {
        c.K = e2 * basis.trace;
        c.upsilon_hs_norm_sq = c.K;
    } else {
        // Every real mode has sup|q_k|^2 = 2/|Q|.
        const double sup2 = 2.0 / basis.grid.measure();
        double s = 0.0;
        for (const auto& w : basis.modes) s += w.eigenvalue * sup2;
        c.K_tilde = e2 * s;
        c.L = c.K_tilde;
    }
    return c;
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::additive ? "additive" : "multiplicative"; }

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "additive") return NoiseKind::additive;
    if (s == "multiplicative") return NoiseKind::multiplicative;
    throw ConfigError("noise.kind must be \"additive\" or \"multiplicative\", got \"" + s + "\"");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t member, std::uint64_t step, std::uint64_t salt) {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ member);
    h = splitmix64(h ^ step);
    return splitmix64(h ^ salt);
}

std::vector<double> sample_wiener_coefficients(const WienerBasis& basis, double dt, std::mt19937_64& engine) {
    if (!(dt > 0.0)) throw ConfigError("Wiener increment needs dt > 0");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> a(basis.modes.size());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::sqrt(basis.modes[k].eigenvalue * dt) * normal(engine);
    return a;
}

VelocityField sample_wiener_increment(const WienerBasis& basis, double dt, std::mt19937_64& engine) {
    return assemble_increment(basis, sample_wiener_coefficients(basis, dt, engine));
}

std::vector<std::vector<double>> split_increment(const WienerBasis& basis, const std::vector<double>& coeffs,
                                                 double dt, int parts, std::mt19937_64& engine) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(parts));
    if (parts == 1) {
        out[0] = coeffs;
        return out;
    }
    const double h = dt / parts;
    for (auto& v : out) v = sample_wiener_coefficients(basis, h, engine);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        double sum = 0.0;
        for (const auto& v : out) sum += v[k];
        const double shift = (coeffs[k] - sum) / parts;
        for (auto& v : out) v[k] += shift;
    }
    return out;
}

VelocityField apply_noise_coefficient(const NoiseCoefficient& coeff, const VelocityField& u, const VelocityField& dW) {
    if (coeff.kind == NoiseKind::additive) return coeff.epsilon * dW;
    const VectorField up = u.physical();
    VectorField prod = dW.physical();
    for (int d = 0; d < prod.dim(); ++d)
        for (std::size_t x = 0; x < prod.grid.size(); ++x) prod.comp[d][x] *= coeff.epsilon * up.comp[d][x];
    SpectralField s = to_spectral(prod);
    dealias_in_place(s);
    return leray_project(std::move(s));
}

double sup_norm(const VelocityField& u) { return max_magnitude(u.physical()); }

}  // namespace scbf
