#include "scbf/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

InterpolantSpec InterpolantSpec::spectral(double theta) {
    if (!(theta > 0.0)) throw ConfigError("interpolant.theta must be positive");
    InterpolantSpec s;
    s.kind = InterpolantKind::spectral;
    s.theta = theta;
    s.c0 = 1.0;
    return s;
}

InterpolantSpec InterpolantSpec::volume(const Grid& grid, double theta, double c0) {
    if (!(theta > 0.0)) throw ConfigError("interpolant.theta must be positive");
    if (!(c0 > 0.0)) throw ConfigError("interpolant.c0 must be positive");
    InterpolantSpec s;
    s.kind = InterpolantKind::volume;
    s.theta = theta;
    s.c0 = c0;
    s.cells_per_axis = static_cast<int>(std::ceil(grid.side_length() / theta - 1e-9));
    if (s.cells_per_axis < 1) s.cells_per_axis = 1;
    if (grid.n() % s.cells_per_axis != 0) {
        std::ostringstream msg;
        msg << "volume interpolant: n=" << grid.n() << " is not divisible by cells_per_axis=" << s.cells_per_axis
            << " (theta=" << theta << ")";
        throw ConfigError(msg.str());
    }
    return s;
}

std::string to_string(InterpolantKind kind) { return kind == InterpolantKind::volume ? "volume" : "spectral"; }

InterpolantKind interpolant_kind_from_string(const std::string& s) {
    if (s == "volume") return InterpolantKind::volume;
    if (s == "spectral") return InterpolantKind::spectral;
    throw ConfigError("interpolant.kind must be \"volume\" or \"spectral\", got \"" + s + "\"");
}

VectorField apply_volume_interpolant(const InterpolantSpec& spec, const VectorField& u) {
    if (spec.kind != InterpolantKind::volume) throw ConfigError("apply_volume_interpolant needs a volume spec");
    const Grid& g = u.grid;
    const int n = g.n();
    const int cells = spec.cells_per_axis;
    if (cells < 1 || n % cells != 0) throw ConfigError("volume interpolant: grid does not align with cells");
    const int b = n / cells;
    const int dim = g.dim();
    std::size_t ncell = 1;
    for (int d = 0; d < dim; ++d) ncell *= static_cast<std::size_t>(cells);
    VectorField out(g);
    std::vector<double> acc(ncell);
    const double inv = 1.0 / std::pow(static_cast<double>(b), dim);
    auto cell_of = [&](std::size_t x) {
        std::size_t rest = x;
        std::size_t c = 0;
        std::size_t stride = 1;
        for (int d = dim - 1; d >= 0; --d) {
            const std::size_t j = rest % static_cast<std::size_t>(n);
            rest /= static_cast<std::size_t>(n);
            c += (j / static_cast<std::size_t>(b)) * stride;
            stride *= static_cast<std::size_t>(cells);
        }
        return c;
    };
    std::vector<std::size_t> owner(g.size());
    for (std::size_t x = 0; x < g.size(); ++x) owner[x] = cell_of(x);
    for (int d = 0; d < dim; ++d) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t x = 0; x < g.size(); ++x) acc[owner[x]] += u.comp[d][x];
        for (auto& a : acc) a *= inv;
        for (std::size_t x = 0; x < g.size(); ++x) out.comp[d][x] = acc[owner[x]];
    }
    return out;
}

VectorField apply_volume_interpolant(const InterpolantSpec& spec, const VelocityField& u) {
    return apply_volume_interpolant(spec, u.physical());
}

void spectral_truncate_in_place(const InterpolantSpec& spec, SpectralField& u) {
    const Grid& g = u.grid;
    const double cut2 = 1.0 / (spec.theta * spec.theta) * (1.0 + 1e-12);
    for (std::size_t s = 0; s < g.spectral_size(); ++s)
        if (g.k2(s) > cut2)
            for (auto& c : u.comp) c[s] = cplx{};
}

VelocityField apply_spectral_interpolant(const InterpolantSpec& spec, const VelocityField& u) {
    if (spec.kind != InterpolantKind::spectral) throw ConfigError("apply_spectral_interpolant needs a spectral spec");
    SpectralField c = u.spectral();
    spectral_truncate_in_place(spec, c);
    return VelocityField::trusted(std::move(c));
}

SpectralField nudging_projection(const InterpolantSpec& spec, const SpectralField& u_hat, const VectorField* u_phys) {
    SpectralField out = u_hat;
    if (spec.kind == InterpolantKind::spectral) {
        spectral_truncate_in_place(spec, out);
    } else {
        VectorField phys = u_phys ? *u_phys : to_physical(u_hat);
        out = to_spectral(apply_volume_interpolant(spec, phys));
    }
    dealias_in_place(out);
    project_in_place(out);
    return out;
}

double interpolation_ratio(const InterpolantSpec& spec, const VelocityField& u) {
    const NormBundle nb = spectral_norms(u.spectral());
    const double denom = spec.theta * spec.theta * (nb.l2_sq + nb.v_sq);
    if (denom == 0.0) return 0.0;
    double err = 0.0;
    if (spec.kind == InterpolantKind::spectral) {
        err = spectral_norms((u - apply_spectral_interpolant(spec, u)).spectral()).l2_sq;
    } else {
        const VectorField up = u.physical();
        const VectorField iu = apply_volume_interpolant(spec, up);
        for (int d = 0; d < up.dim(); ++d)
            for (std::size_t x = 0; x < up.grid.size(); ++x) {
                const double r = up.comp[d][x] - iu.comp[d][x];
                err += r * r;
            }
        err *= up.grid.cell_volume();
    }
    return err / denom;
}

double estimate_c0(InterpolantSpec& spec, const Grid& grid, int n_trials, std::uint64_t seed) {
    if (n_trials < 100) throw ConfigError("estimate_c0 needs at least 100 trials");
    double worst = 0.0;
    for (int t = 0; t < n_trials; ++t) {
        const VelocityField u = random_divfree_field(grid, -4.0, seed + static_cast<std::uint64_t>(t));
        worst = std::max(worst, interpolation_ratio(spec, u));
    }
    if (spec.kind == InterpolantKind::volume) {
        spec.c0 = 1.5 * worst;
    } else {
        spec.c0 = 1.0;
    }
    return worst;
}

}  // namespace scbf
