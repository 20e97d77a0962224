#include "scbf/operators.hpp"

#include <cmath>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

RegimeInfo classify_regime(int dim, double mu, double beta, double varpi) {
    if (!(mu > 0.0)) throw ConfigError("model.mu must be positive");
    if (!(beta > 0.0)) throw ConfigError("model.beta must be positive");
    if (!(varpi >= 1.0) || !std::isfinite(varpi)) throw ConfigError("model.varpi must be >= 1");
    RegimeInfo info;
    info.exponent_class = varpi < 3.0 ? "subcritical" : (varpi == 3.0 ? "critical" : "supercritical");
    std::ostringstream msg;
    if (dim == 2) {
        info.table_case = 1;
        info.description = "Case I: d=2, 1 <= varpi < inf";
        return info;
    }
    if (dim != 3) throw ConfigError("model dimension must be 2 or 3");
    if (varpi > 3.0) {
        info.table_case = 2;
        info.description = "Case II: d=3, 3 < varpi < inf";
        return info;
    }
    if (varpi == 3.0) {
        if (2.0 * mu * beta >= 1.0) {
            info.table_case = 3;
            info.description = "Case III: d=3, varpi=3, 2 mu beta >= 1";
            return info;
        }
        msg << "well-posedness Case III (d=3, varpi=3) requires 2 mu beta >= 1, got " << 2.0 * mu * beta;
        throw ConfigError(msg.str());
    }
    msg << "no well-posedness case admits d=3 with varpi=" << varpi
        << " (Case II needs varpi > 3, Case III needs varpi = 3)";
    throw ConfigError(msg.str());
}

ModelParams::ModelParams(double mu_, double alpha_, double beta_, double varpi_, VelocityField forcing_,
                         bool convection_)
    : mu(mu_), alpha(alpha_), beta(beta_), varpi(varpi_), forcing(std::move(forcing_)),
      convection(convection_) {
    if (!(alpha >= 0.0)) throw ConfigError("model.alpha must be nonnegative");
    regime = classify_regime(forcing.dim(), mu, beta, varpi);
}

VelocityField apply_stokes(const VelocityField& u) {
    SpectralField out = u.spectral();
    const Grid& g = out.grid;
    for (auto& c : out.comp)
        for (std::size_t s = 0; s < g.spectral_size(); ++s) c[s] *= g.k2(s);
    return VelocityField::trusted(std::move(out));
}

namespace {

// Physical partial derivative d/dx_j of one spectral component.
void physical_derivative(const Grid& g, const std::vector<cplx>& c, int j, std::vector<cplx>& tmp,
                         std::vector<double>& out) {
    tmp.resize(c.size());
    for (std::size_t s = 0; s < c.size(); ++s) tmp[s] = cplx(0.0, g.k(s, j)) * c[s];
    out.resize(g.size());
    g.inverse(tmp.data(), out.data());
}

// sum_x sum_i sum_j u_j d_j v_i w_i, times cell volume.
double advective_quadrature(const VectorField& u, const SpectralField& v, const VectorField& w) {
    const Grid& g = u.grid;
    std::vector<cplx> tmp;
    std::vector<double> dv;
    double sum = 0.0;
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j) {
            physical_derivative(g, v.comp[i], j, tmp, dv);
            for (std::size_t x = 0; x < g.size(); ++x) sum += u.comp[j][x] * dv[x] * w.comp[i][x];
        }
    return sum * g.cell_volume();
}

}  // namespace

double trilinear_b(const VelocityField& u, const VelocityField& v, const VelocityField& w) {
    if (u.grid() != v.grid() || u.grid() != w.grid()) throw ConfigError("trilinear_b: grid mismatch");
    const VectorField up = u.physical();
    const VectorField vp = v.physical();
    const VectorField wp = w.physical();
    return 0.5 * (advective_quadrature(up, v.spectral(), wp) - advective_quadrature(up, w.spectral(), vp));
}

DriftKernel::DriftKernel(const Grid& grid) : grid_(grid), phys_(grid), adv_(grid) {}

double DriftKernel::evaluate(const SpectralField& u, double varpi, bool with_convection, SpectralField& conv,
                             SpectralField& damp) {
    const Grid& g = grid_;
    const int dim = g.dim();
    const std::size_t np = g.size();
    const std::size_t ns = g.spectral_size();
    for (int d = 0; d < dim; ++d) g.inverse(u.comp[d].data(), phys_.comp[d].data());

    double max2 = 0.0;
    const double e = 0.5 * (varpi - 1.0);
    for (std::size_t x = 0; x < np; ++x) {
        double m2 = 0.0;
        for (int d = 0; d < dim; ++d) m2 += phys_.comp[d][x] * phys_.comp[d][x];
        if (m2 > max2) max2 = m2;
        const double f = (m2 > 0.0) ? (varpi == 1.0 ? 1.0 : std::pow(m2, e)) : 0.0;
        for (int d = 0; d < dim; ++d) adv_.comp[d][x] = f * phys_.comp[d][x];
    }
    for (int d = 0; d < dim; ++d) g.forward(adv_.comp[d].data(), damp.comp[d].data());
    dealias_in_place(damp);
    project_in_place(damp);

    if (!with_convection) {
        for (auto& c : conv.comp) std::fill(c.begin(), c.end(), cplx{});
        return std::sqrt(max2);
    }

    // Advective part (u.grad)u_i in physical space.
    tmp_phys_.resize(np);
    for (int i = 0; i < dim; ++i) {
        std::fill(adv_.comp[i].begin(), adv_.comp[i].end(), 0.0);
        for (int j = 0; j < dim; ++j) {
            physical_derivative(g, u.comp[i], j, tmp_spec_, tmp_phys_);
            const auto& uj = phys_.comp[j];
            auto& a = adv_.comp[i];
            for (std::size_t x = 0; x < np; ++x) a[x] += uj[x] * tmp_phys_[x];
        }
    }
    for (int i = 0; i < dim; ++i) g.forward(adv_.comp[i].data(), conv.comp[i].data());

    // Divergence part d_j(u_i u_j) from the symmetric products.
    tmp_spec_.resize(ns);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const auto& ui = phys_.comp[i];
            const auto& uj = phys_.comp[j];
            for (std::size_t x = 0; x < np; ++x) tmp_phys_[x] = ui[x] * uj[x];
            g.forward(tmp_phys_.data(), tmp_spec_.data());
            for (std::size_t s = 0; s < ns; ++s) {
                conv.comp[i][s] += cplx(0.0, g.k(s, j)) * tmp_spec_[s];
                if (j != i) conv.comp[j][s] += cplx(0.0, g.k(s, i)) * tmp_spec_[s];
            }
        }
    conv *= 0.5;
    dealias_in_place(conv);
    project_in_place(conv);
    return std::sqrt(max2);
}

VelocityField convection_B(const VelocityField& u) {
    DriftKernel k(u.grid());
    SpectralField conv(u.grid());
    SpectralField damp(u.grid());
    k.evaluate(u.spectral(), 1.0, true, conv, damp);
    return VelocityField::trusted(std::move(conv));
}

VelocityField damping_K(const VelocityField& u, double varpi) {
    if (!(varpi >= 1.0)) throw DomainError("damping exponent must be >= 1");
    DriftKernel k(u.grid());
    SpectralField conv(u.grid());
    SpectralField damp(u.grid());
    k.evaluate(u.spectral(), varpi, false, conv, damp);
    return VelocityField::trusted(std::move(damp));
}

double monotonicity_gap_pointwise(std::span<const double> a, std::span<const double> b, double varpi) {
    double na = 0.0;
    double nb = 0.0;
    double nd = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i] * a[i];
        nb += b[i] * b[i];
        nd += (a[i] - b[i]) * (a[i] - b[i]);
    }
    const double e = 0.5 * (varpi - 1.0);
    const double fa = na > 0.0 ? std::pow(na, e) : 0.0;
    const double fb = nb > 0.0 ? std::pow(nb, e) : 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += (a[i] - b[i]) * (fa * a[i] - fb * b[i]);
    const double tail = nd > 0.0 ? std::pow(2.0, 1.0 - varpi) * std::pow(nd, 0.5 * (varpi + 1.0)) : 0.0;
    return dot - tail;
}

double damping_monotonicity_gap(const VelocityField& u, const VelocityField& v, double varpi) {
    if (u.grid() != v.grid()) throw ConfigError("damping_monotonicity_gap: grid mismatch");
    if (!(varpi >= 1.0)) throw DomainError("damping exponent must be >= 1");
    const VectorField up = u.physical();
    const VectorField vp = v.physical();
    const int dim = u.dim();
    double sum = 0.0;
    double a[3];
    double b[3];
    for (std::size_t x = 0; x < up.grid.size(); ++x) {
        for (int d = 0; d < dim; ++d) {
            a[d] = up.comp[d][x];
            b[d] = vp.comp[d][x];
        }
        sum += monotonicity_gap_pointwise({a, static_cast<std::size_t>(dim)}, {b, static_cast<std::size_t>(dim)},
                                          varpi);
    }
    return sum * up.grid.cell_volume();
}

double forcing_dual_norm_sq(const VelocityField& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t s = 0; s < g.spectral_size(); ++s) {
        if (g.k2(s) == 0.0) continue;
        double a = 0.0;
        for (const auto& c : f.spectral().comp) a += std::norm(c[s]);
        sum += g.weight(s) * a / g.k2(s);
    }
    return sum * g.measure();
}

double energy_balance_residual(const EnergyTrace& trace, const ModelParams& p) {
    if (trace.noise_enabled) throw ConfigError("energy balance residual needs a noise-free trajectory");
    if (trace.samples.empty()) return 0.0;
    auto integrand = [&p](const EnergySample& s) {
        return p.mu * s.norms.v_sq + p.alpha * s.norms.l2_sq + p.beta * s.norms.lp - s.forcing_work;
    };
    const double e0 = trace.samples.front().norms.l2_sq;
    double integral = 0.0;
    double worst = 0.0;
    for (std::size_t i = 1; i < trace.samples.size(); ++i) {
        const auto& a = trace.samples[i - 1];
        const auto& b = trace.samples[i];
        integral += 0.5 * (b.norms.time - a.norms.time) * (integrand(a) + integrand(b));
        worst = std::max(worst, std::abs(b.norms.l2_sq - e0 + 2.0 * integral));
    }
    return worst;
}

}  // namespace scbf
