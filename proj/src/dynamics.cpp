#include "scbf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

std::uint64_t StepperConfig::n_steps() const {
    if (!(dt > 0.0)) throw ConfigError("stepper.dt must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("stepper.t_end must be nonnegative");
    return static_cast<std::uint64_t>(std::llround(t_end / dt));
}

PairState make_pair_state(const VelocityField& truth_init, const VelocityField& da_init, double varpi) {
    PairState s{0.0, 0, truth_init, da_init - truth_init, {}};
    s.error_norms = norms(s.error, varpi, 0.0);
    return s;
}

struct Integrator::Work {
    explicit Work(const Grid& g)
        : kz(g), kd(g), conv_z(g), damp_z(g), conv_d(g), damp_d(g), noise_z(g), noise_d(g), nudge(g), da(g),
          dW_phys(g), err_phys(g), tmp(g) {}

    DriftKernel kz;
    DriftKernel kd;
    SpectralField conv_z, damp_z, conv_d, damp_d;
    SpectralField noise_z, noise_d, nudge, da;
    VectorField dW_phys;
    VectorField err_phys;
    VectorField tmp;
};

Integrator::Integrator(const ModelParams& params, const NoiseModel* noise, const StepperConfig& stepper,
                       const AssimilationConfig* assimilation)
    : params_(&params), noise_(noise), stepper_(stepper), assim_(assimilation),
      work_(std::make_shared<Work>(params.grid())) {
    if (!(stepper.dt > 0.0)) throw ConfigError("stepper.dt must be positive");
    if (stepper.max_halvings < 0) throw ConfigError("stepper.max_halvings must be nonnegative");
    if (stepper.scheme != "imex-euler-maruyama") throw ConfigError("stepper.scheme must be imex-euler-maruyama");
    if (noise && noise->basis.grid != params.grid()) throw ConfigError("noise basis grid differs from model grid");
    if (assimilation) {
        if (!(assimilation->sigma >= 0.0)) throw ConfigError("assimilation.sigma must be nonnegative");
        if (stepper.implicit_nudging && assimilation->interpolant.kind != InterpolantKind::spectral)
            throw ConfigError("implicit nudging requires the spectral interpolant");
    }
}

namespace {

// Componentwise product u * w, dealiased and projected, scaled by eps.
void product_term(const VectorField& u, const VectorField& w, double eps, VectorField& tmp, SpectralField& out) {
    for (int d = 0; d < u.dim(); ++d)
        for (std::size_t x = 0; x < u.grid.size(); ++x) tmp.comp[d][x] = eps * u.comp[d][x] * w.comp[d][x];
    for (int d = 0; d < u.dim(); ++d) u.grid.forward(tmp.comp[d].data(), out.comp[d].data());
    dealias_in_place(out);
    project_in_place(out);
}

bool all_finite(const SpectralField& u) {
    for (const auto& c : u.comp)
        for (const auto& v : c)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

double stiffness(double max_u, const ModelParams& p) {
    if (p.varpi == 1.0) return p.beta;
    return p.beta * p.varpi * std::pow(max_u, p.varpi - 1.0);
}

}  // namespace

bool Integrator::substep(SpectralField& zeta, SpectralField* err, double h, const std::vector<double>* coeffs,
                         bool check_cfl, double t) {
    const ModelParams& p = *params_;
    Work& w = *work_;
    const Grid& g = p.grid();
    const int dim = g.dim();
    const std::size_t ns = g.spectral_size();
    const bool explicit_nudge = err && assim_ && !stepper_.implicit_nudging && assim_->sigma > 0.0;
    const double sigma = assim_ ? assim_->sigma : 0.0;

    const double max_z = w.kz.evaluate(zeta, p.varpi, p.convection, w.conv_z, w.damp_z);
    double max_d = 0.0;
    if (err) {
        w.da = zeta;
        w.da += *err;
        max_d = w.kd.evaluate(w.da, p.varpi, p.convection, w.conv_d, w.damp_d);
    }
    const double max_u = std::max(max_z, max_d);
    if (!std::isfinite(max_u)) return false;
    if (check_cfl && max_u > 0.0) {
        const double limit = 0.5 * g.spacing() / max_u;
        if (stepper_.dt > limit) {
            std::ostringstream msg;
            msg << "CFL violation at t=" << t << ": dt=" << stepper_.dt << " exceeds 0.5*dx/max|u|=" << limit
                << " (max|u|=" << max_u << ")";
            throw CflError(msg.str(), t);
        }
    }
    if (h * (stiffness(max_u, p) + (explicit_nudge ? sigma : 0.0)) > 1.0) return false;

    // Noise terms.
    const bool noisy = noise_ && noise_->enabled() && coeffs;
    const bool multiplicative = noisy && noise_->coeff.kind == NoiseKind::multiplicative;
    if (noisy) {
        const VelocityField dW = assemble_increment(noise_->basis, *coeffs);
        if (multiplicative) {
            for (int d = 0; d < dim; ++d) g.inverse(dW.spectral().comp[d].data(), w.dW_phys.comp[d].data());
            product_term(w.kz.physical(), w.dW_phys, noise_->coeff.epsilon, w.tmp, w.noise_z);
        } else {
            w.noise_z = dW.spectral();
            w.noise_z *= noise_->coeff.epsilon;
        }
    }

    // Error update (uses the pre-step truth drift).
    if (err) {
        const bool need_err_phys =
            multiplicative || (assim_ && sigma > 0.0 && assim_->interpolant.kind == InterpolantKind::volume);
        if (need_err_phys)
            for (int d = 0; d < dim; ++d) g.inverse(err->comp[d].data(), w.err_phys.comp[d].data());
        if (assim_ && sigma > 0.0) {
            w.nudge = nudging_projection(assim_->interpolant, *err, need_err_phys ? &w.err_phys : nullptr);
        }
        if (multiplicative) product_term(w.err_phys, w.dW_phys, noise_->coeff.epsilon, w.tmp, w.noise_d);
        const double cut2 = (assim_ && assim_->interpolant.kind == InterpolantKind::spectral)
                                ? (1.0 + 1e-12) / (assim_->interpolant.theta * assim_->interpolant.theta)
                                : 0.0;
        for (int d = 0; d < dim; ++d) {
            auto& e = err->comp[d];
            for (std::size_t s = 0; s < ns; ++s) {
                cplx rhs = e[s] - h * (w.conv_d.comp[d][s] - w.conv_z.comp[d][s]) -
                           h * p.beta * (w.damp_d.comp[d][s] - w.damp_z.comp[d][s]);
                double diag = 1.0 + h * (p.mu * g.k2(s) + p.alpha);
                if (sigma > 0.0) {
                    if (stepper_.implicit_nudging) {
                        if (g.k2(s) <= cut2 && g.dealiased(s)) diag += h * sigma;
                    } else {
                        rhs -= h * sigma * w.nudge.comp[d][s];
                    }
                }
                if (multiplicative) rhs += w.noise_d.comp[d][s];
                e[s] = rhs / diag;
            }
        }
        dealias_in_place(*err);
        project_in_place(*err);
    }

    // Truth update.
    const auto& f = p.forcing.spectral();
    for (int d = 0; d < dim; ++d) {
        auto& z = zeta.comp[d];
        for (std::size_t s = 0; s < ns; ++s) {
            cplx rhs = z[s] + h * (f.comp[d][s] - w.conv_z.comp[d][s] - p.beta * w.damp_z.comp[d][s]);
            if (noisy) rhs += w.noise_z.comp[d][s];
            z[s] = rhs / (1.0 + h * (p.mu * g.k2(s) + p.alpha));
        }
    }
    dealias_in_place(zeta);
    project_in_place(zeta);
    return all_finite(zeta) && (!err || all_finite(*err));
}

void Integrator::advance(SpectralField& zeta, SpectralField* err, double t, std::uint64_t step, const RngStream& rng) {
    const double dt = stepper_.dt;
    std::vector<double> coeffs;
    const bool noisy = noise_ && noise_->enabled();
    if (noisy) {
        auto eng = rng.engine(step);
        coeffs = sample_wiener_coefficients(noise_->basis, dt, eng);
    }
    for (int level = 0; level <= stepper_.max_halvings; ++level) {
        const int parts = 1 << level;
        const double h = dt / parts;
        std::vector<std::vector<double>> sub;
        if (noisy) {
            auto eng = rng.engine(step, static_cast<std::uint64_t>(level));
            sub = split_increment(noise_->basis, coeffs, dt, parts, eng);
        }
        SpectralField z_try = zeta;
        std::optional<SpectralField> e_try;
        if (err) e_try = *err;
        bool ok = true;
        for (int q = 0; q < parts && ok; ++q)
            ok = substep(z_try, e_try ? &*e_try : nullptr, h, noisy ? &sub[q] : nullptr, level == 0 && q == 0,
                         t + q * h);
        if (ok) {
            if (level > 0) ++substep_events_;
            zeta = std::move(z_try);
            if (err) *err = std::move(*e_try);
            return;
        }
    }
    std::ostringstream msg;
    msg << "blow-up: non-finite or overshooting state after " << stepper_.max_halvings
        << " halvings; last good time t=" << t;
    throw BlowUpError(msg.str(), t);
}

void Integrator::step_truth(TruthState& state, const RngStream& rng) {
    SpectralField z = state.zeta.spectral();
    advance(z, nullptr, state.t, state.step, rng);
    state.zeta = VelocityField::trusted(std::move(z));
    state.step += 1;
    state.t = static_cast<double>(state.step) * stepper_.dt;
}

void Integrator::step_pair(PairState& state, const RngStream& rng) {
    SpectralField z = state.zeta.spectral();
    SpectralField e = state.error.spectral();
    advance(z, &e, state.t, state.step, rng);
    state.zeta = VelocityField::trusted(std::move(z));
    state.error = VelocityField::trusted(std::move(e));
    state.step += 1;
    state.t = static_cast<double>(state.step) * stepper_.dt;
    state.error_norms = spectral_norms(state.error.spectral());
    state.error_norms.time = state.t;
}

TruthState step_truth(const TruthState& state, const ModelParams& params, const NoiseModel* noise,
                      const StepperConfig& stepper, const RngStream& rng) {
    Integrator it(params, noise, stepper);
    TruthState out = state;
    it.step_truth(out, rng);
    return out;
}

PairState step_pair(const PairState& state, const ModelParams& params, const NoiseModel* noise,
                    const AssimilationConfig& config, const StepperConfig& stepper, const RngStream& rng) {
    Integrator it(params, noise, stepper, &config);
    PairState out = state;
    it.step_pair(out, rng);
    out.error_norms = norms(out.error, params.varpi, out.t);
    return out;
}

namespace {

TrajectoryRecord make_record(double t, const VelocityField& zeta, const VelocityField* err, const ModelParams& p,
                             double int_vsq) {
    TrajectoryRecord r;
    r.t = t;
    r.zeta = norms(zeta, p.varpi, t);
    r.zeta_dot_f = inner(zeta.spectral(), p.forcing.spectral());
    r.int_zeta_vsq = int_vsq;
    if (err) {
        r.da = norms(zeta + *err, p.varpi, t);
        r.err = norms(*err, p.varpi, t);
    }
    return r;
}

}  // namespace

Trajectory run_trajectory(const VelocityField& truth_init, const ModelParams& params, const NoiseModel* noise,
                          const AssimilationConfig* assimilation, const StepperConfig& stepper,
                          std::uint64_t master_seed, std::uint64_t member) {
    validate_regime(params, noise);
    if (stepper.record_stride < 1) throw ConfigError("stepper.record_stride must be >= 1");
    if (truth_init.grid() != params.grid()) throw ConfigError("initial truth grid differs from model grid");
    const std::uint64_t steps = stepper.n_steps();
    Integrator integ(params, noise, stepper, assimilation);
    const RngStream rng(master_seed, member);
    Trajectory traj;
    traj.paired = assimilation != nullptr;
    traj.noise_enabled = noise && noise->enabled();

    const VelocityField& z0 = assimilation ? assimilation->truth_init : truth_init;
    PairState st{0.0, 0, z0, VelocityField(params.grid()), {}};
    if (assimilation) {
        if (assimilation->da_init.grid() != params.grid()) throw ConfigError("initial DA grid differs from model grid");
        st = make_pair_state(assimilation->truth_init, assimilation->da_init, params.varpi);
    }
    TruthState ts{0.0, 0, z0};

    double int_vsq = 0.0;
    double v_prev = spectral_norms(z0.spectral()).v_sq;
    auto record = [&]() {
        const VelocityField& zeta = traj.paired ? st.zeta : ts.zeta;
        const double t = traj.paired ? st.t : ts.t;
        traj.records.push_back(make_record(t, zeta, traj.paired ? &st.error : nullptr, params, int_vsq));
    };
    auto snapshot = [&]() {
        if (traj.paired)
            traj.snapshots.push_back(Snapshot{st.t, st.zeta, st.z_da()});
        else
            traj.snapshots.push_back(Snapshot{ts.t, ts.zeta, std::nullopt});
    };
    record();
    if (stepper.snapshot_stride > 0) snapshot();
    for (std::uint64_t n = 1; n <= steps; ++n) {
        const double t_before = traj.paired ? st.t : ts.t;
        if (traj.paired)
            integ.step_pair(st, rng);
        else
            integ.step_truth(ts, rng);
        const double v_now = spectral_norms((traj.paired ? st.zeta : ts.zeta).spectral()).v_sq;
        const double t_now = traj.paired ? st.t : ts.t;
        int_vsq += 0.5 * (t_now - t_before) * (v_prev + v_now);
        v_prev = v_now;
        if (n % static_cast<std::uint64_t>(stepper.record_stride) == 0) record();
        if (stepper.snapshot_stride > 0 && n % static_cast<std::uint64_t>(stepper.snapshot_stride) == 0) snapshot();
    }
    traj.substep_events = integ.substep_events();
    return traj;
}

EnergyTrace energy_trace(const Trajectory& traj) {
    EnergyTrace tr;
    tr.noise_enabled = traj.noise_enabled;
    for (const auto& r : traj.records) tr.samples.push_back({r.zeta, r.zeta_dot_f});
    return tr;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& preamble) {
    for (const auto& line : preamble) os << "# " << line << '\n';
    os << "t,zeta_l2sq,zeta_vsq,zeta_lp,da_l2sq,err_l2sq,err_vsq\n";
    os << std::setprecision(17);
    for (const auto& r : traj.records) {
        os << r.t << ',' << r.zeta.l2_sq << ',' << r.zeta.v_sq << ',' << r.zeta.lp << ',' << r.da.l2_sq << ','
           << r.err.l2_sq << ',' << r.err.v_sq << '\n';
    }
}

RegimeReport validate_regime(const ModelParams& params, const NoiseModel* noise) {
    RegimeReport rep;
    rep.regime = classify_regime(params.dim(), params.mu, params.beta, params.varpi);
    if (!(params.alpha >= 0.0)) throw ConfigError("model.alpha must be nonnegative");
    rep.noise_enabled = noise && noise->enabled();
    rep.noise_kind = rep.noise_enabled ? to_string(noise->coeff.kind) : "none";
    std::ostringstream s;
    s << rep.regime.description << ", " << rep.regime.exponent_class << ", noise " << rep.noise_kind;
    rep.summary = s.str();
    return rep;
}

}  // namespace scbf
