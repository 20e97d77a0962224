#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "scbf/dynamics.hpp"
#include "scbf/errors.hpp"
#include "scbf/operators.hpp"

using namespace scbf;

namespace {

// Direct trigonometric synthesis of component d and its x_j derivative (j = -1
// for the value) at an arbitrary point; no FFT involved.
double synth(const SpectralField& u, int d, const std::array<double, 3>& x, int j = -1) {
    const Grid& g = u.grid;
    double s = 0.0;
    for (std::size_t k = 0; k < g.spectral_size(); ++k) {
        const cplx c = u.comp[d][k];
        if (c == cplx{}) continue;
        double phase = 0.0;
        for (int a = 0; a < g.dim(); ++a) phase += g.k(k, a) * x[a];
        cplx e(std::cos(phase), std::sin(phase));
        if (j >= 0) e *= cplx(0.0, g.k(k, j));
        s += g.weight(k) * (c * e).real();
    }
    return s;
}

std::array<double, 3> coords(const Grid& g, std::size_t p) {
    std::array<double, 3> x{0, 0, 0};
    const int n = g.n();
    for (int a = g.dim() - 1; a >= 0; --a) {
        x[a] = static_cast<double>(p % n) * g.spacing();
        p /= n;
    }
    return x;
}

ModelParams params2d(const Grid& g, double varpi = 2.0) { return ModelParams(1.0, 0.0, 1.0, varpi, VelocityField(g)); }

}  // namespace

TEST_CASE("regime classification") {
    CHECK(classify_regime(2, 1.0, 1.0, 2.0).table_case == 1);
    CHECK(classify_regime(3, 1.0, 1.0, 4.0).table_case == 2);
    CHECK(classify_regime(3, 1.0, 0.5, 3.0).table_case == 3);
    CHECK_THROWS_AS(classify_regime(3, 1.0, 0.4, 3.0), ConfigError);
    CHECK_THROWS_AS(classify_regime(3, 1.0, 1.0, 2.0), ConfigError);
    CHECK_THROWS_AS(classify_regime(2, 0.0, 1.0, 2.0), ConfigError);
    CHECK_THROWS_AS(classify_regime(2, 1.0, 1.0, 0.5), ConfigError);
    CHECK(classify_regime(2, 1.0, 1.0, 3.0).exponent_class == "critical");
}

TEST_CASE("stokes operator") {
    const Grid g(2, 32);
    CHECK(norms(apply_stokes(VelocityField(g)), 2.0).l2_sq == 0.0);
    // (sin 3y, 0) is an eigenfunction with |k|^2 = 9
    VectorField raw(g);
    for (std::size_t p = 0; p < g.size(); ++p) raw.comp[0][p] = std::sin(3 * coords(g, p)[1]);
    const VelocityField u = leray_project(raw);
    const VelocityField diff = apply_stokes(u) - 9.0 * u;
    CHECK(norms(diff, 2.0).l2_sq < 1e-24);
}

TEST_CASE("(u, Au) equals finite-difference gradient energy") {
    const Grid g(2, 32);
    const VelocityField u = random_divfree_field(g, -3.0, 17);
    const double uau = inner(u.spectral(), apply_stokes(u).spectral());
    // centered differences with a small step on the direct synthesis
    const double h = 1e-4;
    double fd = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto x = coords(g, p);
        for (int d = 0; d < 2; ++d)
            for (int j = 0; j < 2; ++j) {
                auto xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                const double der = (synth(u.spectral(), d, xp) - synth(u.spectral(), d, xm)) / (2 * h);
                fd += der * der;
            }
    }
    fd *= g.cell_volume();
    CHECK(uau == doctest::Approx(fd).epsilon(1e-3));
    CHECK(uau == doctest::Approx(norms(u, 2.0).v_sq).epsilon(1e-12));
}

TEST_CASE("trilinear form identities") {
    for (int dim : {2, 3}) {
        const Grid g(dim, dim == 2 ? 32 : 16);
        for (std::uint64_t s = 0; s < 5; ++s) {
            const VelocityField u = random_divfree_field(g, -2.0, 10 * s + 1);
            const VelocityField v = random_divfree_field(g, -2.0, 10 * s + 2);
            const VelocityField w = random_divfree_field(g, -2.0, 10 * s + 3);
            const NormBundle nu = norms(u, 2.0), nv = norms(v, 2.0), nw = norms(w, 2.0);
            CHECK(std::abs(trilinear_b(u, v, v)) <= 1e-12 * std::sqrt(nu.l2_sq) * nv.v_sq);
            const double scale = std::sqrt(nu.l2_sq * nv.v_sq * nw.v_sq);
            CHECK(std::abs(trilinear_b(u, v, w) + trilinear_b(u, w, v)) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("trilinear form matches direct quadrature on 16^2") {
    const Grid g(2, 16);
    const VelocityField u = random_divfree_field(g, -2.0, 71);
    const VelocityField v = random_divfree_field(g, -2.0, 72);
    const VelocityField w = random_divfree_field(g, -2.0, 73);
    // 1/2 [ int (u.grad)v.w - int (u.grad)w.v ], derivatives by direct synthesis
    double a = 0.0, b = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto x = coords(g, p);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double uj = synth(u.spectral(), j, x);
                a += uj * synth(v.spectral(), i, x, j) * synth(w.spectral(), i, x);
                b += uj * synth(w.spectral(), i, x, j) * synth(v.spectral(), i, x);
            }
    }
    const double direct = 0.5 * (a - b) * g.cell_volume();
    CHECK(trilinear_b(u, v, w) == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("convection operator") {
    const Grid g(2, 32);
    CHECK(norms(convection_B(VelocityField(g)), 2.0).l2_sq == 0.0);
    for (std::uint64_t s = 0; s < 3; ++s) {
        const VelocityField u = random_divfree_field(g, -2.0, 40 + s);
        const double scale = std::sqrt(norms(u, 2.0).l2_sq) * norms(u, 2.0).v_sq;
        CHECK(std::abs(inner(convection_B(u).spectral(), u.spectral())) <= 1e-12 * scale);
    }
    // Taylor-Green: (u.grad)u = (sin 2x, sin 2y)/2 is a gradient, projection 0
    VectorField tg(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto x = coords(g, p);
        tg.comp[0][p] = std::sin(x[0]) * std::cos(x[1]);
        tg.comp[1][p] = -std::cos(x[0]) * std::sin(x[1]);
    }
    CHECK(std::sqrt(norms(convection_B(leray_project(tg)), 2.0).l2_sq) < 1e-8);
    // shear flow (sin 2y + cos y, 0) has (u.grad)u = 0
    VectorField sh(g);
    for (std::size_t p = 0; p < g.size(); ++p) sh.comp[0][p] = std::sin(2 * coords(g, p)[1]) + std::cos(coords(g, p)[1]);
    CHECK(std::sqrt(norms(convection_B(leray_project(sh)), 2.0).l2_sq) < 1e-12);
    // (sin y, sin x): (u.grad)u = (sin x cos y, cos x sin y) = -grad(cos x cos y), projection 0
    VectorField cr(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
        cr.comp[0][p] = std::sin(coords(g, p)[1]);
        cr.comp[1][p] = std::sin(coords(g, p)[0]);
    }
    CHECK(std::sqrt(norms(convection_B(leray_project(cr)), 2.0).l2_sq) < 1e-12);
}

TEST_CASE("damping operator") {
    const Grid g2(2, 32);
    CHECK(norms(damping_K(VelocityField(g2), 3.0), 2.0).l2_sq == 0.0);
    const VelocityField u = random_divfree_field(g2, -3.0, 8);
    CHECK(norms(damping_K(u, 1.0) - u, 2.0).l2_sq <= 1e-26 * norms(u, 2.0).l2_sq);

    // constant magnitude c(sin z, cos z, 0): K(u) = c^(varpi-1) u, |K(u)| = c^varpi
    const Grid g3(3, 16);
    const double c = 1.7;
    VectorField raw(g3);
    for (std::size_t p = 0; p < g3.size(); ++p) {
        const double z = coords(g3, p)[2];
        raw.comp[0][p] = c * std::sin(z);
        raw.comp[1][p] = c * std::cos(z);
    }
    const VelocityField v = leray_project(raw);
    for (double varpi : {2.0, 3.0, 4.5}) {
        const VectorField out = damping_K(v, varpi).physical();
        double worst = 0.0;
        for (std::size_t p = 0; p < g3.size(); ++p) {
            const double mag = std::hypot(out.comp[0][p], out.comp[1][p], out.comp[2][p]);
            worst = std::max(worst, std::abs(mag - std::pow(c, varpi)));
        }
        CHECK(worst < 1e-12 * std::pow(c, varpi));
    }
}

TEST_CASE("damping monotonicity gap") {
    const double a[1] = {1.0}, b[1] = {-1.0};
    CHECK(std::abs(monotonicity_gap_pointwise(a, b, 3.0)) < 1e-12);
    const Grid g(2, 32);
    const VelocityField u = random_divfree_field(g, -2.0, 3);
    CHECK(damping_monotonicity_gap(u, u, 3.0) == 0.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 2000; ++i) {
        const double x[3] = {nd(rng), nd(rng), nd(rng)}, y[3] = {nd(rng), nd(rng), nd(rng)};
        for (double w : {1.0, 2.0, 3.0, 4.0, 5.0}) {
            double scale = 0.0;
            for (int k = 0; k < 3; ++k) scale += (x[k] - y[k]) * (x[k] - y[k]);
            CHECK(monotonicity_gap_pointwise(x, y, w) >= -1e-12 * std::pow(scale, (w + 1) / 2));
        }
    }
    for (std::uint64_t s = 0; s < 20; ++s) {
        const VelocityField p = random_divfree_field(g, -2.0, 200 + s);
        const VelocityField q = random_divfree_field(g, -2.0, 300 + s);
        for (double w : {2.0, 3.0, 4.0, 5.0}) {
            const double scale = norms(p - q, w).lp;
            CHECK(damping_monotonicity_gap(p, q, w) >= -1e-10 * scale);
        }
    }
}

TEST_CASE("forcing dual norm") {
    const Grid g(2, 32);
    // f = (sin 2y, 0): ||A^{-1/2} f||^2 = ||f||^2 / 4
    VectorField raw(g);
    for (std::size_t p = 0; p < g.size(); ++p) raw.comp[0][p] = std::sin(2 * coords(g, p)[1]);
    const VelocityField f = leray_project(raw);
    CHECK(forcing_dual_norm_sq(f) == doctest::Approx(norms(f, 2.0).l2_sq / 4).epsilon(1e-13));
}

TEST_CASE("energy balance residual") {
    const Grid g(2, 32);
    SUBCASE("zero state and forcing") {
        const ModelParams p = params2d(g);
        const Trajectory t = run_trajectory(VelocityField(g), p, nullptr, nullptr, StepperConfig{1e-2, 0.2}, 0);
        CHECK(energy_balance_residual(energy_trace(t), p) == 0.0);
    }
    SUBCASE("exact decaying Stokes mode") {
        // varpi = 1 makes damping linear; u(t) = e^{-lambda t} u0, lambda = mu k^2 + alpha + beta
        const double mu = 0.5, alpha = 0.2, beta = 0.3, k2 = 4.0, dt = 1e-4;
        const ModelParams p(mu, alpha, beta, 1.0, VelocityField(g));
        const double lambda = mu * k2 + alpha + beta;
        EnergyTrace tr;
        const double e0 = 2.0;
        for (int i = 0; i <= 10000; ++i) {
            const double t = i * dt;
            EnergySample s;
            s.norms.time = t;
            s.norms.l2_sq = e0 * std::exp(-2 * lambda * t);
            s.norms.v_sq = k2 * s.norms.l2_sq;
            s.norms.lp = s.norms.l2_sq;
            tr.samples.push_back(s);
        }
        CHECK(energy_balance_residual(tr, p) <= 1e-6);
        tr.noise_enabled = true;
        CHECK_THROWS_AS(energy_balance_residual(tr, p), ConfigError);
    }
    SUBCASE("first order in dt") {
        const Grid g16(2, 16);
        const ModelParams p(0.05, 0.0, 0.5, 4.0, VelocityField(g16));
        const VelocityField u0 = with_energy(random_divfree_field(g16, -3.0, 2), 20.0);
        double prev = 0.0;
        for (double dt : {4e-3, 2e-3, 1e-3}) {
            const Trajectory t = run_trajectory(u0, p, nullptr, nullptr, StepperConfig{dt, 0.5}, 0);
            const double r = energy_balance_residual(energy_trace(t), p);
            if (prev > 0.0) {
                CHECK(prev / r >= 1.6);
                CHECK(prev / r <= 2.4);
            }
            prev = r;
        }
    }
}
