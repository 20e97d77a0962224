#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "scbf/errors.hpp"
#include "scbf/noise.hpp"

using namespace scbf;

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("stream seeds") {
    CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 20; ++m)
        for (std::uint64_t s = 0; s < 50; ++s) seen.insert(stream_seed(7, m, s));
    CHECK(seen.size() == 1000);
    CHECK(stream_seed(7, 0, 0, 0) != stream_seed(7, 0, 0, 1));
    // SplitMix64 reference values for input 0 and 1
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("wiener basis") {
    const Grid g(2, 32);
    const WienerBasis b = build_wiener_basis(g, QWienerSpec{});
    CHECK(b.modes.size() == 64);
    double tr = 0.0;
    for (const auto& m : b.modes) tr += m.eigenvalue;
    CHECK(tr == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b.trace == doctest::Approx(1.0).epsilon(1e-15));
    // eigenvalues nonincreasing along the |m|^2 ordering
    for (std::size_t k = 1; k < b.modes.size(); ++k) CHECK(b.modes[k].eigenvalue <= b.modes[k - 1].eigenvalue * (1 + 1e-14));
    // orthonormal, divergence free
    std::vector<SpectralField> f;
    for (std::size_t k = 0; k < b.modes.size(); ++k) f.push_back(to_spectral(mode_field(b, k)));
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(divergence_l2(f[i]) < 1e-12);
        for (std::size_t j = 0; j < f.size(); ++j) worst = std::max(worst, std::abs(inner(f[i], f[j]) - (i == j ? 1.0 : 0.0)));
    }
    CHECK(worst < 1e-12);

    const Grid g3(3, 16);
    const WienerBasis b3 = build_wiener_basis(g3, QWienerSpec{8, 0.0, 2.0});
    CHECK(b3.modes.size() == 8);
    CHECK(b3.trace == doctest::Approx(2.0).epsilon(1e-15));
    for (std::size_t i = 0; i < b3.modes.size(); ++i) {
        const SpectralField a = to_spectral(mode_field(b3, i));
        CHECK(divergence_l2(a) < 1e-12);
        CHECK(inner(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("increment determinism and second moment") {
    const Grid g(2, 16);
    const WienerBasis b = build_wiener_basis(g, QWienerSpec{});
    const RngStream rng(3, 1);
    auto e1 = rng.engine(5);
    auto e2 = rng.engine(5);
    CHECK(sample_wiener_coefficients(b, 0.01, e1) == sample_wiener_coefficients(b, 0.01, e2));

    const double dt = 0.02;
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        auto e = rng.engine(static_cast<std::uint64_t>(i));
        sum += norms(sample_wiener_increment(b, dt, e), 2.0).l2_sq;
    }
    CHECK(sum / n == doctest::Approx(dt * b.trace).epsilon(0.05));
}

TEST_CASE("single mode coefficient is standard normal (KS)") {
    const Grid g(2, 16);
    const WienerBasis b = build_wiener_basis(g, QWienerSpec{1, 0.0, 1.0});
    REQUIRE(b.modes.size() == 1);
    CHECK(b.modes[0].eigenvalue == doctest::Approx(1.0));
    const double dt = 0.3;
    const int n = 10000;
    std::vector<double> x;
    const RngStream rng(11, 0);
    for (int i = 0; i < n; ++i) {
        auto e = rng.engine(static_cast<std::uint64_t>(i));
        x.push_back(sample_wiener_coefficients(b, dt, e)[0] / std::sqrt(dt));
    }
    std::sort(x.begin(), x.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = std_normal_cdf(x[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    // asymptotic KS critical value at the 1% level
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("brownian bridge split") {
    const Grid g(2, 16);
    const WienerBasis b = build_wiener_basis(g, QWienerSpec{});
    auto e = RngStream(1, 0).engine(0);
    const auto full = sample_wiener_coefficients(b, 0.1, e);
    auto e2 = RngStream(1, 0).engine(0, 1);
    const auto parts = split_increment(b, full, 0.1, 4, e2);
    REQUIRE(parts.size() == 4);
    for (std::size_t k = 0; k < full.size(); ++k) {
        double s = 0.0;
        for (const auto& p : parts) s += p[k];
        CHECK(s == doctest::Approx(full[k]).epsilon(1e-13).scale(1e-16));
    }
    const int n = 4000;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
        auto ef = RngStream(2, 0).engine(static_cast<std::uint64_t>(i));
        auto c = sample_wiener_coefficients(b, 0.1, ef);
        auto es = RngStream(2, 0).engine(static_cast<std::uint64_t>(i), 1);
        const auto pr = split_increment(b, c, 0.1, 4, es);
        var += pr[0][0] * pr[0][0];
    }
    // unconditional variance of a quarter increment is mu_0 dt / 4
    CHECK(var / n == doctest::Approx(b.modes[0].eigenvalue * 0.1 / 4).epsilon(0.08));
}

TEST_CASE("noise coefficient") {
    const Grid g(2, 32);
    const WienerBasis b = build_wiener_basis(g, QWienerSpec{});
    auto e = RngStream(4, 0).engine(0);
    const VelocityField dW = sample_wiener_increment(b, 0.01, e);
    const VelocityField u1 = random_divfree_field(g, -3.0, 1);
    const VelocityField u2 = random_divfree_field(g, -3.0, 2);

    const NoiseCoefficient add{NoiseKind::additive, 0.3};
    CHECK(norms(apply_noise_coefficient(add, u1, dW) - 0.3 * dW, 2.0).l2_sq == 0.0);
    CHECK(norms(apply_noise_coefficient(add, u2, dW) - apply_noise_coefficient(add, u1, dW), 2.0).l2_sq == 0.0);

    const NoiseCoefficient mul{NoiseKind::multiplicative, 0.7};
    CHECK(norms(apply_noise_coefficient(mul, VelocityField(g), dW), 2.0).l2_sq == 0.0);
    const VelocityField d = apply_noise_coefficient(mul, u1, dW) - apply_noise_coefficient(mul, u2, dW);
    const double ratio = std::sqrt(norms(d, 2.0).l2_sq / norms(u1 - u2, 2.0).l2_sq);
    CHECK(ratio <= 0.7 * sup_norm(dW) + 1e-10);
    // linear in u
    const VelocityField lin = apply_noise_coefficient(mul, 2.0 * u1, dW) - 2.0 * apply_noise_coefficient(mul, u1, dW);
    CHECK(norms(lin, 2.0).l2_sq < 1e-28);
    CHECK(noise_kind_from_string("multiplicative") == NoiseKind::multiplicative);
    CHECK_THROWS_AS(noise_kind_from_string("colored"), ConfigError);
}

TEST_CASE("noise constants") {
    const Grid g(2, 32);
    const WienerBasis b = build_wiener_basis(g, QWienerSpec{});
    const NoiseConstants a = noise_constants(b, NoiseCoefficient{NoiseKind::additive, 0.1});
    CHECK(a.K == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(a.K_tilde == 0.0);
    CHECK(a.L == 0.0);

    // direct summation of eps^2 mu_k sup_x |q_k(x)|^2 over sampled modes
    for (int dim : {2, 3}) {
        const Grid gd(dim, 16);
        const WienerBasis bd = build_wiener_basis(gd, QWienerSpec{});
        const double eps = 0.4;
        double direct = 0.0;
        for (std::size_t k = 0; k < bd.modes.size(); ++k)
            direct += eps * eps * bd.modes[k].eigenvalue * std::pow(max_magnitude(mode_field(bd, k)), 2);
        const NoiseConstants m = noise_constants(bd, NoiseCoefficient{NoiseKind::multiplicative, eps});
        CHECK(m.K_tilde == doctest::Approx(direct).epsilon(1e-12));
        CHECK(m.L == doctest::Approx(direct).epsilon(1e-12));
        CHECK(m.K == 0.0);
    }
}
