#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "scbf/errors.hpp"
#include "scbf/field.hpp"

using namespace scbf;

namespace {

constexpr double kPi = std::numbers::pi;

// Fills a physical field from per-component functions of (x, y).
template <class F>
VectorField sample2d(const Grid& g, F f) {
    VectorField u(g);
    const int n = g.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = i * g.spacing();
            const double y = j * g.spacing();
            const auto v = f(x, y);
            const std::size_t p = g.point({i, j, 0});
            u.comp[0][p] = v[0];
            u.comp[1][p] = v[1];
        }
    return u;
}

double l2_sq_direct(const VectorField& u) {
    double s = 0.0;
    for (const auto& c : u.comp)
        for (double x : c) s += x * x;
    return s * u.grid.cell_volume();
}

double max_abs_diff(const VectorField& a, const VectorField& b) {
    double m = 0.0;
    for (int d = 0; d < a.dim(); ++d)
        for (std::size_t i = 0; i < a.grid.size(); ++i) m = std::max(m, std::abs(a.comp[d][i] - b.comp[d][i]));
    return m;
}

}  // namespace

TEST_CASE("grid basics") {
    CHECK(Grid(2, 64).dealias_cutoff() == 21);
    CHECK(Grid(2, 32).dealias_cutoff() == 10);
    CHECK(Grid(3, 16).dealias_cutoff() == 5);
    CHECK(Grid(2, 16).spectral_size() == 16 * 9);
    CHECK_THROWS_AS(Grid(4, 16), ConfigError);
    CHECK_THROWS_AS(Grid(2, 12), ConfigError);
    CHECK(Grid(2, 32) == Grid(2, 32));
    CHECK(Grid(2, 32) != Grid(2, 32, kPi));
}

TEST_CASE("poincare constant") {
    CHECK(poincare_lambda1(Grid(2, 16)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(poincare_lambda1(Grid(2, 16, kPi)) == doctest::Approx(4.0).epsilon(1e-15));
    const Grid g(2, 32);
    for (std::uint64_t s = 0; s < 100; ++s) {
        const NormBundle nb = norms(random_divfree_field(g, -2.5, 100 + s), 2.0);
        CHECK(nb.v_sq / nb.l2_sq >= poincare_lambda1(g) - 1e-9);
    }
}

TEST_CASE("forward/inverse round trip and Parseval") {
    const Grid g(3, 16);
    const VelocityField u = random_divfree_field(g, -3.0, 4);
    const VectorField p = u.physical();
    const SpectralField back = to_spectral(p);
    double err = 0.0;
    for (int d = 0; d < 3; ++d)
        for (std::size_t s = 0; s < g.spectral_size(); ++s)
            err = std::max(err, std::abs(back.comp[d][s] - u.spectral().comp[d][s]));
    CHECK(err < 1e-14);
    CHECK(inner(u.spectral(), u.spectral()) == doctest::Approx(l2_sq_direct(p)).epsilon(1e-12));
}

TEST_CASE("leray projection removes gradients") {
    const Grid g(2, 32);
    // phi = sin(x) cos(2y) + cos(3x)
    const VectorField grad = sample2d(g, [](double x, double y) {
        return std::array<double, 2>{std::cos(x) * std::cos(2 * y) - 3 * std::sin(3 * x),
                                     -2 * std::sin(x) * std::sin(2 * y)};
    });
    const VelocityField u = leray_project(grad);
    CHECK(std::sqrt(norms(u, 2.0).l2_sq) <= 1e-12);
}

TEST_CASE("leray projection is idempotent") {
    const Grid g(3, 16);
    const VelocityField u = random_divfree_field(g, -3.0, 11);
    const VelocityField w = leray_project(u.physical());
    const double diff = norms(w - u, 2.0).l2_sq;
    CHECK(std::sqrt(diff / norms(u, 2.0).l2_sq) <= 1e-12);
}

TEST_CASE("solenoidal (sin y, 0) unchanged, finite-difference divergence") {
    const Grid g(2, 16);
    const VectorField raw = sample2d(g, [](double, double y) { return std::array<double, 2>{std::sin(y), 0.0}; });
    const VectorField out = leray_project(raw).physical();
    CHECK(max_abs_diff(raw, out) < 1e-13);
    // centered differences, independent of the spectral machinery
    const int n = g.n();
    const double h = g.spacing();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double dux = (out.comp[0][g.point({(i + 1) % n, j, 0})] - out.comp[0][g.point({(i + n - 1) % n, j, 0})]) / (2 * h);
            const double duy = (out.comp[1][g.point({i, (j + 1) % n, 0})] - out.comp[1][g.point({i, (j + n - 1) % n, 0})]) / (2 * h);
            worst = std::max(worst, std::abs(dux + duy));
        }
    CHECK(worst < 1e-12);
    CHECK(divergence_l2(leray_project(raw).spectral()) < 1e-12);
}

TEST_CASE("norms") {
    const Grid g(2, 32);
    const NormBundle zero = norms(VelocityField(g), 3.0);
    CHECK(zero.l2_sq == 0.0);
    CHECK(zero.v_sq == 0.0);
    CHECK(zero.lp == 0.0);

    // (a sin 3y, 0): ||u||^2 = a^2 (2 pi)^2 / 2, ||grad u||^2 = 9 ||u||^2
    const double a = 0.7;
    const VelocityField u = leray_project(
        sample2d(g, [a](double, double y) { return std::array<double, 2>{a * std::sin(3 * y), 0.0}; }));
    const NormBundle nb = norms(u, 2.0);
    CHECK(nb.l2_sq == doctest::Approx(a * a * 4 * kPi * kPi / 2).epsilon(1e-12));
    CHECK(nb.v_sq == doctest::Approx(9 * nb.l2_sq).epsilon(1e-12));
}

TEST_CASE("lp norm matches direct quadrature") {
    const Grid g(2, 32);
    const VelocityField u = random_divfree_field(g, -2.0, 21);
    const VectorField p = u.physical();
    double direct = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double m2 = p.comp[0][i] * p.comp[0][i] + p.comp[1][i] * p.comp[1][i];
        direct += m2 * m2;
    }
    direct *= g.spacing() * g.spacing();
    CHECK(norms(u, 3.0).lp == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("random divergence-free field") {
    const Grid g(2, 64);
    const VelocityField a = random_divfree_field(g, -4.0, 9);
    const VelocityField b = random_divfree_field(g, -4.0, 9);
    CHECK(a.spectral().comp == b.spectral().comp);
    const NormBundle nb = norms(a, 2.0);
    CHECK(std::isfinite(nb.v_sq));
    CHECK(nb.v_sq / nb.l2_sq <= (g.n() / 2.0) * (g.n() / 2.0));
    CHECK(divergence_l2(a.spectral()) < 1e-12 * std::sqrt(nb.v_sq));
    CHECK_THROWS_AS(random_divfree_field(g, -0.5, 1), ConfigError);

    const VelocityField lo = random_divfree_field(g, -4.0, 9, 3.0);
    for (std::size_t s = 0; s < g.spectral_size(); ++s)
        if (g.k2(s) > 9.0 + 1e-9) {
            CHECK(std::abs(lo.spectral().comp[0][s]) == 0.0);
        }
    CHECK(norms(with_energy(a, 2.5), 2.0).l2_sq == doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("energy spectrum slope by log-log regression") {
    const Grid g(2, 64);
    for (double slope : {-3.0, -5.0 / 3.0, -4.0}) {
        const int kmax = g.n() / 4;
        std::vector<double> shell(kmax + 1, 0.0);
        for (std::uint64_t seed = 0; seed < 16; ++seed) {
            const VelocityField u = random_divfree_field(g, slope, 500 + seed);
            for (std::size_t s = 0; s < g.spectral_size(); ++s) {
                const int k = static_cast<int>(std::lround(std::sqrt(g.k2(s))));
                if (k < 2 || k > kmax) continue;
                double e = 0.0;
                for (int d = 0; d < 2; ++d) e += std::norm(u.spectral().comp[d][s]);
                shell[k] += g.weight(s) * e;
            }
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (int k = 2; k <= kmax; ++k) {
            const double x = std::log(k), y = std::log(shell[k]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
        const double fitted = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        CHECK(std::abs(fitted - slope) <= 0.3);
    }
}

TEST_CASE("snapshot round trip") {
    const Grid g(2, 16, 3.0);
    const VectorField u = random_divfree_field(g, -3.0, 5).physical();
    std::stringstream ss;
    write_snapshot(ss, u, {"version test", "config {}"});
    const VectorField v = read_snapshot(ss);
    CHECK(v.grid == g);
    CHECK(max_abs_diff(u, v) == 0.0);
    std::stringstream bad("nonsense\n");
    CHECK_THROWS_AS(read_snapshot(bad), ConfigError);
}
