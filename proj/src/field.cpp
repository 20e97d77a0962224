#include "scbf/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

VectorField::VectorField(const Grid& g)
    : grid(g), comp(static_cast<std::size_t>(g.dim()), std::vector<double>(g.size(), 0.0)) {}

SpectralField::SpectralField(const Grid& g)
    : grid(g), comp(static_cast<std::size_t>(g.dim()), std::vector<cplx>(g.spectral_size(), cplx{})) {}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    for (int d = 0; d < dim(); ++d)
        for (std::size_t s = 0; s < comp[d].size(); ++s) comp[d][s] += o.comp[d][s];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    for (int d = 0; d < dim(); ++d)
        for (std::size_t s = 0; s < comp[d].size(); ++s) comp[d][s] -= o.comp[d][s];
    return *this;
}

SpectralField& SpectralField::operator*=(double a) {
    for (auto& c : comp)
        for (auto& v : c) v *= a;
    return *this;
}

SpectralField to_spectral(const VectorField& u) {
    SpectralField out(u.grid);
    for (int d = 0; d < u.dim(); ++d) u.grid.forward(u.comp[d].data(), out.comp[d].data());
    return out;
}

VectorField to_physical(const SpectralField& u) {
    VectorField out(u.grid);
    for (int d = 0; d < u.dim(); ++d) u.grid.inverse(u.comp[d].data(), out.comp[d].data());
    return out;
}

VelocityField::VelocityField(const Grid& g) : coeffs_(g) {}

VelocityField VelocityField::trusted(SpectralField coeffs) { return VelocityField(std::move(coeffs)); }

VelocityField& VelocityField::operator+=(const VelocityField& o) {
    coeffs_ += o.coeffs_;
    return *this;
}

VelocityField& VelocityField::operator-=(const VelocityField& o) {
    coeffs_ -= o.coeffs_;
    return *this;
}

VelocityField& VelocityField::operator*=(double a) {
    coeffs_ *= a;
    return *this;
}

VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
VelocityField operator*(double a, VelocityField u) { return u *= a; }

void project_in_place(SpectralField& u) {
    const Grid& g = u.grid;
    const int dim = g.dim();
    for (std::size_t s = 0; s < g.spectral_size(); ++s) {
        const double kk = g.k2(s);
        if (kk == 0.0 || g.nyquist(s)) {
            for (int d = 0; d < dim; ++d) u.comp[d][s] = cplx{};
            continue;
        }
        cplx kdotu{};
        for (int d = 0; d < dim; ++d) kdotu += g.k(s, d) * u.comp[d][s];
        kdotu /= kk;
        for (int d = 0; d < dim; ++d) u.comp[d][s] -= g.k(s, d) * kdotu;
    }
}

void dealias_in_place(SpectralField& u) {
    const Grid& g = u.grid;
    for (std::size_t s = 0; s < g.spectral_size(); ++s)
        if (!g.dealiased(s))
            for (auto& c : u.comp) c[s] = cplx{};
}

void hermitian_fix(SpectralField& u) {
    const Grid& g = u.grid;
    const int last = g.dim() - 1;
    for (std::size_t s = 0; s < g.spectral_size(); ++s) {
        const auto& m = g.mode(s);
        if (m[last] != 0 && m[last] != g.n() / 2) continue;
        std::array<int, 3> neg{0, 0, 0};
        for (int d = 0; d < g.dim(); ++d) neg[d] = -m[d];
        neg[last] = m[last];
        const std::size_t sc = g.slot(neg);
        if (sc == s) {
            for (auto& c : u.comp) c[s] = cplx(c[s].real(), 0.0);
        } else if (s < sc) {
            for (auto& c : u.comp) c[sc] = std::conj(c[s]);
        }
    }
}

VelocityField leray_project(SpectralField raw) {
    project_in_place(raw);
    return VelocityField::trusted(std::move(raw));
}

VelocityField leray_project(const VectorField& raw) { return leray_project(to_spectral(raw)); }

NormBundle spectral_norms(const SpectralField& u) {
    const Grid& g = u.grid;
    double l2 = 0.0;
    double v = 0.0;
    for (std::size_t s = 0; s < g.spectral_size(); ++s) {
        double a = 0.0;
        for (const auto& c : u.comp) a += std::norm(c[s]);
        a *= g.weight(s);
        l2 += a;
        v += a * g.k2(s);
    }
    NormBundle b;
    b.l2_sq = l2 * g.measure();
    b.v_sq = v * g.measure();
    return b;
}

double lp_power(const VectorField& u, double p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < u.grid.size(); ++i) {
        double m2 = 0.0;
        for (const auto& c : u.comp) m2 += c[i] * c[i];
        if (m2 > 0.0) sum += std::pow(m2, 0.5 * p);
    }
    return sum * u.grid.cell_volume();
}

NormBundle norms(const VelocityField& u, double varpi, double time) {
    NormBundle b = spectral_norms(u.spectral());
    b.lp = lp_power(u.physical(), varpi + 1.0);
    b.time = time;
    return b;
}

double inner(const SpectralField& u, const SpectralField& v) {
    const Grid& g = u.grid;
    double sum = 0.0;
    for (std::size_t s = 0; s < g.spectral_size(); ++s) {
        double a = 0.0;
        for (int d = 0; d < g.dim(); ++d) a += std::real(u.comp[d][s] * std::conj(v.comp[d][s]));
        sum += g.weight(s) * a;
    }
    return sum * g.measure();
}

double max_magnitude(const VectorField& u) {
    double best = 0.0;
    for (std::size_t i = 0; i < u.grid.size(); ++i) {
        double m2 = 0.0;
        for (const auto& c : u.comp) m2 += c[i] * c[i];
        best = std::max(best, m2);
    }
    return std::sqrt(best);
}

double divergence_l2(const SpectralField& u) {
    const Grid& g = u.grid;
    double sum = 0.0;
    for (std::size_t s = 0; s < g.spectral_size(); ++s) {
        cplx div{};
        for (int d = 0; d < g.dim(); ++d) div += cplx(0.0, g.k(s, d)) * u.comp[d][s];
        sum += g.weight(s) * std::norm(div);
    }
    return std::sqrt(sum * g.measure());
}

VelocityField random_divfree_field(const Grid& grid, double slope, std::uint64_t seed, double k_max) {
    if (!(slope < -1.0)) throw ConfigError("energy spectrum slope must be below -1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SpectralField c(grid);
    const double unit = grid.wavenumber_unit();
    for (std::size_t s = 0; s < grid.spectral_size(); ++s) {
        // Draw for every slot so the stream does not depend on the filters.
        double draws[6];
        for (double& x : draws) x = normal(rng);
        if (!grid.dealiased(s) || grid.k2(s) == 0.0) continue;
        const double kmag = std::sqrt(grid.k2(s));
        if (k_max > 0.0 && kmag > k_max * (1.0 + 1e-12)) continue;
        // Shell energy ~ |k|^slope spread over ~|k|^(dim-1) modes per shell.
        const double amp = std::pow(kmag / unit, 0.5 * (slope - (grid.dim() - 1)));
        for (int d = 0; d < grid.dim(); ++d) c.comp[d][s] = amp * cplx(draws[2 * d], draws[2 * d + 1]);
    }
    hermitian_fix(c);
    return leray_project(std::move(c));
}

VelocityField with_energy(VelocityField u, double l2_sq) {
    const double cur = spectral_norms(u.spectral()).l2_sq;
    if (cur > 0.0) u *= std::sqrt(l2_sq / cur);
    return u;
}

void write_snapshot(std::ostream& os, const VectorField& u, const std::vector<std::string>& preamble) {
    const Grid& g = u.grid;
    for (const auto& line : preamble) os << "# " << line << '\n';
    os << "dim,n,side_length\n";
    os << g.dim() << ',' << g.n() << ',' << std::setprecision(17) << g.side_length() << '\n';
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (int d = 0; d < g.dim(); ++d) {
            if (d) os << ',';
            os << u.comp[d][i];
        }
        os << '\n';
    }
}

void write_snapshot(const std::string& path, const VectorField& u, const std::vector<std::string>& preamble) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write snapshot " + path);
    write_snapshot(os, u, preamble);
}

VectorField read_snapshot(std::istream& is) {
    std::string line;
    while (std::getline(is, line) && !line.empty() && line[0] == '#') {
    }
    if (!is || line != "dim,n,side_length") throw ConfigError("snapshot: bad header");
    if (!std::getline(is, line)) throw ConfigError("snapshot: missing grid line");
    int dim = 0;
    int n = 0;
    double side = 0.0;
    char c1 = 0;
    char c2 = 0;
    std::istringstream hs(line);
    if (!(hs >> dim >> c1 >> n >> c2 >> side) || c1 != ',' || c2 != ',')
        throw ConfigError("snapshot: bad grid line");
    VectorField u(Grid(dim, n, side));
    for (std::size_t i = 0; i < u.grid.size(); ++i) {
        if (!std::getline(is, line)) throw ConfigError("snapshot: truncated data");
        std::istringstream ls(line);
        for (int d = 0; d < dim; ++d) {
            if (d && !(ls >> c1)) throw ConfigError("snapshot: bad row");
            if (!(ls >> u.comp[d][i])) throw ConfigError("snapshot: bad value");
        }
    }
    return u;
}

VectorField read_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read snapshot " + path);
    return read_snapshot(is);
}

}  // namespace scbf
