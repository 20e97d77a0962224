#include "scbf/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "scbf/errors.hpp"

namespace scbf {

struct GridTables {
    std::vector<std::array<int, 3>> mode;
    std::vector<double> k2;
    std::vector<std::array<double, 3>> kvec;
    std::vector<double> weight;
    std::vector<unsigned char> nyquist;
    std::vector<unsigned char> dealiased;
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

namespace {

// The FFTW planner is not thread-safe; plans are built once per grid shape.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

using GridKey = std::tuple<int, int, double, double>;

std::shared_ptr<const GridTables> build_tables(int dim, int n, double side, int cutoff) {
    auto t = std::make_shared<GridTables>();
    const int half = n / 2 + 1;
    std::size_t spectral = static_cast<std::size_t>(half);
    for (int d = 1; d < dim; ++d) spectral *= static_cast<std::size_t>(n);
    t->mode.resize(spectral);
    t->k2.resize(spectral);
    t->kvec.resize(spectral);
    t->weight.resize(spectral);
    t->nyquist.resize(spectral);
    t->dealiased.resize(spectral);
    const double unit = 2.0 * std::numbers::pi / side;
    auto signed_index = [n](int j) { return j <= n / 2 ? j : j - n; };
    for (std::size_t s = 0; s < spectral; ++s) {
        std::array<int, 3> m{0, 0, 0};
        std::size_t rest = s;
        const int last = static_cast<int>(rest % half);
        rest /= half;
        m[dim - 1] = last;
        for (int d = dim - 2; d >= 0; --d) {
            m[d] = signed_index(static_cast<int>(rest % n));
            rest /= n;
        }
        t->mode[s] = m;
        double kk = 0.0;
        bool nyq = false;
        bool keep = true;
        for (int d = 0; d < dim; ++d) {
            t->kvec[s][d] = unit * m[d];
            kk += t->kvec[s][d] * t->kvec[s][d];
            if (std::abs(m[d]) == n / 2) nyq = true;
            if (std::abs(m[d]) > cutoff) keep = false;
        }
        t->k2[s] = kk;
        t->weight[s] = (last == 0 || last == n / 2) ? 1.0 : 2.0;
        t->nyquist[s] = nyq;
        t->dealiased[s] = keep && !nyq;
    }

    std::lock_guard<std::mutex> lock(planner_mutex());
    int dims[3] = {n, n, n};
    std::size_t points = 1;
    for (int d = 0; d < dim; ++d) points *= static_cast<std::size_t>(n);
    double* rbuf = fftw_alloc_real(points);
    fftw_complex* cbuf = fftw_alloc_complex(spectral);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    t->r2c = fftw_plan_dft_r2c(dim, dims, rbuf, cbuf, flags);
    t->c2r = fftw_plan_dft_c2r(dim, dims, cbuf, rbuf, flags);
    fftw_free(rbuf);
    fftw_free(cbuf);
    if (!t->r2c || !t->c2r) throw ConfigError("FFT planning failed for grid n=" + std::to_string(n));
    return t;
}

std::shared_ptr<const GridTables> tables_for(int dim, int n, double side, double fraction, int cutoff) {
    static std::mutex registry_mutex;
    static std::map<GridKey, std::shared_ptr<const GridTables>> registry;
    std::lock_guard<std::mutex> lock(registry_mutex);
    const GridKey key{dim, n, side, fraction};
    auto it = registry.find(key);
    if (it != registry.end()) return it->second;
    auto t = build_tables(dim, n, side, cutoff);
    registry.emplace(key, t);
    return t;
}

}  // namespace

Grid::Grid(int dim, int n, double side_length, double dealias_fraction)
    : dim_(dim), n_(n), side_length_(side_length), dealias_fraction_(dealias_fraction) {
    if (dim != 2 && dim != 3) throw ConfigError("grid.dim must be 2 or 3");
    if (n < 8 || n % 2 != 0 || (n & (n - 1)) != 0)
        throw ConfigError("grid.n must be a power of two and at least 8");
    if (!(side_length > 0.0) || !std::isfinite(side_length))
        throw ConfigError("grid.side_length must be positive");
    if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0)
        throw ConfigError("grid.dealias_fraction must lie in (0, 1]");
    cutoff_ = static_cast<int>(std::floor(dealias_fraction * n / 2.0 + 1e-12));
    if (cutoff_ >= n / 2) cutoff_ = n / 2 - 1;
    size_ = 1;
    for (int d = 0; d < dim; ++d) size_ *= static_cast<std::size_t>(n);
    spectral_size_ = size_ / static_cast<std::size_t>(n) * static_cast<std::size_t>(n / 2 + 1);
    tables_ = tables_for(dim, n, side_length, dealias_fraction, cutoff_);
}

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }
double Grid::measure() const { return std::pow(side_length_, dim_); }
double Grid::wavenumber_unit() const { return 2.0 * std::numbers::pi / side_length_; }

const std::array<int, 3>& Grid::mode(std::size_t s) const { return tables_->mode[s]; }
double Grid::k2(std::size_t s) const { return tables_->k2[s]; }
double Grid::k(std::size_t s, int j) const { return tables_->kvec[s][j]; }
double Grid::weight(std::size_t s) const { return tables_->weight[s]; }
bool Grid::nyquist(std::size_t s) const { return tables_->nyquist[s] != 0; }
bool Grid::dealiased(std::size_t s) const { return tables_->dealiased[s] != 0; }

std::size_t Grid::slot(const std::array<int, 3>& m) const {
    const int half = n_ / 2 + 1;
    auto wrap = [this](int v) { return static_cast<std::size_t>(((v % n_) + n_) % n_); };
    std::size_t s = 0;
    for (int d = 0; d < dim_ - 1; ++d) s = s * static_cast<std::size_t>(n_) + wrap(m[d]);
    return s * static_cast<std::size_t>(half) + static_cast<std::size_t>(m[dim_ - 1]);
}

std::size_t Grid::point(const std::array<int, 3>& j) const {
    std::size_t p = 0;
    for (int d = 0; d < dim_; ++d) p = p * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j[d]);
    return p;
}

void Grid::forward(const double* in, cplx* out) const {
    // FFTW r2c does not modify its input.
    fftw_execute_dft_r2c(tables_->r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t s = 0; s < spectral_size_; ++s) out[s] *= scale;
}

void Grid::inverse(const cplx* in, double* out) const {
    thread_local std::vector<cplx> scratch;
    scratch.assign(in, in + spectral_size_);
    fftw_execute_dft_c2r(tables_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

bool Grid::operator==(const Grid& other) const {
    return dim_ == other.dim_ && n_ == other.n_ && side_length_ == other.side_length_ &&
           dealias_fraction_ == other.dealias_fraction_;
}

double poincare_lambda1(const Grid& grid) {
    const double u = grid.wavenumber_unit();
    return u * u;
}

}  // namespace scbf
