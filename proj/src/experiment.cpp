#include "scbf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "scbf/errors.hpp"

namespace scbf {

namespace {

struct MemberOutcome {
    std::optional<Trajectory> traj;
    std::string failure;
    std::exception_ptr fatal;
};

}  // namespace

void mean_and_stderr(const std::vector<std::vector<double>>& rows, std::vector<double>& mean, std::vector<double>& se) {
    mean.assign(rows.empty() ? 0 : rows.front().size(), 0.0);
    se.assign(mean.size(), 0.0);
    const double n = static_cast<double>(rows.size());
    if (rows.empty()) return;
    for (const auto& r : rows)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += r[i];
    for (auto& m : mean) m /= n;
    if (rows.size() < 2) return;
    for (const auto& r : rows)
        for (std::size_t i = 0; i < mean.size(); ++i) se[i] += (r[i] - mean[i]) * (r[i] - mean[i]);
    for (auto& s : se) s = std::sqrt(s / (n - 1.0) / n);
}

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
    if (!spec.params) throw ConfigError("ensemble needs model parameters");
    if (spec.n_members < 2) throw ConfigError("ensemble.n_members must be >= 2");
    if (!spec.assimilation && !spec.truth_init) throw ConfigError("truth-only ensemble needs an initial field");
    for (double p : spec.moment_orders)
        if (!(p >= 1.0 && p <= 4.0)) throw ConfigError("moment orders must lie in [1, 4]");
    validate_regime(*spec.params, spec.noise);

    const int n = spec.n_members;
    std::vector<MemberOutcome> out(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int m = next++; m < n; m = next++) {
            auto& o = out[static_cast<std::size_t>(m)];
            const std::uint64_t stream = spec.force_identical_streams ? 0 : static_cast<std::uint64_t>(m);
            try {
                const VelocityField& init = spec.assimilation ? spec.assimilation->truth_init : *spec.truth_init;
                o.traj = run_trajectory(init, *spec.params, spec.noise, spec.assimilation, spec.stepper,
                                        spec.master_seed, stream);
            } catch (const NumericalError& e) {
                o.failure = e.what();
            } catch (...) {
                o.fatal = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min(spec.threads, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EnsembleResult res;
    res.config_echo = spec.config_echo;
    res.moment_orders = spec.moment_orders;
    for (int m = 0; m < n; ++m) {
        auto& o = out[static_cast<std::size_t>(m)];
        if (o.fatal) std::rethrow_exception(o.fatal);
        if (!o.traj) {
            ++res.n_excluded;
            res.excluded_members.push_back(static_cast<std::uint64_t>(m));
            res.exclusion_reasons.push_back(o.failure);
            continue;
        }
        MemberSeries ms;
        ms.member = static_cast<std::uint64_t>(m);
        if (res.times.empty())
            for (const auto& r : o.traj->records) res.times.push_back(r.t);
        for (const auto& r : o.traj->records) {
            ms.err_l2sq.push_back(r.err.l2_sq);
            ms.zeta_l2sq.push_back(r.zeta.l2_sq);
            ms.int_zeta_vsq.push_back(r.int_zeta_vsq);
        }
        res.substep_events += o.traj->substep_events;
        res.members.push_back(std::move(ms));
    }
    res.n_members = static_cast<int>(res.members.size());
    if (10 * res.n_excluded > n) {
        std::ostringstream msg;
        msg << "ensemble failed: " << res.n_excluded << " of " << n << " members excluded (limit 10%)";
        if (!res.exclusion_reasons.empty()) msg << "; first: " << res.exclusion_reasons.front();
        throw BlowUpError(msg.str(), 0.0);
    }

    std::vector<std::vector<double>> rows;
    for (const auto& ms : res.members) rows.push_back(ms.err_l2sq);
    mean_and_stderr(rows, res.mean_err_l2sq, res.stderr_err_l2sq);
    for (double p : res.moment_orders) {
        rows.clear();
        for (const auto& ms : res.members) {
            std::vector<double> r(ms.zeta_l2sq.size());
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::pow(ms.zeta_l2sq[i], p);
            rows.push_back(std::move(r));
        }
        std::vector<double> mean;
        std::vector<double> se;
        mean_and_stderr(rows, mean, se);
        res.mean_zeta_l2sq_p.push_back(std::move(mean));
        res.stderr_zeta_l2sq_p.push_back(std::move(se));
    }
    return res;
}

std::string to_string(FitKind k) { return k == FitKind::exponential ? "exponential" : "polynomial"; }

namespace {

RateFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw FitError("fit window has no spread in the abscissa");
    RateFit f;
    const double slope = sxy / sxx;
    f.rate = -slope;
    f.intercept = my - slope * mx;
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    f.n_used = static_cast<int>(x.size());
    return f;
}

RateFit fit_generic(const std::vector<double>& t, const std::vector<double>& v, double t_start, double t_end,
                    double floor, FitKind kind) {
    if (t.size() != v.size()) throw FitError("fit: series length mismatch");
    if (kind == FitKind::polynomial && !(t_start > 0.0)) throw FitError("polynomial fit window must start at t > 0");
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start || t[i] > t_end || !(v[i] > floor) || !std::isfinite(v[i])) continue;
        if (kind == FitKind::polynomial && !(t[i] > 0.0)) continue;
        x.push_back(kind == FitKind::exponential ? t[i] : std::log(t[i]));
        y.push_back(std::log(v[i]));
    }
    if (x.size() < 8) {
        std::ostringstream msg;
        msg << "fit: only " << x.size() << " samples above floor " << floor << " in window [" << t_start << ", "
            << t_end << "], need 8";
        throw FitError(msg.str());
    }
    RateFit f = least_squares(x, y);
    f.kind = kind;
    f.t_start = t_start;
    f.t_end = t_end;
    return f;
}

}  // namespace

RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& v, double t_start, double t_end,
                             double floor) {
    return fit_generic(t, v, t_start, t_end, floor, FitKind::exponential);
}

RateFit fit_polynomial_rate(const std::vector<double>& t, const std::vector<double>& v, double t_start, double t_end,
                            double floor) {
    return fit_generic(t, v, t_start, t_end, floor, FitKind::polynomial);
}

bool MomentReport::all_bounded() const {
    return std::all_of(orders.begin(), orders.end(), [](const MomentSeries& m) { return m.bounded; });
}

MomentReport moment_tracker(const EnsembleResult& ens, const std::vector<double>& p_orders) {
    MomentReport rep;
    const std::size_t nt = ens.times.size();
    for (double p : p_orders) {
        if (!(p >= 1.0 && p <= 4.0)) throw ConfigError("moment orders must lie in [1, 4]");
        std::vector<std::vector<double>> rows;
        for (const auto& ms : ens.members) {
            std::vector<double> r(ms.zeta_l2sq.size());
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::pow(ms.zeta_l2sq[i], p);
            rows.push_back(std::move(r));
        }
        MomentSeries s;
        s.p = p;
        mean_and_stderr(rows, s.mean, s.stderr_);
        const std::size_t q = std::max<std::size_t>(1, nt / 4);
        auto avg = [&](const std::vector<double>& v, std::size_t a, std::size_t b) {
            double sum = 0.0;
            for (std::size_t i = a; i < b; ++i) sum += v[i];
            return b > a ? sum / static_cast<double>(b - a) : 0.0;
        };
        if (nt > 0) {
            s.first_quarter = avg(s.mean, 0, q);
            s.last_quarter = avg(s.mean, nt - q, nt);
            s.plateau = avg(s.mean, nt / 2, nt);
            s.plateau_stderr = avg(s.stderr_, nt / 2, nt);
        }
        s.bounded = s.last_quarter <= 1.5 * s.first_quarter;
        rep.orders.push_back(std::move(s));
    }
    return rep;
}

bool jensen_check(const MomentSeries& p1, const MomentSeries& p2) {
    return p2.plateau >= p1.plateau * p1.plateau - 3.0 * p2.plateau_stderr;
}

double weight_exponent(const WeightedParams& w, double t, double int_zeta_vsq) {
    return ((2.0 * w.alpha + w.sigma) / (1.0 + w.delta) - w.L) * t - (2.0 / w.mu) * int_zeta_vsq;
}

std::vector<double> weighted_contraction_series(const Trajectory& traj, const WeightedParams& w) {
    if (!traj.paired) throw ConfigError("weighted diagnostic needs a paired trajectory");
    std::vector<double> out;
    for (const auto& r : traj.records) out.push_back(std::exp(weight_exponent(w, r.t, r.int_zeta_vsq)) * r.err.l2_sq);
    return out;
}

WeightedDiagnostic weighted_contraction_diagnostic(const EnsembleResult& ens, const WeightedParams& w,
                                                   double allowance) {
    if (w.sigma > w.mu / (w.c0 * w.theta * w.theta) * (1.0 + 1e-12))
        throw ConfigError("weighted diagnostic needs sigma <= mu / (c0 theta^2)");
    if (!(w.delta >= 0.0)) throw ConfigError("weighted diagnostic needs delta >= 0");
    std::vector<std::vector<double>> rows;
    for (const auto& ms : ens.members) {
        if (ms.int_zeta_vsq.size() != ens.times.size()) throw ConfigError("diagnostic unavailable: missing V-norm records");
        std::vector<double> r(ens.times.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            r[i] = std::exp(weight_exponent(w, ens.times[i], ms.int_zeta_vsq[i])) * ms.err_l2sq[i];
        rows.push_back(std::move(r));
    }
    WeightedDiagnostic d;
    d.times = ens.times;
    mean_and_stderr(rows, d.mean, d.stderr_);
    d.initial = d.mean.empty() ? 0.0 : d.mean.front();
    d.within_bound = true;
    for (std::size_t i = 0; i < d.mean.size(); ++i) {
        const double rel = d.mean[i] > 0.0 ? d.stderr_[i] / d.mean[i] : 0.0;
        const double allowed = d.initial * (1.0 + 5.0 * rel + allowance);
        const double ratio = allowed > 0.0 ? d.mean[i] / allowed : (d.mean[i] > 0.0 ? INFINITY : 0.0);
        d.worst_ratio = std::max(d.worst_ratio, ratio);
        if (ratio > 1.0) d.within_bound = false;
    }
    return d;
}

BoundCheck check_exponential_bound(const EnsembleResult& ens, double rate, double allowance) {
    BoundCheck b;
    b.pass = true;
    if (ens.mean_err_l2sq.empty()) return b;
    const double e0 = ens.mean_err_l2sq.front();
    for (std::size_t i = 0; i < ens.times.size(); ++i) {
        const double m = ens.mean_err_l2sq[i];
        const double rel = m > 0.0 ? ens.stderr_err_l2sq[i] / m : 0.0;
        const double allowed = e0 * std::exp(-rate * ens.times[i]) * (1.0 + 5.0 * rel + allowance);
        const double ratio = allowed > 0.0 ? m / allowed : (m > 0.0 ? INFINITY : 0.0);
        if (ratio > b.worst_ratio) {
            b.worst_ratio = ratio;
            b.worst_time = ens.times[i];
        }
        if (ratio > 1.0) b.pass = false;
    }
    return b;
}

void write_ensemble_csv(std::ostream& os, const EnsembleResult& ens, const std::vector<std::string>& preamble) {
    for (const auto& line : preamble) os << "# " << line << '\n';
    os << "t,mean_err_l2sq,stderr_err_l2sq";
    for (double p : ens.moment_orders) os << ",mean_zeta_l2sq_p" << p << ",stderr_zeta_l2sq_p" << p;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < ens.times.size(); ++i) {
        os << ens.times[i] << ',' << ens.mean_err_l2sq[i] << ',' << ens.stderr_err_l2sq[i];
        for (std::size_t k = 0; k < ens.moment_orders.size(); ++k)
            os << ',' << ens.mean_zeta_l2sq_p[k][i] << ',' << ens.stderr_zeta_l2sq_p[k][i];
        os << '\n';
    }
}

}  // namespace scbf
