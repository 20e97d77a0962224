#include "scbf/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// NaN and inf are not representable in JSON.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> preamble(const RunConfig& cfg) {
    return {std::string("version ") + kVersion, "config " + cfg.echo.dump()};
}

json envelope(const RunConfig& cfg, const std::string& command) {
    json j;
    j["schema_version"] = kSummarySchemaVersion;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = cfg.echo;
    return j;
}

fs::path out_dir(const RunConfig& cfg) {
    fs::path p(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("output_dir: cannot create " + cfg.output_dir + ": " + ec.message());
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << std::setprecision(17);
    return os;
}

void write_json(const fs::path& p, const json& j) {
    auto os = open_out(p);
    os << j.dump(2) << '\n';
}

// Config echo with the realized c0 filled in, so a rerun skips the estimate.
RunConfig with_realized_c0(RunConfig cfg, const RunSetup& setup) {
    if (!cfg.c0) {
        cfg.c0 = setup.interpolant.c0;
        cfg.echo["interpolant"]["c0"] = setup.interpolant.c0;
    }
    return cfg;
}

AssimilationConfig assimilation_of(const RunConfig& cfg, const RunSetup& setup) {
    return AssimilationConfig{cfg.sigma, setup.interpolant, setup.truth0, setup.da0};
}

const ThresholdReport* strongest(const CheckResult& c) { return c.strongest ? &c.reports[*c.strongest] : nullptr; }

json guarantee_json(const RunConfig& cfg, const CheckResult& check) {
    json g;
    const ThresholdReport* s = strongest(check);
    g["null_control"] = cfg.sigma == 0.0;
    if (s) {
        g["applicable"] = true;
        g["theorem_id"] = to_string(s->theorem_id);
        g["rate_type"] = to_string(s->rate_type);
        g["predicted_rate"] = nullable(s->predicted_rate);
        g["rate_indicative"] = s->rate_indicative;
        g["message"] = "guarantee applies";
    } else {
        g["applicable"] = false;
        g["theorem_id"] = nullptr;
        g["predicted_rate"] = nullptr;
        g["message"] = cfg.sigma == 0.0 ? "no guarantee applicable; null control" : "no guarantee applicable";
    }
    return g;
}

// Fits over [t_start, t_end] with config defaults; a failed fit is reported, not fatal.
json try_fit(const RunConfig& cfg, const std::vector<double>& t, const std::vector<double>& v) {
    const double t0 = cfg.fit_t_start.value_or(cfg.fit_kind == "polynomial" && !t.empty() && t.size() > 1 ? t[1] : 0.0);
    const double t1 = cfg.fit_t_end.value_or(t.empty() ? 0.0 : t.back());
    try {
        return to_json(cfg.fit_kind == "polynomial" ? fit_polynomial_rate(t, v, t0, t1) : fit_exponential_rate(t, v, t0, t1));
    } catch (const FitError& e) {
        return json{{"error", e.what()}};
    }
}

}  // namespace

json to_json(const ThresholdInputs& in) {
    return json{{"dim", in.dim},
                {"mu", in.mu},
                {"alpha", in.alpha},
                {"beta", in.beta},
                {"varpi", in.varpi},
                {"K", in.K},
                {"K_tilde", in.K_tilde},
                {"L", in.L},
                {"upsilon_hs_norm_sq", in.upsilon_hs_norm_sq},
                {"f_dual_sq", in.f_dual_sq},
                {"c0", in.c0},
                {"theta", in.theta},
                {"lambda1", in.lambda1},
                {"domain_measure", in.domain_measure},
                {"additive", in.additive},
                {"sigma", nullable(in.sigma)}};
}

json to_json(const ThresholdReport& r) {
    return json{{"theorem_id", to_string(r.theorem_id)},
                {"sigma_lower", num(r.sigma_lower)},
                {"sigma_upper", num(r.sigma_upper)},
                {"feasible", r.feasible},
                {"sigma_in_window", r.sigma_in_window ? json(*r.sigma_in_window) : json(nullptr)},
                {"predicted_rate", nullable(r.predicted_rate)},
                {"rate_indicative", r.rate_indicative},
                {"rate_type", to_string(r.rate_type)},
                {"note", r.note}};
}

json to_json(const CheckResult& c) {
    json j;
    j["reports"] = json::array();
    for (const auto& r : c.reports) j["reports"].push_back(to_json(r));
    j["any_guarantee"] = c.any_guarantee();
    j["strongest"] = c.strongest ? to_json(c.reports[*c.strongest]) : json(nullptr);
    if (!c.reports.empty()) j["inputs"] = to_json(c.reports.front().inputs);
    return j;
}

json to_json(const RateFit& f) {
    return json{{"kind", to_string(f.kind)}, {"rate", f.rate},       {"intercept", f.intercept},
                {"r_squared", f.r_squared},  {"t_start", f.t_start}, {"t_end", f.t_end},
                {"n_used", f.n_used}};
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
    const RunSetup setup = realize(cfg);
    validate_regime(setup.params, &setup.noise);
    const CheckResult check = check_config(threshold_inputs(cfg, setup));
    json j = envelope(with_realized_c0(cfg, setup), "check");
    j["check"] = to_json(check);
    if (setup.c0_estimate_raw) j["c0_estimate_raw"] = *setup.c0_estimate_raw;
    out << j.dump(2) << '\n';
    return check.any_guarantee() ? kExitOk : kExitInfeasible;
}

int cmd_simulate_truth(const RunConfig& cfg_in, std::ostream& out) {
    const RunSetup setup = realize(cfg_in);
    const RunConfig cfg = with_realized_c0(cfg_in, setup);
    const RegimeReport regime = validate_regime(setup.params, &setup.noise);
    const fs::path dir = out_dir(cfg);
    const NoiseModel* noise = setup.noise.enabled() ? &setup.noise : nullptr;
    const Trajectory traj =
        run_trajectory(setup.truth0, setup.params, noise, nullptr, cfg.stepper, cfg.master_seed, 0);
    {
        auto os = open_out(dir / "truth.csv");
        write_trajectory_csv(os, traj, preamble(cfg));
    }
    json j = envelope(cfg, "simulate-truth");
    j["regime"] = regime.summary;
    j["records"] = traj.records.size();
    j["substep_events"] = traj.substep_events;
    j["final_time"] = traj.records.empty() ? 0.0 : traj.records.back().t;
    j["final_zeta_l2sq"] = traj.records.empty() ? 0.0 : traj.records.back().zeta.l2_sq;
    j["energy_balance_residual"] =
        noise ? json(nullptr) : json(energy_balance_residual(energy_trace(traj), setup.params));
    json snaps = json::array();
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        std::ostringstream name;
        name << "snapshot_" << std::setw(5) << std::setfill('0') << i << ".txt";
        auto pre = preamble(cfg);
        std::ostringstream tl;
        tl << std::setprecision(17) << "t " << traj.snapshots[i].t;
        pre.push_back(tl.str());
        write_snapshot((dir / name.str()).string(), traj.snapshots[i].zeta.physical(), pre);
        snaps.push_back(name.str());
    }
    j["snapshots"] = snaps;
    write_json(dir / "summary.json", j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_assimilate(const RunConfig& cfg_in, std::ostream& out) {
    const RunSetup setup = realize(cfg_in);
    const RunConfig cfg = with_realized_c0(cfg_in, setup);
    const RegimeReport regime = validate_regime(setup.params, &setup.noise);
    const CheckResult check = check_config(threshold_inputs(cfg, setup));
    const fs::path dir = out_dir(cfg);
    const NoiseModel* noise = setup.noise.enabled() ? &setup.noise : nullptr;
    const AssimilationConfig assim = assimilation_of(cfg, setup);
    const Trajectory traj = run_trajectory(setup.truth0, setup.params, noise, &assim, cfg.stepper, cfg.master_seed, 0);
    {
        auto os = open_out(dir / "trajectory.csv");
        write_trajectory_csv(os, traj, preamble(cfg));
    }
    std::vector<double> t;
    std::vector<double> e;
    for (const auto& r : traj.records) {
        t.push_back(r.t);
        e.push_back(r.err.l2_sq);
    }
    json j = envelope(cfg, "assimilate");
    j["regime"] = regime.summary;
    j["check"] = to_json(check);
    j["guarantee"] = guarantee_json(cfg, check);
    j["fit"] = try_fit(cfg, t, e);
    j["fitted_rate"] = j["fit"].contains("rate") ? j["fit"]["rate"] : json(nullptr);
    j["predicted_rate"] = j["guarantee"]["predicted_rate"];
    j["initial_err_l2sq"] = e.empty() ? 0.0 : e.front();
    j["final_err_l2sq"] = e.empty() ? 0.0 : e.back();
    j["records"] = traj.records.size();
    j["substep_events"] = traj.substep_events;
    write_json(dir / "summary.json", j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_ensemble(const RunConfig& cfg_in, std::ostream& out) {
    const RunSetup setup = realize(cfg_in);
    const RunConfig cfg = with_realized_c0(cfg_in, setup);
    const RegimeReport regime = validate_regime(setup.params, &setup.noise);
    const CheckResult check = check_config(threshold_inputs(cfg, setup));
    const fs::path dir = out_dir(cfg);
    const AssimilationConfig assim = assimilation_of(cfg, setup);

    EnsembleSpec spec;
    spec.params = &setup.params;
    spec.noise = setup.noise.enabled() ? &setup.noise : nullptr;
    spec.assimilation = cfg.truth_only ? nullptr : &assim;
    if (cfg.truth_only) spec.truth_init = setup.truth0;
    spec.stepper = cfg.stepper;
    spec.n_members = cfg.n_members;
    spec.master_seed = cfg.master_seed;
    spec.threads = thread_count();
    spec.moment_orders = cfg.moment_orders;
    spec.config_echo = cfg.echo.dump();
    const EnsembleResult ens = run_ensemble(spec);
    {
        auto os = open_out(dir / "ensemble.csv");
        write_ensemble_csv(os, ens, preamble(cfg));
    }

    json j = envelope(cfg, "ensemble");
    j["regime"] = regime.summary;
    j["check"] = to_json(check);
    j["guarantee"] = guarantee_json(cfg, check);
    j["n_members"] = ens.n_members;
    j["n_excluded"] = ens.n_excluded;
    j["excluded_members"] = ens.excluded_members;
    j["exclusion_reasons"] = ens.exclusion_reasons;
    j["substep_events"] = ens.substep_events;

    const MomentReport moments = moment_tracker(ens, cfg.moment_orders);
    json mj = json::array();
    for (const auto& m : moments.orders)
        mj.push_back(json{{"p", m.p},
                          {"first_quarter", num(m.first_quarter)},
                          {"last_quarter", num(m.last_quarter)},
                          {"plateau", num(m.plateau)},
                          {"plateau_stderr", num(m.plateau_stderr)},
                          {"verdict", m.bounded ? "bounded" : "growing"}});
    j["moments"] = mj;
    const MomentSeries* p1 = nullptr;
    const MomentSeries* p2 = nullptr;
    for (const auto& m : moments.orders) {
        if (m.p == 1.0) p1 = &m;
        if (m.p == 2.0) p2 = &m;
    }
    j["jensen_check"] = p1 && p2 ? json(jensen_check(*p1, *p2)) : json(nullptr);

    if (!cfg.truth_only) {
        j["fit"] = try_fit(cfg, ens.times, ens.mean_err_l2sq);
        j["fitted_rate"] = j["fit"].contains("rate") ? j["fit"]["rate"] : json(nullptr);
        j["predicted_rate"] = j["guarantee"]["predicted_rate"];
        const ThresholdReport* s = strongest(check);
        if (s && s->predicted_rate && s->rate_type == RateType::exponential && !s->rate_indicative) {
            const BoundCheck b = check_exponential_bound(ens, *s->predicted_rate);
            j["bound_check"] = json{{"pass", b.pass}, {"worst_ratio", num(b.worst_ratio)}, {"worst_time", b.worst_time}};
        } else {
            j["bound_check"] = nullptr;
        }
        const WeightedParams w{cfg.mu,
                               cfg.alpha,
                               cfg.sigma,
                               setup.noise.enabled() ? setup.noise_constants.L : 0.0,
                               cfg.weighted_delta,
                               setup.interpolant.c0,
                               setup.interpolant.theta};
        try {
            const WeightedDiagnostic d = weighted_contraction_diagnostic(ens, w);
            j["weighted_diagnostic"] =
                json{{"within_bound", d.within_bound}, {"worst_ratio", num(d.worst_ratio)}, {"initial", d.initial}};
        } catch (const ConfigError& e) {
            j["weighted_diagnostic"] = json{{"not_applicable", e.what()}};
        }
    }
    write_json(dir / "ensemble.json", j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_estimate_c0(const RunConfig& cfg, std::ostream& out) {
    Grid grid(cfg.dim, cfg.n, cfg.side_length, cfg.dealias_fraction);
    InterpolantSpec spec = cfg.interpolant_kind == InterpolantKind::spectral ? InterpolantSpec::spectral(cfg.theta)
                                                                             : InterpolantSpec::volume(grid, cfg.theta);
    const double raw = estimate_c0(spec, grid, cfg.c0_trials, cfg.c0_seed);
    json j = envelope(cfg, "estimate-c0");
    j["kind"] = to_string(spec.kind);
    j["theta"] = spec.theta;
    j["cells_per_axis"] = spec.cells_per_axis;
    j["trials"] = cfg.c0_trials;
    j["seed"] = cfg.c0_seed;
    j["max_ratio"] = raw;
    j["c0"] = spec.c0;
    write_json(out_dir(cfg) / "c0.json", j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

void read_csv_columns(const std::string& path, const std::string& column, std::vector<double>& t,
                      std::vector<double>& v) {
    std::ifstream is(path);
    if (!is) throw ConfigError("fit.input: cannot read " + path);
    std::string line;
    while (std::getline(is, line) && !line.empty() && line[0] == '#') {
    }
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string h;
        while (std::getline(hs, h, ',')) header.push_back(h);
    }
    int ti = -1;
    int vi = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "t") ti = static_cast<int>(i);
        if (header[i] == column) vi = static_cast<int>(i);
    }
    if (ti < 0) throw ConfigError("fit.input: no column \"t\" in " + path);
    if (vi < 0) throw ConfigError("fit.column: no column \"" + column + "\" in " + path);
    t.clear();
    v.clear();
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string cell;
        for (int i = 0; std::getline(ls, cell, ','); ++i) {
            if (i == ti) t.push_back(std::stod(cell));
            if (i == vi) v.push_back(std::stod(cell));
        }
        if (t.size() != v.size()) throw ConfigError("fit.input: ragged row in " + path);
    }
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    if (cfg.fit_input.empty()) throw ConfigError("fit.input: required for the fit command");
    std::vector<double> t;
    std::vector<double> v;
    read_csv_columns(cfg.fit_input, cfg.fit_column, t, v);
    const double t0 = cfg.fit_t_start.value_or(cfg.fit_kind == "polynomial" && t.size() > 1 ? t[1] : 0.0);
    const double t1 = cfg.fit_t_end.value_or(t.empty() ? 0.0 : t.back());
    const RateFit f = cfg.fit_kind == "polynomial" ? fit_polynomial_rate(t, v, t0, t1) : fit_exponential_rate(t, v, t0, t1);
    json j = envelope(cfg, "fit");
    j["input"] = cfg.fit_input;
    j["column"] = cfg.fit_column;
    j["fit"] = to_json(f);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int run_command(const std::string& name, const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        const RunConfig cfg = load_config(config_path);
        if (name == "check") return cmd_check(cfg, out);
        if (name == "simulate-truth") return cmd_simulate_truth(cfg, out);
        if (name == "assimilate") return cmd_assimilate(cfg, out);
        if (name == "ensemble") return cmd_ensemble(cfg, out);
        if (name == "estimate-c0") return cmd_estimate_c0(cfg, out);
        if (name == "fit") return cmd_fit(cfg, out);
        err << "error: unknown subcommand " << name << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical blow-up: " << e.what() << " (last good time " << std::setprecision(17) << e.last_good_time()
            << ")\n";
        return kExitBlowUp;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const FitError& e) {
        err << "fit error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace scbf
