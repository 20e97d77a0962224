#include "scbf/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <thread>

#include "scbf/errors.hpp"

namespace scbf {

using nlohmann::json;

namespace {

// Typed access to one JSON object; unknown keys are reported by finish().
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
        return v->get<double>();
    }

    std::optional<double> optional_number(const std::string& key) {
        const json* v = find(key);
        if (!v || v->is_null()) return std::nullopt;
        if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
        return v->get<double>();
    }

    long long integer(const std::string& key, long long def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
        return v->get<long long>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
            throw ConfigError(field(key) + ": expected a nonnegative integer");
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
        return v->get<std::string>();
    }

    std::optional<Section> sub(const std::string& key) {
        const json* v = find(key);
        if (!v) return std::nullopt;
        return Section(*v, field(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "config" : path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

FieldSpec parse_field(Section s, bool allow_offset) {
    FieldSpec f;
    f.kind = s.string("kind", "zero");
    const std::set<std::string> kinds{"zero", "random", "kolmogorov", "snapshot", "offset"};
    if (!kinds.count(f.kind) || (f.kind == "offset" && !allow_offset))
        throw ConfigError(s.field("kind") + ": unsupported field kind \"" + f.kind + "\"");
    f.slope = s.number("slope", f.slope);
    f.seed = s.seed("seed", f.seed);
    f.energy = s.number("energy", f.energy);
    f.k_max = s.number("k_max", f.k_max);
    f.amplitude = s.number("amplitude", f.amplitude);
    f.wavenumber = static_cast<int>(s.integer("wavenumber", f.wavenumber));
    f.path = s.string("path", f.path);
    if (auto p = s.sub("perturbation")) f.perturbation.push_back(parse_field(*p, false));
    if (f.kind == "offset" && f.perturbation.empty())
        throw ConfigError(s.field("perturbation") + ": required for offset fields");
    if (f.kind == "random" && !(f.slope < -1.0)) throw ConfigError(s.field("slope") + ": must be below -1");
    if (f.energy < 0.0) throw ConfigError(s.field("energy") + ": must be nonnegative");
    if (f.kind == "snapshot" && f.path.empty()) throw ConfigError(s.field("path") + ": required for snapshot fields");
    s.finish();
    return f;
}

json field_to_json(const FieldSpec& f) {
    json j{{"kind", f.kind}};
    if (f.kind == "random") {
        j["slope"] = f.slope;
        j["seed"] = f.seed;
        j["energy"] = f.energy;
        j["k_max"] = f.k_max;
    } else if (f.kind == "kolmogorov") {
        j["amplitude"] = f.amplitude;
        j["wavenumber"] = f.wavenumber;
    } else if (f.kind == "snapshot") {
        j["path"] = f.path;
    } else if (f.kind == "offset") {
        j["perturbation"] = field_to_json(f.perturbation.front());
    }
    return j;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["grid"] = {{"dim", c.dim}, {"n", c.n}, {"side_length", c.side_length}, {"dealias_fraction", c.dealias_fraction}};
    j["model"] = {{"mu", c.mu},       {"alpha", c.alpha},           {"beta", c.beta},
                  {"varpi", c.varpi}, {"convection", c.convection}, {"forcing", field_to_json(c.forcing)}};
    j["noise"] = {{"kind", to_string(c.noise_kind)},
                  {"epsilon", c.epsilon},
                  {"n_modes", c.qwiener.n_modes},
                  {"spectrum_decay", c.qwiener.spectrum_decay},
                  {"trace", c.qwiener.trace_normalization},
                  {"basis", c.qwiener.basis}};
    j["interpolant"] = {{"kind", to_string(c.interpolant_kind)},
                        {"theta", c.theta},
                        {"c0", c.c0 ? json(*c.c0) : json(nullptr)},
                        {"c0_trials", c.c0_trials},
                        {"c0_seed", c.c0_seed}};
    j["assimilation"] = {{"sigma", c.sigma},
                         {"implicit_nudging", c.stepper.implicit_nudging},
                         {"truth_init", field_to_json(c.truth_init)},
                         {"da_init", field_to_json(c.da_init)}};
    j["stepper"] = {{"dt", c.stepper.dt},
                    {"t_end", c.stepper.t_end},
                    {"record_stride", c.stepper.record_stride},
                    {"snapshot_stride", c.stepper.snapshot_stride},
                    {"max_halvings", c.stepper.max_halvings},
                    {"scheme", c.stepper.scheme}};
    j["ensemble"] = {{"n_members", c.n_members}, {"moment_orders", c.moment_orders}, {"weighted_delta", c.weighted_delta},
                     {"truth_only", c.truth_only}};
    j["fit"] = {{"kind", c.fit_kind},
                {"t_start", c.fit_t_start ? json(*c.fit_t_start) : json(nullptr)},
                {"t_end", c.fit_t_end ? json(*c.fit_t_end) : json(nullptr)},
                {"input", c.fit_input},
                {"column", c.fit_column}};
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir;
    return j;
}

}  // namespace

RunConfig parse_config(const json& root) {
    RunConfig c;
    Section top(root, "");
    const long long schema = top.integer("schema_version", kSchemaVersion);
    if (schema != kSchemaVersion) throw ConfigError("schema_version: unsupported version " + std::to_string(schema));
    if (auto g = top.sub("grid")) {
        c.dim = static_cast<int>(g->integer("dim", c.dim));
        c.n = static_cast<int>(g->integer("n", c.n));
        c.side_length = g->number("side_length", c.side_length);
        c.dealias_fraction = g->number("dealias_fraction", c.dealias_fraction);
        g->finish();
    }
    if (auto m = top.sub("model")) {
        c.mu = m->number("mu", c.mu);
        c.alpha = m->number("alpha", c.alpha);
        c.beta = m->number("beta", c.beta);
        c.varpi = m->number("varpi", c.varpi);
        c.convection = m->boolean("convection", c.convection);
        if (auto f = m->sub("forcing")) c.forcing = parse_field(*f, false);
        m->finish();
    }
    if (auto n = top.sub("noise")) {
        c.noise_kind = noise_kind_from_string(n->string("kind", to_string(c.noise_kind)));
        c.epsilon = n->number("epsilon", c.epsilon);
        c.qwiener.n_modes = static_cast<int>(n->integer("n_modes", c.qwiener.n_modes));
        c.qwiener.spectrum_decay = n->number("spectrum_decay", c.qwiener.spectrum_decay);
        c.qwiener.trace_normalization = n->number("trace", c.qwiener.trace_normalization);
        c.qwiener.basis = n->string("basis", c.qwiener.basis);
        n->finish();
        if (c.epsilon < 0.0) throw ConfigError("noise.epsilon: must be nonnegative");
    }
    if (auto i = top.sub("interpolant")) {
        c.interpolant_kind = interpolant_kind_from_string(i->string("kind", to_string(c.interpolant_kind)));
        c.theta = i->number("theta", c.theta);
        c.c0 = i->optional_number("c0");
        c.c0_trials = static_cast<int>(i->integer("c0_trials", c.c0_trials));
        c.c0_seed = i->seed("c0_seed", c.c0_seed);
        i->finish();
        if (!(c.theta > 0.0)) throw ConfigError("interpolant.theta: must be positive");
        if (c.c0 && !(*c.c0 > 0.0)) throw ConfigError("interpolant.c0: must be positive");
    }
    if (auto a = top.sub("assimilation")) {
        c.sigma = a->number("sigma", c.sigma);
        c.stepper.implicit_nudging = a->boolean("implicit_nudging", c.stepper.implicit_nudging);
        if (auto f = a->sub("truth_init")) c.truth_init = parse_field(*f, false);
        if (auto f = a->sub("da_init")) c.da_init = parse_field(*f, true);
        a->finish();
        if (c.sigma < 0.0) throw ConfigError("assimilation.sigma: must be nonnegative");
    }
    if (auto s = top.sub("stepper")) {
        c.stepper.dt = s->number("dt", c.stepper.dt);
        c.stepper.t_end = s->number("t_end", c.stepper.t_end);
        c.stepper.record_stride = static_cast<int>(s->integer("record_stride", c.stepper.record_stride));
        c.stepper.snapshot_stride = static_cast<int>(s->integer("snapshot_stride", c.stepper.snapshot_stride));
        c.stepper.max_halvings = static_cast<int>(s->integer("max_halvings", c.stepper.max_halvings));
        c.stepper.scheme = s->string("scheme", c.stepper.scheme);
        s->finish();
        if (!(c.stepper.dt > 0.0)) throw ConfigError("stepper.dt: must be positive");
        if (!(c.stepper.t_end >= 0.0)) throw ConfigError("stepper.t_end: must be nonnegative");
        if (c.stepper.record_stride < 1) throw ConfigError("stepper.record_stride: must be >= 1");
        if (c.stepper.snapshot_stride < 0) throw ConfigError("stepper.snapshot_stride: must be >= 0");
        if (c.stepper.scheme != "imex-euler-maruyama")
            throw ConfigError("stepper.scheme: only \"imex-euler-maruyama\" is available");
    }
    if (auto e = top.sub("ensemble")) {
        c.n_members = static_cast<int>(e->integer("n_members", c.n_members));
        if (const json* mo = e->find("moment_orders")) {
            if (!mo->is_array()) throw ConfigError("ensemble.moment_orders: expected an array of numbers");
            c.moment_orders.clear();
            for (const auto& v : *mo) {
                if (!v.is_number()) throw ConfigError("ensemble.moment_orders: expected an array of numbers");
                c.moment_orders.push_back(v.get<double>());
            }
        }
        c.weighted_delta = e->number("weighted_delta", c.weighted_delta);
        c.truth_only = e->boolean("truth_only", c.truth_only);
        e->finish();
        if (c.n_members < 2) throw ConfigError("ensemble.n_members: must be >= 2");
        for (double p : c.moment_orders)
            if (!(p >= 1.0 && p <= 4.0)) throw ConfigError("ensemble.moment_orders: entries must lie in [1, 4]");
    }
    if (auto f = top.sub("fit")) {
        c.fit_kind = f->string("kind", c.fit_kind);
        c.fit_t_start = f->optional_number("t_start");
        c.fit_t_end = f->optional_number("t_end");
        c.fit_input = f->string("input", c.fit_input);
        c.fit_column = f->string("column", c.fit_column);
        f->finish();
        if (c.fit_kind != "exponential" && c.fit_kind != "polynomial")
            throw ConfigError("fit.kind: must be \"exponential\" or \"polynomial\"");
    }
    c.master_seed = top.seed("master_seed", c.master_seed);
    c.output_dir = top.string("output_dir", c.output_dir);
    top.finish();
    c.echo = config_to_json(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

VelocityField realize_field(const FieldSpec& spec, const Grid& grid) {
    if (spec.kind == "zero") return VelocityField(grid);
    if (spec.kind == "random") {
        VelocityField u = random_divfree_field(grid, spec.slope, spec.seed, spec.k_max);
        return spec.energy > 0.0 ? with_energy(std::move(u), spec.energy) : u;
    }
    if (spec.kind == "kolmogorov") {
        VectorField raw(grid);
        const double k = spec.wavenumber * grid.wavenumber_unit();
        const int n = grid.n();
        for (std::size_t p = 0; p < grid.size(); ++p) {
            // second coordinate index of point p
            std::size_t rest = p;
            for (int d = grid.dim() - 1; d > 1; --d) rest /= static_cast<std::size_t>(n);
            const double y = static_cast<double>(rest % static_cast<std::size_t>(n)) * grid.spacing();
            raw.comp[0][p] = spec.amplitude * std::sin(k * y);
        }
        SpectralField s = to_spectral(raw);
        dealias_in_place(s);
        return leray_project(std::move(s));
    }
    if (spec.kind == "snapshot") {
        VectorField raw = read_snapshot(spec.path);
        if (raw.grid != grid) throw ConfigError("snapshot " + spec.path + " does not match the configured grid");
        SpectralField s = to_spectral(raw);
        dealias_in_place(s);
        return leray_project(std::move(s));
    }
    throw ConfigError("field kind \"" + spec.kind + "\" needs a base field");
}

RunSetup realize(const RunConfig& cfg) {
    Grid grid(cfg.dim, cfg.n, cfg.side_length, cfg.dealias_fraction);
    VelocityField forcing = realize_field(cfg.forcing, grid);
    ModelParams params(cfg.mu, cfg.alpha, cfg.beta, cfg.varpi, forcing, cfg.convection);
    NoiseModel noise{build_wiener_basis(grid, cfg.qwiener), NoiseCoefficient{cfg.noise_kind, cfg.epsilon}};
    const NoiseConstants nc = noise_constants(noise.basis, noise.coeff);
    std::optional<double> raw;
    InterpolantSpec interp;
    if (cfg.interpolant_kind == InterpolantKind::spectral) {
        interp = InterpolantSpec::spectral(cfg.theta);
    } else {
        interp = InterpolantSpec::volume(grid, cfg.theta, cfg.c0.value_or(1.0));
        if (!cfg.c0) raw = estimate_c0(interp, grid, cfg.c0_trials, cfg.c0_seed);
    }
    VelocityField truth0 = realize_field(cfg.truth_init, grid);
    VelocityField da0 = cfg.da_init.kind == "offset" ? truth0 + realize_field(cfg.da_init.perturbation.front(), grid)
                                                     : realize_field(cfg.da_init, grid);
    return RunSetup{grid, std::move(params), std::move(noise), nc, interp, raw, std::move(truth0), std::move(da0)};
}

ThresholdInputs threshold_inputs(const RunConfig& cfg, const RunSetup& setup) {
    const bool additive = !setup.noise.enabled() || setup.noise.coeff.kind == NoiseKind::additive;
    NoiseConstants nc = setup.noise.enabled() ? setup.noise_constants : NoiseConstants{};
    nc.trace_q = setup.noise_constants.trace_q;
    return make_threshold_inputs(setup.params, nc, additive, setup.interpolant, cfg.sigma);
}

int thread_count() {
    if (const char* env = std::getenv("SCBF_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace scbf
