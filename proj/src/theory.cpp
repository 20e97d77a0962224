#include "scbf/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

const std::vector<TheoremId>& all_theorems() {
    static const std::vector<TheoremId> ids{
        TheoremId::SubcriticalAdditive,  TheoremId::SubcriticalMultiplicative, TheoremId::CriticalGeneralD,
        TheoremId::Critical2D,           TheoremId::SupercriticalGeneral,      TheoremId::Supercritical2BetaMu,
        TheoremId::Pathwise2D,           TheoremId::PathwiseCritical,          TheoremId::PathwiseSuperUpvarpi,
        TheoremId::PathwiseSuperBeta,
    };
    return ids;
}

std::string to_string(TheoremId id) {
    switch (id) {
        case TheoremId::SubcriticalAdditive: return "Subcritical-additive";
        case TheoremId::SubcriticalMultiplicative: return "Subcritical-multiplicative";
        case TheoremId::CriticalGeneralD: return "Critical-general-d";
        case TheoremId::Critical2D: return "Critical-2d";
        case TheoremId::SupercriticalGeneral: return "Supercritical-general";
        case TheoremId::Supercritical2BetaMu: return "Supercritical-2beta-mu";
        case TheoremId::Pathwise2D: return "Pathwise-2d";
        case TheoremId::PathwiseCritical: return "Pathwise-critical";
        case TheoremId::PathwiseSuperUpvarpi: return "Pathwise-super-upvarpi";
        case TheoremId::PathwiseSuperBeta: return "Pathwise-super-beta";
    }
    return "unknown";
}

TheoremId theorem_from_string(const std::string& s) {
    for (TheoremId id : all_theorems())
        if (to_string(id) == s) return id;
    throw ConfigError("unknown theorem id \"" + s + "\"");
}

std::string to_string(RateType t) { return t == RateType::exponential ? "exponential" : "p-polynomial"; }

ThresholdInputs make_threshold_inputs(const ModelParams& params, const NoiseConstants& noise, bool additive,
                                      const InterpolantSpec& interp, std::optional<double> sigma) {
    ThresholdInputs in;
    in.dim = params.dim();
    in.mu = params.mu;
    in.alpha = params.alpha;
    in.beta = params.beta;
    in.varpi = params.varpi;
    in.K = noise.K;
    in.K_tilde = noise.K_tilde;
    in.L = noise.L;
    in.upsilon_hs_norm_sq = noise.upsilon_hs_norm_sq;
    in.f_dual_sq = forcing_dual_norm_sq(params.forcing);
    in.c0 = interp.c0;
    in.theta = interp.theta;
    in.lambda1 = poincare_lambda1(params.grid());
    in.domain_measure = params.grid().measure();
    in.additive = additive;
    in.sigma = sigma;
    return in;
}

double compute_upvarpi(double mu, double beta, double varpi) {
    if (!(varpi > 3.0)) throw DomainError("upvarpi-hat needs varpi > 3 (exponent 2/(varpi-3) is singular)");
    if (!(mu > 0.0) || !(beta > 0.0)) throw DomainError("upvarpi-hat needs mu, beta > 0");
    return (varpi - 3.0) / (2.0 * mu * (varpi - 1.0)) * std::pow(4.0 / (mu * beta * (varpi - 1.0)), 2.0 / (varpi - 3.0));
}

double compute_Mhat(double K, double f_dual_norm_sq, double mu, double beta, double varpi, double L,
                    double domain_measure) {
    if (!(varpi > 1.0)) throw DomainError("M-hat needs varpi > 1 (exponents 1/(varpi-1) are singular)");
    if (!(mu > 0.0) || !(beta > 0.0)) throw DomainError("M-hat needs mu, beta > 0");
    if (K < 0.0 || L < 0.0) throw DomainError("M-hat needs K, L >= 0");
    double m = K + f_dual_norm_sq / mu;
    if (L > 0.0) {
        m += std::pow(beta * (varpi + 1.0) / 2.0, -2.0 / (varpi - 1.0)) / ((varpi + 1.0) / (varpi - 1.0)) *
             std::pow(L, (varpi + 1.0) / (varpi - 1.0)) * domain_measure;
    }
    return m;
}

namespace {

void require(bool ok, TheoremId id, const std::string& hypothesis) {
    if (!ok) throw ConfigError(to_string(id) + " requires " + hypothesis);
}

}  // namespace

ThresholdReport sigma_window(TheoremId id, const ThresholdInputs& in) {
    ThresholdReport r;
    r.theorem_id = id;
    r.inputs = in;
    const double two_alpha = 2.0 * in.alpha;
    const double mu = in.mu;
    const double ct2 = in.c0 * in.theta * in.theta;
    if (!(mu > 0.0) || !(in.beta > 0.0) || !(ct2 > 0.0)) throw ConfigError("threshold inputs need mu, beta, c0, theta > 0");
    const double base = in.K + in.f_dual_sq / mu;
    const double upper_mu = two_alpha + mu / ct2;
    const double two_mu_beta = 2.0 * mu * in.beta;
    const bool sub = in.varpi > 1.0 && in.varpi < 3.0;
    const bool crit = in.varpi == 3.0;
    const bool super = in.varpi > 3.0;

    double lower = 0.0;  // strict lower bound on 2 alpha + sigma
    double upper = 0.0;  // upper bound on 2 alpha + sigma
    bool hypothesis = true;
    std::string note;
    std::function<double(double)> rate;  // of s = 2 alpha + sigma

    switch (id) {
        case TheoremId::SubcriticalAdditive:
            require(in.dim == 2 && sub, id, "d = 2 and 1 < varpi < 3");
            require(in.additive && in.L == 0.0, id, "additive noise (L = 0)");
            lower = 4.0 / (mu * mu) * base;
            upper = upper_mu;
            rate = [](double s) { return s / 4.0; };
            r.rate_indicative = true;
            note = "rate is the delta = 1 proxy delta(2 alpha + sigma)/(1 + delta)^2, indicative only";
            break;
        case TheoremId::SubcriticalMultiplicative:
            require(in.dim == 2 && sub, id, "d = 2 and 1 < varpi < 3");
            require(in.L > 0.0, id, "state-dependent noise (L > 0)");
            lower = 2.0 / (mu * mu) * (compute_Mhat(in.K, in.f_dual_sq, mu, in.beta, in.varpi, in.L, in.domain_measure) + 1.0) + in.L;
            upper = upper_mu;
            r.rate_type = RateType::polynomial;
            note = "decay is p-polynomial for every p; no rate constant";
            break;
        case TheoremId::CriticalGeneralD:
            require(crit, id, "varpi = 3");
            hypothesis = two_mu_beta > 1.0;
            lower = in.L;
            upper = two_alpha + (2.0 * mu - 1.0 / in.beta) / ct2;
            rate = [L = in.L](double s) { return s - L; };
            if (!hypothesis) note = "hypothesis 2 beta mu > 1 fails";
            break;
        case TheoremId::Critical2D:
            require(crit && in.dim == 2, id, "d = 2 and varpi = 3");
            lower = 4.0 / (mu * mu) * (base + in.L * in.L * in.domain_measure / (4.0 * in.beta)) + in.L;
            upper = upper_mu;
            rate = [](double s) { return s / 4.0; };
            r.rate_indicative = true;
            note = "no explicit rate is stated; delta = 1 proxy reported, indicative only";
            break;
        case TheoremId::SupercriticalGeneral: {
            require(super, id, "varpi > 3");
            const double up = compute_upvarpi(mu, in.beta, in.varpi);
            lower = 2.0 * up + in.L;
            upper = upper_mu;
            rate = [lower](double s) { return s - lower; };
            break;
        }
        case TheoremId::Supercritical2BetaMu:
            require(super, id, "varpi > 3");
            hypothesis = two_mu_beta > 1.0;
            lower = in.beta + in.L;
            upper = two_alpha + (2.0 * mu - 1.0 / in.beta) / ct2;
            rate = [lower](double s) { return s - lower; };
            if (!hypothesis) note = "hypothesis 2 beta mu > 1 fails";
            break;
        case TheoremId::Pathwise2D:
            require(in.dim == 2 && in.varpi >= 1.0 && in.varpi <= 3.0, id, "d = 2 and 1 <= varpi <= 3");
            require(in.additive && in.L == 0.0, id, "additive noise (L = 0)");
            lower = 4.0 / (mu * mu) * (in.upsilon_hs_norm_sq + in.f_dual_sq / mu);
            upper = upper_mu;
            rate = [lower](double s) { return s - lower; };
            break;
        case TheoremId::PathwiseCritical:
            require(crit, id, "varpi = 3");
            require(in.additive && in.L == 0.0, id, "additive noise (L = 0)");
            hypothesis = two_mu_beta > 1.0;
            // 0 < sigma <= (mu / (c0 theta^2)) (2 mu - 1/beta), bounds on sigma itself.
            lower = two_alpha;
            upper = two_alpha + mu / ct2 * (2.0 * mu - 1.0 / in.beta);
            rate = [](double s) { return s; };
            if (!hypothesis) note = "hypothesis 2 beta mu > 1 fails";
            break;
        case TheoremId::PathwiseSuperUpvarpi: {
            require(super, id, "varpi > 3");
            require(in.additive && in.L == 0.0, id, "additive noise (L = 0)");
            const double up = compute_upvarpi(mu, in.beta, in.varpi);
            lower = 2.0 * up;
            upper = upper_mu;
            rate = [lower](double s) { return s - lower; };
            break;
        }
        case TheoremId::PathwiseSuperBeta:
            require(super, id, "varpi > 3");
            require(in.additive && in.L == 0.0, id, "additive noise (L = 0)");
            hypothesis = two_mu_beta > 1.0;
            lower = in.beta;
            upper = two_alpha + mu / ct2 * (2.0 * mu - 1.0 / in.beta);
            rate = [lower](double s) { return s - lower; };
            if (!hypothesis) note = "hypothesis 2 beta mu > 1 fails";
            break;
    }

    r.sigma_lower = std::max(0.0, lower - two_alpha);
    r.sigma_upper = upper - two_alpha;
    r.feasible = hypothesis && r.sigma_lower < r.sigma_upper && r.sigma_upper > 0.0;
    if (!r.feasible && note.empty()) note = "window is empty";
    r.note = note;

    std::optional<double> eval_sigma;
    if (in.sigma) {
        const double s = *in.sigma;
        r.sigma_in_window = r.feasible && s > r.sigma_lower && s <= r.sigma_upper && two_alpha + s > lower;
        if (*r.sigma_in_window) eval_sigma = s;
    } else if (r.feasible) {
        eval_sigma = r.sigma_upper;
    }
    if (eval_sigma && rate) r.predicted_rate = rate(two_alpha + *eval_sigma);
    return r;
}

CheckResult check_config(const ThresholdInputs& in) {
    CheckResult out;
    for (TheoremId id : all_theorems()) {
        try {
            out.reports.push_back(sigma_window(id, in));
        } catch (const ConfigError&) {
            // structurally inapplicable
        }
    }
    // Strongest: a stated exponential rate beats an indicative one, which beats polynomial.
    auto score = [](const ThresholdReport& r) {
        if (r.rate_type == RateType::polynomial) return std::make_pair(0, 0.0);
        return std::make_pair(r.rate_indicative ? 1 : 2, r.predicted_rate.value_or(0.0));
    };
    for (std::size_t i = 0; i < out.reports.size(); ++i) {
        const auto& r = out.reports[i];
        const bool applies = r.feasible && r.sigma_in_window.value_or(true);
        if (!applies) continue;
        if (!out.strongest || score(r) > score(out.reports[*out.strongest])) out.strongest = i;
    }
    return out;
}

}  // namespace scbf
