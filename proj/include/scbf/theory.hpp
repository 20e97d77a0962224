#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scbf/dynamics.hpp"
#include "scbf/interpolant.hpp"
#include "scbf/noise.hpp"
#include "scbf/operators.hpp"

namespace scbf {

enum class TheoremId {
    SubcriticalAdditive,
    SubcriticalMultiplicative,
    CriticalGeneralD,
    Critical2D,
    SupercriticalGeneral,
    Supercritical2BetaMu,
    Pathwise2D,
    PathwiseCritical,
    PathwiseSuperUpvarpi,
    PathwiseSuperBeta,
};

const std::vector<TheoremId>& all_theorems();
std::string to_string(TheoremId id);
TheoremId theorem_from_string(const std::string& s);

enum class RateType { exponential, polynomial };
std::string to_string(RateType t);

/// Scalar inputs to every threshold formula.
struct ThresholdInputs {
    int dim = 2;
    double mu = 1.0;
    double alpha = 0.0;
    double beta = 1.0;
    double varpi = 2.0;
    double K = 0.0;
    double K_tilde = 0.0;
    double L = 0.0;
    double upsilon_hs_norm_sq = 0.0;
    double f_dual_sq = 0.0;
    double c0 = 1.0;
    double theta = 1.0;
    double lambda1 = 1.0;
    double domain_measure = 1.0;
    bool additive = true;               ///< noise coefficient independent of the state
    std::optional<double> sigma;        ///< evaluated against the window when present
};

ThresholdInputs make_threshold_inputs(const ModelParams& params, const NoiseConstants& noise, bool additive,
                                      const InterpolantSpec& interp, std::optional<double> sigma = std::nullopt);

/// Admissible nudging window of one theorem. Bounds are on sigma itself:
/// lower < sigma <= upper (sigma_lower = max(0, lower bound on 2 alpha + sigma, minus 2 alpha)).
struct ThresholdReport {
    TheoremId theorem_id = TheoremId::SubcriticalAdditive;
    double sigma_lower = 0.0;
    double sigma_upper = 0.0;
    bool feasible = false;                ///< window nonempty and hypotheses hold
    std::optional<bool> sigma_in_window;  ///< set when inputs carry sigma
    std::optional<double> predicted_rate; ///< at inputs.sigma (or sigma_upper if absent)
    bool rate_indicative = false;         ///< rate is a proxy, not a stated bound
    RateType rate_type = RateType::exponential;
    std::string note;
    ThresholdInputs inputs;
};

/// (varpi - 3)/(2 mu (varpi - 1)) * (4 / (mu beta (varpi - 1)))^(2/(varpi - 3)); varpi > 3.
double compute_upvarpi(double mu, double beta, double varpi);

/// K + |f|^2/mu + {beta(varpi+1)/2}^(-2/(varpi-1)) {(varpi+1)/(varpi-1)}^(-1) L^((varpi+1)/(varpi-1)) |Q|.
double compute_Mhat(double K, double f_dual_norm_sq, double mu, double beta, double varpi, double L,
                    double domain_measure);

/// Throws ConfigError if the theorem's structural hypotheses (dimension,
/// exponent class, additive noise) do not match the inputs.
ThresholdReport sigma_window(TheoremId id, const ThresholdInputs& in);

struct CheckResult {
    std::vector<ThresholdReport> reports;  ///< every theorem whose structure matches
    std::optional<std::size_t> strongest;  ///< index into reports, if any guarantee applies
    bool any_guarantee() const { return strongest.has_value(); }
};

/// Evaluates all structurally applicable theorems at inputs.sigma.
CheckResult check_config(const ThresholdInputs& in);

}  // namespace scbf
