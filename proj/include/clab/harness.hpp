#ifndef CLAB_HARNESS_HPP
#define CLAB_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clab/coupling.hpp"
#include "clab/expr.hpp"
#include "clab/model.hpp"
#include "clab/theory.hpp"
#include "clab/young.hpp"

namespace clab {

// Scenario shared by the experiment drivers. `model` is a non-owning
// reference kept alive by the caller for the duration of the run.
struct ExperimentConfig {
    const ModelSpec* model = nullptr;
    CouplingKind coupling;
    Vec x0, y0;
    std::vector<double> times;  // ascending multiples of dt; may start at 0
    double dt = 1e-3;
    int n_paths = 2;
    std::vector<double> p_values{2.0};
    std::vector<YoungFunction> gauges;
    std::vector<std::string> gauge_labels;  // parallel to gauges; may be empty
    // empirical-OT cloud size; 0 = n_paths, capped automatically in d > 1
    // where the assignment solves are cubic
    int n_ot = 0;
    std::uint64_t seed = 0;
    int n_workers = 0;  // 0 = all hardware threads

    void validate() const;
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

// One distance-vs-time curve. The coupling estimator keeps the per-path
// distance matrix (paths x times) so rate fits can bootstrap at path level.
struct ContractionCurve {
    std::string estimator;  // "coupling-upper-bound" | "empirical-OT"
    std::string distance;   // "W1", "W2.5", "Wphi:<label>"
    double p = 0.0;         // 0 marks a gauge distance
    double rho0 = 0.0;      // |x0 - y0|
    std::vector<double> times, value, stderr_;
    std::optional<Mat> path_distances;
    std::optional<YoungFunction> gauge;  // set for gauge distances
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// Both estimators for every requested distance: the coupling mean is a
// certified upper bound on W_p (any coupling dominates the infimum), the
// empirical-OT value between independently simulated endpoint clouds is a
// consistent, upward-biased approximation. Curves are ordered
// [coupling, empirical-OT] per distance, p-values first, then gauges.
std::vector<ContractionCurve> contraction_experiment(const ExperimentConfig& cfg);

struct FitReport {
    double c_hat = 0.0, lambda_hat = 0.0;
    double c_lo = 0.0, c_hi = 0.0;            // bootstrap 95% interval
    double lambda_lo = 0.0, lambda_hi = 0.0;  // bootstrap 95% interval
    double t_burn = 0.0;
    double window_begin = 0.0, window_end = 0.0;
    int n_used = 0;
    int n_bootstrap = 0;
    // filled when a theory report is supplied
    double theory_c = 0.0, theory_rate = 0.0;
    int envelope_violations = -1;  // -1 = no envelope comparison requested

    nlohmann::json to_json() const;
};

// Least squares of log(value) against time on the usable window: times past
// the burn-in (first grid time with value < 0.5 * value(0)) where the value
// exceeds 3 standard errors. Confidence intervals come from a deterministic
// path-level bootstrap when the curve carries per-path distances, otherwise
// from log-normal parametric resampling of the point estimates. When
// `theory` is given, counts grid times violating
//   value <= c * exp(-c1 t) * rho0 + 3 * stderr.
FitReport fit_rate(const ContractionCurve& curve, const RateReport* theory = nullptr);

struct SurvivalCurve {
    std::vector<double> times, survival, stderr_;  // P(T > t), binomial se
    int n_paths = 0;
    int n_censored = 0;  // paths that never coupled within the horizon
    double horizon = 0.0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// Empirical survival of the coupling time under reflection/hybrid coupling;
// no censoring before the horizon, censored tail counted separately.
SurvivalCurve coupling_time_experiment(const ExperimentConfig& cfg);

struct KuwadaOptions {
    double dt = 1e-3;
    int n_paths = 4000;
    std::uint64_t seed = 0;
    int n_workers = 0;
    double eta = 0.0;  // finite-difference half step; 0 = sqrt(MC stderr)
};

struct KuwadaReport {
    double p = 2.0, t = 0.0, K_p = 0.0;
    double eta = 0.0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    std::vector<Vec> probes;
    std::vector<double> lhs;    // |grad P_t f| via common-noise central FD
    std::vector<double> rhs;    // e^{-K_p t} (P_t |grad f|^q)^{1/q}, q = p/(p-1)
    std::vector<double> ratio;  // lhs / rhs (0 when both vanish)
    std::vector<double> error;  // propagated MC + FD error of the ratio
    double max_ratio = 0.0;
    bool pass = false;  // ratio <= 1 + 3 * error at every probe

    nlohmann::json to_json() const;
};

// Gradient-bound check: estimates |grad P_t f| by central finite differences
// of Monte Carlo P_t f with common random numbers across the stencil, and
// P_t |grad f|^{p/(p-1)} by plain Monte Carlo; K_p comes from the caller's
// dissipativity report. The FD bias is estimated from a doubled-step stencil
// and folded into the error budget.
KuwadaReport kuwada_check(const ModelSpec& model, const expr::NodePtr& f, double p, double t,
                          const std::vector<Vec>& probes, double K_p,
                          const KuwadaOptions& opts);

struct EquilibriumCurve {
    std::vector<double> times, value, stderr_;  // W2(delta_x P_t, mu_hat)
    int n_samples = 0;       // atoms in mu_hat and in each fresh cloud
    double spacing = 0.0;    // subsample spacing of the long trajectory
    double burn_in = 0.0;    // discarded initial stretch of the trajectory
    double lambda_rough = 0.0;  // pilot decay rate behind the spacing choice
    bool pilot_ok = false;      // false = pilot fit failed, default rate used
    double floor_estimate = 0.0;  // W2 between the two halves of mu_hat
    double growth_c_hat = 0.0;    // linear-growth probe of the model
    Vec x0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// Equilibrium distance curve: mu_hat is the endpoint cloud of one long
// trajectory subsampled every 10/lambda_rough time units after a burn-in,
// compared against fresh n-path clouds started at x0 (or at the mu_hat atoms
// themselves when start_from_mu_hat is set) for each requested time.
// cfg.n_paths is the cloud size n.
EquilibriumCurve equilibrium_experiment(const ExperimentConfig& cfg,
                                        bool start_from_mu_hat = false);

}  // namespace clab

#endif
