#ifndef CLAB_CONFIG_HPP
#define CLAB_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/harness.hpp"
#include "clab/lambda_calc.hpp"
#include "clab/model.hpp"
#include "clab/theory.hpp"

namespace clab {

// Applies "--a.b.c=value" style overrides: the dotted path maps to a JSON
// pointer, the value is parsed as JSON with a fallback to a plain string.
void apply_overrides(nlohmann::json& cfg, const std::vector<std::string>& dotted);

// CONTRACTION_LAB_SEED, when set, replaces the config seed.
void apply_env_seed(nlohmann::json& cfg);

// Structural validation of the full scenario schema (docs/config.schema.json,
// version 1): unknown keys anywhere are rejected; throws ConfigError carrying
// a JSON pointer to the offending node.
void validate_config(const nlohmann::json& cfg);

// Explicit Lyapunov inputs of the theory section, when given.
struct TheoryInputs {
    std::optional<double> k1, k2, r0;  // all three or none
    double box_radius = 3.0;
    int n_pairs = 4096;
    std::optional<double> lambda0;  // empty = pick automatically
    std::optional<double> eb_r0;
    bool envelope = false;

    bool explicit_rate() const { return k1.has_value(); }
};

// A validated scenario: raw JSON (post-override, post-env) plus typed
// builders. Builders re-check cross-field constraints (dimensions, grids)
// and throw ConfigError with pointers.
struct LabConfig {
    nlohmann::json raw;
    std::uint64_t seed = 0;
    int workers = 0;

    static LabConfig from_json(nlohmann::json cfg,
                               const std::vector<std::string>& overrides = {});
    static LabConfig from_file(const std::filesystem::path& path,
                               const std::vector<std::string>& overrides = {});

    bool has(const char* section) const { return raw.contains(section); }
    std::string hash() const;

    ModelSpec build_model() const;
    CouplingKind build_coupling(const ModelSpec& model) const;  // default synchronous
    // require_y0: pair experiments need an explicit second start
    ExperimentConfig build_experiment(const ModelSpec& model, bool require_y0) const;

    TheoryInputs theory_inputs() const;
    double resolve_lambda0(const ModelSpec& model) const;

    // kuwada section
    expr::NodePtr kuwada_observable(const ModelSpec& model) const;
    double kuwada_p() const;
    double kuwada_t() const;
    std::optional<double> kuwada_Kp() const;  // empty = estimate from the model
    std::vector<Vec> kuwada_probes(const ModelSpec& model) const;
    KuwadaOptions kuwada_options() const;

    bool equilibrium_from_mu_hat() const;
    bool want_svg() const;

    // gphi section
    ScalarProfile gphi_profile() const;
    std::vector<double> gphi_r_grid() const;
    std::vector<double> gphi_theta_grid() const;
    double gphi_kappa() const;
    bool gphi_has_curve() const;  // samples + norm_bound + times present
    double gphi_phi_p() const;
    std::pair<double, double> gphi_norm_bound() const;  // {c, delta}
    std::string gphi_samples() const;
    std::vector<double> gphi_times() const;
};

}  // namespace clab

#endif
