#ifndef CLAB_MODEL_HPP
#define CLAB_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clab/common.hpp"
#include "clab/expr.hpp"

namespace clab {

// Drift field b: R^d -> R^d. Either a parametric builtin or a list of
// expression components; evaluation is pure and allocation-free.
class VectorField {
  public:
    enum class Kind { expressions, linear_pull, cubic_double_well, radial_power };

    // b(x) = -K x
    static VectorField linear_pull(double K, int d);
    // b(x)_i = x_i - x_i^3
    static VectorField cubic_double_well(int d);
    // b(x) = -c0 (delta^2 + |x|^2)^(theta/2) x
    static VectorField radial_power(double c0, double theta, double delta, int d);
    static VectorField zero(int d);
    static VectorField from_expressions(std::vector<expr::NodePtr> components, int d);
    static VectorField parse(std::string_view src, int d);

    void eval(std::span<const double> x, std::span<double> out) const;
    Vec at(const Vec& x) const;
    int dim() const { return d_; }
    Kind kind() const { return kind_; }
    const std::vector<expr::NodePtr>& components() const { return components_; }
    double param(int i) const { return params_[std::size_t(i)]; }

  private:
    VectorField() = default;
    Kind kind_ = Kind::expressions;
    int d_ = 0;
    std::vector<double> params_;
    std::vector<expr::NodePtr> components_;
};

// Diffusion field sigma: R^d -> R^{d x m}.
class MatrixField {
  public:
    enum class Kind { expressions, constant };

    static MatrixField constant(Mat sigma);
    static MatrixField identity(int d, double scale = 1.0);
    // components laid out row-major, d*m entries
    static MatrixField from_expressions(std::vector<expr::NodePtr> components, int d, int m);

    // out is column-major d x m
    void eval(std::span<const double> x, std::span<double> out) const;
    Mat at(const Vec& x) const;
    int rows() const { return d_; }
    int cols() const { return m_; }
    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::constant; }
    const Mat& constant_value() const { return constant_; }
    const std::vector<expr::NodePtr>& components() const { return components_; }

  private:
    MatrixField() = default;
    Kind kind_ = Kind::constant;
    int d_ = 0, m_ = 0;
    Mat constant_;
    std::vector<expr::NodePtr> components_;
};

// Immutable SDE description: dX = b(X) dt + sqrt(2) sigma(X) dB on R^d with
// m-dimensional driving noise.
class ModelSpec {
  public:
    ModelSpec(std::string name, VectorField drift, MatrixField diffusion);

    const std::string& name() const { return name_; }
    int dim() const { return d_; }
    int noise_dim() const { return m_; }
    const VectorField& drift() const { return drift_; }
    const MatrixField& diffusion() const { return diffusion_; }

    void eval_drift(std::span<const double> x, std::span<double> out) const {
        drift_.eval(x, out);
    }
    void eval_diffusion(std::span<const double> x, std::span<double> out) const {
        diffusion_.eval(x, out);
    }
    Vec drift_at(const Vec& x) const { return drift_.at(x); }
    Mat diffusion_at(const Vec& x) const { return diffusion_.at(x); }

  private:
    std::string name_;
    int d_, m_;
    VectorField drift_;
    MatrixField diffusion_;
};

struct GrowthReport {
    double c_hat = 0.0;   // max of (|sigma|_HS^2 + <b,x>) / (1 + |x|^2) over probes
    Vec witness;          // probe attaining the max
    double radius = 0.0;
    int n_probes = 0;
    std::uint64_t seed = 0;
};

// Probes the linear-growth ratio over [-radius, radius]^d (low-discrepancy
// points plus the origin). A probe, not a proof.
GrowthReport check_linear_growth(const ModelSpec& model, double radius, int n_probes,
                                 std::uint64_t seed);

// Builtin scenario registry ("ou", "double_well", "example22", "brownian").
std::vector<std::string> builtin_model_names();
ModelSpec make_builtin_model(std::string_view name, const nlohmann::json& params);

// Scenario (de)serialization; accepts {"builtin":..., "params":...} or an
// explicit {"d","m","drift","diffusion"[,"name"]} description.
ModelSpec model_from_json(const nlohmann::json& spec);
nlohmann::json model_to_json(const ModelSpec& model);

}  // namespace clab

#endif
