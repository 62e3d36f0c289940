#ifndef CLAB_YOUNG_HPP
#define CLAB_YOUNG_HPP

#include <functional>
#include <span>
#include <string>

namespace clab {

// A Young function: Phi(0) = 0, strictly increasing, Phi(r)/r -> infinity.
// Kinds: power (r^p, evaluated exactly), a user-supplied monotone evaluator,
// and the limiting step function (0 on [0,1], +inf beyond) whose gauge norm
// is the essential supremum.
class YoungFunction {
  public:
    enum class Kind { power, custom, infinity };

    static YoungFunction power(double p);
    static YoungFunction infinity();
    // superlinear = true additionally probes that Phi(r)/r is nondecreasing
    // (membership in the admissible class); pass false for merely monotone
    // evaluators.
    static YoungFunction custom(std::function<double(double)> f, std::string label,
                                bool superlinear = true);

    double operator()(double r) const;
    // Generalized inverse sup{r : Phi(r) <= y}; exact for power, geometric
    // bracket + bisection for custom evaluators.
    double inverse(double y) const;

    Kind kind() const { return kind_; }
    double exponent() const { return p_; }
    const std::string& label() const { return label_; }

  private:
    YoungFunction() = default;
    Kind kind_ = Kind::power;
    double p_ = 1.0;
    std::function<double(double)> f_;
    std::string label_;
};

// Luxemburg gauge inf{r > 0 : sum_i w_i Phi(v_i / r) <= 1} by bisection to
// relative tolerance 1e-10. Uniform weights when `weights` is empty. Returns
// 0 when all values vanish; the infinity kind returns max v_i.
double gauge_norm(std::span<const double> values, std::span<const double> weights,
                  const YoungFunction& phi);
double gauge_norm(std::span<const double> values, const YoungFunction& phi);

}  // namespace clab

#endif
