#ifndef CLAB_LAMBDA_CALC_HPP
#define CLAB_LAMBDA_CALC_HPP

#include <functional>
#include <string>

#include "clab/common.hpp"

namespace clab {

// Increasing positive scalar profile on (0, inf): either the builtin power
// family c1 * r^eps (c1, eps > 0) or a user-supplied callable, which must be
// finite at 0 and strictly increasing (probed on a log grid).
class ScalarProfile {
  public:
    static ScalarProfile power(double c1, double eps);
    static ScalarProfile custom(std::function<double(double)> f, std::string label);

    double operator()(double r) const;
    bool is_power() const { return power_; }
    double coeff() const { return c1_; }
    double exponent() const { return eps_; }
    const std::string& label() const { return label_; }

  private:
    ScalarProfile() = default;
    bool power_ = true;
    double c1_ = 1.0, eps_ = 1.0;
    std::function<double(double)> f_;
    std::string label_;
};

// Scalar rate functions built from the profile Psi1:
//   lambda1(r) = (1/sqrt r) * integral_0^{sqrt r} Psi1(u) du     (increasing)
//   lambda2(r) = integral_r^inf ds / (sqrt s integral_0^{sqrt s} Psi1(u) du)
//                                                                (decreasing)
// evaluated by adaptive quadrature; for the power family lambda2's tail
// beyond the quadrature window is appended in closed form, and the inverses
// use the closed-form expressions (bisection for custom profiles). The
// constructor verifies that lambda2's tail converges on doubling intervals
// and throws DivergentTailError otherwise.
class LambdaCalculus {
  public:
    explicit LambdaCalculus(ScalarProfile psi1);

    double lambda1(double r) const;
    double lambda2(double r) const;

    // generalized inverses: inf{s : lambda1(s) >= y} and inf{s : lambda2(s) <= y}
    double lambda1_inv(double y) const;
    double lambda2_inv(double y) const;

    // H(theta) = integral_0^1 (theta/h(r)) {1 + lambda1_inv(theta/h(r))
    //            + lambda2_inv(h(r)/theta)} dr  with  h(r) = r^kappa.
    // Throws DivergentTailError when the endpoint singularity at r = 0 is
    // non-integrable (dyadic contributions stop decaying).
    double H(double theta, double kappa = 0.5) const;

    const ScalarProfile& psi1() const { return psi1_; }

  private:
    double inner_integral(double u) const;  // integral_0^u Psi1
    ScalarProfile psi1_;
};

}  // namespace clab

#endif
