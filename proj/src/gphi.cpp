#include <algorithm>
#include <cmath>
#include <vector>

#include "clab/theory.hpp"

namespace clab {

double g_phi(double t, const YoungFunction& phi, const EmpiricalMeasure& mu_hat,
             const std::function<double(double)>& norm_bound) {
    require(t > 0.0, "g_phi: t must be positive");
    require(static_cast<bool>(norm_bound), "g_phi: norm_bound must be callable");
    const double bound = norm_bound(t);
    require(std::isfinite(bound), "g_phi: norm bound must be finite");
    require(bound >= 1.0, "g_phi: norm bound must be >= 1");
    const double tau = 1.0 / (bound * bound);

    const int n = mu_hat.size();
    const double w = 1.0 / (double(n) * double(n));
    std::vector<double> values, weights;
    values.reserve(std::size_t(n) * (n - 1) / 2 + 1);
    weights.reserve(values.capacity());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            values.push_back((mu_hat.points.row(i) - mu_hat.points.row(j)).norm());
            weights.push_back(2.0 * w);
        }
    values.push_back(0.0);  // the n diagonal pairs
    weights.push_back(double(n) * w);

    if (phi.kind() == YoungFunction::Kind::infinity)
        return *std::max_element(values.begin(), values.end());

    // mean phi(rho/r) <= tau is the unit-ball condition of the gauge norm
    // taken with the rescaled Young function phi/tau
    auto scaled = YoungFunction::custom([&phi, tau](double r) { return phi(r) / tau; },
                                        "rescaled", false);
    return gauge_norm(values, weights, scaled);
}

std::function<double(double)> heat_kernel_norm_bound(double c, double delta) {
    require(c >= 0.0, "heat_kernel_norm_bound: c must be nonnegative");
    require(delta > 1.0, "heat_kernel_norm_bound: delta must exceed 1");
    const double exponent = -delta / (delta - 1.0);
    return [c, exponent](double t) {
        require(t > 0.0, "norm bound evaluated at nonpositive time");
        return std::exp(c + c * std::pow(t, exponent));
    };
}

}  // namespace clab
