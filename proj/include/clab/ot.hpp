#ifndef CLAB_OT_HPP
#define CLAB_OT_HPP

#include <functional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clab/common.hpp"
#include "clab/young.hpp"

namespace clab {

// n uniformly weighted atoms in R^d, one per row.
struct EmpiricalMeasure {
    Mat points;

    explicit EmpiricalMeasure(Mat pts);
    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
};

// A permutation coupling of two equal-size uniform measures: atom i of the
// source is matched to atom permutation[i] of the target.
struct CouplingPlan {
    std::vector<int> permutation;
    double objective = 0.0;
};

bool is_valid_permutation(const std::vector<int>& perm, int n);

struct DistanceResult {
    double value = 0.0;
    CouplingPlan plan;
};

// Exact linear assignment (shortest augmenting paths with dual potentials,
// O(n^3)): minimizes sum_i cost(i, perm[i]); returns the minimal total cost.
double solve_assignment(const Mat& cost, std::vector<int>& perm);

// Exact bottleneck assignment: minimizes max_i cost(i, perm[i]) by binary
// search over the sorted distinct costs with matching feasibility tests.
double solve_bottleneck(const Mat& cost, std::vector<int>& perm);

// ((1/n) sum |x_i - y_perm(i)|^p)^(1/p), exact permutation optimum.
DistanceResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

// min over permutations of max matched Euclidean distance.
DistanceResult wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Orlicz transport distance: inf over plans of the Luxemburg gauge of the
// matched distances. Outer bisection on the gauge level r, each feasibility
// test solving one assignment with cost Phi(rho/r). Resolved to relative
// tolerance tol.
DistanceResult wasserstein_phi(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               const YoungFunction& phi, double tol = 1e-8);

// Exhaustive minimum of (1/n) sum cost(x_i, y_perm(i)) over all n!
// permutations; the oracle the fast solvers are tested against. n <= 7.
double brute_force_w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     const std::function<double(const Vec&, const Vec&)>& cost);

// {value, permutation}
nlohmann::json plan_to_json(const DistanceResult& result);

}  // namespace clab

#endif
