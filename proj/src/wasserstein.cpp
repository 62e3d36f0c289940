#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/errors.hpp"
#include "clab/ot.hpp"

namespace clab {

EmpiricalMeasure::EmpiricalMeasure(Mat pts) : points(std::move(pts)) {
    require(points.rows() >= 1, "an empirical measure needs at least one point");
    require(points.cols() >= 1, "points must have dimension >= 1");
    if (!points.allFinite()) throw NonFiniteError("empirical measure has non-finite coordinates");
}

namespace {

constexpr int kSortedMatchingCutoff = 64;

void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() != nu.size())
        throw SizeMismatchError("measures must have equal size, got " +
                                std::to_string(mu.size()) + " and " + std::to_string(nu.size()));
    if (mu.dim() != nu.dim())
        throw DimensionMismatchError("measures must share one dimension, got " +
                                     std::to_string(mu.dim()) + " and " +
                                     std::to_string(nu.dim()));
}

Mat pairwise_distances(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const int n = mu.size();
    Mat dist(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist(i, j) = (mu.points.row(i) - nu.points.row(j)).norm();
    return dist;
}

// In one dimension, matching sorted values to sorted values is optimal both
// for every convex cost of the displacement and for the bottleneck objective.
std::vector<int> sorted_matching(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const int n = mu.size();
    auto order_of = [n](const Mat& pts) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return pts(a, 0) < pts(b, 0); });
        return idx;
    };
    auto ix = order_of(mu.points);
    auto iy = order_of(nu.points);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        perm[static_cast<std::size_t>(ix[static_cast<std::size_t>(k)])] =
            iy[static_cast<std::size_t>(k)];
    return perm;
}

double matched_mean_power(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                          const std::vector<int>& perm, double p, double scale) {
    double mean = 0.0;
    const int n = mu.size();
    for (int i = 0; i < n; ++i) {
        double rho = (mu.points.row(i) - nu.points.row(perm[static_cast<std::size_t>(i)])).norm();
        mean += std::pow(rho / scale, p);
    }
    return mean / n;
}

}  // namespace

DistanceResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
    check_pair(mu, nu);
    require(p >= 1.0 && std::isfinite(p), "order p must lie in [1, infinity)");
    const int n = mu.size();

    if (mu.dim() == 1 && n > kSortedMatchingCutoff) {
        auto perm = sorted_matching(mu, nu);
        double dmax = 0.0;
        for (int i = 0; i < n; ++i)
            dmax = std::max(dmax,
                            std::abs(mu.points(i, 0) - nu.points(perm[std::size_t(i)], 0)));
        DistanceResult out;
        out.plan.permutation = std::move(perm);
        out.value = dmax == 0.0 ? 0.0
                                : dmax * std::pow(matched_mean_power(mu, nu, out.plan.permutation,
                                                                     p, dmax),
                                                  1.0 / p);
        out.plan.objective = out.value;
        return out;
    }

    Mat dist = pairwise_distances(mu, nu);
    double dmax = dist.maxCoeff();
    DistanceResult out;
    if (dmax == 0.0) {
        out.plan.permutation.resize(static_cast<std::size_t>(n));
        std::iota(out.plan.permutation.begin(), out.plan.permutation.end(), 0);
        return out;
    }
    // scale to [0, 1] before raising to p so that large orders cannot overflow
    Mat cost = (dist / dmax).array().pow(p);
    double total = solve_assignment(cost, out.plan.permutation);
    out.value = dmax * std::pow(total / n, 1.0 / p);
    out.plan.objective = out.value;
    return out;
}

DistanceResult wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    check_pair(mu, nu);
    const int n = mu.size();
    DistanceResult out;
    if (mu.dim() == 1 && n > kSortedMatchingCutoff) {
        out.plan.permutation = sorted_matching(mu, nu);
        double dmax = 0.0;
        for (int i = 0; i < n; ++i)
            dmax = std::max(dmax, std::abs(mu.points(i, 0) -
                                           nu.points(out.plan.permutation[std::size_t(i)], 0)));
        out.value = out.plan.objective = dmax;
        return out;
    }
    Mat dist = pairwise_distances(mu, nu);
    out.value = solve_bottleneck(dist, out.plan.permutation);
    out.plan.objective = out.value;
    return out;
}

DistanceResult wasserstein_phi(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               const YoungFunction& phi, double tol) {
    check_pair(mu, nu);
    require(tol > 0.0, "tolerance must be positive");
    if (phi.kind() == YoungFunction::Kind::infinity) return wasserstein_inf(mu, nu);
    const int n = mu.size();

    Mat dist = pairwise_distances(mu, nu);
    DistanceResult out;
    if (dist.maxCoeff() == 0.0) {
        out.plan.permutation.resize(static_cast<std::size_t>(n));
        std::iota(out.plan.permutation.begin(), out.plan.permutation.end(), 0);
        return out;
    }

    // feasible(r): some plan keeps the mean of Phi(rho/r) at or below 1;
    // monotone in r, so bisection on r with one assignment solve per probe.
    // Any edge with Phi > n already sinks every plan through it, so costs cap
    // at n + 1; this keeps fast-growing Phi finite without changing the test.
    std::vector<int> probe_perm;
    const double cap = static_cast<double>(n) + 1.0;
    auto feasible = [&](double r) {
        Mat cost = dist.unaryExpr([&](double rho) { return std::min(phi(rho / r), cap); });
        double total = solve_assignment(cost, probe_perm);
        return total / n <= 1.0;
    };

    // every plan's max matched distance is at least the bottleneck value,
    // which bounds the gauge from below; the bottleneck plan bounds it above
    std::vector<int> bottleneck_perm;
    double rho_star = solve_bottleneck(dist, bottleneck_perm);
    if (rho_star == 0.0) {
        // some perfect matching has all-zero distances: that plan's gauge is 0
        out.plan.permutation = std::move(bottleneck_perm);
        return out;
    }
    double lo = rho_star / phi.inverse(static_cast<double>(n));
    double hi = rho_star / phi.inverse(1.0);
    if (!feasible(hi)) {
        int guard = 0;
        while (!feasible(hi)) {
            hi *= 2.0;
            if (++guard > 200) throw BracketFailureError("transport gauge bracket failed");
        }
    }
    std::vector<int> witness = probe_perm;
    while (hi - lo > tol * hi) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            hi = mid;
            witness = probe_perm;
        } else {
            lo = mid;
        }
    }
    out.value = hi;
    out.plan.permutation = std::move(witness);
    out.plan.objective = hi;
    return out;
}

double brute_force_w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     const std::function<double(const Vec&, const Vec&)>& cost) {
    check_pair(mu, nu);
    const int n = mu.size();
    if (n > 7) throw TooLargeError("brute force is limited to n <= 7");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i)
            total += cost(mu.points.row(i).transpose(),
                          nu.points.row(perm[static_cast<std::size_t>(i)]).transpose());
        best = std::min(best, total / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

nlohmann::json plan_to_json(const DistanceResult& result) {
    return nlohmann::json{{"value", result.value}, {"permutation", result.plan.permutation}};
}

}  // namespace clab
