#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/errors.hpp"
#include "clab/ot.hpp"

using namespace clab;

namespace {

EmpiricalMeasure random_measure(std::mt19937& gen, int n, int d, double spread = 1.0) {
    std::normal_distribution<double> normal(0.0, spread);
    Mat pts(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = normal(gen);
    return EmpiricalMeasure(std::move(pts));
}

double recompute_power_objective(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 const std::vector<int>& perm, double p) {
    double mean = 0.0;
    for (int i = 0; i < mu.size(); ++i)
        mean += std::pow((mu.points.row(i) - nu.points.row(perm[std::size_t(i)])).norm(), p);
    return std::pow(mean / mu.size(), 1.0 / p);
}

double brute_bottleneck(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const int n = mu.size();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            worst = std::max(worst,
                             (mu.points.row(i) - nu.points.row(perm[std::size_t(i)])).norm());
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("assignment solver agrees with brute force on small random instances") {
    std::mt19937 gen(7);
    for (int rep = 0; rep < 200; ++rep) {
        int n = 1 + static_cast<int>(gen() % 7);
        int d = 1 + static_cast<int>(gen() % 3);
        auto mu = random_measure(gen, n, d);
        auto nu = random_measure(gen, n, d);
        for (double p : {1.0, 2.0, 3.5}) {
            auto got = wasserstein_p(mu, nu, p);
            double oracle = brute_force_w(mu, nu, [p](const Vec& a, const Vec& b) {
                return std::pow((a - b).norm(), p);
            });
            CHECK(std::pow(got.value, p) ==
                  doctest::Approx(oracle).epsilon(1e-9).scale(std::max(1.0, oracle)));
            REQUIRE(is_valid_permutation(got.plan.permutation, n));
            CHECK(recompute_power_objective(mu, nu, got.plan.permutation, p) ==
                  doctest::Approx(got.value).epsilon(1e-12));
        }
    }
}

TEST_CASE("monotone matching on the line") {
    Mat a(2, 1), b(2, 1);
    a << 0.0, 1.0;
    b << 2.0, 3.0;
    auto res = wasserstein_p(EmpiricalMeasure(a), EmpiricalMeasure(b), 1.0);
    CHECK(res.value == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("identical measures have distance zero with a zero-cost plan") {
    std::mt19937 gen(11);
    auto mu = random_measure(gen, 9, 2);
    for (double p : {1.0, 2.0}) {
        auto res = wasserstein_p(mu, mu, p);
        CHECK(res.value == 0.0);
        CHECK(recompute_power_objective(mu, mu, res.plan.permutation, p) == 0.0);
    }
    CHECK(wasserstein_inf(mu, mu).value == 0.0);
}

TEST_CASE("translating a measure moves it by exactly the shift length") {
    std::mt19937 gen(13);
    auto mu = random_measure(gen, 20, 3);
    Vec v(3);
    v << 0.3, -1.2, 0.5;
    Mat shifted = mu.points;
    shifted.rowwise() += v.transpose();
    EmpiricalMeasure nu(shifted);
    for (double p : {1.0, 2.0, 8.0})
        CHECK(wasserstein_p(mu, nu, p).value == doctest::Approx(v.norm()).epsilon(1e-12));
    CHECK(wasserstein_inf(mu, nu).value == doctest::Approx(v.norm()).epsilon(1e-12));
}

TEST_CASE("transport distances are symmetric") {
    std::mt19937 gen(17);
    for (int rep = 0; rep < 10; ++rep) {
        auto mu = random_measure(gen, 12, 2);
        auto nu = random_measure(gen, 12, 2);
        for (double p : {1.0, 2.0})
            CHECK(wasserstein_p(mu, nu, p).value ==
                  doctest::Approx(wasserstein_p(nu, mu, p).value).epsilon(1e-12));
        CHECK(wasserstein_inf(mu, nu).value == wasserstein_inf(nu, mu).value);
    }
}

TEST_CASE("triangle inequality holds on random triples") {
    std::mt19937 gen(19);
    for (int rep = 0; rep < 25; ++rep) {
        auto a = random_measure(gen, 8, 2);
        auto b = random_measure(gen, 8, 2);
        auto c = random_measure(gen, 8, 2);
        for (double p : {1.0, 2.0}) {
            double ac = wasserstein_p(a, c, p).value;
            double ab = wasserstein_p(a, b, p).value;
            double bc = wasserstein_p(b, c, p).value;
            CHECK(ac <= ab + bc + 1e-9);
        }
        double ac = wasserstein_inf(a, c).value;
        CHECK(ac <= wasserstein_inf(a, b).value + wasserstein_inf(b, c).value + 1e-9);
    }
}

TEST_CASE("W_p grows with p and approaches the bottleneck value") {
    std::mt19937 gen(23);
    for (int n : {8, 24}) {
        auto mu = random_measure(gen, n, 2);
        auto nu = random_measure(gen, n, 2);
        double prev = 0.0;
        for (double p : {1.0, 1.5, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0}) {
            double w = wasserstein_p(mu, nu, p).value;
            CHECK(w >= prev - 1e-9);
            prev = w;
        }
        double winf = wasserstein_inf(mu, nu).value;
        CHECK(winf >= prev - 1e-9);
        // sharp sandwich: winf * n^(-1/p) <= W_p <= winf
        double w64 = wasserstein_p(mu, nu, 64.0).value;
        CHECK(w64 <= winf * (1.0 + 1e-9));
        CHECK(w64 >= winf * std::pow(n, -1.0 / 64.0) * (1.0 - 1e-9));
        // by p = 256 the residual factor n^(1/p) is under 2% for these sizes
        CHECK(std::abs(wasserstein_p(mu, nu, 256.0).value - winf) <= 0.02 * winf);
    }
}

TEST_CASE("bottleneck solver agrees with exhaustive minimax") {
    std::mt19937 gen(29);
    for (int rep = 0; rep < 60; ++rep) {
        int n = 1 + static_cast<int>(gen() % 7);
        auto mu = random_measure(gen, n, 2);
        auto nu = random_measure(gen, n, 2);
        auto got = wasserstein_inf(mu, nu);
        CHECK(got.value == brute_bottleneck(mu, nu));
        REQUIRE(is_valid_permutation(got.plan.permutation, n));
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, (mu.points.row(i) -
                                     nu.points.row(got.plan.permutation[std::size_t(i)]))
                                        .norm());
        CHECK(worst == got.value);
    }
}

TEST_CASE("sorted matching fast path equals the generic solver in one dimension") {
    std::mt19937 gen(31);
    const int n = 101;  // above the fast-path cutoff
    auto mu = random_measure(gen, n, 1);
    auto nu = random_measure(gen, n, 1);
    Mat dist(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist(i, j) = std::abs(mu.points(i, 0) - nu.points(j, 0));
    for (double p : {1.0, 2.0}) {
        double dmax = dist.maxCoeff();
        Mat cost = (dist / dmax).array().pow(p);
        std::vector<int> perm;
        double total = solve_assignment(cost, perm);
        double generic = dmax * std::pow(total / n, 1.0 / p);
        CHECK(wasserstein_p(mu, nu, p).value == doctest::Approx(generic).epsilon(1e-10));
    }
    std::vector<int> perm;
    CHECK(wasserstein_inf(mu, nu).value ==
          doctest::Approx(solve_bottleneck(dist, perm)).epsilon(1e-12));
}

TEST_CASE("Orlicz transport distance is consistent across methods") {
    std::mt19937 gen(37);
    for (int n : {4, 9, 16}) {
        auto mu = random_measure(gen, n, 2);
        auto nu = random_measure(gen, n, 2);
        for (double p : {1.0, 2.0, 4.0}) {
            auto via_phi = wasserstein_phi(mu, nu, YoungFunction::power(p), 1e-9);
            auto direct = wasserstein_p(mu, nu, p);
            CHECK(via_phi.value == doctest::Approx(direct.value).epsilon(1e-6));
            REQUIRE(is_valid_permutation(via_phi.plan.permutation, n));
            // the witness plan's own gauge lies within the bisection bracket
            std::vector<double> matched(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                matched[std::size_t(i)] =
                    (mu.points.row(i) - nu.points.row(via_phi.plan.permutation[std::size_t(i)]))
                        .norm();
            CHECK(gauge_norm(matched, YoungFunction::power(p)) ==
                  doctest::Approx(via_phi.value).epsilon(1e-6));
        }
    }
}

TEST_CASE("Orlicz transport limit cases") {
    std::mt19937 gen(41);
    auto mu = random_measure(gen, 6, 2);
    auto exp1 = YoungFunction::custom([](double r) { return std::expm1(r); }, "e^r - 1");
    CHECK(wasserstein_phi(mu, mu, exp1).value == 0.0);

    // single atoms: the only coupling gives |x - y| / Phi^{-1}(1)
    Mat x(1, 2), y(1, 2);
    x << 0.0, 0.0;
    y << 3.0, 4.0;
    auto single = wasserstein_phi(EmpiricalMeasure(x), EmpiricalMeasure(y), exp1, 1e-10);
    CHECK(single.value == doctest::Approx(5.0 / std::log(2.0)).epsilon(1e-8));

    // the step-function kind is the bottleneck distance
    auto nu = random_measure(gen, 6, 2);
    CHECK(wasserstein_phi(mu, nu, YoungFunction::infinity()).value ==
          wasserstein_inf(mu, nu).value);
}

TEST_CASE("brute force oracle guards its own domain") {
    std::mt19937 gen(43);
    auto mu = random_measure(gen, 8, 2);
    auto nu = random_measure(gen, 8, 2);
    auto cost = [](const Vec& a, const Vec& b) { return (a - b).norm(); };
    CHECK_THROWS_AS(brute_force_w(mu, nu, cost), TooLargeError);

    Mat x(1, 1), y(1, 1);
    x << 1.0;
    y << 4.0;
    CHECK(brute_force_w(EmpiricalMeasure(x), EmpiricalMeasure(y), cost) == 3.0);

    Mat a(2, 1), b(2, 1);
    a << 0.0, 2.0;
    b << 1.0, 5.0;
    auto sq = [](const Vec& u, const Vec& v) { return (u - v).squaredNorm(); };
    // matchings: {1, 9} mean 5 vs {25, 1} mean 13
    CHECK(brute_force_w(EmpiricalMeasure(a), EmpiricalMeasure(b), sq) == 5.0);
}

TEST_CASE("plans serialize to {value, permutation}") {
    std::mt19937 gen(47);
    auto mu = random_measure(gen, 5, 2);
    auto nu = random_measure(gen, 5, 2);
    auto res = wasserstein_p(mu, nu, 2.0);
    auto j = plan_to_json(res);
    CHECK(j.at("value").get<double>() == res.value);
    CHECK(j.at("permutation").get<std::vector<int>>() == res.plan.permutation);
}

TEST_CASE("measure and pair validation") {
    CHECK_THROWS_AS(EmpiricalMeasure(Mat(0, 2)), Error);
    Mat bad(1, 1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(EmpiricalMeasure{bad}, NonFiniteError);

    std::mt19937 gen(53);
    auto mu = random_measure(gen, 4, 2);
    auto nu = random_measure(gen, 5, 2);
    CHECK_THROWS_AS(wasserstein_p(mu, nu, 2.0), SizeMismatchError);
    auto other_dim = random_measure(gen, 4, 3);
    CHECK_THROWS_AS(wasserstein_p(mu, other_dim, 2.0), DimensionMismatchError);
    CHECK_THROWS_AS(wasserstein_p(mu, mu, 0.5), Error);
}
