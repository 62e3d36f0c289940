// End-to-end gate: every release-blocking property of the laboratory, each
// checked at its stated tolerance against an independent oracle. One line of
// output per criterion; exit 0 only when all of them hold.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/coupling.hpp"
#include "clab/expr.hpp"
#include "clab/harness.hpp"
#include "clab/lambda_calc.hpp"
#include "clab/lowdisc.hpp"
#include "clab/model.hpp"
#include "clab/ot.hpp"
#include "clab/theory.hpp"
#include "clab/young.hpp"

using namespace clab;
using nlohmann::json;

namespace {

int g_failed = 0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

template <class Body>
void criterion(int idx, const char* name, double budget_s, Body body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && secs >= budget_s) {
        o.pass = false;
        o.detail += fmt(" [over %.0fs budget]", budget_s);
    }
    if (!o.pass) ++g_failed;
    std::printf("[%2d] %-46s %s  %s (%.1fs)\n", idx, name, o.pass ? "pass" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
}

Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// --- 1: synchronous coupling on the linear-pull model is exact -----------------

Outcome ou_exact_contraction() {
    ModelSpec model = make_builtin_model("ou", json{{"d", 1}, {"K", 1.0}});
    ExperimentConfig cfg;
    cfg.model = &model;
    cfg.coupling = CouplingKind::synchronous();
    cfg.x0 = vec1(1.0);
    cfg.y0 = vec1(0.0);  // rho0 = 1
    cfg.times = {0.0, 0.5, 1.0};
    cfg.dt = 1e-3;
    cfg.n_paths = 8;
    cfg.p_values = {1.0, 2.0, 5.0};
    cfg.seed = 101;
    auto curves = contraction_experiment(cfg);

    const double target = std::exp(-1.0);
    double worst = 0.0;
    int checked = 0;
    for (const auto& curve : curves) {
        if (curve.estimator != "coupling-upper-bound") continue;
        ++checked;
        worst = std::max(worst, rel_err(curve.value.back(), target));
    }
    return {checked == 3 && worst <= 5e-3, fmt("max rel err %.2e vs e^-1", worst)};
}

// --- 2: coupling-time law of driftless reflection -------------------------------

Outcome reflection_survival() {
    ModelSpec model = make_builtin_model("brownian", json{{"d", 1}});
    ExperimentConfig cfg;
    cfg.model = &model;
    cfg.coupling = CouplingKind::reflection(1.0);
    cfg.x0 = vec1(0.5);
    cfg.y0 = vec1(-0.5);  // rho0 = 1
    cfg.times = {0.25, 0.5, 1.0, 2.0};
    cfg.dt = 1e-4;
    cfg.n_paths = 100000;
    cfg.seed = 202;
    SurvivalCurve sc = coupling_time_experiment(cfg);

    bool pass = true;
    double worst = 0.0;  // |deviation| in stderr units
    for (std::size_t k = 0; k < sc.times.size(); ++k) {
        const double oracle = std::erf(1.0 / (4.0 * std::sqrt(sc.times[k])));
        const double dev = std::abs(sc.survival[k] - oracle);
        pass = pass && dev <= 3.0 * sc.stderr_[k];
        worst = std::max(worst, dev / sc.stderr_[k]);
    }
    return {pass, fmt("max |dev| %.2f stderr over 4 times", worst)};
}

// --- 3: assignment solvers against exhaustive search ----------------------------

Mat random_cloud(std::mt19937_64& gen, int n, int d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat pts(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = normal(gen);
    return pts;
}

// independent exhaustive optimum: mean p-cost and bottleneck over all
// permutations (distinct from the module's own brute_force_w)
std::pair<double, double> exhaustive_wp_winf(const Mat& x, const Mat& y, double p) {
    const int n = static_cast<int>(x.rows());
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    double best_p = std::numeric_limits<double>::infinity();
    double best_inf = best_p;
    do {
        double acc = 0.0, worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const double rho = (x.row(i) - y.row(perm[static_cast<std::size_t>(i)])).norm();
            acc += std::pow(rho, p);
            worst = std::max(worst, rho);
        }
        best_p = std::min(best_p, acc / n);
        best_inf = std::min(best_inf, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {std::pow(best_p, 1.0 / p), best_inf};
}

Outcome ot_oracle_equivalence() {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> pick_n(1, 6), pick_d(1, 3);
    double worst = 0.0, worst_phi = 0.0;
    bool pass = true;

    for (int inst = 0; inst < 200; ++inst) {
        const int n = pick_n(gen), d = pick_d(gen);
        EmpiricalMeasure mu(random_cloud(gen, n, d)), nu(random_cloud(gen, n, d));
        for (double p : {1.0, 2.0, 3.0}) {
            auto [wp, winf] = exhaustive_wp_winf(mu.points, nu.points, p);
            const double got = wasserstein_p(mu, nu, p).value;
            const double module_oracle = std::pow(
                brute_force_w(mu, nu,
                              [p](const Vec& a, const Vec& b) {
                                  return std::pow((a - b).norm(), p);
                              }),
                1.0 / p);
            const double err = std::max(std::abs(got - wp), std::abs(got - module_oracle)) /
                               std::max(1.0, wp);
            worst = std::max(worst, err);
            if (p == 1.0) {
                const double errinf = std::abs(wasserstein_inf(mu, nu).value - winf) /
                                      std::max(1.0, winf);
                worst = std::max(worst, errinf);
            }
        }
    }
    pass = pass && worst <= 1e-9;

    for (int inst = 0; inst < 50; ++inst) {
        const int n = 2 + inst % 15, d = 1 + inst % 3;
        EmpiricalMeasure mu(random_cloud(gen, n, d)), nu(random_cloud(gen, n, d));
        for (double p : {1.0, 2.0, 3.0}) {
            const double wp = wasserstein_p(mu, nu, p).value;
            const double wphi = wasserstein_phi(mu, nu, YoungFunction::power(p), 1e-9).value;
            worst_phi = std::max(worst_phi, std::abs(wphi - wp) / std::max(1.0, wp));
        }
    }
    pass = pass && worst_phi <= 1e-6;
    return {pass, fmt("solver err %.1e, gauge err %.1e", worst, worst_phi)};
}

// --- 4: the power gauge norm is the L^p norm ------------------------------------

Outcome gauge_norm_is_lp() {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> pick_n(1, 64);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double ps[] = {1.0, 1.5, 2.0, 3.0, 5.0};
    double worst = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const int n = pick_n(gen);
        std::vector<double> v(static_cast<std::size_t>(n)), w;
        for (double& vi : v) vi = 0.05 + 4.0 * unif(gen);
        if (inst % 2 == 0) {  // half the measures carry random weights
            w.resize(static_cast<std::size_t>(n));
            double tot = 0.0;
            for (double& wi : w) tot += (wi = 0.1 + unif(gen));
            for (double& wi : w) wi /= tot;
        }
        const double p = ps[inst % 5];
        double mean_pow = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            mean_pow += (w.empty() ? 1.0 / n : w[i]) * std::pow(v[i], p);
        const double lp = std::pow(mean_pow, 1.0 / p);
        const double gauge = w.empty() ? gauge_norm(v, YoungFunction::power(p))
                                       : gauge_norm(v, w, YoungFunction::power(p));
        worst = std::max(worst, rel_err(gauge, lp));
    }
    return {worst <= 1e-9, fmt("max rel err %.1e over 1000 measures", worst)};
}

// --- 5: the concave-modification constants and the key inequality ----------------

Outcome lyapunov_certification() {
    const double K1 = 2.0, K2 = 1.0, r0 = 2.0 * std::numbers::sqrt2;
    RateReport rate = lyapunov_constants(K1, K2, r0);

    bool pass = rel_err(rate.N, 3.0 * std::numbers::sqrt2) <= 1e-12;
    pass = pass && rel_err(rate.epsilon, 3.0 * std::numbers::sqrt2 * std::exp(-12.0)) <= 1e-12;

    double margin = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 10000; ++k) {
        const double r = r0 * k / 10000.0;
        const double lhs =
            4.0 * rate.N * rate.N / (r * (rate.epsilon * std::exp(rate.N * r) + rate.N));
        margin = std::min(margin, lhs / (K1 + K2));
    }
    pass = pass && margin >= 1.0 - 1e-9;

    bool sandwich = true;
    for (int k = 0; k <= 300; ++k) {
        const double r = std::pow(10.0, -6.0 + 9.0 * k / 300.0);
        const double rb = rate.rho_bar(r);
        sandwich = sandwich && rb >= rate.epsilon * r * (1.0 - 1e-12) &&
                   rb <= (rate.N + rate.epsilon) * r * (1.0 + 1e-12);
    }
    pass = pass && sandwich && rate.c1 > 0.0;
    return {pass, fmt("key ineq margin %.6f, c1 %.3e", margin, rate.c1)};
}

// --- 6: double-well mean distance sits under the certified envelope --------------

Outcome double_well_end_to_end() {
    ModelSpec model = make_builtin_model("double_well", json{{"d", 1}});
    const double r0 = 2.0 * std::numbers::sqrt2;
    RateReport rate = lyapunov_constants(2.0, 1.0, r0);

    ExperimentConfig cfg;
    cfg.model = &model;
    const double lambda0 = pick_lambda0(model, 3.0, 512, 303);
    cfg.coupling = CouplingKind::hybrid(lambda0, CutoffProfile{r0});
    cfg.x0 = vec1(0.5);
    cfg.y0 = vec1(-0.5);  // rho0 = 1
    cfg.times.clear();
    for (int k = 0; k <= 40; ++k) cfg.times.push_back(0.5 * k);  // [0, 20]
    cfg.dt = 1e-3;
    cfg.n_paths = 10000;
    cfg.p_values = {1.0};
    cfg.seed = 303;
    auto curves = contraction_experiment(cfg);

    const ContractionCurve* mean_curve = nullptr;
    for (const auto& c : curves)
        if (c.estimator == "coupling-upper-bound" && c.p == 1.0) mean_curve = &c;
    if (mean_curve == nullptr) return {false, "mean-distance curve missing"};

    bool envelope = true;
    for (std::size_t k = 0; k < mean_curve->times.size(); ++k)
        envelope = envelope &&
                   mean_curve->value[k] <= rate.c * std::exp(-rate.c1 * mean_curve->times[k]) +
                                               3.0 * mean_curve->stderr_[k];
    FitReport fit = fit_rate(*mean_curve, &rate);
    const bool pass = envelope && fit.envelope_violations == 0 && fit.lambda_hat > 0.0 &&
                      fit.lambda_lo > 0.0;
    return {pass, fmt("lambda %.3f [lo %.3f]", fit.lambda_hat, fit.lambda_lo)};
}

// --- 7: the reflected-noise perturbation bound on random elliptic fields ---------

Outcome ep_matrix_inequality() {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> freq(0.5, 2.0), phase(0.0, 6.28);
    int total = 0, violations = 0, flagged = 0;
    for (int field = 0; field < 20; ++field) {
        char s00[64], s01[64], s10[64], s11[64];
        std::snprintf(s00, sizeof s00, "2 + 0.3*sin(%.4f*x1 + %.4f)", freq(gen), phase(gen));
        std::snprintf(s01, sizeof s01, "0.2*cos(%.4f*x2 + %.4f)", freq(gen), phase(gen));
        std::snprintf(s10, sizeof s10, "0.2*sin(%.4f*x1 + %.4f)", freq(gen), phase(gen));
        std::snprintf(s11, sizeof s11, "2 + 0.3*cos(%.4f*x2 + %.4f)", freq(gen), phase(gen));
        json spec{{"name", "random-elliptic"},
                  {"d", 2},
                  {"m", 2},
                  {"drift", json::array({"0", "0"})},
                  {"diffusion", json::array({json::array({s00, s01}), json::array({s10, s11})})}};
        ModelSpec model = model_from_json(spec);
        auto pairs = sample_pairs(2, 3.0, 500, 404 + static_cast<std::uint64_t>(field));
        EpReport rep = check_ep_inequality(model, pairs, 0.8);
        total += rep.n_pairs;
        violations += rep.n_violations_safe;
        flagged += rep.n_flagged;
    }
    const bool pass = total == 10000 && violations == 0 && flagged == 0;
    return {pass, fmt("%g violations / %g pairs", double(violations), double(total))};
}

// --- 8: rate-function quadrature against power closed forms ----------------------

Outcome lambda_closed_forms() {
    LambdaCalculus calc(ScalarProfile::power(1.0, 2.0));
    double worst = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double r = std::pow(10.0, -3.0 + 6.0 * k / 200.0);
        worst = std::max(worst, rel_err(calc.lambda1(r), r / 3.0));
        worst = std::max(worst, rel_err(calc.lambda2(r), 3.0 / r));
        worst = std::max(worst, rel_err(calc.lambda1_inv(r / 3.0), r));
        worst = std::max(worst, rel_err(calc.lambda2_inv(3.0 / r), r));
    }
    return {worst <= 1e-8, fmt("max rel err %.1e on r in [1e-3, 1e3]", worst)};
}

// --- 9: gradient bound of the semigroup under common-noise differencing ----------

Outcome kuwada_gradient_bound() {
    ModelSpec model = make_builtin_model("ou", json{{"d", 1}, {"K", 1.0}});
    LowDiscrepancy sampler(1, 505);
    std::vector<Vec> probes;
    for (int i = 0; i < 20; ++i) probes.push_back(sampler.next_in_box(2.0));

    KuwadaOptions opts;
    opts.dt = 2e-3;
    opts.n_paths = 2000;
    opts.seed = 505;
    KuwadaReport rep = kuwada_check(model, expr::parse("sin(x1)", 1), 2.0, 0.5, probes, 1.0,
                                    opts);

    KuwadaReport lin = kuwada_check(model, expr::parse("x1", 1), 2.0, 0.5, probes, 1.0, opts);
    double lin_worst = 0.0;
    for (double r : lin.ratio) lin_worst = std::max(lin_worst, std::abs(r - 1.0));

    const bool pass = rep.pass && lin_worst <= 0.01;
    return {pass, fmt("sine max ratio %.4f, linear |ratio-1| %.1e", rep.max_ratio, lin_worst)};
}

// --- 10: distance to equilibrium against the Gaussian closed form ----------------

Outcome equilibrium_distance() {
    ModelSpec model = make_builtin_model("ou", json{{"d", 1}, {"K", 1.0}});
    ExperimentConfig cfg;
    cfg.model = &model;
    cfg.x0 = vec1(1.5);
    cfg.times = {0.5, 1.0, 2.0};
    cfg.dt = 1e-3;
    cfg.n_paths = 4096;
    cfg.seed = 606;
    EquilibriumCurve curve = equilibrium_experiment(cfg);

    bool pass = true;
    double worst = 0.0;  // deviation over tolerance
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        const double t = curve.times[k];
        const double mean_gap = 1.5 * std::exp(-t);
        const double sd_gap = 1.0 - std::sqrt(1.0 - std::exp(-2.0 * t));
        const double closed = std::sqrt(mean_gap * mean_gap + sd_gap * sd_gap);
        const double tol = 3.0 * (curve.stderr_[k] + 1.0 / std::sqrt(4096.0));
        const double ratio = std::abs(curve.value[k] - closed) / tol;
        pass = pass && ratio <= 1.0;
        worst = std::max(worst, ratio);
    }
    return {pass, fmt("max |dev|/tol %.2f at n=4096", worst)};
}

}  // namespace

int main() {
    std::printf("release gate: 10 criteria\n");
    criterion(1, "synchronous linear-pull contraction is exact", 1.0, ou_exact_contraction);
    criterion(2, "reflection coupling-time law (1e5 paths)", 60.0, reflection_survival);
    criterion(3, "transport solvers match exhaustive search", 30.0, ot_oracle_equivalence);
    criterion(4, "power gauge norm equals the L^p norm", 0.0, gauge_norm_is_lp);
    criterion(5, "concave-modification certificate", 0.0, lyapunov_certification);
    criterion(6, "double-well decay under certified envelope", 300.0, double_well_end_to_end);
    criterion(7, "reflected-noise perturbation bound", 0.0, ep_matrix_inequality);
    criterion(8, "rate-function quadrature closed forms", 0.0, lambda_closed_forms);
    criterion(9, "semigroup gradient bound at 20 probes", 0.0, kuwada_gradient_bound);
    criterion(10, "equilibrium distance matches Gaussian form", 0.0, equilibrium_distance);
    if (g_failed == 0) {
        std::printf("all criteria pass\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", g_failed);
    return 1;
}
