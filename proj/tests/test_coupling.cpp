#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/coupling.hpp"
#include "clab/errors.hpp"
#include "clab/model.hpp"
#include "clab/rng.hpp"

using namespace clab;
using nlohmann::json;

namespace {

ModelSpec ou_model(int d, double K, double sigma_scale) {
    return make_builtin_model("ou", json{{"d", d}, {"K", K}, {"sigma_scale", sigma_scale}});
}

ModelSpec brownian_model(int d) { return make_builtin_model("brownian", json{{"d", d}}); }

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("cutoff profile is a C1 bump between r0 and r0+1") {
    CutoffProfile cut{2.0};
    CHECK(cut.eval(0.0).first == 1.0);
    CHECK(cut.eval(2.0).first == 1.0);
    CHECK(cut.eval(2.0).second == 0.0);
    CHECK(cut.eval(3.0).first == 0.0);
    CHECK(cut.eval(3.0).second == 1.0);
    CHECK(cut.eval(17.0).first == 0.0);
    // midpoint: smoothstep(0.5) = 0.5, so h = cos(pi/4)
    CHECK(cut.eval(2.5).first == doctest::Approx(std::numbers::sqrt2 / 2.0).epsilon(1e-14));
    CHECK(cut.eval(2.5).second == doctest::Approx(std::numbers::sqrt2 / 2.0).epsilon(1e-14));
    for (double r = 0.0; r < 4.0; r += 0.01) {
        auto [h, g] = cut.eval(r);
        CHECK(h * h + g * g == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(h >= 0.0);
        CHECK(g >= 0.0);
    }
    // one-sided slopes vanish at both junctions => C1 across them
    double eps = 1e-6;
    CHECK(std::abs(cut.eval(2.0 + eps).first - 1.0) / eps < 1e-4);
    CHECK(std::abs(cut.eval(3.0 - eps).first - 0.0) / eps < 1e-4);
    // strictly decreasing inside
    CHECK(cut.eval(2.3).first > cut.eval(2.7).first);
}

TEST_CASE("declared-coupling threshold scales like lambda0 sqrt(dt)") {
    auto kind = CouplingKind::reflection(2.0);
    double expect = 0.58259769579233 * 2.0 * std::numbers::sqrt2 * 2.0 * 0.01;
    CHECK(kind.declare_threshold(1e-4) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(CouplingKind::synchronous().declare_threshold(1e-4) == 0.0);
    kind.declare_factor = 1.0;
    CHECK(kind.declare_threshold(1e-4) ==
          doctest::Approx(2.0 * std::numbers::sqrt2 * 2.0 * 0.01).epsilon(1e-14));
}

TEST_CASE("psd_sqrt_shifted computes the shifted matrix square root") {
    Mat a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    Mat s0 = psd_sqrt_shifted(a, 1.0);  // a - I has eigenvalues {0, 2}
    Mat back = s0 * s0.transpose();
    Mat expect = a - Mat::Identity(2, 2);
    CHECK((back - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s0 - s0.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    // exact boundary: lambda0^2 equals the smallest eigenvalue
    Mat id = Mat::Identity(3, 3);
    Mat z = psd_sqrt_shifted(id, 1.0);
    CHECK(z.cwiseAbs().maxCoeff() < 1e-7);

    CHECK_THROWS_AS(psd_sqrt_shifted(id, 2.0), EigenvalueViolationError);
}

TEST_CASE("synchronous coupling contracts an OU pair deterministically") {
    auto model = ou_model(3, 1.0, 1.0);
    Vec x0(3), y0(3);
    x0 << 1.3, -0.4, 2.0;
    y0 << 0.5, 0.1, -1.0;
    double rho0 = (x0 - y0).norm();
    double dt = 1e-3;
    auto path = simulate_pair(model, CouplingKind::synchronous(), x0, y0, 1.0, dt, 99,
                              SimOptions{.record_stride = 100});
    REQUIRE(path.times.size() == 11);
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        double steps = path.times[k] / dt;
        double expect = rho0 * std::pow(1.0 - dt, steps);
        CHECK(path.rho[k] == doctest::Approx(expect).epsilon(1e-11));
    }
    CHECK_FALSE(path.coupling_time.has_value());
    CHECK_FALSE(path.diverged);
}

TEST_CASE("reflection step reproduces the documented update rule") {
    // sigma = sqrt(2) I and lambda0 = 1 give sigma0 = I
    auto model = ou_model(2, 1.0, std::numbers::sqrt2);
    double dt = 1e-3, c = std::sqrt(2.0 * dt);
    Vec x0 = vec2(0.0, 0.0), y0 = vec2(1.0, 0.0);

    CounterRng rng(4242, NoiseStream::pair_simulation);
    std::vector<double> xi(4);
    rng.fill_normals(0, 0, xi);

    auto path = simulate_pair(model, CouplingKind::reflection(1.0), x0, y0, dt, dt, 4242,
                              SimOptions{.record_stride = 1, .record_states = true});
    REQUIRE(path.times.size() == 2);
    REQUIRE(path.x_states.has_value());

    // e = (x - y)/rho = (-1, 0); reflected second block = (-xi2, xi3)
    Vec ex = vec2(0.0 + c * (xi[0] + xi[2]), 0.0 + c * (xi[1] + xi[3]));
    Vec ey = vec2(1.0 - dt + c * (xi[0] - xi[2]), 0.0 + c * (xi[1] + xi[3]));
    for (int i = 0; i < 2; ++i) {
        CHECK((*path.x_states)(1, i) == doctest::Approx(ex[i]).epsilon(1e-12));
        CHECK((*path.y_states)(1, i) == doctest::Approx(ey[i]).epsilon(1e-12));
    }
    CHECK(path.rho[1] == doctest::Approx((ex - ey).norm()).epsilon(1e-12));
    // the difference moves only along e: rho_new = |rho0 - dt*rho0... (drift) - 2 c xi2|
    CHECK(path.rho[1] == doctest::Approx(std::abs(1.0 - dt - 2.0 * c * xi[2])).epsilon(1e-12));
}

TEST_CASE("hybrid step blends the reflected and synchronous channels") {
    auto model = ou_model(2, 1.0, std::numbers::sqrt2);
    double dt = 1e-3, c = std::sqrt(2.0 * dt);
    Vec x0 = vec2(0.0, 0.0), y0 = vec2(1.0, 0.0);  // rho = 1, r0 = 0.5 => u = 0.5
    double h = std::cos(std::numbers::pi / 4.0), g = std::sin(std::numbers::pi / 4.0);

    CounterRng rng(7, NoiseStream::pair_simulation);
    std::vector<double> xi(6);
    rng.fill_normals(0, 0, xi);

    auto kind = CouplingKind::hybrid(1.0, CutoffProfile{0.5});
    auto path = simulate_pair(model, kind, x0, y0, dt, dt, 7,
                              SimOptions{.record_stride = 1, .record_states = true});
    REQUIRE(path.x_states.has_value());

    Vec ex = vec2(c * (xi[0] + h * xi[2] + g * xi[4]), c * (xi[1] + h * xi[3] + g * xi[5]));
    Vec ey = vec2(1.0 - dt + c * (xi[0] - h * xi[2] + g * xi[4]),
                  c * (xi[1] + h * xi[3] + g * xi[5]));
    for (int i = 0; i < 2; ++i) {
        CHECK((*path.x_states)(1, i) == doctest::Approx(ex[i]).epsilon(1e-12));
        CHECK((*path.y_states)(1, i) == doctest::Approx(ey[i]).epsilon(1e-12));
    }
}

TEST_CASE("hybrid coincides with reflection strictly inside the cutoff radius") {
    auto model = brownian_model(2);
    Vec x0 = vec2(0.1, 0.2), y0 = vec2(0.3, 0.4);
    auto refl = simulate_pair(model, CouplingKind::reflection(1.0), x0, y0, 0.1, 1e-3, 321);
    auto hyb = simulate_pair(model, CouplingKind::hybrid(1.0, CutoffProfile{5.0}), x0, y0, 0.1,
                             1e-3, 321);
    REQUIRE(refl.rho.size() == hyb.rho.size());
    double rho_max = 0.0;
    for (double r : refl.rho) rho_max = std::max(rho_max, r);
    REQUIRE(rho_max < 5.0);  // the cutoff never activates
    for (std::size_t k = 0; k < refl.rho.size(); ++k) CHECK(refl.rho[k] == hyb.rho[k]);
    if (refl.coupling_time) {
        REQUIRE(hyb.coupling_time.has_value());
        CHECK(*refl.coupling_time == *hyb.coupling_time);
    }
}

TEST_CASE("reflection keeps the pair difference on a fixed axis for additive noise") {
    auto model = brownian_model(2);
    Vec x0 = vec2(1.0, 2.0), y0 = vec2(-0.5, 0.3);
    Vec e0 = (x0 - y0).normalized();
    auto path = simulate_pair(model, CouplingKind::reflection(1.0), x0, y0, 0.2, 1e-3, 5,
                              SimOptions{.record_stride = 20, .record_states = true});
    for (Eigen::Index r = 0; r < path.x_states->rows(); ++r) {
        Vec diff = path.x_states->row(r) - path.y_states->row(r);
        if (diff.norm() == 0.0) continue;
        double cross = diff[0] * e0[1] - diff[1] * e0[0];
        CHECK(std::abs(cross) <= 1e-10 * std::max(1.0, diff.norm()));
    }
}

TEST_CASE("distance quadratic variation runs at 8 lambda0^2 per unit time") {
    double lambda0 = 1.5, dt = 1e-4;
    auto model = make_builtin_model("brownian", json{{"d", 1}, {"sigma_scale", lambda0}});
    auto kind = CouplingKind::reflection(lambda0);
    Vec x0(1), y0(1);
    x0 << 1.0;
    y0 << 0.0;
    double qv = 0.0, total_time = 0.0;
    for (std::uint64_t p = 0; p < 200; ++p) {
        auto path = simulate_pair(model, kind, x0, y0, 0.5, dt, 2024,
                                  SimOptions{.record_stride = 1, .path_index = p});
        for (std::size_t k = 0; k + 1 < path.rho.size(); ++k) {
            if (path.rho[k] <= 0.0 || path.rho[k + 1] <= 0.0) break;
            double inc = path.rho[k + 1] - path.rho[k];
            qv += inc * inc;
            total_time += dt;
        }
    }
    REQUIRE(total_time > 10.0);
    double rate = qv / total_time;
    CHECK(rate == doctest::Approx(8.0 * lambda0 * lambda0).epsilon(0.02));
}

TEST_CASE("coupling survival matches the first-passage law of the distance walk") {
    // rho is a driftless walk with variance 8 lambda0^2 t, absorbed at 0:
    // P(T > t) = erf(rho0 / sqrt(16 lambda0^2 t))
    auto model = brownian_model(1);
    auto kind = CouplingKind::reflection(1.0);
    Vec x0(1), y0(1);
    x0 << 1.0;
    y0 << 0.0;
    const int n_paths = 20000;
    std::vector<double> coupling_times;
    int censored = 0;
    for (int p = 0; p < n_paths; ++p) {
        auto path = simulate_pair(model, kind, x0, y0, 1.0, 1e-4, 777,
                                  SimOptions{.record_stride = 0,
                                             .stop_after_coupling = true,
                                             .path_index = static_cast<std::uint64_t>(p)});
        if (path.coupling_time)
            coupling_times.push_back(*path.coupling_time);
        else
            ++censored;
    }
    for (double t : {0.25, 0.5, 1.0}) {
        int alive = censored;
        for (double ct : coupling_times)
            if (ct > t) ++alive;
        double survival = static_cast<double>(alive) / n_paths;
        double expect = std::erf(1.0 / (4.0 * std::sqrt(t)));
        // 0.012 is a bit under 4 binomial standard errors at n = 20000
        CHECK(std::abs(survival - expect) < 0.012);
    }
}

TEST_CASE("coupled pairs glue and then move together") {
    auto model = ou_model(2, 1.0, std::numbers::sqrt2);
    Vec x0 = vec2(0.5, 0.5), y0 = vec2(0.5, 0.55);
    auto path = simulate_pair(model, CouplingKind::reflection(1.0), x0, y0, 0.05, 1e-4, 11,
                              SimOptions{.record_stride = 1, .record_states = true});
    REQUIRE(path.coupling_time.has_value());
    double T = *path.coupling_time;
    CHECK(T > 0.0);
    bool moved_after = false;
    Vec at_T;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        if (path.times[k] >= T) {
            CHECK(path.rho[k] == 0.0);
            Vec xs = path.x_states->row(static_cast<Eigen::Index>(k));
            Vec ys = path.y_states->row(static_cast<Eigen::Index>(k));
            CHECK((xs - ys).norm() == 0.0);
            if (at_T.size() == 0)
                at_T = xs;
            else if ((xs - at_T).norm() > 0.0)
                moved_after = true;
        } else {
            CHECK(path.rho[k] > 0.0);
        }
    }
    CHECK(moved_after);  // the glued marginal keeps diffusing
}

TEST_CASE("pairs starting inside the declaration threshold couple at time zero") {
    auto model = brownian_model(1);
    auto kind = CouplingKind::reflection(1.0);
    double dt = 1e-3;
    Vec x0(1), y0(1);
    x0 << 0.0;
    y0 << 0.5 * kind.declare_threshold(dt);
    auto path = simulate_pair(model, kind, x0, y0, 0.01, dt, 3);
    REQUIRE(path.coupling_time.has_value());
    CHECK(*path.coupling_time == 0.0);
    for (double r : path.rho) CHECK(r == 0.0);
}

TEST_CASE("the coupling is exchange symmetric") {
    Vec x0(3), y0(3);
    x0 << 0.4, -1.0, 0.7;
    y0 << -0.2, 0.5, 0.9;
    auto model = ou_model(3, 1.0, std::numbers::sqrt2);
    for (auto kind : {CouplingKind::reflection(1.0),
                      CouplingKind::hybrid(1.0, CutoffProfile{1.0})}) {
        SimOptions opts{.record_stride = 10, .record_states = true};
        auto a = simulate_pair(model, kind, x0, y0, 0.5, 1e-3, 1234, opts);
        auto b = simulate_pair(model, kind, y0, x0, 0.5, 1e-3, 1234, opts);
        REQUIRE(a.rho.size() == b.rho.size());
        for (std::size_t k = 0; k < a.rho.size(); ++k) CHECK(a.rho[k] == b.rho[k]);
        CHECK(a.coupling_time.has_value() == b.coupling_time.has_value());
        CHECK((*a.x_states - *b.y_states).cwiseAbs().maxCoeff() == 0.0);
        CHECK((*a.y_states - *b.x_states).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("trajectories are reproducible in the seed and distinct across seeds") {
    auto model = ou_model(2, 1.0, std::numbers::sqrt2);
    Vec x0 = vec2(1.0, 0.0), y0 = vec2(-1.0, 0.5);
    auto kind = CouplingKind::reflection(1.0);
    auto a = simulate_pair(model, kind, x0, y0, 0.3, 1e-3, 42);
    auto b = simulate_pair(model, kind, x0, y0, 0.3, 1e-3, 42);
    auto other = simulate_pair(model, kind, x0, y0, 0.3, 1e-3, 43);
    REQUIRE(a.rho.size() == b.rho.size());
    for (std::size_t k = 0; k < a.rho.size(); ++k) CHECK(a.rho[k] == b.rho[k]);
    bool differs = false;
    for (std::size_t k = 0; k < a.rho.size(); ++k)
        if (a.rho[k] != other.rho[k]) differs = true;
    CHECK(differs);
}

TEST_CASE("stopping after coupling leaves the distance curve unchanged") {
    auto model = brownian_model(1);
    auto kind = CouplingKind::reflection(1.0);
    Vec x0(1), y0(1);
    x0 << 0.3;
    y0 << 0.0;
    auto full = simulate_pair(model, kind, x0, y0, 0.5, 1e-3, 9,
                              SimOptions{.record_stride = 5});
    auto stopped = simulate_pair(model, kind, x0, y0, 0.5, 1e-3, 9,
                                 SimOptions{.record_stride = 5, .stop_after_coupling = true});
    REQUIRE(full.coupling_time.has_value());  // couples well before the horizon
    REQUIRE(full.rho.size() == stopped.rho.size());
    for (std::size_t k = 0; k < full.rho.size(); ++k) {
        CHECK(full.times[k] == stopped.times[k]);
        CHECK(full.rho[k] == stopped.rho[k]);
    }
}

TEST_CASE("endpoint-only recording keeps just t = 0 and the horizon") {
    auto model = brownian_model(1);
    Vec x0(1), y0(1);
    x0 << 1.0;
    y0 << 0.0;
    auto path = simulate_pair(model, CouplingKind::synchronous(), x0, y0, 0.7, 1e-3, 1,
                              SimOptions{.record_stride = 0});
    REQUIRE(path.times.size() == 2);
    CHECK(path.times[0] == 0.0);
    CHECK(path.times[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("inadmissible reflection levels raise an eigenvalue violation") {
    // constant diffusion: detected before stepping
    auto model = brownian_model(2);
    Vec x0 = vec2(1.0, 0.0), y0 = vec2(0.0, 0.0);
    CHECK_THROWS_AS(simulate_pair(model, CouplingKind::reflection(2.0), x0, y0, 0.1, 1e-3, 1),
                    EigenvalueViolationError);

    // state-dependent diffusion: detected where the inequality fails
    auto spec = json{{"name", "narrowing"},
                     {"d", 1},
                     {"m", 1},
                     {"drift", {"0"}},
                     {"diffusion", {{"x1"}}}};
    auto varying = model_from_json(spec);
    Vec x1(1), y1(1);
    x1 << 0.5;  // sigma sigma^T = 0.25 < lambda0^2
    y1 << 3.0;
    CHECK_THROWS_AS(simulate_pair(varying, CouplingKind::reflection(1.0), x1, y1, 0.1, 1e-3, 1),
                    EigenvalueViolationError);
}

TEST_CASE("explosive drift trips the divergence guard") {
    auto spec = json{{"name", "explosive"},
                     {"d", 1},
                     {"m", 1},
                     {"drift", {"x1^3"}},
                     {"diffusion", {{"1"}}}};
    auto model = model_from_json(spec);
    Vec x0(1), y0(1);
    x0 << 5.0;
    y0 << 4.0;
    auto path = simulate_pair(model, CouplingKind::synchronous(), x0, y0, 2.0, 0.1, 8);
    CHECK(path.diverged);
    CHECK(std::isnan(path.rho.back()));
    std::vector<PairPath> paths;
    paths.push_back(path);
    CHECK_THROWS_AS(distance_moments(paths, 1.0), NonFiniteError);
}

TEST_CASE("distance moment curves match hand-computed values") {
    // three paths on the grid {0, 1} with rho(1) = {1, 2, 3}
    std::vector<PairPath> paths(3);
    for (int i = 0; i < 3; ++i) {
        paths[std::size_t(i)].times = {0.0, 1.0};
        paths[std::size_t(i)].rho = {0.5, static_cast<double>(i + 1)};
    }
    auto m1 = distance_moments(paths, 1.0);
    CHECK(m1.value[1] == doctest::Approx(2.0).epsilon(1e-14));
    // population sd of {1,2,3} is sqrt(2/3); stderr = sd / sqrt(3)
    CHECK(m1.stderr_[1] == doctest::Approx(std::sqrt(2.0 / 3.0) / std::sqrt(3.0)).epsilon(1e-12));

    auto m2 = distance_moments(paths, 2.0);
    CHECK(m2.value[1] == doctest::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-14));
    // delta method: se(W) = mean^(1/2 - 1) * se(mean of rho^2) / 2
    double se_mean = std::sqrt((98.0 / 9.0) / 3.0);
    CHECK(m2.stderr_[1] ==
          doctest::Approx(0.5 * std::pow(14.0 / 3.0, -0.5) * se_mean).epsilon(1e-12));

    // all-zero column collapses to zero with zero error
    for (auto& p : paths) p.rho[0] = 0.0;
    auto m0 = distance_moments(paths, 2.0);
    CHECK(m0.value[0] == 0.0);
    CHECK(m0.stderr_[0] == 0.0);

    paths[0].times = {0.0, 1.0, 2.0};
    paths[0].rho = {0.0, 1.0, 2.0};
    CHECK_THROWS_AS(distance_moments(paths, 1.0), Error);
}
