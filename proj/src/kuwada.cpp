#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/errors.hpp"
#include "clab/harness.hpp"
#include "clab/parallel.hpp"
#include "clab/rng.hpp"

namespace clab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// cbrt(machine epsilon): the usual central-difference step for exact
// function evaluations
constexpr double kExprStep = 6.0554544523933395e-06;

double expr_value(const expr::Node& f, std::span<const double> x) { return expr::eval(f, x); }

// |grad f|^q at y by central differences on the exact expression
double grad_norm_pow(const expr::Node& f, std::vector<double>& y, double q) {
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double h = kExprStep * std::max(1.0, std::abs(y[i]));
        double saved = y[i];
        y[i] = saved + h;
        double up = expr_value(f, y);
        y[i] = saved - h;
        double dn = expr_value(f, y);
        y[i] = saved;
        double g = (up - dn) / (2.0 * h);
        ss += g * g;
    }
    return std::pow(ss, 0.5 * q);
}

struct Accumulator {
    double sum = 0.0, sumsq = 0.0;
    void add(double v) {
        sum += v;
        sumsq += v * v;
    }
    double mean(double n) const { return sum / n; }
    double se(double n) const {
        double m = sum / n;
        double var = std::max(0.0, sumsq / n - m * m);
        return std::sqrt(var / n);
    }
};

}  // namespace

nlohmann::json KuwadaReport::to_json() const {
    nlohmann::json probes_json = nlohmann::json::array();
    for (const auto& x : probes)
        probes_json.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    return nlohmann::json{{"p", p},
                          {"t", t},
                          {"K_p", K_p},
                          {"eta", eta},
                          {"n_paths", n_paths},
                          {"seed", seed},
                          {"probes", probes_json},
                          {"lhs", lhs},
                          {"rhs", rhs},
                          {"ratio", ratio},
                          {"error", error},
                          {"max_ratio", max_ratio},
                          {"pass", pass}};
}

KuwadaReport kuwada_check(const ModelSpec& model, const expr::NodePtr& f, double p, double t,
                          const std::vector<Vec>& probes, double K_p,
                          const KuwadaOptions& opts) {
    require(f != nullptr, "kuwada_check needs a scalar expression");
    require(p > 1.0 && std::isfinite(p), "order p must lie in (1, infinity)");
    require(t > 0.0 && std::isfinite(t), "time t must be positive");
    require(!probes.empty(), "kuwada_check needs at least one probe point");
    require(opts.n_paths >= 2, "n_paths must be at least 2");
    require(opts.dt > 0.0, "dt must be positive");
    require_finite(K_p, "K_p");
    const int d = model.dim();
    const int m = model.noise_dim();
    for (const auto& x : probes)
        require(x.size() == d, "probe points must match the model dimension");
    auto n_steps_ll = std::llround(t / opts.dt);
    require(n_steps_ll >= 1 &&
                std::abs(static_cast<double>(n_steps_ll) * opts.dt - t) <= 1e-9 * std::max(1.0, t),
            "t must be an integer multiple of dt");
    const auto n_steps = static_cast<std::uint64_t>(n_steps_ll);
    const double q = p / (p - 1.0);
    const auto n = static_cast<std::size_t>(opts.n_paths);
    const double c = std::sqrt(2.0 * opts.dt);
    CounterRng rng(opts.seed, NoiseStream::stencil);

    // evolve several starts through the same noise; returns endpoint states
    auto evolve = [&](const std::vector<std::vector<double>>& starts, std::uint64_t path,
                      std::vector<std::vector<double>>& states) {
        states = starts;
        std::vector<double> xi(static_cast<std::size_t>(m));
        std::vector<double> b(static_cast<std::size_t>(d));
        std::vector<double> sig(static_cast<std::size_t>(d * m));
        for (std::uint64_t k = 0; k < n_steps; ++k) {
            rng.fill_normals(path, k, xi);
            for (auto& s : states) {
                model.eval_drift(s, b);
                model.eval_diffusion(s, sig);
                for (int i = 0; i < d; ++i) {
                    double g = 0.0;
                    for (int j = 0; j < m; ++j)
                        g += sig[static_cast<std::size_t>(j * d + i)] *
                             xi[static_cast<std::size_t>(j)];
                    s[static_cast<std::size_t>(i)] +=
                        opts.dt * b[static_cast<std::size_t>(i)] + c * g;
                }
                for (double v : s)
                    if (!std::isfinite(v) || std::abs(v) > kDivergenceGuard)
                        throw NonFiniteError("a stencil path left the divergence guard");
            }
        }
    };

    // finite-difference half step: explicit, or sqrt of the Monte Carlo
    // standard error from a pilot run at the first probe
    const double eta_floor = std::sqrt(opts.dt);
    double eta = opts.eta;
    if (eta > 0.0) {
        require_finite(eta, "eta");
        if (eta < eta_floor) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "finite-difference step %.3g sits below the one-step noise floor "
                          "sqrt(dt) = %.3g; increase eta or reduce dt",
                          eta, eta_floor);
            throw StencilError(buf);
        }
    } else {
        const auto n_pilot = std::min<std::size_t>(n, 2048);
        std::vector<double> fv(n_pilot);
        parallel_chunks(static_cast<std::int64_t>(n_pilot), opts.n_workers,
                        [&](std::int64_t begin, std::int64_t end) {
                            std::vector<std::vector<double>> starts{std::vector<double>(
                                probes[0].data(), probes[0].data() + d)};
                            std::vector<std::vector<double>> states;
                            for (std::int64_t i = begin; i < end; ++i) {
                                evolve(starts, static_cast<std::uint64_t>(i), states);
                                fv[static_cast<std::size_t>(i)] = expr_value(*f, states[0]);
                            }
                        });
        Accumulator acc;
        for (double v : fv) acc.add(v);
        double se_full = acc.se(static_cast<double>(n_pilot)) *
                         std::sqrt(static_cast<double>(n_pilot) / static_cast<double>(n));
        eta = std::max(std::sqrt(se_full), eta_floor);
    }

    KuwadaReport out;
    out.p = p;
    out.t = t;
    out.K_p = K_p;
    out.eta = eta;
    out.n_paths = opts.n_paths;
    out.seed = opts.seed;
    out.probes = probes;
    const double decay = std::exp(-K_p * t);

    for (const auto& x : probes) {
        // starts: center, then (+eta, -eta, +2eta, -2eta) per coordinate
        std::vector<std::vector<double>> starts;
        starts.emplace_back(x.data(), x.data() + d);
        for (int i = 0; i < d; ++i)
            for (double s : {eta, -eta, 2.0 * eta, -2.0 * eta}) {
                auto pt = starts.front();
                pt[static_cast<std::size_t>(i)] += s;
                starts.push_back(std::move(pt));
            }
        const std::size_t ns = starts.size();

        Mat fvals(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ns));
        std::vector<double> rvals(n);
        parallel_chunks(static_cast<std::int64_t>(n), opts.n_workers,
                        [&](std::int64_t begin, std::int64_t end) {
                            std::vector<std::vector<double>> states;
                            for (std::int64_t i = begin; i < end; ++i) {
                                evolve(starts, static_cast<std::uint64_t>(i), states);
                                for (std::size_t s = 0; s < ns; ++s)
                                    fvals(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(s)) =
                                        expr_value(*f, states[s]);
                                rvals[static_cast<std::size_t>(i)] =
                                    grad_norm_pow(*f, states[0], q);
                            }
                        });

        double lhs_ss = 0.0, err_ss = 0.0;
        for (int i = 0; i < d; ++i) {
            Accumulator near, far;
            const auto base = static_cast<Eigen::Index>(1 + 4 * i);
            for (std::size_t pi = 0; pi < n; ++pi) {
                auto r = static_cast<Eigen::Index>(pi);
                near.add(fvals(r, base) - fvals(r, base + 1));
                far.add(fvals(r, base + 2) - fvals(r, base + 3));
            }
            const auto nd = static_cast<double>(n);
            double g = near.mean(nd) / (2.0 * eta);
            double g2 = far.mean(nd) / (4.0 * eta);
            double se = near.se(nd) / (2.0 * eta);
            double bias = std::abs(g - g2) / 3.0;  // leading central-difference error
            lhs_ss += g * g;
            double e = se + bias;
            err_ss += e * e;
        }
        double lhs = std::sqrt(lhs_ss);
        double e_lhs = std::sqrt(err_ss);

        Accumulator racc;
        for (double v : rvals) racc.add(v);
        const auto nd = static_cast<double>(n);
        double rbar = racc.mean(nd);
        double rse = racc.se(nd);

        double rhs = 0.0, e_rhs = 0.0, ratio = 0.0, err = 0.0;
        if (rbar > 0.0) {
            rhs = decay * std::pow(rbar, 1.0 / q);
            e_rhs = rhs * rse / (q * rbar);
            ratio = lhs / rhs;
            err = (e_lhs + ratio * e_rhs) / rhs;
        } else {
            ratio = lhs == 0.0 ? 0.0 : kInf;
        }
        out.lhs.push_back(lhs);
        out.rhs.push_back(rhs);
        out.ratio.push_back(ratio);
        out.error.push_back(err);
    }

    out.max_ratio = *std::max_element(out.ratio.begin(), out.ratio.end());
    out.pass = true;
    for (std::size_t j = 0; j < out.ratio.size(); ++j)
        if (!(out.ratio[j] <= 1.0 + 3.0 * out.error[j])) out.pass = false;
    return out;
}

}  // namespace clab
