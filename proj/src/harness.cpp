#include "clab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/errors.hpp"
#include "clab/ot.hpp"
#include "clab/parallel.hpp"
#include "clab/rng.hpp"

namespace clab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "W%g", p);
    return buf;
}

// Grid times as step counts, validated to sit on the dt lattice.
std::vector<std::uint64_t> grid_steps(const std::vector<double>& times, double dt) {
    std::vector<std::uint64_t> steps;
    steps.reserve(times.size());
    for (double t : times) {
        require(std::isfinite(t) && t >= 0.0, "grid times must be finite and nonnegative");
        auto k = std::llround(t / dt);
        require(k >= 0 && std::abs(static_cast<double>(k) * dt - t) <= 1e-9 * std::max(1.0, t),
                "grid times must be integer multiples of dt");
        steps.push_back(static_cast<std::uint64_t>(k));
    }
    for (std::size_t i = 1; i < steps.size(); ++i)
        require(steps[i] > steps[i - 1], "grid times must be strictly increasing");
    return steps;
}

std::uint64_t grid_stride(const std::vector<std::uint64_t>& steps) {
    std::uint64_t g = 0;
    for (auto k : steps)
        if (k > 0) g = std::gcd(g, k);
    return g == 0 ? 1 : g;
}

// Standard error of the full-cloud estimate proxied by the spread of four
// disjoint quarter-cloud estimates (sd / sqrt(4)); zero when the cloud is
// too small to quarter.
double quarter_spread(const std::vector<double>& quarters) {
    if (quarters.size() < 2) return 0.0;
    double mean = 0.0;
    for (double q : quarters) mean += q;
    mean /= static_cast<double>(quarters.size());
    double ss = 0.0;
    for (double q : quarters) ss += (q - mean) * (q - mean);
    double sd = std::sqrt(ss / static_cast<double>(quarters.size() - 1));
    return sd / std::sqrt(static_cast<double>(quarters.size()));
}

struct PairEnsemble {
    Mat rho;  // n_paths x n_times
    std::vector<double> coupling_time;  // +inf = censored
    int n_censored = 0;
};

// Coupled-pair distances on the grid; any diverged path aborts.
PairEnsemble run_pairs(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& steps,
                       std::uint64_t stride, bool track_coupling) {
    const auto n_times = static_cast<Eigen::Index>(steps.size());
    PairEnsemble out;
    out.rho.resize(cfg.n_paths, n_times);
    if (track_coupling) out.coupling_time.assign(static_cast<std::size_t>(cfg.n_paths), kInf);
    std::vector<std::uint8_t> diverged(static_cast<std::size_t>(cfg.n_paths), 0);
    const double horizon = cfg.horizon();
    parallel_chunks(cfg.n_paths, cfg.n_workers, [&](std::int64_t begin, std::int64_t end) {
        PairSimulator sim(*cfg.model, cfg.coupling, cfg.dt, cfg.seed);
        SimOptions opts;
        opts.record_stride = static_cast<int>(stride);
        opts.stop_after_coupling = true;
        for (std::int64_t i = begin; i < end; ++i) {
            opts.path_index = static_cast<std::uint64_t>(i);
            PairPath path = sim.run(cfg.x0, cfg.y0, horizon, opts);
            if (path.diverged) {
                diverged[static_cast<std::size_t>(i)] = 1;
                continue;
            }
            for (Eigen::Index k = 0; k < n_times; ++k)
                out.rho(static_cast<Eigen::Index>(i), k) =
                    path.rho[static_cast<std::size_t>(steps[static_cast<std::size_t>(k)] /
                                                      stride)];
            if (track_coupling)
                out.coupling_time[static_cast<std::size_t>(i)] =
                    path.coupling_time.value_or(kInf);
        }
    });
    for (std::size_t i = 0; i < diverged.size(); ++i)
        if (diverged[i]) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "pair path %zu left the divergence guard; reduce dt or the horizon",
                          i);
            throw NonFiniteError(buf);
        }
    if (track_coupling)
        out.n_censored = static_cast<int>(
            std::count(out.coupling_time.begin(), out.coupling_time.end(), kInf));
    return out;
}

// Endpoint clouds of n independently driven trajectories, one matrix per
// grid time. The marginal law does not depend on the coupling, so the cloud
// runs use the cheap synchronous glue with a dedicated noise stream.
std::vector<Mat> run_cloud(const ExperimentConfig& cfg, const Vec& start, int n,
                           const std::vector<std::uint64_t>& steps, std::uint64_t stride,
                           NoiseStream stream) {
    const auto n_times = steps.size();
    std::vector<Mat> clouds(n_times, Mat(n, cfg.model->dim()));
    std::vector<std::uint8_t> diverged(static_cast<std::size_t>(n), 0);
    const double horizon = cfg.horizon();
    parallel_chunks(n, cfg.n_workers, [&](std::int64_t begin, std::int64_t end) {
        PairSimulator sim(*cfg.model, CouplingKind::synchronous(), cfg.dt, cfg.seed, stream);
        SimOptions opts;
        opts.record_stride = static_cast<int>(stride);
        opts.record_states = true;
        for (std::int64_t i = begin; i < end; ++i) {
            opts.path_index = static_cast<std::uint64_t>(i);
            PairPath path = sim.run(start, start, horizon, opts);
            if (path.diverged) {
                diverged[static_cast<std::size_t>(i)] = 1;
                continue;
            }
            for (std::size_t k = 0; k < n_times; ++k)
                clouds[k].row(static_cast<Eigen::Index>(i)) =
                    path.x_states->row(static_cast<Eigen::Index>(steps[k] / stride));
        }
    });
    for (std::size_t i = 0; i < diverged.size(); ++i)
        if (diverged[i]) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "cloud path %zu left the divergence guard; reduce dt or the horizon",
                          i);
            throw NonFiniteError(buf);
        }
    return clouds;
}

std::vector<PairPath> trimmed_paths(const Mat& rho, const std::vector<double>& times) {
    std::vector<PairPath> paths(static_cast<std::size_t>(rho.rows()));
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
        auto& p = paths[static_cast<std::size_t>(i)];
        p.times = times;
        p.rho.resize(static_cast<std::size_t>(rho.cols()));
        for (Eigen::Index k = 0; k < rho.cols(); ++k)
            p.rho[static_cast<std::size_t>(k)] = rho(i, k);
        p.path_index = static_cast<std::uint64_t>(i);
    }
    return paths;
}

double gauge_of_column(const Mat& rho, Eigen::Index k, Eigen::Index begin, Eigen::Index end,
                       const YoungFunction& phi) {
    std::vector<double> vals(static_cast<std::size_t>(end - begin));
    for (Eigen::Index i = begin; i < end; ++i)
        vals[static_cast<std::size_t>(i - begin)] = rho(i, k);
    return gauge_norm(vals, phi);
}

EmpiricalMeasure cloud_block(const Mat& cloud, Eigen::Index begin, Eigen::Index rows) {
    return EmpiricalMeasure(cloud.middleRows(begin, rows));
}

}  // namespace

void ExperimentConfig::validate() const {
    require(model != nullptr, "experiment config needs a model");
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(n_paths >= 2, "n_paths must be at least 2 for standard errors");
    require(!times.empty(), "the time grid must not be empty");
    require(times.back() > 0.0, "the time grid must reach past zero");
    require(x0.size() == model->dim() && y0.size() == model->dim(),
            "initial points must match the model dimension");
    for (double p : p_values)
        require(p >= 1.0 && std::isfinite(p), "distance orders must lie in [1, infinity)");
    require(gauge_labels.empty() || gauge_labels.size() == gauges.size(),
            "gauge_labels must be empty or match gauges");
    require(n_ot >= 0, "n_ot must be nonnegative");
    grid_steps(times, dt);  // lattice + monotonicity checks
}

nlohmann::json ContractionCurve::to_json() const {
    nlohmann::json j{{"estimator", estimator}, {"distance", distance},   {"p", p},
                     {"rho0", rho0},           {"times", times},         {"value", value},
                     {"stderr", stderr_},      {"seed", seed}};
    return j;
}

std::vector<ContractionCurve> contraction_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    require(!cfg.p_values.empty() || !cfg.gauges.empty(),
            "request at least one distance (p value or gauge)");
    const auto steps = grid_steps(cfg.times, cfg.dt);
    const auto stride = grid_stride(steps);
    const int d = cfg.model->dim();
    const double rho0 = (cfg.x0 - cfg.y0).norm();

    PairEnsemble pairs = run_pairs(cfg, steps, stride, false);
    auto paths = trimmed_paths(pairs.rho, cfg.times);

    // assignment solves are cubic in the cloud size outside d = 1, so cap
    // the default there; gauges add a bisection on top and get a lower cap
    int n_ot = cfg.n_ot > 0 ? cfg.n_ot : (d == 1 ? cfg.n_paths : std::min(cfg.n_paths, 256));
    int n_gauge = std::min(n_ot, 128);
    std::vector<Mat> cloud_x = run_cloud(cfg, cfg.x0, n_ot, steps, stride, NoiseStream::ensemble_x);
    std::vector<Mat> cloud_y = run_cloud(cfg, cfg.y0, n_ot, steps, stride, NoiseStream::ensemble_y);

    const auto n_times = static_cast<Eigen::Index>(steps.size());
    std::vector<ContractionCurve> curves;

    auto base_curve = [&](const std::string& estimator, const std::string& label, double p) {
        ContractionCurve c;
        c.estimator = estimator;
        c.distance = label;
        c.p = p;
        c.rho0 = rho0;
        c.times = cfg.times;
        c.value.assign(static_cast<std::size_t>(n_times), 0.0);
        c.stderr_.assign(static_cast<std::size_t>(n_times), 0.0);
        c.seed = cfg.seed;
        return c;
    };

    for (double p : cfg.p_values) {
        ContractionCurve upper = base_curve("coupling-upper-bound", format_p(p), p);
        MomentCurve mc = distance_moments(paths, p);
        upper.value = mc.value;
        upper.stderr_ = mc.stderr_;
        // all paths start at exactly rho0, so the p-mean at t = 0 is rho0;
        // restate it to keep the identity exact through pow/root round trips
        if (cfg.times.front() == 0.0) upper.value[0] = rho0;
        upper.path_distances = pairs.rho;
        curves.push_back(std::move(upper));

        ContractionCurve ot = base_curve("empirical-OT", format_p(p), p);
        const Eigen::Index quarter = n_ot / 4;
        parallel_chunks(n_times, cfg.n_workers, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t k = begin; k < end; ++k) {
                EmpiricalMeasure mx(cloud_x[static_cast<std::size_t>(k)]);
                EmpiricalMeasure my(cloud_y[static_cast<std::size_t>(k)]);
                ot.value[static_cast<std::size_t>(k)] = wasserstein_p(mx, my, p).value;
                if (quarter >= 2) {
                    std::vector<double> qs;
                    for (int q = 0; q < 4; ++q) {
                        auto bx = cloud_block(cloud_x[static_cast<std::size_t>(k)],
                                              q * quarter, quarter);
                        auto by = cloud_block(cloud_y[static_cast<std::size_t>(k)],
                                              q * quarter, quarter);
                        qs.push_back(wasserstein_p(bx, by, p).value);
                    }
                    ot.stderr_[static_cast<std::size_t>(k)] = quarter_spread(qs);
                }
            }
        });
        curves.push_back(std::move(ot));
    }

    for (std::size_t gi = 0; gi < cfg.gauges.size(); ++gi) {
        const YoungFunction& phi = cfg.gauges[gi];
        std::string label = "Wphi:" + (gi < cfg.gauge_labels.size() && !cfg.gauge_labels[gi].empty()
                                           ? cfg.gauge_labels[gi]
                                           : phi.label());
        ContractionCurve upper = base_curve("coupling-upper-bound", label, 0.0);
        upper.gauge = phi;
        const Eigen::Index qn = static_cast<Eigen::Index>(cfg.n_paths) / 4;
        parallel_chunks(n_times, cfg.n_workers, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t k = begin; k < end; ++k) {
                auto kk = static_cast<Eigen::Index>(k);
                upper.value[static_cast<std::size_t>(k)] =
                    gauge_of_column(pairs.rho, kk, 0, pairs.rho.rows(), phi);
                if (qn >= 2) {
                    std::vector<double> qs;
                    for (int q = 0; q < 4; ++q)
                        qs.push_back(gauge_of_column(pairs.rho, kk, q * qn, (q + 1) * qn, phi));
                    upper.stderr_[static_cast<std::size_t>(k)] = quarter_spread(qs);
                }
            }
        });
        upper.path_distances = pairs.rho;
        curves.push_back(std::move(upper));

        ContractionCurve ot = base_curve("empirical-OT", label, 0.0);
        ot.gauge = phi;
        const Eigen::Index quarter = static_cast<Eigen::Index>(n_gauge) / 4;
        parallel_chunks(n_times, cfg.n_workers, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t k = begin; k < end; ++k) {
                auto bx = cloud_block(cloud_x[static_cast<std::size_t>(k)], 0, n_gauge);
                auto by = cloud_block(cloud_y[static_cast<std::size_t>(k)], 0, n_gauge);
                ot.value[static_cast<std::size_t>(k)] = wasserstein_phi(bx, by, phi).value;
                if (quarter >= 2) {
                    std::vector<double> qs;
                    for (int q = 0; q < 4; ++q) {
                        auto qx = cloud_block(cloud_x[static_cast<std::size_t>(k)],
                                              q * quarter, quarter);
                        auto qy = cloud_block(cloud_y[static_cast<std::size_t>(k)],
                                              q * quarter, quarter);
                        qs.push_back(wasserstein_phi(qx, qy, phi).value);
                    }
                    ot.stderr_[static_cast<std::size_t>(k)] = quarter_spread(qs);
                }
            }
        });
        curves.push_back(std::move(ot));
    }

    return curves;
}

nlohmann::json FitReport::to_json() const {
    return nlohmann::json{{"c_hat", c_hat},
                          {"lambda_hat", lambda_hat},
                          {"c_interval", {c_lo, c_hi}},
                          {"lambda_interval", {lambda_lo, lambda_hi}},
                          {"t_burn", t_burn},
                          {"window", {window_begin, window_end}},
                          {"n_used", n_used},
                          {"n_bootstrap", n_bootstrap},
                          {"theory_c", theory_c},
                          {"theory_rate", theory_rate},
                          {"envelope_violations", envelope_violations}};
}

namespace {

struct LogLinearFit {
    double c = 0.0, lambda = 0.0;
};

LogLinearFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& v) {
    const auto n = static_cast<double>(t.size());
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double y = std::log(v[i]);
        st += t[i];
        sy += y;
        stt += t[i] * t[i];
        sty += t[i] * y;
    }
    double denom = n * stt - st * st;
    require(denom > 0.0, "rate fit needs at least two distinct times");
    double slope = (n * sty - st * sy) / denom;
    double intercept = (sy - slope * st) / n;
    return {std::exp(intercept), -slope};
}

}  // namespace

FitReport fit_rate(const ContractionCurve& curve, const RateReport* theory) {
    const std::size_t n_times = curve.times.size();
    require(n_times >= 4 && curve.value.size() == n_times && curve.stderr_.size() == n_times,
            "rate fit needs a curve with at least four points");
    const double w0 = curve.value.front();
    if (!(w0 > 0.0)) throw InsufficientDecayError("curve starts at zero; nothing to fit");

    double t_burn = -1.0;
    for (std::size_t k = 0; k < n_times; ++k)
        if (curve.value[k] < 0.5 * w0) {
            t_burn = curve.times[k];
            break;
        }
    if (t_burn < 0.0)
        throw InsufficientDecayError("curve never falls below half its initial value");

    std::vector<std::size_t> window;
    for (std::size_t k = 0; k < n_times; ++k)
        if (curve.times[k] >= t_burn - 1e-12 && curve.value[k] > 3.0 * curve.stderr_[k] &&
            curve.value[k] > 0.0)
            window.push_back(k);
    if (window.size() < 4)
        throw InsufficientDecayError("fewer than four usable points past the burn-in");

    std::vector<double> wt, wv;
    for (auto k : window) {
        wt.push_back(curve.times[k]);
        wv.push_back(curve.value[k]);
    }
    LogLinearFit fit = fit_log_linear(wt, wv);

    FitReport out;
    out.c_hat = fit.c;
    out.lambda_hat = fit.lambda;
    out.t_burn = t_burn;
    out.window_begin = wt.front();
    out.window_end = wt.back();
    out.n_used = static_cast<int>(window.size());

    // deterministic bootstrap: path resampling when per-path distances are
    // available, otherwise log-normal resampling of the point estimates
    const int B = 200;
    out.n_bootstrap = B;
    CounterRng rng(curve.seed, NoiseStream::bootstrap);
    std::vector<double> lambdas, cs;
    lambdas.reserve(B);
    cs.reserve(B);
    const Mat* rho = curve.path_distances ? &*curve.path_distances : nullptr;
    const auto n_paths = rho ? rho->rows() : 0;
    std::vector<double> bv(window.size());
    for (int b = 0; b < B; ++b) {
        bool ok = true;
        if (rho) {
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_paths));
            for (Eigen::Index i = 0; i < n_paths; ++i) {
                double u = 0.0;
                rng.fill_uniforms(static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(i),
                                  std::span<double>(&u, 1));
                idx[static_cast<std::size_t>(i)] = std::min<Eigen::Index>(
                    n_paths - 1, static_cast<Eigen::Index>(u * static_cast<double>(n_paths)));
            }
            for (std::size_t j = 0; j < window.size(); ++j) {
                auto k = static_cast<Eigen::Index>(window[j]);
                double v = 0.0;
                if (curve.gauge) {
                    std::vector<double> vals(static_cast<std::size_t>(n_paths));
                    for (Eigen::Index i = 0; i < n_paths; ++i)
                        vals[static_cast<std::size_t>(i)] =
                            (*rho)(idx[static_cast<std::size_t>(i)], k);
                    v = gauge_norm(vals, *curve.gauge);
                } else {
                    double mean = 0.0;
                    for (Eigen::Index i = 0; i < n_paths; ++i)
                        mean += std::pow((*rho)(idx[static_cast<std::size_t>(i)], k), curve.p);
                    mean /= static_cast<double>(n_paths);
                    v = mean > 0.0 ? std::pow(mean, 1.0 / curve.p) : 0.0;
                }
                if (!(v > 0.0)) {
                    ok = false;
                    break;
                }
                bv[j] = v;
            }
        } else {
            for (std::size_t j = 0; j < window.size(); ++j) {
                auto k = window[j];
                double z = rng.normal(static_cast<std::uint64_t>(b),
                                      static_cast<std::uint64_t>(k), 0);
                double rel = curve.stderr_[k] / curve.value[k];
                bv[j] = std::exp(std::log(curve.value[k]) + rel * z);
            }
        }
        if (!ok) continue;
        LogLinearFit fb = fit_log_linear(wt, bv);
        lambdas.push_back(fb.lambda);
        cs.push_back(fb.c);
    }
    if (lambdas.size() >= 8) {
        std::sort(lambdas.begin(), lambdas.end());
        std::sort(cs.begin(), cs.end());
        auto quant = [](const std::vector<double>& v, double q) {
            auto idx = static_cast<std::size_t>(
                std::llround(q * static_cast<double>(v.size() - 1)));
            return v[std::min(idx, v.size() - 1)];
        };
        out.lambda_lo = quant(lambdas, 0.025);
        out.lambda_hi = quant(lambdas, 0.975);
        out.c_lo = quant(cs, 0.025);
        out.c_hi = quant(cs, 0.975);
    } else {
        out.lambda_lo = out.lambda_hi = fit.lambda;
        out.c_lo = out.c_hi = fit.c;
        out.n_bootstrap = static_cast<int>(lambdas.size());
    }

    if (theory != nullptr) {
        out.theory_c = theory->c;
        out.theory_rate = theory->c1;
        out.envelope_violations = 0;
        for (std::size_t k = 0; k < n_times; ++k) {
            double cap = theory->c * std::exp(-theory->c1 * curve.times[k]) * curve.rho0 +
                         3.0 * curve.stderr_[k];
            if (curve.value[k] > cap) ++out.envelope_violations;
        }
    }
    return out;
}

nlohmann::json SurvivalCurve::to_json() const {
    return nlohmann::json{{"times", times},         {"survival", survival},
                          {"stderr", stderr_},      {"n_paths", n_paths},
                          {"n_censored", n_censored}, {"horizon", horizon},
                          {"seed", seed}};
}

SurvivalCurve coupling_time_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    require(cfg.coupling.type != CouplingKind::Type::synchronous,
            "coupling times need a reflection or hybrid coupling");
    const auto steps = grid_steps(cfg.times, cfg.dt);

    // endpoints-only recording: only the coupling time matters here
    PairEnsemble pairs = run_pairs(cfg, {steps.back()}, steps.back(), true);

    SurvivalCurve out;
    out.times = cfg.times;
    out.n_paths = cfg.n_paths;
    out.n_censored = pairs.n_censored;
    out.horizon = cfg.horizon();
    out.seed = cfg.seed;
    const double n = static_cast<double>(cfg.n_paths);
    for (double t : cfg.times) {
        double alive = 0.0;
        for (double T : pairs.coupling_time)
            if (T > t) alive += 1.0;
        double s = alive / n;
        out.survival.push_back(s);
        out.stderr_.push_back(std::sqrt(std::max(0.0, s * (1.0 - s)) / n));
    }
    return out;
}

}  // namespace clab
