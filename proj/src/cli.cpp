#include "clab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clab/artifacts.hpp"
#include "clab/config.hpp"
#include "clab/coupling.hpp"
#include "clab/errors.hpp"
#include "clab/harness.hpp"
#include "clab/lambda_calc.hpp"
#include "clab/model.hpp"
#include "clab/ot.hpp"
#include "clab/theory.hpp"
#include "clab/young.hpp"

namespace clab {

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config;
    std::string output_dir = "out";
    int workers = -1;  // -1 = leave to the config
    bool svg = false;
    std::vector<std::string> overrides;
};

LabConfig load(const CommonArgs& args) {
    LabConfig cfg = LabConfig::from_file(args.config, args.overrides);
    if (args.workers >= 0) cfg.workers = args.workers;
    return cfg;
}

std::string sanitize(const std::string& label) {
    std::string out;
    for (char c : label)
        out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c))
                                                           : '_';
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json coupling_to_json(const CouplingKind& kind) {
    json j;
    switch (kind.type) {
        case CouplingKind::Type::synchronous:
            j["kind"] = "synchronous";
            return j;
        case CouplingKind::Type::reflection:
            j["kind"] = "reflection";
            break;
        case CouplingKind::Type::hybrid:
            j["kind"] = "hybrid";
            j["cutoff_r0"] = kind.cutoff.r0;
            break;
    }
    j["lambda0"] = kind.lambda0;
    j["declare_factor"] = kind.declare_factor;
    return j;
}

json growth_to_json(const GrowthReport& g) {
    return json{{"c_hat", g.c_hat},
                {"witness", std::vector<double>(g.witness.begin(), g.witness.end())},
                {"radius", g.radius},
                {"n_probes", g.n_probes},
                {"seed", g.seed}};
}

// Resolves the Lyapunov rate constants: explicit trio if configured,
// otherwise certified from the model's probed (K1, K2, r0).
RateReport resolve_rate(const LabConfig& cfg, const ModelSpec& model) {
    const TheoryInputs th = cfg.theory_inputs();
    if (th.explicit_rate()) return lyapunov_constants(*th.k1, *th.k2, *th.r0);
    const double lambda0 = cfg.resolve_lambda0(model);
    ConditionReport eb =
        estimate_eb_constants(model, lambda0, th.box_radius, cfg.seed, th.eb_r0);
    return lyapunov_constants(eb.constants.at("K1"), eb.constants.at("K2"),
                              eb.constants.at("r0"));
}

int run_validate(const CommonArgs& args) {
    LabConfig cfg = load(args);
    ModelSpec model = cfg.build_model();
    (void)cfg.build_coupling(model);
    if (cfg.has("experiment")) (void)cfg.build_experiment(model, false);
    if (cfg.has("kuwada")) {
        (void)cfg.kuwada_observable(model);
        (void)cfg.kuwada_probes(model);
        (void)cfg.kuwada_options();
    }
    if (cfg.has("gphi")) {
        (void)cfg.gphi_profile();
        (void)cfg.gphi_r_grid();
        (void)cfg.gphi_theta_grid();
    }
    std::printf("config ok: %s\n", cfg.hash().c_str());
    return 0;
}

int run_rates(const CommonArgs& args, std::optional<double> k1, std::optional<double> k2,
              std::optional<double> r0) {
    const int given = int(k1.has_value()) + int(k2.has_value()) + int(r0.has_value());
    if (given != 0 && given != 3) throw Error("give --k1, --k2 and --r0 together");
    json inputs;
    std::uint64_t seed = 0;
    RateReport rate;
    if (given == 3) {
        rate = lyapunov_constants(*k1, *k2, *r0);
        inputs = json{{"k1", *k1}, {"k2", *k2}, {"r0", *r0}};
    } else {
        if (args.config.empty()) throw Error("rates needs --k1/--k2/--r0 or --config");
        LabConfig cfg = load(args);
        ModelSpec model = cfg.build_model();
        rate = resolve_rate(cfg, model);
        inputs = cfg.raw;
        seed = cfg.seed;
    }
    ArtifactWriter out(args.output_dir, "rates", config_hash(inputs), seed);
    out.write_json("rates.json", json{{"inputs", inputs}, {"rate", rate.to_json()}});
    out.finalize();
    std::printf("N=%.10g epsilon=%.10g c=%.10g c1=%.10g argmin_r=%.10g\n", rate.N, rate.epsilon,
                rate.c, rate.c1, rate.argmin_r);
    return 0;
}

int run_check_conditions(const CommonArgs& args) {
    LabConfig cfg = load(args);
    ModelSpec model = cfg.build_model();
    const TheoryInputs th = cfg.theory_inputs();

    GrowthReport growth = check_linear_growth(model, th.box_radius, 512, cfg.seed);

    std::vector<double> p_list{2.0};
    if (cfg.has("experiment") && cfg.raw.at("experiment").contains("p"))
        p_list = cfg.raw.at("experiment").at("p").get<std::vector<double>>();
    json kp_reports = json::array();
    for (double p : p_list) {
        ConditionReport rep = estimate_Kp(model, p, th.box_radius, th.n_pairs, 8, cfg.seed);
        kp_reports.push_back(rep.to_json());
        std::printf("K_%g = %.6g (margin %.3g)\n", p, rep.constants.at("K_p"), rep.margin);
    }

    const double lambda0 = cfg.resolve_lambda0(model);
    auto pairs = sample_pairs(model.dim(), th.box_radius, th.n_pairs, cfg.seed);
    EpReport ep = check_ep_inequality(model, pairs, lambda0);
    std::printf("perturbation bound: %d/%d safe violations, max ratio %.4g\n",
                ep.n_violations_safe, ep.n_pairs, ep.max_ratio_all);

    ConditionReport eb = estimate_eb_constants(model, lambda0, th.box_radius, cfg.seed, th.eb_r0);
    const double K1 = eb.constants.at("K1");
    const double K2 = eb.constants.at("K2");
    const double r0 = eb.constants.at("r0");
    json rate_json;
    bool rate_ok = K2 > 0.0;
    if (rate_ok) {
        RateReport rate = lyapunov_constants(K1, K2, r0);
        rate_json = rate.to_json();
        rate_ok = rate.c1 > 0.0;
        std::printf("certified: K1=%.6g K2=%.6g r0=%.6g -> c=%.6g c1=%.6g\n", K1, K2, r0, rate.c,
                    rate.c1);
    } else {
        std::printf("not certifiable: K2 = %.6g <= 0\n", K2);
    }

    const bool pass = ep.n_violations_safe == 0 && rate_ok;
    ArtifactWriter out(args.output_dir, "check-conditions", cfg.hash(), cfg.seed);
    out.write_json("conditions.json", json{{"growth", growth_to_json(growth)},
                                           {"K_p", kp_reports},
                                           {"lambda0", lambda0},
                                           {"ep", ep.to_json()},
                                           {"eb", eb.to_json()},
                                           {"rate", rate_json},
                                           {"pass", pass}});
    out.finalize();
    std::printf("%s\n", pass ? "conditions: pass" : "conditions: FAIL");
    return pass ? 0 : 2;
}

int run_simulate(const CommonArgs& args) {
    LabConfig cfg = load(args);
    ModelSpec model = cfg.build_model();
    CouplingKind kind = cfg.build_coupling(model);
    ExperimentConfig exp = cfg.build_experiment(model, true);
    SimOptions opts;
    opts.record_stride = 1;
    PairPath path = simulate_pair(model, kind, exp.x0, exp.y0, exp.horizon(), exp.dt, exp.seed,
                                  opts);
    std::vector<double> coupled(path.times.size());
    for (std::size_t i = 0; i < path.times.size(); ++i)
        coupled[i] = path.coupled_at(path.times[i]) ? 1.0 : 0.0;

    ArtifactWriter out(args.output_dir, "simulate", cfg.hash(), cfg.seed);
    out.write("path.csv", render_csv({"t", "rho", "coupled"}, {path.times, path.rho, coupled}));
    json summary{{"coupling", coupling_to_json(kind)},
                 {"coupling_time", path.coupling_time ? json(*path.coupling_time) : json()},
                 {"diverged", path.diverged},
                 {"dt", path.dt},
                 {"horizon", exp.horizon()},
                 {"seed", path.seed}};
    out.write_json("path.json", summary);
    if (args.svg || cfg.want_svg())
        out.write("path.svg", render_svg("pair distance", "t", "rho",
                                         {{"rho", path.times, path.rho}}));
    out.finalize();
    if (path.coupling_time)
        std::printf("coupled at t=%.6g\n", *path.coupling_time);
    else
        std::printf("not coupled by t=%.6g\n", exp.horizon());
    return 0;
}

int run_wasserstein(const CommonArgs& args, const std::string& x_file, const std::string& y_file,
                    const std::string& p_arg, double phi_p, double tol) {
    Mat x = read_points_csv(x_file);
    Mat y = read_points_csv(y_file);
    EmpiricalMeasure mu(std::move(x)), nu(std::move(y));
    DistanceResult res;
    json dist;
    if (phi_p > 0.0) {
        res = wasserstein_phi(mu, nu, YoungFunction::power(phi_p), tol);
        dist = json{{"phi_p", phi_p}, {"tol", tol}};
    } else if (p_arg == "inf") {
        res = wasserstein_inf(mu, nu);
        dist = json{{"p", "inf"}};
    } else {
        double p = 0.0;
        try {
            p = std::stod(p_arg);
        } catch (const std::exception&) {
            throw Error("--p must be a number >= 1 or \"inf\"");
        }
        res = wasserstein_p(mu, nu, p);
        dist = json{{"p", p}};
    }
    // hash the sample contents, not the file names, so identical data gives
    // an identical manifest wherever the files live
    json inputs{{"x_sha256", sha256_hex(slurp(x_file))},
                {"y_sha256", sha256_hex(slurp(y_file))},
                {"distance", dist},
                {"n", mu.size()},
                {"d", mu.dim()}};
    ArtifactWriter out(args.output_dir, "wasserstein", config_hash(inputs), 0);
    json plan = plan_to_json(res);
    plan["distance"] = dist;
    plan["x"] = x_file;
    plan["y"] = y_file;
    out.write_json("plan.json", plan);
    out.finalize();
    std::printf("value=%.17g\n", res.value);
    return 0;
}

int run_contraction(const CommonArgs& args) {
    LabConfig cfg = load(args);
    ModelSpec model = cfg.build_model();
    CouplingKind kind = cfg.build_coupling(model);
    ExperimentConfig exp = cfg.build_experiment(model, true);
    exp.coupling = kind;

    std::optional<RateReport> rate;
    const TheoryInputs th = cfg.theory_inputs();
    if (th.explicit_rate() || th.envelope) rate = resolve_rate(cfg, model);

    auto curves = contraction_experiment(exp);

    ArtifactWriter out(args.output_dir, "contraction", cfg.hash(), cfg.seed);
    bool pass = true;
    json fits = json::array();
    std::vector<SvgSeries> series;
    for (const auto& curve : curves) {
        const bool upper = curve.estimator == "coupling-upper-bound";
        const std::string name =
            std::string("curve_") + (upper ? "upper" : "ot") + "_" + sanitize(curve.distance) +
            ".csv";
        out.write(name, render_csv({"t", "value", "stderr"},
                                   {curve.times, curve.value, curve.stderr_}));
        series.push_back({(upper ? "upper " : "OT ") + curve.distance, curve.times, curve.value});

        json entry{{"estimator", curve.estimator}, {"distance", curve.distance}, {"csv", name}};
        // the Lyapunov envelope speaks about the mean distance: p = 1 only
        const RateReport* envelope =
            (rate && upper && curve.p == 1.0) ? &*rate : nullptr;
        try {
            FitReport fit = fit_rate(curve, envelope);
            entry["fit"] = fit.to_json();
            if (upper) {
                if (!(fit.lambda_lo > 0.0)) pass = false;
                if (envelope && fit.envelope_violations != 0) pass = false;
                std::printf("%s %s: lambda=%.6g [%.6g, %.6g] c=%.6g%s\n", curve.estimator.c_str(),
                            curve.distance.c_str(), fit.lambda_hat, fit.lambda_lo, fit.lambda_hi,
                            fit.c_hat,
                            envelope ? (fit.envelope_violations == 0 ? " envelope ok"
                                                                     : " ENVELOPE VIOLATED")
                                     : "");
            }
        } catch (const InsufficientDecayError& e) {
            entry["fit"] = nullptr;
            entry["fit_error"] = e.what();
            if (upper) {
                pass = false;
                std::printf("%s %s: no usable decay (%s)\n", curve.estimator.c_str(),
                            curve.distance.c_str(), e.what());
            }
        }
        fits.push_back(std::move(entry));
    }
    json summary{{"model", model_to_json(model)},
                 {"coupling", coupling_to_json(kind)},
                 {"rho0", curves.empty() ? 0.0 : curves.front().rho0},
                 {"fits", fits},
                 {"theory", rate ? rate->to_json() : json()},
                 {"pass", pass}};
    out.write_json("summary.json", summary);
    if (args.svg || cfg.want_svg())
        out.write("curves.svg", render_svg("contraction curves", "t", "distance", series));
    out.finalize();
    std::printf("%s\n", pass ? "contraction: pass" : "contraction: FAIL");
    return pass ? 0 : 2;
}

int run_coupling_time(const CommonArgs& args) {
    LabConfig cfg = load(args);
    ModelSpec model = cfg.build_model();
    CouplingKind kind = cfg.build_coupling(model);
    ExperimentConfig exp = cfg.build_experiment(model, true);
    exp.coupling = kind;
    SurvivalCurve sc = coupling_time_experiment(exp);

    ArtifactWriter out(args.output_dir, "coupling-time", cfg.hash(), cfg.seed);
    out.write("survival.csv",
              render_csv({"t", "survival", "stderr"}, {sc.times, sc.survival, sc.stderr_}));
    out.write_json("survival.json", sc.to_json());
    if (args.svg || cfg.want_svg())
        out.write("survival.svg", render_svg("coupling-time survival", "t", "P(T > t)",
                                             {{"survival", sc.times, sc.survival}}));
    out.finalize();
    std::printf("censored %d/%d at t=%.6g\n", sc.n_censored, sc.n_paths, sc.horizon);
    return 0;
}

int run_kuwada(const CommonArgs& args) {
    LabConfig cfg = load(args);
    ModelSpec model = cfg.build_model();
    if (!cfg.has("kuwada")) throw ConfigError("/kuwada", "missing required section");
    expr::NodePtr f = cfg.kuwada_observable(model);
    const double p = cfg.kuwada_p();
    const double t = cfg.kuwada_t();
    KuwadaOptions opts = cfg.kuwada_options();
    std::vector<Vec> probes = cfg.kuwada_probes(model);
    double K_p;
    if (auto kp = cfg.kuwada_Kp()) {
        K_p = *kp;
    } else {
        const TheoryInputs th = cfg.theory_inputs();
        ConditionReport rep =
            estimate_Kp(model, p, th.box_radius, std::min(th.n_pairs, 2048), 8, cfg.seed);
        K_p = rep.constants.at("K_p");
        std::printf("estimated K_p = %.6g\n", K_p);
    }
    KuwadaReport rep = kuwada_check(model, f, p, t, probes, K_p, opts);

    ArtifactWriter out(args.output_dir, "kuwada", cfg.hash(), cfg.seed);
    std::vector<std::string> header;
    std::vector<std::vector<double>> cols;
    for (int j = 0; j < model.dim(); ++j) {
        header.push_back("x" + std::to_string(j + 1));
        std::vector<double> col;
        for (const Vec& probe : rep.probes) col.push_back(probe[j]);
        cols.push_back(std::move(col));
    }
    header.insert(header.end(), {"lhs", "rhs", "ratio", "error"});
    cols.push_back(rep.lhs);
    cols.push_back(rep.rhs);
    cols.push_back(rep.ratio);
    cols.push_back(rep.error);
    out.write("kuwada.csv", render_csv(header, cols));
    out.write_json("kuwada.json", rep.to_json());
    out.finalize();
    std::printf("max ratio %.6g over %zu probes: %s\n", rep.max_ratio, rep.probes.size(),
                rep.pass ? "pass" : "FAIL");
    return rep.pass ? 0 : 2;
}

int run_equilibrium(const CommonArgs& args) {
    LabConfig cfg = load(args);
    ModelSpec model = cfg.build_model();
    ExperimentConfig exp = cfg.build_experiment(model, false);
    EquilibriumCurve eq = equilibrium_experiment(exp, cfg.equilibrium_from_mu_hat());

    ArtifactWriter out(args.output_dir, "equilibrium", cfg.hash(), cfg.seed);
    out.write("equilibrium.csv",
              render_csv({"t", "value", "stderr"}, {eq.times, eq.value, eq.stderr_}));
    out.write_json("equilibrium.json", eq.to_json());
    if (args.svg || cfg.want_svg())
        out.write("equilibrium.svg", render_svg("distance to equilibrium", "t", "W2",
                                                {{"W2", eq.times, eq.value}}));
    out.finalize();
    std::printf("floor=%.6g lambda_rough=%.6g pilot_ok=%d\n", eq.floor_estimate, eq.lambda_rough,
                int(eq.pilot_ok));
    return 0;
}

int run_gphi(const CommonArgs& args) {
    LabConfig cfg = load(args);
    if (!cfg.has("gphi")) throw ConfigError("/gphi", "missing required section");
    ScalarProfile profile = cfg.gphi_profile();
    LambdaCalculus calc(profile);

    ArtifactWriter out(args.output_dir, "gphi", cfg.hash(), cfg.seed);
    json summary{{"profile", {{"c1", profile.coeff()}, {"eps", profile.exponent()}}}};

    auto r_grid = cfg.gphi_r_grid();
    if (!r_grid.empty()) {
        std::vector<double> l1, l2;
        for (double r : r_grid) {
            l1.push_back(calc.lambda1(r));
            l2.push_back(calc.lambda2(r));
        }
        out.write("lambda_curve.csv", render_csv({"r", "lambda1", "lambda2"}, {r_grid, l1, l2}));
        summary["lambda_curve"] = "lambda_curve.csv";
        if (args.svg || cfg.want_svg())
            out.write("lambda.svg", render_svg("rate functions", "r", "value",
                                               {{"lambda1", r_grid, l1},
                                                {"lambda2", r_grid, l2}}));
    }
    auto theta_grid = cfg.gphi_theta_grid();
    if (!theta_grid.empty()) {
        std::vector<double> h;
        for (double theta : theta_grid) h.push_back(calc.H(theta, cfg.gphi_kappa()));
        out.write("h_curve.csv", render_csv({"theta", "H"}, {theta_grid, h}));
        summary["h_curve"] = "h_curve.csv";
        summary["kappa"] = cfg.gphi_kappa();
    }
    if (cfg.gphi_has_curve()) {
        Mat samples = read_points_csv(cfg.gphi_samples());
        EmpiricalMeasure mu_hat(std::move(samples));
        auto [c, delta] = cfg.gphi_norm_bound();
        auto bound = heat_kernel_norm_bound(c, delta);
        YoungFunction phi = YoungFunction::power(cfg.gphi_phi_p());
        auto times = cfg.gphi_times();
        std::vector<double> values;
        for (double t : times) values.push_back(g_phi(t, phi, mu_hat, bound));
        out.write("gphi_curve.csv", render_csv({"t", "g_phi"}, {times, values}));
        summary["gphi_curve"] = "gphi_curve.csv";
        summary["phi_p"] = cfg.gphi_phi_p();
        summary["norm_bound"] = {{"c", c}, {"delta", delta}};
    }
    out.write_json("gphi.json", summary);
    out.finalize();
    std::printf("gphi artifacts written to %s\n", out.dir().string().c_str());
    return 0;
}

void add_common(CLI::App* sub, CommonArgs& args, bool config_required) {
    auto* opt = sub->add_option("--config", args.config, "scenario config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--output-dir", args.output_dir, "artifact directory");
    sub->add_option("--workers", args.workers, "worker threads (0 = all cores)");
    sub->add_flag("--svg", args.svg, "also write SVG plots");
    sub->allow_extras();  // dotted config overrides, e.g. --model.params.K=2
}

std::vector<std::string> collect_overrides(const CLI::App* sub) {
    std::vector<std::string> out;
    for (const std::string& extra : sub->remaining()) {
        if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos)
            throw ConfigError("", "unrecognized argument '" + extra +
                                      "' (overrides look like --key.path=value)");
        out.push_back(extra);
    }
    return out;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"reflection-coupling contraction laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    CommonArgs args;
    auto* validate = app.add_subcommand("validate", "dry-run a config without simulating");
    add_common(validate, args, true);
    auto* conditions =
        app.add_subcommand("check-conditions", "probe the model's coefficient conditions");
    add_common(conditions, args, true);
    auto* rates = app.add_subcommand("rates", "explicit contraction constants from (K1, K2, r0)");
    add_common(rates, args, false);
    double k1 = 0, k2 = 0, r0 = 0;
    auto* k1_opt = rates->add_option("--k1", k1, "inner-ball expansion constant");
    auto* k2_opt = rates->add_option("--k2", k2, "outer contraction constant");
    auto* r0_opt = rates->add_option("--r0", r0, "ball radius");
    auto* simulate = app.add_subcommand("simulate", "one coupled pair trajectory");
    add_common(simulate, args, true);
    auto* wasserstein =
        app.add_subcommand("wasserstein", "exact transport distance between two sample files");
    add_common(wasserstein, args, false);
    std::string x_file, y_file, p_arg = "2";
    double phi_p = 0.0, tol = 1e-8;
    wasserstein->add_option("--x", x_file, "first sample CSV")->required();
    wasserstein->add_option("--y", y_file, "second sample CSV")->required();
    wasserstein->add_option("--p", p_arg, "order (number or \"inf\")");
    wasserstein->add_option("--phi-p", phi_p, "use the power gauge norm of this exponent");
    wasserstein->add_option("--tol", tol, "gauge bisection tolerance");
    auto* contraction = app.add_subcommand("contraction", "distance-decay curves and rate fits");
    add_common(contraction, args, true);
    auto* coupling_time = app.add_subcommand("coupling-time", "survival curve of the meeting time");
    add_common(coupling_time, args, true);
    auto* kuwada = app.add_subcommand("kuwada", "gradient-vs-contraction duality check");
    add_common(kuwada, args, true);
    auto* equilibrium = app.add_subcommand("equilibrium", "distance to the stationary cloud");
    add_common(equilibrium, args, true);
    auto* gphi = app.add_subcommand("gphi", "entropy-gauge and rate-function curves");
    add_common(gphi, args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        args.overrides = collect_overrides(sub);
        if (sub == validate) return run_validate(args);
        if (sub == conditions) return run_check_conditions(args);
        if (sub == rates) {
            auto opt = [](const CLI::Option* o, double v) {
                return o->count() ? std::optional<double>(v) : std::nullopt;
            };
            return run_rates(args, opt(k1_opt, k1), opt(k2_opt, k2), opt(r0_opt, r0));
        }
        if (sub == simulate) return run_simulate(args);
        if (sub == wasserstein) return run_wasserstein(args, x_file, y_file, p_arg, phi_p, tol);
        if (sub == contraction) return run_contraction(args);
        if (sub == coupling_time) return run_coupling_time(args);
        if (sub == kuwada) return run_kuwada(args);
        if (sub == equilibrium) return run_equilibrium(args);
        if (sub == gphi) return run_gphi(args);
        throw Error("unhandled subcommand");
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace clab
