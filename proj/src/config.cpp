#include "clab/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <string>

#include "clab/artifacts.hpp"
#include "clab/errors.hpp"
#include "clab/lowdisc.hpp"
#include "clab/young.hpp"

namespace clab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& ptr, const std::string& msg) {
    throw ConfigError(ptr, msg);
}

void check_keys(const json& obj, const std::string& ptr,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) fail(ptr + "/" + key, "unknown key");
    }
}

const json& need(const json& obj, const std::string& ptr, const char* key) {
    if (!obj.contains(key)) fail(ptr + "/" + key, "missing required field");
    return obj.at(key);
}

double as_number(const json& v, const std::string& ptr) {
    if (!v.is_number()) fail(ptr, "expected a number");
    return v.get<double>();
}

double positive_number(const json& v, const std::string& ptr) {
    double x = as_number(v, ptr);
    if (!(x > 0.0) || !std::isfinite(x)) fail(ptr, "expected a positive finite number");
    return x;
}

int as_int(const json& v, const std::string& ptr) {
    if (!v.is_number_integer()) fail(ptr, "expected an integer");
    return v.get<int>();
}

bool as_bool(const json& v, const std::string& ptr) {
    if (!v.is_boolean()) fail(ptr, "expected a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& ptr) {
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
}

std::vector<double> number_array(const json& v, const std::string& ptr, std::size_t min_len) {
    if (!v.is_array()) fail(ptr, "expected an array of numbers");
    if (v.size() < min_len)
        fail(ptr, "expected at least " + std::to_string(min_len) + " entries");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v.at(i), ptr + "/" + std::to_string(i)));
    return out;
}

// number > 0 or the string "auto"
void check_lambda0_field(const json& v, const std::string& ptr) {
    if (v.is_string()) {
        if (v.get<std::string>() != "auto") fail(ptr, "expected a positive number or \"auto\"");
        return;
    }
    positive_number(v, ptr);
}

void check_time_grid(const json& v, const std::string& ptr) {
    if (v.is_array()) {
        auto times = number_array(v, ptr, 1);
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
                fail(ptr + "/" + std::to_string(i), "times must be finite and nonnegative");
            if (i > 0 && !(times[i] > times[i - 1]))
                fail(ptr + "/" + std::to_string(i), "times must be strictly increasing");
        }
        if (!(times.back() > 0.0)) fail(ptr, "the horizon must be positive");
        return;
    }
    if (v.is_object()) {
        check_keys(v, ptr, {"t_max", "step"});
        double t_max = positive_number(need(v, ptr, "t_max"), ptr + "/t_max");
        double step = positive_number(need(v, ptr, "step"), ptr + "/step");
        if (step > t_max) fail(ptr + "/step", "step exceeds t_max");
        return;
    }
    fail(ptr, "expected an array of times or {\"t_max\", \"step\"}");
}

std::vector<double> expand_time_grid(const json& v) {
    if (v.is_array()) return v.get<std::vector<double>>();
    const double t_max = v.at("t_max").get<double>();
    const double step = v.at("step").get<double>();
    std::vector<double> out{0.0};
    for (long long k = 1;; ++k) {
        const double t = static_cast<double>(k) * step;
        if (t > t_max * (1.0 + 1e-12)) break;
        out.push_back(t);
    }
    return out;
}

void validate_model_section(const json& cfg) {
    if (!cfg.contains("model")) fail("/model", "missing required section");
    try {
        (void)model_from_json(cfg.at("model"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail("/model", e.what());
    }
}

void validate_coupling_section(const json& v) {
    const std::string ptr = "/coupling";
    if (!v.is_object()) fail(ptr, "expected an object");
    const std::string kind = as_string(need(v, ptr, "kind"), ptr + "/kind");
    if (kind == "synchronous") {
        check_keys(v, ptr, {"kind"});
    } else if (kind == "reflection") {
        check_keys(v, ptr, {"kind", "lambda0", "declare_factor"});
        check_lambda0_field(need(v, ptr, "lambda0"), ptr + "/lambda0");
    } else if (kind == "hybrid") {
        check_keys(v, ptr, {"kind", "lambda0", "cutoff_r0", "declare_factor"});
        check_lambda0_field(need(v, ptr, "lambda0"), ptr + "/lambda0");
        positive_number(need(v, ptr, "cutoff_r0"), ptr + "/cutoff_r0");
    } else {
        fail(ptr + "/kind", "expected \"synchronous\", \"reflection\" or \"hybrid\"");
    }
    if (v.contains("declare_factor"))
        positive_number(v.at("declare_factor"), ptr + "/declare_factor");
}

void validate_experiment_section(const json& v) {
    const std::string ptr = "/experiment";
    if (!v.is_object()) fail(ptr, "expected an object");
    check_keys(v, ptr, {"x0", "y0", "times", "dt", "n_paths", "p", "gauges", "n_ot"});
    number_array(need(v, ptr, "x0"), ptr + "/x0", 1);
    if (v.contains("y0")) number_array(v.at("y0"), ptr + "/y0", 1);
    check_time_grid(need(v, ptr, "times"), ptr + "/times");
    if (v.contains("dt")) positive_number(v.at("dt"), ptr + "/dt");
    if (v.contains("n_paths") && as_int(v.at("n_paths"), ptr + "/n_paths") < 2)
        fail(ptr + "/n_paths", "need at least two paths");
    if (v.contains("p")) {
        auto ps = number_array(v.at("p"), ptr + "/p", 1);
        for (std::size_t i = 0; i < ps.size(); ++i)
            if (!(ps[i] >= 1.0))
                fail(ptr + "/p/" + std::to_string(i), "orders must be >= 1");
    }
    if (v.contains("gauges")) {
        const json& gs = v.at("gauges");
        if (!gs.is_array()) fail(ptr + "/gauges", "expected an array");
        for (std::size_t i = 0; i < gs.size(); ++i) {
            const std::string gptr = ptr + "/gauges/" + std::to_string(i);
            const json& g = gs.at(i);
            if (!g.is_object()) fail(gptr, "expected an object");
            check_keys(g, gptr, {"kind", "p", "label"});
            if (as_string(need(g, gptr, "kind"), gptr + "/kind") != "power")
                fail(gptr + "/kind", "only \"power\" gauges are configurable");
            double p = positive_number(need(g, gptr, "p"), gptr + "/p");
            if (!(p >= 1.0)) fail(gptr + "/p", "gauge exponent must be >= 1");
            if (g.contains("label")) as_string(g.at("label"), gptr + "/label");
        }
    }
    if (v.contains("n_ot") && as_int(v.at("n_ot"), ptr + "/n_ot") < 0)
        fail(ptr + "/n_ot", "must be nonnegative");
}

void validate_kuwada_section(const json& v) {
    const std::string ptr = "/kuwada";
    if (!v.is_object()) fail(ptr, "expected an object");
    check_keys(v, ptr, {"f", "p", "t", "K_p", "probes", "n_paths", "dt", "eta"});
    as_string(need(v, ptr, "f"), ptr + "/f");
    if (v.contains("p") && !(as_number(v.at("p"), ptr + "/p") > 1.0))
        fail(ptr + "/p", "the dual exponent needs p > 1");
    positive_number(need(v, ptr, "t"), ptr + "/t");
    if (v.contains("K_p")) {
        const json& kp = v.at("K_p");
        if (kp.is_string()) {
            if (kp.get<std::string>() != "auto")
                fail(ptr + "/K_p", "expected a number or \"auto\"");
        } else {
            as_number(kp, ptr + "/K_p");
        }
    }
    const json& probes = need(v, ptr, "probes");
    if (probes.is_array()) {
        if (probes.empty()) fail(ptr + "/probes", "need at least one probe");
        for (std::size_t i = 0; i < probes.size(); ++i)
            number_array(probes.at(i), ptr + "/probes/" + std::to_string(i), 1);
    } else if (probes.is_object()) {
        check_keys(probes, ptr + "/probes", {"n", "radius"});
        if (as_int(need(probes, ptr + "/probes", "n"), ptr + "/probes/n") < 1)
            fail(ptr + "/probes/n", "need at least one probe");
        positive_number(need(probes, ptr + "/probes", "radius"), ptr + "/probes/radius");
    } else {
        fail(ptr + "/probes", "expected an array of points or {\"n\", \"radius\"}");
    }
    if (v.contains("n_paths") && as_int(v.at("n_paths"), ptr + "/n_paths") < 2)
        fail(ptr + "/n_paths", "need at least two paths");
    if (v.contains("dt")) positive_number(v.at("dt"), ptr + "/dt");
    if (v.contains("eta") && !(as_number(v.at("eta"), ptr + "/eta") >= 0.0))
        fail(ptr + "/eta", "must be nonnegative");
}

void validate_theory_section(const json& v) {
    const std::string ptr = "/theory";
    if (!v.is_object()) fail(ptr, "expected an object");
    check_keys(v, ptr, {"k1", "k2", "r0", "box_radius", "n_pairs", "lambda0", "eb_r0",
                        "envelope"});
    const int trio = int(v.contains("k1")) + int(v.contains("k2")) + int(v.contains("r0"));
    if (trio != 0 && trio != 3)
        fail(ptr, "k1, k2 and r0 must be given together or not at all");
    if (trio == 3) {
        if (!(as_number(v.at("k1"), ptr + "/k1") >= 0.0))
            fail(ptr + "/k1", "must be nonnegative");
        positive_number(v.at("k2"), ptr + "/k2");
        positive_number(v.at("r0"), ptr + "/r0");
    }
    if (v.contains("box_radius")) positive_number(v.at("box_radius"), ptr + "/box_radius");
    if (v.contains("n_pairs") && as_int(v.at("n_pairs"), ptr + "/n_pairs") < 1)
        fail(ptr + "/n_pairs", "need at least one pair");
    if (v.contains("lambda0")) check_lambda0_field(v.at("lambda0"), ptr + "/lambda0");
    if (v.contains("eb_r0")) positive_number(v.at("eb_r0"), ptr + "/eb_r0");
    if (v.contains("envelope")) as_bool(v.at("envelope"), ptr + "/envelope");
}

void validate_equilibrium_section(const json& v) {
    const std::string ptr = "/equilibrium";
    if (!v.is_object()) fail(ptr, "expected an object");
    check_keys(v, ptr, {"start_from_mu_hat"});
    if (v.contains("start_from_mu_hat"))
        as_bool(v.at("start_from_mu_hat"), ptr + "/start_from_mu_hat");
}

void validate_gphi_section(const json& v) {
    const std::string ptr = "/gphi";
    if (!v.is_object()) fail(ptr, "expected an object");
    check_keys(v, ptr,
               {"profile", "r", "theta", "kappa", "phi_p", "norm_bound", "samples", "times"});
    const json& prof = need(v, ptr, "profile");
    if (!prof.is_object()) fail(ptr + "/profile", "expected an object");
    check_keys(prof, ptr + "/profile", {"c1", "eps"});
    positive_number(need(prof, ptr + "/profile", "c1"), ptr + "/profile/c1");
    positive_number(need(prof, ptr + "/profile", "eps"), ptr + "/profile/eps");
    if (v.contains("r")) {
        const json& r = v.at("r");
        if (r.is_array()) {
            auto rs = number_array(r, ptr + "/r", 1);
            for (std::size_t i = 0; i < rs.size(); ++i)
                if (!(rs[i] > 0.0))
                    fail(ptr + "/r/" + std::to_string(i), "radii must be positive");
        } else if (r.is_object()) {
            check_keys(r, ptr + "/r", {"min", "max", "n", "log"});
            double lo = positive_number(need(r, ptr + "/r", "min"), ptr + "/r/min");
            double hi = positive_number(need(r, ptr + "/r", "max"), ptr + "/r/max");
            if (!(hi > lo)) fail(ptr + "/r/max", "max must exceed min");
            if (as_int(need(r, ptr + "/r", "n"), ptr + "/r/n") < 2)
                fail(ptr + "/r/n", "need at least two grid points");
            if (r.contains("log")) as_bool(r.at("log"), ptr + "/r/log");
        } else {
            fail(ptr + "/r", "expected an array or {\"min\", \"max\", \"n\"}");
        }
    }
    if (v.contains("theta")) {
        auto ts = number_array(v.at("theta"), ptr + "/theta", 1);
        for (std::size_t i = 0; i < ts.size(); ++i)
            if (!(ts[i] > 0.0))
                fail(ptr + "/theta/" + std::to_string(i), "theta must be positive");
    }
    if (v.contains("kappa")) {
        double kappa = as_number(v.at("kappa"), ptr + "/kappa");
        if (!(kappa > 0.0 && kappa < 1.0)) fail(ptr + "/kappa", "must lie in (0, 1)");
    }
    if (v.contains("phi_p") && !(as_number(v.at("phi_p"), ptr + "/phi_p") >= 1.0))
        fail(ptr + "/phi_p", "gauge exponent must be >= 1");
    const int curve = int(v.contains("samples")) + int(v.contains("norm_bound")) +
                      int(v.contains("times"));
    if (curve != 0 && curve != 3)
        fail(ptr, "samples, norm_bound and times must be given together");
    if (v.contains("norm_bound")) {
        const json& nb = v.at("norm_bound");
        if (!nb.is_object()) fail(ptr + "/norm_bound", "expected an object");
        check_keys(nb, ptr + "/norm_bound", {"c", "delta"});
        if (!(as_number(need(nb, ptr + "/norm_bound", "c"), ptr + "/norm_bound/c") >= 0.0))
            fail(ptr + "/norm_bound/c", "must be nonnegative");
        if (!(as_number(need(nb, ptr + "/norm_bound", "delta"), ptr + "/norm_bound/delta") >
          1.0))
            fail(ptr + "/norm_bound/delta", "must exceed 1");
    }
    if (v.contains("samples")) as_string(v.at("samples"), ptr + "/samples");
    if (v.contains("times")) {
        auto ts = number_array(v.at("times"), ptr + "/times", 1);
        for (std::size_t i = 0; i < ts.size(); ++i)
            if (!(ts[i] > 0.0))
                fail(ptr + "/times/" + std::to_string(i), "times must be positive");
    }
    if (!v.contains("r") && !v.contains("theta") && !v.contains("samples"))
        fail(ptr, "nothing to compute: give r, theta or samples");
}

void validate_output_section(const json& v) {
    const std::string ptr = "/output";
    if (!v.is_object()) fail(ptr, "expected an object");
    check_keys(v, ptr, {"svg"});
    if (v.contains("svg")) as_bool(v.at("svg"), ptr + "/svg");
}

}  // namespace

void validate_config(const json& cfg) {
    if (!cfg.is_object()) fail("", "config must be a JSON object");
    check_keys(cfg, "",
               {"version", "seed", "workers", "model", "coupling", "experiment", "kuwada",
                "equilibrium", "theory", "gphi", "output"});
    if (cfg.contains("version") && as_int(cfg.at("version"), "/version") != 1)
        fail("/version", "this tool reads schema version 1");
    if (cfg.contains("seed")) {
        const json& s = cfg.at("seed");
        if (!s.is_number_integer() || s.get<long long>() < 0)
            fail("/seed", "expected a nonnegative integer");
    }
    if (cfg.contains("workers") && as_int(cfg.at("workers"), "/workers") < 0)
        fail("/workers", "must be nonnegative");
    validate_model_section(cfg);
    if (cfg.contains("coupling")) validate_coupling_section(cfg.at("coupling"));
    if (cfg.contains("experiment")) validate_experiment_section(cfg.at("experiment"));
    if (cfg.contains("kuwada")) validate_kuwada_section(cfg.at("kuwada"));
    if (cfg.contains("equilibrium")) validate_equilibrium_section(cfg.at("equilibrium"));
    if (cfg.contains("theory")) validate_theory_section(cfg.at("theory"));
    if (cfg.contains("gphi")) validate_gphi_section(cfg.at("gphi"));
    if (cfg.contains("output")) validate_output_section(cfg.at("output"));
}

void apply_overrides(json& cfg, const std::vector<std::string>& dotted) {
    for (const std::string& item : dotted) {
        std::string body = item;
        if (body.rfind("--", 0) == 0) body = body.substr(2);
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("", "override '" + item + "' is not of the form --key.path=value");
        std::string path = body.substr(0, eq);
        const std::string value = body.substr(eq + 1);
        for (char& c : path)
            if (c == '.') c = '/';
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            parsed = value;  // bare strings need no quotes
        }
        try {
            cfg[json::json_pointer("/" + path)] = parsed;
        } catch (const json::exception& e) {
            throw ConfigError("/" + path, std::string("cannot apply override: ") + e.what());
        }
    }
}

void apply_env_seed(json& cfg) {
    const char* env = std::getenv("CONTRACTION_LAB_SEED");
    if (env == nullptr || *env == '\0') return;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
        throw ConfigError("/seed", "CONTRACTION_LAB_SEED is not a nonnegative integer");
    cfg["seed"] = v;
}

LabConfig LabConfig::from_json(json cfg, const std::vector<std::string>& overrides) {
    apply_overrides(cfg, overrides);
    apply_env_seed(cfg);
    validate_config(cfg);
    LabConfig out;
    out.raw = std::move(cfg);
    out.seed = out.raw.value("seed", std::uint64_t{0});
    out.workers = out.raw.value("workers", 0);
    return out;
}

LabConfig LabConfig::from_file(const std::filesystem::path& path,
                               const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(std::move(cfg), overrides);
}

std::string LabConfig::hash() const { return config_hash(raw); }

ModelSpec LabConfig::build_model() const {
    try {
        return model_from_json(raw.at("model"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail("/model", e.what());
    }
}

CouplingKind LabConfig::build_coupling(const ModelSpec& model) const {
    if (!raw.contains("coupling")) return CouplingKind::synchronous();
    const json& v = raw.at("coupling");
    const std::string kind = v.at("kind").get<std::string>();
    if (kind == "synchronous") return CouplingKind::synchronous();
    double lambda0;
    const json& l0 = v.at("lambda0");
    if (l0.is_string()) {
        const TheoryInputs th = theory_inputs();
        lambda0 = pick_lambda0(model, th.box_radius, 512, seed);
    } else {
        lambda0 = l0.get<double>();
    }
    CouplingKind out = kind == "reflection"
                           ? CouplingKind::reflection(lambda0)
                           : CouplingKind::hybrid(
                                 lambda0, CutoffProfile{v.at("cutoff_r0").get<double>()});
    if (v.contains("declare_factor")) out.declare_factor = v.at("declare_factor").get<double>();
    return out;
}

ExperimentConfig LabConfig::build_experiment(const ModelSpec& model, bool require_y0) const {
    if (!raw.contains("experiment")) fail("/experiment", "missing required section");
    const json& v = raw.at("experiment");
    ExperimentConfig cfg;
    cfg.model = &model;

    auto vec_field = [&](const char* key) {
        auto vals = v.at(key).get<std::vector<double>>();
        if (static_cast<int>(vals.size()) != model.dim())
            fail(std::string("/experiment/") + key,
                 "expected " + std::to_string(model.dim()) + " coordinates");
        Vec out(model.dim());
        for (int i = 0; i < model.dim(); ++i) out[i] = vals[std::size_t(i)];
        return out;
    };
    cfg.x0 = vec_field("x0");
    if (v.contains("y0")) {
        cfg.y0 = vec_field("y0");
    } else {
        if (require_y0) fail("/experiment/y0", "required for pair experiments");
        cfg.y0 = cfg.x0;
    }
    cfg.times = expand_time_grid(v.at("times"));
    cfg.dt = v.value("dt", 1e-3);
    cfg.n_paths = v.value("n_paths", 1000);
    if (v.contains("p")) cfg.p_values = v.at("p").get<std::vector<double>>();
    if (v.contains("gauges")) {
        for (const json& g : v.at("gauges")) {
            const double p = g.at("p").get<double>();
            cfg.gauges.push_back(YoungFunction::power(p));
            char def[32];
            std::snprintf(def, sizeof(def), "phi%g", p);
            cfg.gauge_labels.push_back(g.value("label", std::string(def)));
        }
    }
    cfg.n_ot = v.value("n_ot", 0);
    cfg.seed = seed;
    cfg.n_workers = workers;
    try {
        cfg.validate();
    } catch (const Error& e) {
        fail("/experiment", e.what());
    }
    return cfg;
}

TheoryInputs LabConfig::theory_inputs() const {
    TheoryInputs th;
    if (!raw.contains("theory")) return th;
    const json& v = raw.at("theory");
    if (v.contains("k1")) {
        th.k1 = v.at("k1").get<double>();
        th.k2 = v.at("k2").get<double>();
        th.r0 = v.at("r0").get<double>();
    }
    th.box_radius = v.value("box_radius", 3.0);
    th.n_pairs = v.value("n_pairs", 4096);
    if (v.contains("lambda0") && v.at("lambda0").is_number())
        th.lambda0 = v.at("lambda0").get<double>();
    if (v.contains("eb_r0")) th.eb_r0 = v.at("eb_r0").get<double>();
    th.envelope = v.value("envelope", false);
    return th;
}

double LabConfig::resolve_lambda0(const ModelSpec& model) const {
    const TheoryInputs th = theory_inputs();
    if (th.lambda0) return *th.lambda0;
    return pick_lambda0(model, th.box_radius, 512, seed);
}

expr::NodePtr LabConfig::kuwada_observable(const ModelSpec& model) const {
    if (!raw.contains("kuwada")) fail("/kuwada", "missing required section");
    try {
        return expr::parse(raw.at("kuwada").at("f").get<std::string>(), model.dim());
    } catch (const Error& e) {
        fail("/kuwada/f", e.what());
    }
}

double LabConfig::kuwada_p() const { return raw.at("kuwada").value("p", 2.0); }

double LabConfig::kuwada_t() const { return raw.at("kuwada").at("t").get<double>(); }

std::optional<double> LabConfig::kuwada_Kp() const {
    const json& v = raw.at("kuwada");
    if (!v.contains("K_p") || v.at("K_p").is_string()) return {};
    return v.at("K_p").get<double>();
}

std::vector<Vec> LabConfig::kuwada_probes(const ModelSpec& model) const {
    const json& probes = raw.at("kuwada").at("probes");
    std::vector<Vec> out;
    if (probes.is_array()) {
        for (std::size_t i = 0; i < probes.size(); ++i) {
            auto coords = probes.at(i).get<std::vector<double>>();
            if (static_cast<int>(coords.size()) != model.dim())
                fail("/kuwada/probes/" + std::to_string(i),
                     "expected " + std::to_string(model.dim()) + " coordinates");
            Vec p(model.dim());
            for (int j = 0; j < model.dim(); ++j) p[j] = coords[std::size_t(j)];
            out.push_back(std::move(p));
        }
        return out;
    }
    const int n = probes.at("n").get<int>();
    const double radius = probes.at("radius").get<double>();
    LowDiscrepancy gen(model.dim(), seed);
    out.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) out.push_back(gen.next_in_box(radius));
    return out;
}

KuwadaOptions LabConfig::kuwada_options() const {
    const json& v = raw.at("kuwada");
    KuwadaOptions opts;
    opts.dt = v.value("dt", 1e-3);
    opts.n_paths = v.value("n_paths", 4000);
    opts.seed = seed;
    opts.n_workers = workers;
    opts.eta = v.value("eta", 0.0);
    return opts;
}

bool LabConfig::equilibrium_from_mu_hat() const {
    if (!raw.contains("equilibrium")) return false;
    return raw.at("equilibrium").value("start_from_mu_hat", false);
}

bool LabConfig::want_svg() const {
    if (!raw.contains("output")) return false;
    return raw.at("output").value("svg", false);
}

ScalarProfile LabConfig::gphi_profile() const {
    if (!raw.contains("gphi")) fail("/gphi", "missing required section");
    const json& prof = raw.at("gphi").at("profile");
    return ScalarProfile::power(prof.at("c1").get<double>(), prof.at("eps").get<double>());
}

std::vector<double> LabConfig::gphi_r_grid() const {
    const json& v = raw.at("gphi");
    if (!v.contains("r")) return {};
    const json& r = v.at("r");
    if (r.is_array()) return r.get<std::vector<double>>();
    const double lo = r.at("min").get<double>();
    const double hi = r.at("max").get<double>();
    const int n = r.at("n").get<int>();
    const bool log_grid = r.value("log", true);
    std::vector<double> out;
    out.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        out.push_back(log_grid ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
    }
    return out;
}

std::vector<double> LabConfig::gphi_theta_grid() const {
    const json& v = raw.at("gphi");
    if (!v.contains("theta")) return {};
    return v.at("theta").get<std::vector<double>>();
}

double LabConfig::gphi_kappa() const { return raw.at("gphi").value("kappa", 0.5); }

bool LabConfig::gphi_has_curve() const {
    return raw.contains("gphi") && raw.at("gphi").contains("samples");
}

double LabConfig::gphi_phi_p() const { return raw.at("gphi").value("phi_p", 2.0); }

std::pair<double, double> LabConfig::gphi_norm_bound() const {
    const json& nb = raw.at("gphi").at("norm_bound");
    return {nb.at("c").get<double>(), nb.at("delta").get<double>()};
}

std::string LabConfig::gphi_samples() const {
    return raw.at("gphi").at("samples").get<std::string>();
}

std::vector<double> LabConfig::gphi_times() const {
    return raw.at("gphi").at("times").get<std::vector<double>>();
}

}  // namespace clab
