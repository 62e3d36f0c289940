#include "clab/model.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "clab/lowdisc.hpp"

namespace clab {

// ---- low-discrepancy sequence ------------------------------------------------

LowDiscrepancy::LowDiscrepancy(int dim, std::uint64_t seed) {
    require(dim >= 1, "low-discrepancy sequence needs dim >= 1");
    // phi_d solves x^(d+1) = x + 1
    double phi = 1.5;
    for (int i = 0; i < 64; ++i) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    alpha_.resize(std::size_t(dim));
    state_.resize(std::size_t(dim));
    double a = 1.0;
    CounterRng shift(seed, NoiseStream::probe_points);
    std::vector<double> u(static_cast<std::size_t>(dim));
    shift.fill_uniforms(0, 0, u);
    for (int j = 0; j < dim; ++j) {
        a /= phi;
        alpha_[std::size_t(j)] = a;
        state_[std::size_t(j)] = u[std::size_t(j)];
    }
}

void LowDiscrepancy::next(std::span<double> out) {
    require(out.size() == state_.size(), "low-discrepancy output size mismatch");
    for (std::size_t j = 0; j < state_.size(); ++j) {
        state_[j] += alpha_[j];
        state_[j] -= std::floor(state_[j]);
        out[j] = state_[j];
    }
}

Vec LowDiscrepancy::next_in_box(double radius) {
    Vec x(state_.size());
    next(std::span<double>(x.data(), std::size_t(x.size())));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = radius * (2.0 * x[i] - 1.0);
    return x;
}

// ---- VectorField ---------------------------------------------------------------

VectorField VectorField::linear_pull(double K, int d) {
    require(d >= 1, "drift dimension must be >= 1");
    VectorField f;
    f.kind_ = Kind::linear_pull;
    f.d_ = d;
    f.params_ = {K};
    return f;
}

VectorField VectorField::cubic_double_well(int d) {
    require(d >= 1, "drift dimension must be >= 1");
    VectorField f;
    f.kind_ = Kind::cubic_double_well;
    f.d_ = d;
    return f;
}

VectorField VectorField::radial_power(double c0, double theta, double delta, int d) {
    require(d >= 1, "drift dimension must be >= 1");
    require(delta >= 0.0, "smoothing radius must be >= 0");
    VectorField f;
    f.kind_ = Kind::radial_power;
    f.d_ = d;
    f.params_ = {c0, theta, delta};
    return f;
}

VectorField VectorField::zero(int d) { return linear_pull(0.0, d); }

VectorField VectorField::from_expressions(std::vector<expr::NodePtr> components, int d) {
    require(d >= 1, "drift dimension must be >= 1");
    if (int(components.size()) != d)
        throw ArityMismatchError("drift needs " + std::to_string(d) + " components, got " +
                                 std::to_string(components.size()));
    VectorField f;
    f.kind_ = Kind::expressions;
    f.d_ = d;
    f.components_ = std::move(components);
    return f;
}

VectorField VectorField::parse(std::string_view src, int d) {
    return from_expressions(expr::parse_list(src, d, d), d);
}

void VectorField::eval(std::span<const double> x, std::span<double> out) const {
    if (int(x.size()) != d_ || int(out.size()) != d_)
        throw DimensionMismatchError("drift evaluation size mismatch");
    switch (kind_) {
        case Kind::linear_pull: {
            const double K = params_[0];
            for (int i = 0; i < d_; ++i) out[std::size_t(i)] = -K * x[std::size_t(i)];
            return;
        }
        case Kind::cubic_double_well:
            for (int i = 0; i < d_; ++i) {
                const double xi = x[std::size_t(i)];
                out[std::size_t(i)] = xi - xi * xi * xi;
            }
            return;
        case Kind::radial_power: {
            const double c0 = params_[0], theta = params_[1], delta = params_[2];
            double s = delta * delta;
            for (int i = 0; i < d_; ++i) s += x[std::size_t(i)] * x[std::size_t(i)];
            const double scale = -c0 * std::pow(s, theta / 2.0);
            for (int i = 0; i < d_; ++i) out[std::size_t(i)] = scale * x[std::size_t(i)];
            return;
        }
        case Kind::expressions:
            for (int i = 0; i < d_; ++i)
                out[std::size_t(i)] = expr::eval(*components_[std::size_t(i)], x);
            return;
    }
}

Vec VectorField::at(const Vec& x) const {
    Vec out(d_);
    eval(std::span<const double>(x.data(), std::size_t(x.size())),
         std::span<double>(out.data(), std::size_t(out.size())));
    return out;
}

// ---- MatrixField ---------------------------------------------------------------

MatrixField MatrixField::constant(Mat sigma) {
    require(sigma.rows() >= 1 && sigma.cols() >= 1, "diffusion matrix must be non-empty");
    MatrixField f;
    f.kind_ = Kind::constant;
    f.d_ = int(sigma.rows());
    f.m_ = int(sigma.cols());
    f.constant_ = std::move(sigma);
    return f;
}

MatrixField MatrixField::identity(int d, double scale) {
    return constant(Mat(scale * Mat::Identity(d, d)));
}

MatrixField MatrixField::from_expressions(std::vector<expr::NodePtr> components, int d, int m) {
    require(d >= 1 && m >= 1, "diffusion dimensions must be >= 1");
    if (int(components.size()) != d * m)
        throw ArityMismatchError("diffusion needs " + std::to_string(d * m) +
                                 " components, got " + std::to_string(components.size()));
    MatrixField f;
    f.kind_ = Kind::expressions;
    f.d_ = d;
    f.m_ = m;
    f.components_ = std::move(components);
    return f;
}

void MatrixField::eval(std::span<const double> x, std::span<double> out) const {
    if (int(x.size()) != d_ || int(out.size()) != d_ * m_)
        throw DimensionMismatchError("diffusion evaluation size mismatch");
    if (kind_ == Kind::constant) {
        for (int j = 0; j < m_; ++j)
            for (int i = 0; i < d_; ++i) out[std::size_t(j * d_ + i)] = constant_(i, j);
        return;
    }
    // components stored row-major, output column-major
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < m_; ++j)
            out[std::size_t(j * d_ + i)] = expr::eval(*components_[std::size_t(i * m_ + j)], x);
}

Mat MatrixField::at(const Vec& x) const {
    Mat out(d_, m_);
    eval(std::span<const double>(x.data(), std::size_t(x.size())),
         std::span<double>(out.data(), std::size_t(out.size())));
    return out;
}

// ---- ModelSpec -----------------------------------------------------------------

ModelSpec::ModelSpec(std::string name, VectorField drift, MatrixField diffusion)
    : name_(std::move(name)),
      d_(drift.dim()),
      m_(diffusion.cols()),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)) {
    if (diffusion_.rows() != d_)
        throw DimensionMismatchError("drift dimension " + std::to_string(d_) +
                                     " does not match diffusion rows " +
                                     std::to_string(diffusion_.rows()));
}

// ---- growth check ---------------------------------------------------------------

GrowthReport check_linear_growth(const ModelSpec& model, double radius, int n_probes,
                                 std::uint64_t seed) {
    require(radius > 0.0, "growth check radius must be > 0");
    require(n_probes >= 1, "growth check needs at least one probe");
    const int d = model.dim();
    const int m = model.noise_dim();
    LowDiscrepancy seq(d, seed);
    std::vector<double> b(static_cast<std::size_t>(d));
    std::vector<double> sig(static_cast<std::size_t>(d * m));
    Vec x = Vec::Zero(d);

    GrowthReport report;
    report.radius = radius;
    report.n_probes = n_probes + 1;
    report.seed = seed;
    report.c_hat = -std::numeric_limits<double>::infinity();

    auto probe = [&](const Vec& pt) {
        const std::span<const double> xs(pt.data(), std::size_t(pt.size()));
        model.eval_drift(xs, b);
        model.eval_diffusion(xs, sig);
        double hs = 0.0;
        for (double v : sig) hs += v * v;
        double inner = 0.0, norm2 = 0.0;
        for (int i = 0; i < d; ++i) {
            inner += b[std::size_t(i)] * pt[i];
            norm2 += pt[i] * pt[i];
        }
        const double ratio = (hs + inner) / (1.0 + norm2);
        require_finite(ratio, "growth ratio");
        if (ratio > report.c_hat) {
            report.c_hat = ratio;
            report.witness = pt;
        }
    };

    probe(x);
    for (int k = 0; k < n_probes; ++k) probe(seq.next_in_box(radius));
    return report;
}

// ---- builtin registry / JSON ------------------------------------------------------

namespace {

using nlohmann::json;

double get_num(const json& params, const char* key, double fallback) {
    if (!params.contains(key)) return fallback;
    const json& v = params.at(key);
    if (!v.is_number()) throw Error(std::string("builtin parameter '") + key + "' must be a number");
    return v.get<double>();
}

int get_int(const json& params, const char* key, int fallback) {
    if (!params.contains(key)) return fallback;
    const json& v = params.at(key);
    if (!v.is_number_integer()) throw Error(std::string("builtin parameter '") + key + "' must be an integer");
    return v.get<int>();
}

void reject_unknown_params(const json& params, std::initializer_list<const char*> allowed,
                           const std::string& builtin) {
    for (const auto& [key, value] : params.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw Error("unknown parameter '" + key + "' for builtin '" + builtin + "'");
    }
}

std::string shortest(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::vector<std::string> builtin_model_names() {
    return {"ou", "double_well", "example22", "brownian"};
}

ModelSpec make_builtin_model(std::string_view name, const nlohmann::json& params) {
    if (!params.is_object() && !params.is_null())
        throw Error("builtin params must be an object");
    const json p = params.is_null() ? json::object() : params;
    if (name == "ou") {
        reject_unknown_params(p, {"K", "d", "sigma_scale"}, "ou");
        const int d = get_int(p, "d", 1);
        return ModelSpec("ou", VectorField::linear_pull(get_num(p, "K", 1.0), d),
                         MatrixField::identity(d, get_num(p, "sigma_scale", 1.0)));
    }
    if (name == "double_well") {
        reject_unknown_params(p, {"d", "sigma_scale"}, "double_well");
        const int d = get_int(p, "d", 1);
        return ModelSpec("double_well", VectorField::cubic_double_well(d),
                         MatrixField::identity(d, get_num(p, "sigma_scale", std::sqrt(2.0))));
    }
    if (name == "example22") {
        reject_unknown_params(p, {"c0", "theta", "delta", "d", "sigma_scale"}, "example22");
        const int d = get_int(p, "d", 2);
        return ModelSpec(
            "example22",
            VectorField::radial_power(get_num(p, "c0", 1.0), get_num(p, "theta", 1.0),
                                      get_num(p, "delta", 0.0), d),
            MatrixField::identity(d, get_num(p, "sigma_scale", 1.0)));
    }
    if (name == "brownian") {
        reject_unknown_params(p, {"d", "sigma_scale"}, "brownian");
        const int d = get_int(p, "d", 1);
        return ModelSpec("brownian", VectorField::zero(d),
                         MatrixField::identity(d, get_num(p, "sigma_scale", 1.0)));
    }
    throw Error("unknown builtin model '" + std::string(name) + "'");
}

ModelSpec model_from_json(const nlohmann::json& spec) {
    if (!spec.is_object()) throw Error("model description must be a JSON object");
    if (spec.contains("builtin")) {
        for (const auto& [key, value] : spec.items())
            if (key != "builtin" && key != "params")
                throw Error("unexpected key '" + key + "' next to \"builtin\"");
        return make_builtin_model(spec.at("builtin").get<std::string>(),
                                  spec.contains("params") ? spec.at("params") : json());
    }
    for (const char* key : {"d", "m", "drift", "diffusion"})
        if (!spec.contains(key))
            throw Error(std::string("model description missing \"") + key + "\"");
    for (const auto& [key, value] : spec.items())
        if (key != "d" && key != "m" && key != "drift" && key != "diffusion" && key != "name")
            throw Error("unexpected key '" + key + "' in model description");

    const int d = spec.at("d").get<int>();
    const int m = spec.at("m").get<int>();
    require(d >= 1 && m >= 1, "model dimensions must be >= 1");

    const json& jd = spec.at("drift");
    std::vector<expr::NodePtr> drift_comps;
    if (jd.is_string()) {
        drift_comps = expr::parse_list(jd.get<std::string>(), d, d);
    } else if (jd.is_array()) {
        for (const json& c : jd) drift_comps.push_back(expr::parse(c.get<std::string>(), d));
        if (int(drift_comps.size()) != d)
            throw ArityMismatchError("drift needs " + std::to_string(d) + " components, got " +
                                     std::to_string(drift_comps.size()));
    } else {
        throw Error("\"drift\" must be a string or an array of strings");
    }

    const json& js = spec.at("diffusion");
    MatrixField diffusion = MatrixField::identity(d);
    if (js.is_object() && js.contains("constant")) {
        const json& rows = js.at("constant");
        if (!rows.is_array() || int(rows.size()) != d)
            throw ArityMismatchError("constant diffusion needs " + std::to_string(d) + " rows");
        Mat sigma(d, m);
        for (int i = 0; i < d; ++i) {
            const json& row = rows.at(std::size_t(i));
            if (!row.is_array() || int(row.size()) != m)
                throw ArityMismatchError("constant diffusion rows need " + std::to_string(m) +
                                         " entries");
            for (int j = 0; j < m; ++j) sigma(i, j) = row.at(std::size_t(j)).get<double>();
        }
        diffusion = MatrixField::constant(std::move(sigma));
    } else if (js.is_object() && js.contains("identity")) {
        require(d == m, "identity diffusion needs d == m");
        const json& id = js.at("identity");
        diffusion = MatrixField::identity(d, id.is_object() ? get_num(id, "scale", 1.0) : 1.0);
    } else if (js.is_array()) {
        std::vector<expr::NodePtr> comps;
        if (int(js.size()) != d)
            throw ArityMismatchError("diffusion needs " + std::to_string(d) + " rows");
        for (const json& row : js) {
            if (!row.is_array() || int(row.size()) != m)
                throw ArityMismatchError("diffusion rows need " + std::to_string(m) + " entries");
            for (const json& c : row) comps.push_back(expr::parse(c.get<std::string>(), d));
        }
        diffusion = MatrixField::from_expressions(std::move(comps), d, m);
    } else {
        throw Error("\"diffusion\" must be rows of expressions, {\"constant\":...} or {\"identity\":...}");
    }

    return ModelSpec(spec.contains("name") ? spec.at("name").get<std::string>() : "custom",
                     VectorField::from_expressions(std::move(drift_comps), d), std::move(diffusion));
}

nlohmann::json model_to_json(const ModelSpec& model) {
    json out;
    out["name"] = model.name();
    out["d"] = model.dim();
    out["m"] = model.noise_dim();

    json drift = json::array();
    const VectorField& b = model.drift();
    for (int i = 0; i < model.dim(); ++i) {
        switch (b.kind()) {
            case VectorField::Kind::linear_pull:
                drift.push_back("-" + shortest(b.param(0)) + "*x" + std::to_string(i + 1));
                break;
            case VectorField::Kind::cubic_double_well: {
                const std::string xi = "x" + std::to_string(i + 1);
                drift.push_back(xi + "-" + xi + "^3");
                break;
            }
            case VectorField::Kind::radial_power: {
                const double dsq = b.param(2) * b.param(2);
                drift.push_back("-" + shortest(b.param(0)) + "*(" + shortest(dsq) +
                                "+norm(x)^2)^" + shortest(b.param(1) / 2.0) + "*x" +
                                std::to_string(i + 1));
                break;
            }
            case VectorField::Kind::expressions:
                drift.push_back(expr::print(*b.components()[std::size_t(i)]));
                break;
        }
    }
    out["drift"] = drift;

    const MatrixField& s = model.diffusion();
    if (s.is_constant()) {
        json rows = json::array();
        for (int i = 0; i < s.rows(); ++i) {
            json row = json::array();
            for (int j = 0; j < s.cols(); ++j) row.push_back(s.constant_value()(i, j));
            rows.push_back(row);
        }
        out["diffusion"] = json{{"constant", rows}};
    } else {
        json rows = json::array();
        for (int i = 0; i < s.rows(); ++i) {
            json row = json::array();
            for (int j = 0; j < s.cols(); ++j)
                row.push_back(expr::print(*s.components()[std::size_t(i * s.cols() + j)]));
            rows.push_back(row);
        }
        out["diffusion"] = rows;
    }
    return out;
}

}  // namespace clab
