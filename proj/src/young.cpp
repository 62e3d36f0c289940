#include "clab/young.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "clab/common.hpp"
#include "clab/errors.hpp"

namespace clab {

namespace {

// log-spaced probe grid spanning twelve decades
std::vector<double> probe_grid() {
    std::vector<double> g;
    for (int k = -24; k <= 24; ++k) g.push_back(std::pow(10.0, 0.25 * k));
    return g;
}

void validate_custom(const std::function<double(double)>& f, const std::string& label,
                     bool superlinear) {
    double at0 = f(0.0);
    if (!(at0 == 0.0))
        throw InvalidYoungFunctionError(label + ": Phi(0) must be 0, got " +
                                        std::to_string(at0));
    double prev = 0.0, prev_r = 0.0, prev_ratio = 0.0;
    for (double r : probe_grid()) {
        double v = f(r);
        if (std::isnan(v) || v < 0.0)
            throw InvalidYoungFunctionError(label + ": Phi must be nonnegative");
        // overflowing to +inf at large r is fine: Phi is meant to blow up
        if (std::isinf(v)) break;
        if (v <= prev)
            throw InvalidYoungFunctionError(label + ": Phi must be strictly increasing (Phi(" +
                                            std::to_string(prev_r) + ") >= Phi(" +
                                            std::to_string(r) + "))");
        if (superlinear) {
            double ratio = v / r;
            if (prev_ratio > 0.0 && ratio < prev_ratio * (1.0 - 1e-9))
                throw InvalidYoungFunctionError(label +
                                                ": Phi(r)/r must be nondecreasing "
                                                "for an admissible Young function");
            prev_ratio = ratio;
        }
        prev = v;
        prev_r = r;
    }
}

}  // namespace

YoungFunction YoungFunction::power(double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw InvalidYoungFunctionError("power exponent must be finite and >= 1");
    YoungFunction phi;
    phi.kind_ = Kind::power;
    phi.p_ = p;
    phi.label_ = "r^" + std::to_string(p);
    return phi;
}

YoungFunction YoungFunction::infinity() {
    YoungFunction phi;
    phi.kind_ = Kind::infinity;
    phi.label_ = "step at 1";
    return phi;
}

YoungFunction YoungFunction::custom(std::function<double(double)> f, std::string label,
                                    bool superlinear) {
    require(static_cast<bool>(f), "custom Young function needs an evaluator");
    validate_custom(f, label, superlinear);
    YoungFunction phi;
    phi.kind_ = Kind::custom;
    phi.f_ = std::move(f);
    phi.label_ = std::move(label);
    return phi;
}

double YoungFunction::operator()(double r) const {
    require(r >= 0.0, "Young functions are evaluated on [0, infinity)");
    switch (kind_) {
        case Kind::power: return std::pow(r, p_);
        case Kind::custom: return f_(r);
        case Kind::infinity: return r <= 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double YoungFunction::inverse(double y) const {
    require(y >= 0.0 && std::isfinite(y), "inverse needs a finite nonnegative argument");
    if (kind_ == Kind::power) return std::pow(y, 1.0 / p_);
    if (kind_ == Kind::infinity) return 1.0;  // sup{r : step(r) <= y}
    if (y == 0.0) return 0.0;
    // geometric bracket around r = 1, then bisection
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (f_(hi) < y) {
        hi *= 2.0;
        if (++guard > 2200 || !std::isfinite(hi))
            throw BracketFailureError("Phi grows too slowly to reach " + std::to_string(y) +
                                      "; not a valid Young function");
    }
    guard = 0;
    while (f_(lo) > y) {
        lo *= 0.5;
        if (++guard > 2200 || lo == 0.0)
            throw BracketFailureError("Phi stays above " + std::to_string(y) +
                                      " arbitrarily close to 0");
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (f_(mid) <= y ? lo : hi) = mid;
    }
    return lo;
}

double gauge_norm(std::span<const double> values, std::span<const double> weights,
                  const YoungFunction& phi) {
    require(!values.empty(), "gauge norm of an empty sample");
    const std::size_t n = values.size();
    std::vector<double> w;
    if (weights.empty()) {
        w.assign(n, 1.0 / static_cast<double>(n));
    } else {
        require(weights.size() == n, "weights must match values");
        w.assign(weights.begin(), weights.end());
        double total = 0.0;
        for (double wi : w) {
            require(wi >= 0.0 && std::isfinite(wi), "weights must be nonnegative and finite");
            total += wi;
        }
        require(std::abs(total - 1.0) <= 1e-9, "weights must sum to 1");
    }
    // zero-weight atoms are null sets for the measure and drop out
    double vmax = 0.0, w_at_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require_finite(values[i], "gauge norm input");
        require(values[i] >= 0.0, "gauge norm needs nonnegative values");
        if (w[i] > 0.0 && values[i] > vmax) {
            vmax = values[i];
            w_at_max = w[i];
        }
    }
    if (vmax == 0.0) return 0.0;
    if (phi.kind() == YoungFunction::Kind::infinity) return vmax;  // essential sup

    auto mean_phi = [&](double r) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 0.0 && values[i] > 0.0) s += w[i] * phi(values[i] / r);
        return s;
    };
    // mean Phi(v/r) decreases in r; certainly feasible once Phi(vmax/r) <= 1,
    // certainly infeasible while the top atom alone exceeds 1
    double hi = vmax / phi.inverse(1.0);
    double lo = vmax / phi.inverse(1.0 / w_at_max);
    require(lo <= hi, "gauge bracket inverted");
    for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (mean_phi(mid) <= 1.0 ? hi : lo) = mid;
    }
    return hi;
}

double gauge_norm(std::span<const double> values, const YoungFunction& phi) {
    return gauge_norm(values, {}, phi);
}

}  // namespace clab
