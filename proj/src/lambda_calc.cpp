#include "clab/lambda_calc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clab {

namespace {

constexpr double kQuadRelTol = 1e-10;

double simpson(double fa, double fm, double fb, double width) {
    return width / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double b, double fa,
                     double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson on [a, b] with relative tolerance; f must be finite there.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (!(b > a)) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson(fa, fm, fb, b - a);
    const double tol = std::max(std::abs(whole), 1e-300) * rel_tol;
    return adaptive_step(f, a, b, fa, fm, fb, whole, tol, 40);
}

void validate_profile(const std::function<double(double)>& f) {
    double prev = f(0.0);
    if (!std::isfinite(prev) || prev < 0.0)
        throw Error("scalar profile must be finite and nonnegative at 0");
    for (int k = -12; k <= 12; ++k) {
        const double r = std::pow(10.0, 0.5 * k);
        const double v = f(r);
        if (!std::isfinite(v) || v <= 0.0)
            throw Error("scalar profile must be positive and finite on (0, inf)");
        if (v <= prev) throw Error("scalar profile must be strictly increasing");
        prev = v;
    }
}

}  // namespace

ScalarProfile ScalarProfile::power(double c1, double eps) {
    if (!(c1 > 0.0) || !(eps > 0.0)) throw Error("power profile needs c1 > 0 and eps > 0");
    ScalarProfile p;
    p.power_ = true;
    p.c1_ = c1;
    p.eps_ = eps;
    p.label_ = "power";
    return p;
}

ScalarProfile ScalarProfile::custom(std::function<double(double)> f, std::string label) {
    require(static_cast<bool>(f), "custom profile needs a callable");
    validate_profile(f);
    ScalarProfile p;
    p.power_ = false;
    p.f_ = std::move(f);
    p.label_ = std::move(label);
    return p;
}

double ScalarProfile::operator()(double r) const {
    require(r >= 0.0, "scalar profile evaluated at negative argument");
    if (power_) return c1_ * std::pow(r, eps_);
    return f_(r);
}

LambdaCalculus::LambdaCalculus(ScalarProfile psi1) : psi1_(std::move(psi1)) {
    if (!psi1_.is_power()) lambda2(1.0);  // probes tail convergence, may throw
}

double LambdaCalculus::inner_integral(double u) const {
    if (u <= 0.0) return 0.0;
    if (psi1_.is_power()) {
        const double e = psi1_.exponent();
        return psi1_.coeff() * std::pow(u, 1.0 + e) / (1.0 + e);
    }
    return integrate([this](double s) { return psi1_(s); }, 0.0, u, kQuadRelTol);
}

double LambdaCalculus::lambda1(double r) const {
    require(r > 0.0, "lambda1 needs r > 0");
    const double s = std::sqrt(r);
    const double inner = integrate([this](double u) { return psi1_(u); }, 0.0, s, kQuadRelTol);
    return inner / s;
}

double LambdaCalculus::lambda2(double r) const {
    require(r > 0.0, "lambda2 needs r > 0");
    auto integrand = [this](double s) { return 1.0 / (std::sqrt(s) * inner_integral(std::sqrt(s))); };

    if (psi1_.is_power()) {
        // quadrature window of 16 doublings, then the exact power-law tail
        double total = 0.0;
        double a = r;
        for (int k = 0; k < 16; ++k) {
            total += integrate(integrand, a, 2.0 * a, kQuadRelTol);
            a *= 2.0;
        }
        const double e = psi1_.exponent();
        total += (1.0 + e) / psi1_.coeff() * (2.0 / e) * std::pow(a, -0.5 * e);
        return total;
    }

    // custom profile: sum doubling intervals, extrapolating the remainder
    // geometrically once the contribution ratio stabilizes below 1
    double total = 0.0, prev = -1.0;
    int slow = 0;
    double a = r;
    for (int k = 0; k < 960 && a < 1e300; ++k) {
        const double c = integrate(integrand, a, 2.0 * a, kQuadRelTol);
        total += c;
        if (c == 0.0) return total;
        if (prev > 0.0) {
            const double ratio = c / prev;
            if (ratio >= 0.99) {
                if (k >= 64 && ++slow >= 16)
                    throw DivergentTailError("lambda2 tail does not converge on doubling intervals");
            } else {
                slow = 0;
                const double remainder = c * ratio / (1.0 - ratio);
                if (remainder <= 1e-10 * total) return total + remainder;
            }
        }
        prev = c;
        a *= 2.0;
    }
    throw DivergentTailError("lambda2 tail did not converge within the doubling budget");
}

double LambdaCalculus::lambda1_inv(double y) const {
    if (y <= 0.0) return 0.0;
    if (psi1_.is_power()) {
        const double e = psi1_.exponent();
        return std::pow((1.0 + e) * y / psi1_.coeff(), 2.0 / e);
    }
    double hi = 1.0;
    int guard = 0;
    while (lambda1(hi) < y) {
        hi *= 2.0;
        if (++guard > 2100) throw BracketFailureError("lambda1_inv: no upper bracket");
    }
    double lo = hi * 0.5;
    guard = 0;
    while (lo > 0.0 && lambda1(lo) >= y) {
        hi = lo;
        lo *= 0.5;
        if (++guard > 1100) return 0.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (lambda1(mid) >= y ? hi : lo) = mid;
    }
    return hi;
}

double LambdaCalculus::lambda2_inv(double y) const {
    require(y > 0.0, "lambda2_inv needs y > 0");
    if (psi1_.is_power()) {
        const double e = psi1_.exponent();
        return std::pow(2.0 * (1.0 + e) / (psi1_.coeff() * e * y), 2.0 / e);
    }
    double hi = 1.0;
    int guard = 0;
    while (lambda2(hi) > y) {
        hi *= 2.0;
        if (++guard > 2100) throw BracketFailureError("lambda2_inv: no upper bracket");
    }
    double lo = hi * 0.5;
    guard = 0;
    while (lo > 0.0 && lambda2(lo) <= y) {
        hi = lo;
        lo *= 0.5;
        if (++guard > 1100) return 0.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (lambda2(mid) <= y ? hi : lo) = mid;
    }
    return hi;
}

double LambdaCalculus::H(double theta, double kappa) const {
    require(theta > 0.0, "H needs theta > 0");
    require(kappa > 0.0 && kappa < 1.0, "H needs kappa in (0, 1)");
    auto integrand = [&](double r) {
        const double ratio = theta / std::pow(r, kappa);
        return ratio * (1.0 + lambda1_inv(ratio) + lambda2_inv(1.0 / ratio));
    };
    // dyadic levels toward the r = 0 singularity
    double total = 0.0, prev = -1.0;
    for (int k = 0; k < 1000; ++k) {
        const double b = std::pow(2.0, -k);
        const double c = integrate(integrand, 0.5 * b, b, kQuadRelTol);
        total += c;
        if (prev >= 0.0) {
            const double ratio = prev > 0.0 ? c / prev : 0.0;
            if (k >= 48 && ratio >= 0.999)
                throw DivergentTailError("H integrand is not integrable at 0");
            if (ratio < 0.999 && k >= 4) {
                const double remainder = ratio > 0.0 ? c * ratio / (1.0 - ratio) : 0.0;
                if (remainder <= 1e-11 * total) return total + remainder;
            }
        }
        prev = c;
    }
    throw DivergentTailError("H did not converge within the dyadic budget");
}

}  // namespace clab
