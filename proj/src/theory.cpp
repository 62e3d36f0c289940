#include "clab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "clab/coupling.hpp"
#include "clab/lowdisc.hpp"

namespace clab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> vec_to_std(const Vec& v) {
    return std::vector<double>(v.begin(), v.end());
}

// Golden-section search for the maximum of f on [lo, hi]; returns the best
// value probed and stores its abscissa. Exact only for unimodal slices, which
// is all the coordinate ascent below needs (it never accepts a downhill move).
double golden_max(const std::function<double(double)>& f, double lo, double hi, int iters,
                  double* arg_out) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    const double xm = 0.5 * (a + b);
    const double fm = f(xm);
    double best = fm, arg = xm;
    if (f1 > best) {
        best = f1;
        arg = x1;
    }
    if (f2 > best) {
        best = f2;
        arg = x2;
    }
    if (arg_out) *arg_out = arg;
    return best;
}

// Probe pairs: low-discrepancy pairs plus, in dimension <= 2, all pairs of a
// dense axis grid (suprema live near special configurations that pure
// sampling misses).
std::vector<std::pair<Vec, Vec>> probe_pairs(int d, double radius, int n_pairs,
                                             std::uint64_t seed) {
    auto pairs = sample_pairs(d, radius, n_pairs, seed);
    std::vector<Vec> grid;
    if (d == 1) {
        const int g = 48;
        for (int i = 0; i < g; ++i) {
            Vec v(1);
            v[0] = -radius + 2.0 * radius * i / (g - 1);
            grid.push_back(v);
        }
    } else if (d == 2) {
        const int g = 8;
        for (int i = 0; i < g; ++i) {
            for (int j = 0; j < g; ++j) {
                Vec v(2);
                v[0] = -radius + 2.0 * radius * i / (g - 1);
                v[1] = -radius + 2.0 * radius * j / (g - 1);
                grid.push_back(v);
            }
        }
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i + 1; j < grid.size(); ++j) pairs.emplace_back(grid[i], grid[j]);
    return pairs;
}

using PairFn = std::function<double(const Vec&, const Vec&)>;

// Coordinatewise golden-section ascent of f over the box [-radius, radius]^d,
// restricted to rho_lo <= |x-y| <= rho_hi. Moves one coordinate at a time and
// only accepts improvements, so the result never falls below f at the start.
double coordinate_ascent(const PairFn& f, Vec& x, Vec& y, double radius, int sweeps,
                         double rho_lo, double rho_hi) {
    const int d = static_cast<int>(x.size());
    double best = f(x, y);
    for (int s = 0; s < sweeps; ++s) {
        for (int which = 0; which < 2; ++which) {
            Vec& pt = which ? y : x;
            for (int k = 0; k < d; ++k) {
                // rho^2 = rest + (x_k - y_k)^2 with this coordinate free
                double rest = 0.0;
                for (int j = 0; j < d; ++j) {
                    if (j == k) continue;
                    const double t = x[j] - y[j];
                    rest += t * t;
                }
                const double anchor = which ? x[k] : y[k];
                // admissible offsets t = pt_k - anchor: g <= |t| <= h
                const double g2 = rho_lo * rho_lo - rest;
                const double g = g2 > 0.0 ? std::sqrt(g2) : 0.0;
                double h = std::numeric_limits<double>::infinity();
                if (std::isfinite(rho_hi)) {
                    const double h2 = rho_hi * rho_hi - rest;
                    if (h2 <= 0.0) continue;  // no admissible move for this coordinate
                    h = std::sqrt(h2);
                }
                double intervals[2][2] = {{anchor + g, anchor + h}, {anchor - h, anchor - g}};
                auto slice = [&](double c) {
                    const double saved = pt[k];
                    pt[k] = c;
                    const double v = f(x, y);
                    pt[k] = saved;
                    return v;
                };
                double cand_val = kNegInf, cand_arg = pt[k];
                for (auto& iv : intervals) {
                    const double lo = std::max(iv[0], -radius);
                    const double hi = std::min(iv[1], radius);
                    if (!(lo < hi)) continue;
                    double arg = 0.0;
                    const double v = golden_max(slice, lo, hi, 48, &arg);
                    if (v > cand_val) {
                        cand_val = v;
                        cand_arg = arg;
                    }
                }
                if (cand_val > best) {
                    best = cand_val;
                    pt[k] = cand_arg;
                }
            }
        }
        // joint translations preserve |x-y|, so they slide along the rho
        // constraint where single-coordinate moves get pinned at a corner
        for (int k = 0; k < d; ++k) {
            const double lo = -radius - std::min(x[k], y[k]);
            const double hi = radius - std::max(x[k], y[k]);
            if (!(lo < hi)) continue;
            auto slide = [&](double t) {
                Vec xx = x, yy = y;
                xx[k] += t;
                yy[k] += t;
                return f(xx, yy);
            };
            double arg = 0.0;
            const double v = golden_max(slide, lo, hi, 48, &arg);
            if (v > best) {
                best = v;
                x[k] += arg;
                y[k] += arg;
            }
        }
    }
    return best;
}

// Indices of the top-k values, ties broken toward the lower index.
std::vector<int> top_indices(const std::vector<double>& values, int k) {
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    const int keep = std::min<int>(k, static_cast<int>(values.size()));
    std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    idx.resize(keep);
    return idx;
}

std::string format_condition(const char* tag, const char* param, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s(%s=%g)", tag, param, value);
    return buf;
}

// phi evaluator for the asymmetric-coupling condition; caches sigma0 when the
// diffusion is constant (then the sigma terms vanish identically).
struct EbEvaluator {
    const ModelSpec& model;
    double lambda0;
    bool constant_sigma;

    EbEvaluator(const ModelSpec& m, double l0) : model(m), lambda0(l0) {
        constant_sigma = model.diffusion().is_constant();
        if (constant_sigma) {
            // validates admissibility of lambda0 once
            sigma0_at(model, Vec::Zero(model.dim()), lambda0);
        }
    }

    double operator()(const Vec& x, const Vec& y) const {
        if (constant_sigma) {
            const Vec diff = x - y;
            const double rho2 = diff.squaredNorm();
            if (rho2 == 0.0) throw CoincidentPointsError("phi evaluated at coincident points");
            return (model.drift_at(x) - model.drift_at(y)).dot(diff) / rho2;
        }
        return eb_phi(model, x, y, lambda0);
    }
};

}  // namespace

std::vector<std::pair<Vec, Vec>> sample_pairs(int d, double radius, int n_pairs,
                                              std::uint64_t seed) {
    require(d >= 1, "sample_pairs: dimension must be positive");
    require(radius > 0.0, "sample_pairs: radius must be positive");
    require(n_pairs >= 0, "sample_pairs: n_pairs must be nonnegative");
    LowDiscrepancy ld(2 * d, seed);
    std::vector<double> u(std::size_t(2) * d);
    std::vector<std::pair<Vec, Vec>> out;
    out.reserve(std::size_t(n_pairs));
    long guard = 0;
    while (static_cast<int>(out.size()) < n_pairs) {
        ld.next(u);
        Vec x(d), y(d);
        for (int i = 0; i < d; ++i) {
            x[i] = (2.0 * u[std::size_t(i)] - 1.0) * radius;
            y[i] = (2.0 * u[std::size_t(d + i)] - 1.0) * radius;
        }
        if ((x - y).norm() <= 1e-9 * radius) {
            if (++guard > 4L * n_pairs + 100) throw Error("sample_pairs: cannot avoid coincident pairs");
            continue;
        }
        out.emplace_back(std::move(x), std::move(y));
    }
    return out;
}

double dss_lhs(const ModelSpec& model, const Vec& x, const Vec& y, double p) {
    require(p >= 1.0, "dss_lhs: p must be >= 1");
    if (x.size() != model.dim() || y.size() != model.dim())
        throw DimensionMismatchError("dss_lhs: point dimension does not match model");
    const Vec diff = x - y;
    const double rho2 = diff.squaredNorm();
    if (rho2 == 0.0) throw CoincidentPointsError("dss_lhs: x == y");
    const Mat dsig = model.diffusion_at(x) - model.diffusion_at(y);
    const double radial = (dsig.transpose() * diff).squaredNorm() / rho2;
    const double hs = dsig.squaredNorm();
    const double drift = (model.drift_at(x) - model.drift_at(y)).dot(diff);
    return ((p - 2.0) * radial + hs + drift) / rho2;
}

Mat sigma0_at(const ModelSpec& model, const Vec& x, double lambda0) {
    const Mat sigma = model.diffusion_at(x);
    return psd_sqrt_shifted(sigma * sigma.transpose(), lambda0);
}

double eb_phi(const ModelSpec& model, const Vec& x, const Vec& y, double lambda0) {
    const Vec diff = x - y;
    const double rho2 = diff.squaredNorm();
    if (rho2 == 0.0) throw CoincidentPointsError("eb_phi: x == y");
    const Mat s0x = sigma0_at(model, x, lambda0);
    const Mat s0y = sigma0_at(model, y, lambda0);
    const Mat dsig = model.diffusion_at(x) - model.diffusion_at(y);
    const double hs0 = (s0x - s0y).squaredNorm();
    const double radial = (dsig.transpose() * diff).squaredNorm() / rho2;
    const double drift = (model.drift_at(x) - model.drift_at(y)).dot(diff);
    return (hs0 - radial + drift) / rho2;
}

double pick_lambda0(const ModelSpec& model, double box_radius, int n_probes,
                    std::uint64_t seed) {
    require(box_radius > 0.0, "pick_lambda0: radius must be positive");
    require(n_probes >= 1, "pick_lambda0: need at least one probe");
    LowDiscrepancy ld(model.dim(), seed);
    double lo = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Mat> es;
    auto visit = [&](const Vec& x) {
        const Mat sigma = model.diffusion_at(x);
        es.compute(sigma * sigma.transpose(), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    };
    visit(Vec::Zero(model.dim()));
    for (int i = 0; i < n_probes; ++i) visit(ld.next_in_box(box_radius));
    return 0.95 * std::sqrt(std::max(lo, 0.0));
}

ConditionReport estimate_Kp(const ModelSpec& model, double p, double box_radius, int n_pairs,
                            int refine_steps, std::uint64_t seed) {
    require(n_pairs >= 1, "estimate_Kp: need at least one pair");
    require(box_radius > 0.0, "estimate_Kp: radius must be positive");
    require(refine_steps >= 0, "estimate_Kp: refine_steps must be nonnegative");
    const int d = model.dim();
    const auto pairs = probe_pairs(d, box_radius, n_pairs, seed);

    PairFn f = [&](const Vec& x, const Vec& y) {
        if ((x - y).squaredNorm() == 0.0) return kNegInf;
        return dss_lhs(model, x, y, p);
    };

    std::vector<double> values(pairs.size());
    const double thr_in = box_radius / 3.0, thr_out = 2.0 * box_radius / 3.0;
    double sup_inner = kNegInf, sup_outer = kNegInf, sup_mixed = kNegInf;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double v = dss_lhs(model, pairs[i].first, pairs[i].second, p);
        values[i] = v;
        const double rx = pairs[i].first.norm(), ry = pairs[i].second.norm();
        if (std::max(rx, ry) <= thr_in)
            sup_inner = std::max(sup_inner, v);
        else if (std::min(rx, ry) >= thr_out)
            sup_outer = std::max(sup_outer, v);
        else
            sup_mixed = std::max(sup_mixed, v);
    }

    double best = kNegInf;
    Vec wx = pairs[0].first, wy = pairs[0].second;
    for (int i : top_indices(values, 16)) {
        Vec x = pairs[std::size_t(i)].first, y = pairs[std::size_t(i)].second;
        const double v = coordinate_ascent(f, x, y, box_radius, refine_steps, 0.0,
                                           std::numeric_limits<double>::infinity());
        if (v > best) {
            best = v;
            wx = x;
            wy = y;
        }
    }

    ConditionReport rep;
    rep.condition = format_condition("DSS", "p", p);
    rep.constants["p"] = p;
    rep.constants["K_p"] = -best;
    rep.constants["max_lhs"] = best;
    if (std::isfinite(sup_inner)) rep.constants["max_lhs_inner"] = sup_inner;
    if (std::isfinite(sup_outer)) rep.constants["max_lhs_outer"] = sup_outer;
    if (std::isfinite(sup_mixed)) rep.constants["max_lhs_mixed"] = sup_mixed;
    rep.witness_x = wx;
    rep.witness_y = wy;
    rep.margin = best;
    rep.n_pairs = static_cast<int>(pairs.size());
    rep.seed = seed;
    rep.box_radius = box_radius;
    return rep;
}

namespace {

EpReport ep_scan(const std::function<Mat(const Vec&)>& a_at,
                 std::span<const std::pair<Vec, Vec>> pairs, double lambda0);

}  // namespace

EpReport check_ep_inequality(const MatrixField& a_field,
                             std::span<const std::pair<Vec, Vec>> pairs, double lambda0) {
    return ep_scan([&](const Vec& x) { return a_field.at(x); }, pairs, lambda0);
}

EpReport check_ep_inequality(const ModelSpec& model,
                             std::span<const std::pair<Vec, Vec>> pairs, double lambda0) {
    return ep_scan(
        [&](const Vec& x) {
            Mat s = model.diffusion_at(x);
            return Mat(s * s.transpose());
        },
        pairs, lambda0);
}

namespace {

EpReport ep_scan(const std::function<Mat(const Vec&)>& a_at,
                 std::span<const std::pair<Vec, Vec>> pairs, double lambda0) {
    require(lambda0 > 0.0, "check_ep_inequality: lambda0 must be positive");
    EpReport rep;
    rep.lambda0 = lambda0;
    rep.n_pairs = static_cast<int>(pairs.size());
    Eigen::SelfAdjointEigenSolver<Mat> es;
    auto slack_of = [&](const Mat& a) {
        es.compute(a, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() - lambda0 * lambda0;
    };
    for (const auto& [x, y] : pairs) {
        const Mat ax = a_at(x);
        const Mat ay = a_at(y);
        const double slack = std::min(slack_of(ax), slack_of(ay));
        const Mat dsq = psd_sqrt_shifted(ax, lambda0) - psd_sqrt_shifted(ay, lambda0);
        es.compute(dsq, Eigen::EigenvaluesOnly);
        const double op = es.eigenvalues().cwiseAbs().maxCoeff();
        const double lhs = op * op;
        const double rhs = (ax - ay).squaredNorm() / (4.0 * lambda0);
        const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
        // the bound is provable only with a spectral gap of at least lambda0
        // above lambda0^2; closer pairs sit on the boundary where it can fail
        const bool flagged = slack < lambda0;
        if (flagged) ++rep.n_flagged;
        const bool violated = ratio > 1.0 + 1e-10;
        if (violated) (flagged ? rep.n_violations_flagged : rep.n_violations_safe)++;
        if (!flagged) rep.max_ratio_safe = std::max(rep.max_ratio_safe, ratio);
        if (ratio > rep.max_ratio_all) {
            rep.max_ratio_all = ratio;
            rep.witness_x = x;
            rep.witness_y = y;
        }
    }
    return rep;
}

}  // namespace

ConditionReport estimate_eb_constants(const ModelSpec& model, double lambda0, double box_radius,
                                      std::uint64_t seed, std::optional<double> r0) {
    require(lambda0 > 0.0, "estimate_eb_constants: lambda0 must be positive");
    require(box_radius > 0.0, "estimate_eb_constants: radius must be positive");
    if (r0 && !(*r0 > 0.0)) throw Error("estimate_eb_constants: r0 must be positive");
    const int d = model.dim();
    const auto pairs = probe_pairs(d, box_radius, 4096, seed);
    const EbEvaluator phi(model, lambda0);

    const std::size_t n = pairs.size();
    std::vector<double> rho(n), val(n);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = (pairs[i].first - pairs[i].second).norm();
        val[i] = phi(pairs[i].first, pairs[i].second);
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return rho[a] < rho[b]; });

    // running argmax of phi over rho-prefixes and rho-suffixes
    std::vector<int> pref(n), suf(n);
    pref[0] = order[0];
    for (std::size_t i = 1; i < n; ++i)
        pref[i] = val[order[i]] > val[pref[i - 1]] ? order[i] : pref[i - 1];
    suf[n - 1] = order[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        suf[i] = val[order[i]] > val[suf[i + 1]] ? order[i] : suf[i + 1];

    struct Candidate {
        double r0, coarse_c1;
        int split;  // first sorted index with rho >= r0
    };
    std::vector<Candidate> cands;
    auto try_candidate = [&](double r0_c) {
        const auto it = std::lower_bound(order.begin(), order.end(), r0_c,
                                         [&](int idx, double v) { return rho[idx] < v; });
        const std::size_t split = std::size_t(it - order.begin());
        if (split == n) return;  // no probed pair reaches rho >= r0
        const double sup_out = val[suf[split]];
        const double k2 = -sup_out;
        if (!(k2 > 0.0)) return;
        const double sup_in = split > 0 ? val[pref[split - 1]] : kNegInf;
        const double k1 = std::max(0.0, sup_in + k2);
        double c1 = 0.0;
        try {
            c1 = lyapunov_constants(k1, k2, r0_c).c1;
        } catch (const NonPositiveRateError&) {
            return;  // rate underflows at this scale, e.g. N*r0 beyond exp range
        }
        cands.push_back({r0_c, c1, static_cast<int>(split)});
    };
    if (r0) {
        try_candidate(*r0);
        if (cands.empty())
            throw NoValidR0Error("estimate_eb_constants: supplied r0 gives no positive K2");
    } else {
        const int n_cand = 256;
        for (int i = 0; i < n_cand; ++i) {
            const double q = 0.05 + 0.94 * i / (n_cand - 1);
            const double r0_c = rho[std::size_t(order[std::size_t(q * (double(n) - 1.0))])];
            if (r0_c > 0.0) try_candidate(r0_c);
        }
        if (cands.empty())
            throw NoValidR0Error("estimate_eb_constants: no r0 in the scan yields positive K2");
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.coarse_c1 > b.coarse_c1; });

    const int sweeps = 16;
    bool have_best = false;
    double best_c1 = 0.0, best_k1 = 0.0, best_k2 = 0.0, best_r0 = 0.0;
    double best_sup_in = kNegInf, best_margin = 0.0;
    Vec best_wx, best_wy;
    const int attempts = std::min<int>(8, static_cast<int>(cands.size()));
    for (int a = 0; a < attempts; ++a) {
        const Candidate& cand = cands[std::size_t(a)];
        // tolerant region guards: widening each region can only make the
        // estimated constants more conservative
        const double tol = 1e-9 * cand.r0;
        PairFn outer_f = [&](const Vec& x, const Vec& y) {
            const double r = (x - y).norm();
            if (r < cand.r0 - tol) return kNegInf;
            return phi(x, y);
        };
        PairFn inner_f = [&](const Vec& x, const Vec& y) {
            const double r = (x - y).norm();
            if (r == 0.0 || r > cand.r0 + tol) return kNegInf;
            return phi(x, y);
        };
        const int out_idx = suf[std::size_t(cand.split)];
        Vec ox = pairs[std::size_t(out_idx)].first, oy = pairs[std::size_t(out_idx)].second;
        const double sup_out = coordinate_ascent(outer_f, ox, oy, box_radius, sweeps, cand.r0,
                                                 std::numeric_limits<double>::infinity());
        const double k2 = -sup_out;
        if (!(k2 > 0.0)) {
            if (r0) throw NoValidR0Error("estimate_eb_constants: supplied r0 gives no positive K2");
            continue;
        }
        double sup_in = kNegInf;
        if (cand.split > 0) {
            const int in_idx = pref[std::size_t(cand.split) - 1];
            Vec ix = pairs[std::size_t(in_idx)].first, iy = pairs[std::size_t(in_idx)].second;
            sup_in = coordinate_ascent(inner_f, ix, iy, box_radius, sweeps, 0.0, cand.r0);
        }
        const double k1 = std::max(0.0, sup_in + k2);
        double c1 = 0.0;
        try {
            c1 = lyapunov_constants(k1, k2, cand.r0).c1;
        } catch (const NonPositiveRateError&) {
            if (r0) throw;
            continue;
        }
        if (!have_best || c1 > best_c1) {
            have_best = true;
            best_c1 = c1;
            best_k1 = k1;
            best_k2 = k2;
            best_r0 = cand.r0;
            best_sup_in = sup_in;
            best_margin = sup_out;
            best_wx = ox;
            best_wy = oy;
        }
    }
    if (!have_best)
        throw NoValidR0Error("estimate_eb_constants: refinement left no candidate with K2 > 0");

    ConditionReport rep;
    rep.condition = format_condition("EB", "lambda0", lambda0);
    rep.constants["K1"] = best_k1;
    rep.constants["K2"] = best_k2;
    rep.constants["r0"] = best_r0;
    rep.constants["lambda0"] = lambda0;
    rep.constants["c1"] = best_c1;
    rep.constants["sup_outer"] = best_margin;
    if (std::isfinite(best_sup_in)) rep.constants["sup_inner"] = best_sup_in;
    rep.witness_x = best_wx;
    rep.witness_y = best_wy;
    rep.margin = best_margin;
    rep.n_pairs = static_cast<int>(n);
    rep.seed = seed;
    rep.box_radius = box_radius;
    return rep;
}

double RateReport::rho_bar(double r) const { return epsilon * r - std::expm1(-N * r); }

double RateReport::dissipation(double r) const {
    const double decay = epsilon + N * std::exp(-N * r);
    if (r <= r0) return 4.0 * N * N * std::exp(-N * r) - K1 * r * decay;
    return decay * K2 * r;
}

RateReport lyapunov_constants(double K1, double K2, double r0) {
    if (!(K1 >= 0.0) || !(K2 > 0.0) || !(r0 > 0.0))
        throw Error("lyapunov_constants: need K1 >= 0, K2 > 0, r0 > 0");
    RateReport rep;
    rep.K1 = K1;
    rep.K2 = K2;
    rep.r0 = r0;
    rep.N = 0.5 * r0 * (K1 + K2);
    rep.epsilon = rep.N * std::exp(-rep.N * r0);
    rep.c = (rep.N + rep.epsilon) / rep.epsilon;

    auto ratio = [&](double r) { return rep.dissipation(r) / rep.rho_bar(r); };
    const double rmax = 10.0 * (r0 + 1.0);
    const double rmin = rmax * 1e-8;
    const int n = 4096;
    const double step = std::log(rmax / rmin) / (n - 1);
    int best_i = 0;
    double best_v = std::numeric_limits<double>::infinity();
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) {
        grid[std::size_t(i)] = rmin * std::exp(step * i);
        const double v = ratio(grid[std::size_t(i)]);
        if (v < best_v) {
            best_v = v;
            best_i = i;
        }
    }
    const double lo = grid[std::size_t(std::max(0, best_i - 1))];
    const double hi = grid[std::size_t(std::min(n - 1, best_i + 1))];
    double arg = grid[std::size_t(best_i)];
    const double refined = -golden_max([&](double r) { return -ratio(r); }, lo, hi, 120, &arg);
    // past rmax the ratio increases monotonically toward its limit K2
    if (refined <= K2) {
        rep.c1 = refined;
        rep.argmin_r = arg;
    } else {
        rep.c1 = K2;
        rep.argmin_r = std::numeric_limits<double>::infinity();
    }
    if (!(rep.c1 > 0.0))
        throw NonPositiveRateError("lyapunov_constants: derived rate is not positive");
    return rep;
}

nlohmann::json ConditionReport::to_json() const {
    return nlohmann::json{{"condition", condition},
                          {"constants", constants},
                          {"witness_x", vec_to_std(witness_x)},
                          {"witness_y", vec_to_std(witness_y)},
                          {"margin", margin},
                          {"n_pairs", n_pairs},
                          {"seed", seed},
                          {"box_radius", box_radius},
                          {"drift_term_convention", drift_term_convention}};
}

nlohmann::json EpReport::to_json() const {
    return nlohmann::json{{"lambda0", lambda0},
                          {"max_ratio_safe", max_ratio_safe},
                          {"max_ratio_all", max_ratio_all},
                          {"n_pairs", n_pairs},
                          {"n_flagged", n_flagged},
                          {"n_violations_safe", n_violations_safe},
                          {"n_violations_flagged", n_violations_flagged},
                          {"witness_x", vec_to_std(witness_x)},
                          {"witness_y", vec_to_std(witness_y)}};
}

nlohmann::json RateReport::to_json() const {
    return nlohmann::json{{"K1", K1},     {"K2", K2}, {"r0", r0},
                          {"N", N},       {"epsilon", epsilon},
                          {"c", c},       {"c1", c1}, {"lambda", c1},
                          {"argmin_r", argmin_r}};
}

}  // namespace clab
