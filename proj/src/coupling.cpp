#include "clab/coupling.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "clab/errors.hpp"

namespace clab {

std::pair<double, double> CutoffProfile::eval(double r) const {
    double u = r - r0;
    if (u <= 0.0) return {1.0, 0.0};
    if (u >= 1.0) return {0.0, 1.0};
    double s = u * u * (3.0 - 2.0 * u);
    double angle = 0.5 * std::numbers::pi * s;
    return {std::cos(angle), std::sin(angle)};
}

CouplingKind CouplingKind::synchronous() { return CouplingKind{}; }

CouplingKind CouplingKind::reflection(double lambda0) {
    require(lambda0 > 0.0, "reflection coupling needs lambda0 > 0");
    CouplingKind k;
    k.type = Type::reflection;
    k.lambda0 = lambda0;
    return k;
}

CouplingKind CouplingKind::hybrid(double lambda0, CutoffProfile cutoff) {
    require(lambda0 > 0.0, "hybrid coupling needs lambda0 > 0");
    require(cutoff.r0 > 0.0, "cutoff radius must be positive");
    CouplingKind k;
    k.type = Type::hybrid;
    k.lambda0 = lambda0;
    k.cutoff = cutoff;
    return k;
}

double CouplingKind::declare_threshold(double dt) const {
    if (type == Type::synchronous) return 0.0;
    return declare_factor * 2.0 * std::numbers::sqrt2 * lambda0 * std::sqrt(dt);
}

Mat psd_sqrt_shifted(const Mat& a, double lambda0) {
    require(a.rows() == a.cols(), "psd_sqrt_shifted needs a square matrix");
    Mat shifted = 0.5 * (a + a.transpose());
    shifted.diagonal().array() -= lambda0 * lambda0;
    Eigen::SelfAdjointEigenSolver<Mat> es(shifted);
    if (es.info() != Eigen::Success) throw EigenvalueViolationError("eigendecomposition failed");
    Vec ev = es.eigenvalues();
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    double tol = 1e-10 * scale;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "sigma sigma^T - lambda0^2 I has eigenvalue %.6g < 0 "
                          "(lambda0 = %.6g); the reflected channel is inadmissible",
                          ev[i], lambda0);
            throw EigenvalueViolationError(buf);
        }
        ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

bool lex_less(const Vec& a, const Vec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

double dist(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double di = x[i] - y[i];
        s += di * di;
    }
    return std::sqrt(s);
}

}  // namespace

PairSimulator::PairSimulator(const ModelSpec& model, CouplingKind kind, double dt,
                             std::uint64_t seed, NoiseStream stream)
    : model_(model),
      kind_(kind),
      dt_(dt),
      rng_(seed, stream),
      d_(model.dim()),
      m_(model.noise_dim()),
      constant_sigma_(model.diffusion().is_constant()) {
    require(dt > 0.0, "dt must be positive");
    auto sz = [](int n) { return static_cast<std::size_t>(n); };
    switch (kind_.type) {
        case CouplingKind::Type::synchronous: n_noise_ = m_; break;
        case CouplingKind::Type::reflection: n_noise_ = m_ + d_; break;
        case CouplingKind::Type::hybrid: n_noise_ = m_ + 2 * d_; break;
    }
    threshold_ = kind_.declare_threshold(dt);
    bx_.resize(sz(d_));
    by_.resize(sz(d_));
    sx_.resize(sz(d_ * m_));
    sy_.resize(sz(d_ * m_));
    s0x_.resize(sz(d_ * d_));
    s0y_.resize(sz(d_ * d_));
    xi_.resize(sz(n_noise_));
    ex_.resize(sz(d_));
    scratch_a_.resize(d_, d_);
    if (kind_.type != CouplingKind::Type::synchronous && constant_sigma_) {
        Mat s = model.diffusion().constant_value();
        Mat s0 = psd_sqrt_shifted(s * s.transpose(), kind_.lambda0);
        s0_const_.assign(s0.data(), s0.data() + d_ * d_);  // column-major
    }
}

void PairSimulator::compute_s0(std::span<const double> at, std::span<double> out) {
    if (constant_sigma_) {
        std::copy(s0_const_.begin(), s0_const_.end(), out.begin());
        return;
    }
    std::vector<double> sbuf(static_cast<std::size_t>(d_ * m_));
    model_.eval_diffusion(at, sbuf);
    Eigen::Map<const Mat> s(sbuf.data(), d_, m_);
    scratch_a_.noalias() = s * s.transpose();
    Mat s0 = psd_sqrt_shifted(scratch_a_, kind_.lambda0);
    std::copy(s0.data(), s0.data() + d_ * d_, out.begin());
}

PairPath PairSimulator::run(const Vec& x0, const Vec& y0, double horizon, const SimOptions& opts) {
    require(x0.size() == d_ && y0.size() == d_, "initial points must have dimension d");
    require(horizon > 0.0, "horizon must be positive");
    require(opts.record_stride >= 0, "record_stride must be >= 0");
    auto n_steps_ll = std::llround(horizon / dt_);
    require(n_steps_ll >= 1 && std::abs(static_cast<double>(n_steps_ll) * dt_ - horizon) <=
                                   1e-9 * std::max(1.0, horizon),
            "horizon must be an integer multiple of dt");
    auto n_steps = static_cast<std::uint64_t>(n_steps_ll);

    // Swapping the arguments permutes the raw noise assignment, so order the
    // pair canonically to make the coupling exchange-symmetric by
    // construction.
    bool swapped = lex_less(y0, x0);
    const Vec& a0 = swapped ? y0 : x0;
    const Vec& b0 = swapped ? x0 : y0;

    std::vector<double> x(a0.data(), a0.data() + d_);
    std::vector<double> y(b0.data(), b0.data() + d_);

    const double c = std::sqrt(2.0 * dt_);
    const double lam = kind_.lambda0;
    const bool synchronous = kind_.type == CouplingKind::Type::synchronous;
    const bool hybrid = kind_.type == CouplingKind::Type::hybrid;

    PairPath out;
    out.seed = rng_.seed();
    out.path_index = opts.path_index;
    out.dt = dt_;
    std::uint64_t stride =
        opts.record_stride == 0 ? n_steps : static_cast<std::uint64_t>(opts.record_stride);
    std::size_t n_rec = static_cast<std::size_t>(n_steps / stride) + 1 + (n_steps % stride != 0);
    out.times.reserve(n_rec);
    out.rho.reserve(n_rec);
    if (opts.record_states) {
        out.x_states.emplace(Mat(n_rec, d_));
        out.y_states.emplace(Mat(n_rec, d_));
    }
    Eigen::Index rec_row = 0;
    auto record = [&](std::uint64_t k, double rho_k) {
        out.times.push_back(static_cast<double>(k) * dt_);
        out.rho.push_back(rho_k);
        if (opts.record_states) {
            for (int i = 0; i < d_; ++i) {
                (*out.x_states)(rec_row, i) = swapped ? y[static_cast<std::size_t>(i)]
                                                      : x[static_cast<std::size_t>(i)];
                (*out.y_states)(rec_row, i) = swapped ? x[static_cast<std::size_t>(i)]
                                                      : y[static_cast<std::size_t>(i)];
            }
            ++rec_row;
        }
    };
    auto scheduled = [&](std::uint64_t k) { return k % stride == 0 || k == n_steps; };

    bool coupled = false;
    double rho = dist(x, y);
    if (rho <= threshold_) {
        coupled = true;
        out.coupling_time = 0.0;
        y = x;
        rho = 0.0;
    }
    record(0, rho);

    for (std::uint64_t k = 0; k < n_steps; ++k) {
        if (coupled && opts.stop_after_coupling && !opts.record_states) {
            for (std::uint64_t j = k + 1; j <= n_steps; ++j)
                if (scheduled(j)) record(j, 0.0);
            break;
        }
        rng_.fill_normals(opts.path_index, k, xi_);
        model_.eval_drift(x, bx_);
        if (coupled) {
            if (synchronous) {
                model_.eval_diffusion(x, sx_);
                for (int i = 0; i < d_; ++i) {
                    double g = 0.0;
                    for (int j = 0; j < m_; ++j)
                        g += sx_[static_cast<std::size_t>(j * d_ + i)] *
                             xi_[static_cast<std::size_t>(j)];
                    x[static_cast<std::size_t>(i)] +=
                        dt_ * bx_[static_cast<std::size_t>(i)] + c * g;
                }
            } else {
                // glued dynamics: reflected channel with h(0) = 1
                compute_s0(x, s0x_);
                for (int i = 0; i < d_; ++i) {
                    double g = 0.0;
                    for (int j = 0; j < d_; ++j)
                        g += s0x_[static_cast<std::size_t>(j * d_ + i)] *
                             xi_[static_cast<std::size_t>(j)];
                    g += lam * xi_[static_cast<std::size_t>(m_ + i)];
                    x[static_cast<std::size_t>(i)] +=
                        dt_ * bx_[static_cast<std::size_t>(i)] + c * g;
                }
            }
            y = x;
            rho = 0.0;
        } else {
            model_.eval_drift(y, by_);
            if (synchronous) {
                model_.eval_diffusion(x, sx_);
                model_.eval_diffusion(y, sy_);
                for (int i = 0; i < d_; ++i) {
                    double gx = 0.0, gy = 0.0;
                    for (int j = 0; j < m_; ++j) {
                        double xij = xi_[static_cast<std::size_t>(j)];
                        gx += sx_[static_cast<std::size_t>(j * d_ + i)] * xij;
                        gy += sy_[static_cast<std::size_t>(j * d_ + i)] * xij;
                    }
                    x[static_cast<std::size_t>(i)] +=
                        dt_ * bx_[static_cast<std::size_t>(i)] + c * gx;
                    y[static_cast<std::size_t>(i)] +=
                        dt_ * by_[static_cast<std::size_t>(i)] + c * gy;
                }
            } else {
                compute_s0(x, s0x_);
                compute_s0(y, s0y_);
                double h = 1.0, g2 = 0.0;
                if (hybrid) std::tie(h, g2) = kind_.cutoff.eval(rho);
                double dot = 0.0;
                for (int i = 0; i < d_; ++i) {
                    ex_[static_cast<std::size_t>(i)] =
                        (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]) / rho;
                    dot += ex_[static_cast<std::size_t>(i)] * xi_[static_cast<std::size_t>(m_ + i)];
                }
                for (int i = 0; i < d_; ++i) {
                    double gx = 0.0, gy = 0.0;
                    for (int j = 0; j < d_; ++j) {
                        double xij = xi_[static_cast<std::size_t>(j)];
                        gx += s0x_[static_cast<std::size_t>(j * d_ + i)] * xij;
                        gy += s0y_[static_cast<std::size_t>(j * d_ + i)] * xij;
                    }
                    double xi2 = xi_[static_cast<std::size_t>(m_ + i)];
                    double refl = xi2 - 2.0 * dot * ex_[static_cast<std::size_t>(i)];
                    double syn = hybrid ? g2 * xi_[static_cast<std::size_t>(m_ + d_ + i)] : 0.0;
                    gx += lam * (h * xi2 + syn);
                    gy += lam * (h * refl + syn);
                    x[static_cast<std::size_t>(i)] +=
                        dt_ * bx_[static_cast<std::size_t>(i)] + c * gx;
                    y[static_cast<std::size_t>(i)] +=
                        dt_ * by_[static_cast<std::size_t>(i)] + c * gy;
                }
            }
            rho = dist(x, y);
            if (rho <= threshold_) {
                coupled = true;
                out.coupling_time = static_cast<double>(k + 1) * dt_;
                y = x;
                rho = 0.0;
            }
        }
        bool bad = false;
        for (int i = 0; i < d_; ++i) {
            double xv = x[static_cast<std::size_t>(i)];
            double yv = y[static_cast<std::size_t>(i)];
            if (!std::isfinite(xv) || !std::isfinite(yv) || std::abs(xv) > kDivergenceGuard ||
                std::abs(yv) > kDivergenceGuard) {
                bad = true;
                break;
            }
        }
        if (bad) {
            out.diverged = true;
            double nan = std::numeric_limits<double>::quiet_NaN();
            for (std::uint64_t j = k + 1; j <= n_steps; ++j)
                if (scheduled(j)) record(j, nan);
            break;
        }
        if (scheduled(k + 1)) record(k + 1, rho);
    }
    if (opts.record_states) {
        out.x_states->conservativeResize(rec_row, d_);
        out.y_states->conservativeResize(rec_row, d_);
    }
    return out;
}

PairPath simulate_pair(const ModelSpec& model, const CouplingKind& kind, const Vec& x0,
                       const Vec& y0, double horizon, double dt, std::uint64_t seed,
                       const SimOptions& opts) {
    PairSimulator sim(model, kind, dt, seed);
    return sim.run(x0, y0, horizon, opts);
}

MomentCurve distance_moments(std::span<const PairPath> paths, double p) {
    require(!paths.empty(), "distance_moments needs at least one path");
    require(p > 0.0, "moment order p must be positive");
    const std::size_t n_t = paths.front().times.size();
    for (const auto& path : paths) {
        if (path.diverged)
            throw NonFiniteError("a pair trajectory left the divergence guard; "
                                 "reduce dt or the horizon");
        require(path.times.size() == n_t && path.rho.size() == n_t,
                "all paths must share one recording grid");
    }
    MomentCurve out;
    out.p = p;
    out.times = std::vector<double>(paths.front().times.begin(), paths.front().times.end());
    out.value.resize(n_t);
    out.stderr_.resize(n_t);
    const double n = static_cast<double>(paths.size());
    for (std::size_t t = 0; t < n_t; ++t) {
        double mean = 0.0;
        for (const auto& path : paths) mean += std::pow(path.rho[t], p);
        mean /= n;
        // two-pass variance: the one-pass form cancels catastrophically when
        // the coupling is deterministic and every path agrees to a few ulps
        double var = 0.0;
        for (const auto& path : paths) {
            double dv = std::pow(path.rho[t], p) - mean;
            var += dv * dv;
        }
        var /= n;
        double se_mean = std::sqrt(var / n);
        if (mean <= 0.0) {
            out.value[t] = 0.0;
            out.stderr_[t] = 0.0;
        } else {
            out.value[t] = std::pow(mean, 1.0 / p);
            // delta method through u -> u^(1/p)
            out.stderr_[t] = std::pow(mean, 1.0 / p - 1.0) * se_mean / p;
        }
        require_finite(out.value[t], "distance moment");
    }
    return out;
}

}  // namespace clab
