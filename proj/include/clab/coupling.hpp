#ifndef CLAB_COUPLING_HPP
#define CLAB_COUPLING_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "clab/common.hpp"
#include "clab/model.hpp"
#include "clab/rng.hpp"

namespace clab {

// C1 blending profile: h(r) = cos(pi/2 * s(u)), u = clamp(r - r0, 0, 1) with
// the smoothstep s(u) = 3u^2 - 2u^3; g = sqrt(1 - h^2) = sin(pi/2 * s(u)).
// h == 1 below r0 (full reflection), h == 0 above r0 + 1 (fully synchronous).
struct CutoffProfile {
    double r0 = 1.0;
    std::pair<double, double> eval(double r) const;  // {h, g}
};

struct CouplingKind {
    enum class Type { synchronous, reflection, hybrid };
    Type type = Type::synchronous;
    double lambda0 = 0.0;
    CutoffProfile cutoff;  // hybrid only

    // Declared-coupling threshold = declare_factor * (2 sqrt(2) lambda0) * sqrt(dt).
    // The factor defaults to the discrete-barrier continuity correction
    // -zeta(1/2)/sqrt(2 pi), which cancels the grid-monitoring bias of the
    // first-passage time to O(dt); 2 sqrt(2) lambda0 is the one-step standard
    // deviation of the coupled distance per sqrt(dt).
    double declare_factor = 0.58259769579233;

    static CouplingKind synchronous();
    static CouplingKind reflection(double lambda0);
    static CouplingKind hybrid(double lambda0, CutoffProfile cutoff);

    double declare_threshold(double dt) const;
};

// PSD square root of (a - lambda0^2 I) for symmetric a. Eigenvalues in
// [-tol, 0) are clamped to zero; anything materially below raises
// EigenvalueViolationError.
Mat psd_sqrt_shifted(const Mat& a, double lambda0);

struct PairPath {
    std::vector<double> times;
    std::vector<double> rho;
    std::optional<double> coupling_time;  // empty => censored at the horizon
    bool diverged = false;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    double dt = 0.0;
    // optional full states, one row per recorded time
    std::optional<Mat> x_states, y_states;

    bool coupled_at(double t) const { return coupling_time && t >= *coupling_time - 1e-15; }
};

struct SimOptions {
    // record every record_stride-th step plus t=0 and the horizon;
    // 0 records endpoints only
    int record_stride = 1;
    bool record_states = false;
    // once coupled, skip the remaining steps (rho is identically 0); only
    // valid when the glued marginal is not needed
    bool stop_after_coupling = false;
    std::uint64_t path_index = 0;
};

// One Euler-Maruyama pair trajectory of dX = b dt + sqrt(2) sigma dB under
// the requested coupling. Deterministic in (seed, path_index, dt); noise is
// addressed per (path, step), so results do not depend on scheduling.
PairPath simulate_pair(const ModelSpec& model, const CouplingKind& kind, const Vec& x0,
                       const Vec& y0, double horizon, double dt, std::uint64_t seed,
                       const SimOptions& opts = {});

// Reusable-buffer form for tight loops (one instance per worker). `stream`
// selects the noise stream, so ensembles that share one master seed stay
// mutually independent.
class PairSimulator {
  public:
    PairSimulator(const ModelSpec& model, CouplingKind kind, double dt, std::uint64_t seed,
                  NoiseStream stream = NoiseStream::pair_simulation);
    PairPath run(const Vec& x0, const Vec& y0, double horizon, const SimOptions& opts);

  private:
    void compute_s0(std::span<const double> at, std::span<double> out);

    const ModelSpec& model_;
    CouplingKind kind_;
    double dt_;
    CounterRng rng_;
    int d_, m_, n_noise_;
    double threshold_;
    bool constant_sigma_;
    std::vector<double> s0_const_;
    std::vector<double> bx_, by_, sx_, sy_, s0x_, s0y_, xi_, ex_;
    Mat scratch_a_;
};

struct MomentCurve {
    double p = 1.0;
    std::vector<double> times;
    std::vector<double> value;   // (mean rho^p)^(1/p)
    std::vector<double> stderr_; // delta-method standard error
};

// Pointwise (E rho^p)^(1/p) across paths sharing one grid; reduction runs in
// path-index order so results are independent of how paths were produced.
MomentCurve distance_moments(std::span<const PairPath> paths, double p);

}  // namespace clab

#endif
