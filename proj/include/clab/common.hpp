#ifndef CLAB_COMMON_HPP
#define CLAB_COMMON_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "clab/errors.hpp"

namespace clab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.1.0";

// Guard used by the simulators: a path whose state leaves this ball is
// flagged as diverged instead of silently producing inf/NaN downstream.
inline constexpr double kDivergenceGuard = 1e8;

inline void require(bool cond, const char* msg) {
    if (!cond) throw Error(msg);
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string(what) + " is not finite");
}

}  // namespace clab

#endif
