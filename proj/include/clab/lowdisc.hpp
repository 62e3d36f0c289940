#ifndef CLAB_LOWDISC_HPP
#define CLAB_LOWDISC_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "clab/common.hpp"
#include "clab/rng.hpp"

namespace clab {

// Additive-recurrence low-discrepancy sequence (R_d of Roberts): the k-th
// point is frac(shift + k*alpha) with alpha built from the generalized golden
// ratio. Deterministic; the seed only moves the shift.
class LowDiscrepancy {
  public:
    LowDiscrepancy(int dim, std::uint64_t seed);

    // Next point in [0,1)^dim.
    void next(std::span<double> out);

    // Next point in [-radius, radius]^dim.
    Vec next_in_box(double radius);

  private:
    std::vector<double> alpha_;
    std::vector<double> state_;
};

}  // namespace clab

#endif
