#pragma once

#include <cstdint>
#include <string>

#include "auvox/network.hpp"

namespace auvox {

struct GradCheckOptions {
  std::size_t batch = 2;
  double step = 1e-5;  // central-difference half-step
  // 0 checks every coordinate; otherwise a deterministic random sample of
  // this many coordinates per tensor (needed for the full-size descriptors).
  std::size_t coords_per_tensor = 0;
  double tolerance = 1e-4;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t coords_checked = 0;
  bool passed(double tolerance) const { return max_rel_err < tolerance; }
};

// Compares analytic parameter gradients against central finite differences
// of the variant's loss, in double precision, on random dense inputs and
// random targets. The relative error uses a small magnitude floor so that
// finite-difference noise on near-zero gradients is not reported as failure.
GradCheckReport gradient_check_network(const ArchitectureDescriptor& desc, std::uint64_t seed,
                                       const GradCheckOptions& opts = {});

}  // namespace auvox
