#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rnnpool/autodiff.hpp"

namespace rnnpool {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst_rel_err = 0.0;
  bool pass = true;
};

// Compares tape gradients against central finite differences for every entry
// of every parameter. `build` must construct a scalar loss from the current
// parameter values and be deterministic. Relative error uses
// |ad - fd| / max(1, |ad|, |fd|).
GradCheckReport finite_difference_check(const std::function<Tensor(Tape&)>& build,
                                        const std::vector<Parameter*>& params,
                                        double step = 1e-5, double tol = 1e-4);

}  // namespace rnnpool
