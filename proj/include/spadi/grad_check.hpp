#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spadi/ops.hpp"
#include "spadi/tensor.hpp"

namespace spadi {

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool passed = false;
  bool finite = true;
  std::string detail;  // location of the worst / first non-finite entry
};

// Central finite differences against tape gradients.
//
// `f` must rebuild the computation from scratch on the given tape and return
// a scalar; it is evaluated many times, so any noise must be frozen by the
// caller. Relative error uses max(1, |fd|, |tape|) as the denominator, which
// degrades to an absolute tolerance for near-zero gradients.
GradCheckReport grad_check(
    const std::function<Tensor(Tape*)>& f,
    const std::vector<Tensor>& inputs, double step, double tol);

}  // namespace spadi
