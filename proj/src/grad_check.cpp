#include "spadi/grad_check.hpp"

#include <cmath>

namespace spadi {

GradCheckReport grad_check(const std::function<Tensor(Tape*)>& f,
                           const std::vector<Tensor>& inputs, double step,
                           double tol) {
  GradCheckReport rep;

  Tape tape;
  Tensor loss = f(&tape);
  if (!std::isfinite(loss.item())) {
    rep.finite = false;
    rep.detail = "non-finite loss value";
    return rep;
  }
  for (const Tensor& in : inputs) {
    Tensor t = in;
    t.zero_grad();
  }
  tape.backward(loss);

  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor t = inputs[ti];
    const float* g = t.grad();
    float* vals = t.data();
    for (long long i = 0, n = t.numel(); i < n; ++i) {
      const float keep = vals[i];
      vals[i] = float(keep + step);
      const double fp = f(nullptr).item();
      vals[i] = float(keep - step);
      const double fm = f(nullptr).item();
      vals[i] = keep;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        rep.finite = false;
        rep.detail = msg("non-finite perturbed loss at input ", ti,
                         " element ", i);
        return rep;
      }
      const double fd = (fp - fm) / (2.0 * step);
      const double an = double(g[i]);
      const double rel =
          std::fabs(fd - an) / std::max({1.0, std::fabs(fd), std::fabs(an)});
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.detail = msg("input ", ti, " element ", i, ": fd=", fd,
                         " tape=", an);
      }
    }
  }
  rep.passed = rep.finite && rep.max_rel_error <= tol;
  return rep;
}

}  // namespace spadi
