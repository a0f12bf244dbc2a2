#include "spadi/interp.hpp"

#include <cmath>

namespace spadi {

InterpKernel make_rbf_kernel(int radius, float lambda0, float epsilon) {
  SPADI_CHECK(radius >= 1, "interp: radius must be >= 1, got ", radius);
  InterpKernel k;
  k.variant = InterpVariant::rbf;
  k.radius = radius;
  k.epsilon = epsilon;
  k.lambda = Tensor::scalar(lambda0, /*requires_grad=*/true);
  return k;
}

InterpKernel make_plain_conv_kernel(int radius, float init, float epsilon) {
  SPADI_CHECK(radius >= 1, "interp: radius must be >= 1, got ", radius);
  InterpKernel k;
  k.variant = InterpVariant::plain_conv;
  k.radius = radius;
  k.epsilon = epsilon;
  const int L = 2 * radius + 1;
  k.weights = Tensor::full({1, 1, L, L}, init, /*requires_grad=*/true);
  return k;
}

InterpKernel make_avg_pool_kernel(int radius, float epsilon) {
  SPADI_CHECK(radius >= 1, "interp: radius must be >= 1, got ", radius);
  InterpKernel k;
  k.variant = InterpVariant::avg_pool;
  k.radius = radius;
  k.epsilon = epsilon;
  return k;
}

double rbf_weight(double dy, double dx, double lambda) {
  return std::exp(-lambda * lambda * (dy * dy + dx * dx));
}

namespace {

Tensor offsets_squared(int radius, bool along_h) {
  const int L = 2 * radius + 1;
  Tensor t = along_h ? Tensor::zeros({1, 1, L, 1}) : Tensor::zeros({1, 1, 1, L});
  float* p = t.data();
  for (int i = 0; i < L; ++i) {
    const float d = float(i - radius);
    p[i] = d * d;
  }
  return t;
}

Tensor center_zero(int radius) {
  const int L = 2 * radius + 1;
  Tensor t = Tensor::full({1, 1, L, L}, 1.0f);
  t.data()[1LL * radius * L + radius] = 0.0f;
  return t;
}

// Separable numerator/denominator correlations for kernels of the form
// ky (x) kx with unit center, self-sample removed by subtracting the input.
struct SepKernel {
  Tensor ky;  // (1,1,L,1)
  Tensor kx;  // (1,1,1,L)
};

Tensor sep_corr_excl_center(const Tensor& x, const SepKernel& k, Tape* tape) {
  Tensor full = corr1d_w(corr1d_h(x, k.ky, tape), k.kx, tape);
  return sub(full, x, tape);
}

}  // namespace

Tensor interp_reconstruct(const Tensor& ys, const Tensor& mask,
                          const InterpKernel& kern, Tape* tape) {
  SPADI_CHECK(kern.radius >= 1, "interp: radius must be >= 1, got ",
              kern.radius);
  const Shape& s = ys.shape();
  const Shape& ms = mask.shape();
  SPADI_CHECK(ms.c == 1 && ms.n == s.n && ms.h == s.h && ms.w == s.w,
              "interp: mask shape ", to_string(ms),
              " incompatible with features ", to_string(s));

  Tensor num, den;
  switch (kern.variant) {
    case InterpVariant::rbf: {
      SPADI_CHECK(kern.lambda.defined(), "interp: rbf kernel missing lambda");
      // 1-D kernels exp(-lambda^2 d^2); the 2-D window weight factorizes.
      Tensor lam2 = mul(kern.lambda, kern.lambda, tape);
      Tensor neg = scale(lam2, -1.0f, tape);
      SepKernel k{exp(scalar_expand(neg, offsets_squared(kern.radius, true), tape), tape),
                  exp(scalar_expand(neg, offsets_squared(kern.radius, false), tape), tape)};
      num = sep_corr_excl_center(ys, k, tape);
      den = sep_corr_excl_center(mask, k, tape);
      break;
    }
    case InterpVariant::avg_pool: {
      const int L = 2 * kern.radius + 1;
      SepKernel k{Tensor::full({1, 1, L, 1}, 1.0f),
                  Tensor::full({1, 1, 1, L}, 1.0f)};
      num = sep_corr_excl_center(ys, k, tape);
      den = sep_corr_excl_center(mask, k, tape);
      break;
    }
    case InterpVariant::plain_conv: {
      const int L = 2 * kern.radius + 1;
      SPADI_CHECK(kern.weights.defined() && kern.weights.shape() ==
                      Shape{1, 1, L, L},
                  "interp: plain_conv weights must have shape (1,1,", L, ",",
                  L, ")");
      Tensor w_eff = mul(kern.weights, center_zero(kern.radius), tape);
      num = corr2d(ys, w_eff, tape);
      den = corr2d(mask, abs(w_eff, tape), tape);
      break;
    }
  }
  return bmul(num, safe_recip(den, kern.epsilon, tape), tape);
}

Tensor interpolate(const Tensor& ys, const SamplingMask& m,
                   const InterpKernel& kern, Tape* tape) {
  Tensor c = interp_reconstruct(ys, m.m, kern, tape);
  Tensor ones = Tensor::full(m.m.shape(), 1.0f);
  Tensor inv = sub(ones, m.m, tape);
  return add(bmul(c, inv, tape), bmul(ys, m.m, tape), tape);
}

Tensor plainconv_interpolate(const Tensor& ys, const SamplingMask& m,
                             const Tensor& weights, int radius, float epsilon,
                             Tape* tape) {
  InterpKernel k;
  k.variant = InterpVariant::plain_conv;
  k.radius = radius;
  k.epsilon = epsilon;
  k.weights = weights;
  return interpolate(ys, m, k, tape);
}

Tensor reuse_features_baseline(const Tensor& x, const Tensor& ys,
                               const SamplingMask& m, Tape* tape) {
  SPADI_CHECK(x.shape() == ys.shape(),
              "reuse_features: input shape ", to_string(x.shape()),
              " does not match features ", to_string(ys.shape()));
  Tensor ones = Tensor::full(m.m.shape(), 1.0f);
  Tensor inv = sub(ones, m.m, tape);
  return add(bmul(ys, m.m, tape), bmul(x, inv, tape), tape);
}

Tensor fill_zeros_baseline(const Tensor& ys, const SamplingMask& m,
                           Tape* tape) {
  return bmul(ys, m.m, tape);
}

}  // namespace spadi
