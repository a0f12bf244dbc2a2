#include "spadi/sampler.hpp"

#include <cmath>

namespace spadi {

void SamplerConfig::validate() const {
  SPADI_CHECK(tau0 > 0.0f, "sampler: tau0 must be positive, got ", tau0);
  SPADI_CHECK(alpha > 0.0f && alpha < 1.0f, "sampler: alpha must be in (0,1), got ",
              alpha);
  SPADI_CHECK(threshold > 0.0f && threshold < 1.0f,
              "sampler: threshold must be in (0,1), got ", threshold);
  SPADI_CHECK(grid_stride >= 0, "sampler: grid_stride must be >= 0, got ",
              grid_stride);
}

float temperature_at(const SamplerConfig& cfg, long long iter) {
  return float(std::pow(double(cfg.alpha), double(iter)) * cfg.tau0);
}

float alpha_for(long long total_iters, float tau0, float tau_final) {
  SPADI_CHECK(total_iters >= 1, "alpha_for: total_iters must be >= 1");
  SPADI_CHECK(tau0 > 0.0f && tau_final > 0.0f, "alpha_for: temperatures must be positive");
  return float(std::exp(std::log(double(tau_final) / double(tau0)) /
                        double(total_iters)));
}

double SamplingMask::sparsity() const {
  const float* p = m.data();
  long long below = 0;
  const long long n = m.numel();
  for (long long i = 0; i < n; ++i) {
    if (mode == MaskMode::hard) {
      if (p[i] == 0.0f) ++below;
    } else {
      if (p[i] < threshold) ++below;
    }
  }
  return double(below) / double(n);
}

long long SamplingMask::sampled_count() const {
  return m.numel() - (long long)std::llround(sparsity() * double(m.numel()));
}

ConfidenceMap predict_confidence(const Tensor& x, const ConvParams& conv,
                                 Tape* tape) {
  SPADI_CHECK(conv.out_channels() == 2,
              "predict_confidence: sampler conv must have 2 output channels, got ",
              conv.out_channels());
  SPADI_CHECK(conv.ksize() == 3 && conv.padding == 1 && conv.stride == 1,
              "predict_confidence: sampler conv must be 3x3 stride 1 pad 1");
  Tensor z = conv2d(x, conv, tape);
  Tensor z0 = slice_channels(z, 0, 1, tape);
  Tensor z1 = slice_channels(z, 1, 1, tape);
  auto [p0, p1] = softmax2(z0, z1, tape);
  return {p0, p1};
}

Tensor gumbel_noise(const Shape& s, Rng& rng) {
  Tensor t = Tensor::zeros(s);
  float* p = t.data();
  for (long long i = 0, n = t.numel(); i < n; ++i) p[i] = rng.gumbel();
  return t;
}

namespace {

// M = softmax((log pi_j + g_j)/tau) taken at class 1. Passing undefined
// noise tensors gives the deterministic variant.
SamplingMask mask_from_confidence(const ConfidenceMap& pi, float tau,
                                  const Tensor& g0, const Tensor& g1,
                                  Tape* tape) {
  SPADI_CHECK(tau > 0.0f, "sampling mask: tau must be positive, got ", tau);
  Tensor l0 = log(clamp_min(pi.pi0, 1e-20f, tape), tape);
  Tensor l1 = log(clamp_min(pi.pi1, 1e-20f, tape), tape);
  if (g0.defined()) l0 = add(l0, g0, tape);
  if (g1.defined()) l1 = add(l1, g1, tape);
  Tensor a0 = scale(l0, 1.0f / tau, tape);
  Tensor a1 = scale(l1, 1.0f / tau, tape);
  auto [m0, m1] = softmax2(a0, a1, tape);
  (void)m0;
  return {m1, MaskMode::soft};
}

}  // namespace

SamplingMask gumbel_softmax_mask(const ConfidenceMap& pi, float tau, Rng& rng,
                                 Tape* tape) {
  Tensor g0 = gumbel_noise(pi.pi0.shape(), rng);
  Tensor g1 = gumbel_noise(pi.pi1.shape(), rng);
  return mask_from_confidence(pi, tau, g0, g1, tape);
}

SamplingMask deterministic_mask(const ConfidenceMap& pi, float tau,
                                Tape* tape) {
  return mask_from_confidence(pi, tau, Tensor(), Tensor(), tape);
}

SamplingMask relu_gate_mask(const Tensor& x, const ConvParams& conv,
                            Tape* tape) {
  SPADI_CHECK(conv.out_channels() == 1,
              "relu_gate_mask: sampler conv must have 1 output channel, got ",
              conv.out_channels());
  Tensor m = relu(conv2d(x, conv, tape), tape);
  SamplingMask out{m, MaskMode::soft};
  out.threshold = 0.0f;  // hard sparsity is the fraction of exact zeros
  return out;
}

SamplingMask grid_prior_mask(int n, int h, int w, int stride) {
  SPADI_CHECK(stride >= 1, "grid_prior_mask: stride must be >= 1, got ", stride);
  Tensor m = Tensor::zeros({n, 1, h, w});
  float* p = m.data();
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; y += stride)
      for (int x = 0; x < w; x += stride)
        p[(1LL * b * h + y) * w + x] = 1.0f;
  return {m, MaskMode::hard};
}

SamplingMask combine_masks(const SamplingMask& ms, const SamplingMask& mg,
                           Tape* tape) {
  SPADI_CHECK(ms.m.shape() == mg.m.shape(),
              "combine_masks: shape mismatch ", to_string(ms.m.shape()),
              " vs ", to_string(mg.m.shape()));
  SamplingMask out;
  out.m = max2(ms.m, mg.m, tape);
  out.mode = (ms.mode == MaskMode::hard && mg.mode == MaskMode::hard)
                 ? MaskMode::hard
                 : MaskMode::soft;
  out.threshold = ms.threshold;
  return out;
}

SamplingMask binarize(const SamplingMask& soft, float threshold) {
  Tensor out = Tensor::zeros(soft.m.shape());
  const float* p = soft.m.data();
  float* q = out.data();
  for (long long i = 0, n = out.numel(); i < n; ++i)
    q[i] = p[i] >= threshold ? 1.0f : 0.0f;
  return {out, MaskMode::hard};
}

Tensor sparse_loss(const std::vector<Tensor>& pi1s, Tape* tape) {
  SPADI_CHECK(!pi1s.empty(), "sparse_loss: empty confidence list");
  Tensor total = sum(pi1s[0], tape);
  for (size_t i = 1; i < pi1s.size(); ++i)
    total = add(total, sum(pi1s[i], tape), tape);
  return total;
}

}  // namespace spadi
