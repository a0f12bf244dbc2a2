#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spadi/config.hpp"
#include "spadi/conv.hpp"
#include "spadi/interp.hpp"
#include "spadi/sampler.hpp"
#include "spadi/sparse_exec.hpp"

namespace spadi {

// Per-forward switches. Train mode runs dense convs with soft-mask
// composition; infer mode runs the sparse executor with hard masks.
struct ForwardMode {
  bool train = false;
  float tau = 0.01f;
  float threshold = 0.5f;
  bool stochastic = true;  // gumbel noise on/off
  bool grid_on = true;
  Tape* tape = nullptr;
  uint64_t noise_seed = 0;
  // test hook: mask id -> injected mask (bypasses the sampler)
  const std::map<std::string, SamplingMask>* forced_masks = nullptr;
};

struct ForwardOutput {
  Tensor logits;
  std::vector<Tensor> pi1s;  // confidence channels feeding the sparse loss
  std::vector<std::pair<std::string, double>> mask_sparsities;
  FlopsLedger ledger;  // filled in infer mode
};

// One sampler instance: the 3x3 confidence conv (2 channels, or 1 for the
// relu gate) plus a fixed noise stream id.
struct SamplerUnit {
  ConvParams conv;
  int stream_id = 0;
};

// Residual block with per-conv masks under one of the three sharing
// layouts. Bottleneck (1x1 -> 3x3 -> 1x1) for segmentation nets, basic
// (3x3 -> 3x3, always separate masks) for classification nets.
class MaskedBlock {
 public:
  MaskedBlock(const NetConfig& cfg, int index, int channels, bool bottleneck,
              bool masked, Rng& rng);

  Tensor forward(const Tensor& x, const ForwardMode& mode,
                 ForwardOutput& out) const;

  void collect_parameters(
      std::vector<std::pair<std::string, Tensor>>& params) const;

  int mask_count() const { return int(samplers_.size()); }
  bool masked() const { return masked_; }
  const std::vector<InterpKernel>& kernels() const { return kernels_; }
  const std::vector<int>& mask_of_conv() const { return mask_of_conv_; }
  const std::vector<ConvParams>& convs() const { return convs_; }
  const std::vector<SamplerUnit>& samplers() const { return samplers_; }
  std::string id() const;

 private:
  struct MaskBundle {
    SamplingMask mask;      // combined (grid included), soft or hard
    SamplingMask raw_hard;  // hard support mask for accounting
    Tensor pi1;             // defined when a confidence map was produced
  };

  MaskBundle make_mask(const Tensor& input, int slot, const ForwardMode& mode,
                       ForwardOutput& out) const;
  Tensor apply_masked_conv(const Tensor& input, const ConvParams& conv,
                           const MaskBundle& mb, const InterpKernel& kern,
                           const std::string& layer_id, int interp_channels,
                           const ForwardMode& mode, ForwardOutput& out) const;

  const NetConfig* cfg_;
  int index_ = 0;
  int channels_ = 0;
  int mid_ = 0;
  bool bottleneck_ = true;
  bool masked_ = true;
  std::vector<ConvParams> convs_;       // 3 (bottleneck) or 2 (basic)
  std::vector<SamplerUnit> samplers_;   // one per distinct mask
  std::vector<int> mask_of_conv_;       // conv index -> mask slot
  std::vector<InterpKernel> kernels_;   // one per conv
};

class ToyNet {
 public:
  explicit ToyNet(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }

  ForwardOutput forward(const Tensor& x, const ForwardMode& mode) const;

  // Ordered (name, tensor) registry; order is fixed by construction.
  const std::vector<std::pair<std::string, Tensor>>& parameters() const {
    return params_;
  }
  Tensor parameter(const std::string& name) const;

  // Interp-module report rows, rbf kernels only.
  struct LambdaRow {
    std::string id;       // e.g. "b2.i1"
    std::string mask_id;  // mask gating that conv, e.g. "b2.m0"
    int depth = 0;        // block index
    double lambda = 0.0;
  };
  std::vector<LambdaRow> lambda_report() const;

  int block_count() const { return int(blocks_.size()); }
  const MaskedBlock& block(int i) const { return blocks_[size_t(i)]; }

  // Weights eligible for global unstructured pruning (backbone conv weights;
  // sampler convs and interp parameters excluded).
  std::vector<std::pair<std::string, Tensor>> prunable_weights() const;

 private:
  NetConfig cfg_;
  ConvParams stem_;
  ConvParams transition_;  // classification only (stride-2 stage change)
  std::vector<MaskedBlock> blocks_;
  ConvParams head_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

}  // namespace spadi
