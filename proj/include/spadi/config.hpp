#pragma once

#include <cstdint>
#include <string>

#include "spadi/interp.hpp"

namespace spadi {

enum class MaskLayout { single_shared, two_masks, three_masks };
enum class SamplerKind { gumbel, det_gumbel, relu_gate, uniform_grid };
enum class ReconKind { interp, fill_zeros, reuse_features };
enum class Task { segmentation, classification };

std::string to_string(MaskLayout v);
std::string to_string(SamplerKind v);
std::string to_string(ReconKind v);
std::string to_string(InterpVariant v);
std::string to_string(Task v);

MaskLayout mask_layout_from(const std::string& s);
SamplerKind sampler_kind_from(const std::string& s);
ReconKind recon_kind_from(const std::string& s);
InterpVariant interp_variant_from(const std::string& s);
Task task_from(const std::string& s);

struct NetConfig {
  Task task = Task::segmentation;
  int width = 12;
  int depth = 3;  // blocks (segmentation) / blocks per stage (classification)
  int num_classes = 3;
  int in_channels = 3;
  MaskLayout layout = MaskLayout::two_masks;
  SamplerKind sampler = SamplerKind::gumbel;
  ReconKind recon = ReconKind::interp;
  InterpVariant kernel = InterpVariant::rbf;
  int radius = 5;
  float lambda0 = 3.0f;
  int grid_stride = 7;     // 0 disables the grid prior
  int uniform_stride = 2;  // stride for SamplerKind::uniform_grid masks
  uint64_t init_seed = 1;

  std::string serialize() const;  // canonical JSON text
  static NetConfig deserialize(const std::string& json_text);
  bool operator==(const NetConfig&) const = default;
};

}  // namespace spadi
