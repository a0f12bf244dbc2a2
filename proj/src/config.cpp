#include "spadi/config.hpp"

#include <nlohmann/json.hpp>

namespace spadi {

using nlohmann::json;

std::string to_string(MaskLayout v) {
  switch (v) {
    case MaskLayout::single_shared: return "single_shared";
    case MaskLayout::two_masks: return "two_masks";
    case MaskLayout::three_masks: return "three_masks";
  }
  return "?";
}

std::string to_string(SamplerKind v) {
  switch (v) {
    case SamplerKind::gumbel: return "gumbel";
    case SamplerKind::det_gumbel: return "det_gumbel";
    case SamplerKind::relu_gate: return "relu_gate";
    case SamplerKind::uniform_grid: return "uniform_grid";
  }
  return "?";
}

std::string to_string(ReconKind v) {
  switch (v) {
    case ReconKind::interp: return "interp";
    case ReconKind::fill_zeros: return "fill_zeros";
    case ReconKind::reuse_features: return "reuse_features";
  }
  return "?";
}

std::string to_string(InterpVariant v) {
  switch (v) {
    case InterpVariant::rbf: return "rbf";
    case InterpVariant::plain_conv: return "plain_conv";
    case InterpVariant::avg_pool: return "avg_pool";
  }
  return "?";
}

std::string to_string(Task v) {
  return v == Task::segmentation ? "segmentation" : "classification";
}

MaskLayout mask_layout_from(const std::string& s) {
  if (s == "single_shared") return MaskLayout::single_shared;
  if (s == "two_masks") return MaskLayout::two_masks;
  if (s == "three_masks") return MaskLayout::three_masks;
  fail(msg("unknown mask layout '", s, "'"));
}

SamplerKind sampler_kind_from(const std::string& s) {
  if (s == "gumbel" || s == "ours") return SamplerKind::gumbel;
  if (s == "det_gumbel" || s == "deterministic_gumbel") return SamplerKind::det_gumbel;
  if (s == "relu_gate") return SamplerKind::relu_gate;
  if (s == "uniform_grid" || s == "uniform") return SamplerKind::uniform_grid;
  fail(msg("unknown sampler kind '", s, "'"));
}

ReconKind recon_kind_from(const std::string& s) {
  if (s == "interp") return ReconKind::interp;
  if (s == "fill_zeros") return ReconKind::fill_zeros;
  if (s == "reuse_features") return ReconKind::reuse_features;
  fail(msg("unknown reconstruction kind '", s, "'"));
}

InterpVariant interp_variant_from(const std::string& s) {
  if (s == "rbf") return InterpVariant::rbf;
  if (s == "plain_conv") return InterpVariant::plain_conv;
  if (s == "avg_pool") return InterpVariant::avg_pool;
  fail(msg("unknown interpolation kernel '", s, "'"));
}

Task task_from(const std::string& s) {
  if (s == "segmentation") return Task::segmentation;
  if (s == "classification") return Task::classification;
  fail(msg("unknown task '", s, "'"));
}

std::string NetConfig::serialize() const {
  json j;
  j["task"] = to_string(task);
  j["width"] = width;
  j["depth"] = depth;
  j["num_classes"] = num_classes;
  j["in_channels"] = in_channels;
  j["layout"] = to_string(layout);
  j["sampler"] = to_string(sampler);
  j["recon"] = to_string(recon);
  j["kernel"] = to_string(kernel);
  j["radius"] = radius;
  j["lambda0"] = lambda0;
  j["grid_stride"] = grid_stride;
  j["uniform_stride"] = uniform_stride;
  j["init_seed"] = init_seed;
  return j.dump();
}

NetConfig NetConfig::deserialize(const std::string& text) {
  json j = json::parse(text);
  NetConfig c;
  c.task = task_from(j.at("task").get<std::string>());
  c.width = j.at("width").get<int>();
  c.depth = j.at("depth").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.in_channels = j.at("in_channels").get<int>();
  c.layout = mask_layout_from(j.at("layout").get<std::string>());
  c.sampler = sampler_kind_from(j.at("sampler").get<std::string>());
  c.recon = recon_kind_from(j.at("recon").get<std::string>());
  c.kernel = interp_variant_from(j.at("kernel").get<std::string>());
  c.radius = j.at("radius").get<int>();
  c.lambda0 = j.at("lambda0").get<float>();
  c.grid_stride = j.at("grid_stride").get<int>();
  c.uniform_stride = j.at("uniform_stride").get<int>();
  c.init_seed = j.at("init_seed").get<uint64_t>();
  return c;
}

}  // namespace spadi
