#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spadi/common.hpp"

namespace spadi {

// Dense rank-4 shape in (batch, channel, height, width) order.
struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  long long numel() const { return 1LL * n * c * h * w; }
  bool operator==(const Shape&) const = default;

  long long index(int in, int ic, int iy, int ix) const {
    return ((1LL * in * c + ic) * h + iy) * w + ix;
  }
};

std::string to_string(const Shape& s);

// Shared-buffer float32 tensor with an optional gradient slot. Copies are
// shallow; the underlying storage is mutated only through parameter updates
// and gradient accumulation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, float value, bool requires_grad = false);
  static Tensor from_vector(const Shape& s, std::vector<float> values,
                            bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  long long numel() const { return shape().numel(); }

  float* data();
  const float* data() const;

  bool requires_grad() const;
  void set_requires_grad(bool rg);

  // True when a gradient has to flow through this tensor during backward.
  // Leaves get it from requires_grad; op outputs inherit it from inputs.
  bool needs_grad() const;
  void mark_needs_grad();

  bool has_grad() const;
  float* grad();              // allocates a zero buffer on first use
  const float* grad_data() const;  // nullptr when absent
  void zero_grad();

  float value_at(int n, int c, int y, int x) const;
  float item() const;  // scalar tensors only

  Tensor clone() const;  // deep copy of the data buffer (no grad, same flags)

  bool same_storage(const Tensor& o) const { return impl_ == o.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;
    bool requires_grad = false;
    bool needs_grad = false;
  };
  std::shared_ptr<Impl> impl_;

  Impl& impl();
  const Impl& impl() const;
};

bool all_finite(const Tensor& t);

}  // namespace spadi
