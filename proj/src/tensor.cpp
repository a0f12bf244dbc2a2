#include "spadi/tensor.hpp"

#include <cmath>

namespace spadi {

std::string to_string(const Shape& s) {
  return msg("(", s.n, ",", s.c, ",", s.h, ",", s.w, ")");
}

Tensor::Impl& Tensor::impl() {
  SPADI_CHECK(impl_, "use of undefined tensor");
  return *impl_;
}

const Tensor::Impl& Tensor::impl() const {
  SPADI_CHECK(impl_, "use of undefined tensor");
  return *impl_;
}

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  SPADI_CHECK(s.n > 0 && s.c > 0 && s.h > 0 && s.w > 0,
              "tensor shape must be positive, got ", to_string(s));
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = s;
  t.impl_->data.assign(size_t(s.numel()), 0.0f);
  t.impl_->requires_grad = requires_grad;
  t.impl_->needs_grad = requires_grad;
  return t;
}

Tensor Tensor::full(const Shape& s, float value, bool requires_grad) {
  Tensor t = zeros(s, requires_grad);
  for (auto& v : t.impl_->data) v = value;
  return t;
}

Tensor Tensor::from_vector(const Shape& s, std::vector<float> values,
                           bool requires_grad) {
  SPADI_CHECK((long long)values.size() == s.numel(),
              "data length ", values.size(), " does not match shape ",
              to_string(s));
  Tensor t = zeros(s, requires_grad);
  t.impl_->data = std::move(values);
  return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return full({1, 1, 1, 1}, value, requires_grad);
}

const Shape& Tensor::shape() const { return impl().shape; }

float* Tensor::data() { return impl().data.data(); }
const float* Tensor::data() const { return impl().data.data(); }

bool Tensor::requires_grad() const { return impl().requires_grad; }

void Tensor::set_requires_grad(bool rg) {
  impl().requires_grad = rg;
  if (rg) impl().needs_grad = true;
}

bool Tensor::needs_grad() const { return impl().needs_grad; }
void Tensor::mark_needs_grad() { impl().needs_grad = true; }

bool Tensor::has_grad() const { return !impl().grad.empty(); }

float* Tensor::grad() {
  auto& im = impl();
  if (im.grad.empty()) im.grad.assign(im.data.size(), 0.0f);
  return im.grad.data();
}

const float* Tensor::grad_data() const {
  return impl().grad.empty() ? nullptr : impl().grad.data();
}

void Tensor::zero_grad() {
  auto& im = impl();
  if (!im.grad.empty()) im.grad.assign(im.grad.size(), 0.0f);
}

float Tensor::value_at(int n, int c, int y, int x) const {
  return impl().data[size_t(shape().index(n, c, y, x))];
}

float Tensor::item() const {
  SPADI_CHECK(numel() == 1, "item() on non-scalar tensor of shape ",
              to_string(shape()));
  return impl().data[0];
}

Tensor Tensor::clone() const {
  Tensor t = zeros(shape(), requires_grad());
  t.impl_->data = impl().data;
  t.impl_->needs_grad = impl().needs_grad;
  return t;
}

bool all_finite(const Tensor& t) {
  const float* p = t.data();
  for (long long i = 0, n = t.numel(); i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

}  // namespace spadi
