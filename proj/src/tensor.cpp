#include "advml/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advml/error.hpp"

namespace advml {

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept {
  std::size_t n = shape.empty() ? 0 : 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw InvalidInput("tensor dimensions must be positive");
  }
  data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(std::vector<double> data, std::vector<std::size_t> shape)
    : data_(std::move(data)), shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw InvalidInput("tensor dimensions must be positive");
  }
  if (shape_product(shape_) != data_.size()) {
    throw InvalidInput("tensor shape product " + std::to_string(shape_product(shape_)) +
                       " does not match data length " + std::to_string(data_.size()));
  }
}

Tensor Tensor::from(std::vector<double> values) {
  const std::size_t n = values.size();
  if (n == 0) return Tensor{};
  return Tensor(std::move(values), {n});
}

Tensor Tensor::from(std::initializer_list<double> values) {
  return from(std::vector<double>(values));
}

std::size_t Tensor::height() const {
  if (!is_image()) throw InvalidInput("tensor is not an image");
  return shape_[0];
}

std::size_t Tensor::width() const {
  if (!is_image()) throw InvalidInput("tensor is not an image");
  return shape_[1];
}

std::size_t Tensor::channels() const {
  if (!is_image()) throw InvalidInput("tensor is not an image");
  return shape_.size() == 3 ? shape_[2] : 1;
}

double& Tensor::at(std::size_t row, std::size_t col, std::size_t ch) {
  return data_[(row * width() + col) * channels() + ch];
}

double Tensor::at(std::size_t row, std::size_t col, std::size_t ch) const {
  return data_[(row * width() + col) * channels() + ch];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  return Tensor(data_, std::move(shape));
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw InvalidInput("tensor shape mismatch");
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (auto& v : out) v *= s;
  return out;
}

Tensor add_scaled(const Tensor& a, double s, const Tensor& b) {
  require_same_shape(a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
  return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  Tensor out = a;
  for (auto& v : out) v = std::clamp(v, lo, hi);
  return out;
}

}  // namespace advml
