#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace advml {

// Flat row-major buffer of doubles with a shape. Images are stored h x w x c
// with the channel index varying fastest.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<double> data, std::vector<std::size_t> shape);

  // 1-D tensor over the given values.
  static Tensor from(std::vector<double> values);
  static Tensor from(std::initializer_list<double> values);

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }

  // Image accessors; require rank 3 (h, w, c) or rank 2 (h, w) with c = 1.
  std::size_t height() const;
  std::size_t width() const;
  std::size_t channels() const;
  bool is_image() const noexcept { return shape_.size() == 2 || shape_.size() == 3; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t row, std::size_t col, std::size_t ch = 0);
  double at(std::size_t row, std::size_t col, std::size_t ch = 0) const;

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& vec() const noexcept { return data_; }
  std::vector<double>& vec() noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;

  Tensor reshaped(std::vector<std::size_t> shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::vector<double> data_;
  std::vector<std::size_t> shape_;
};

// Element-wise helpers. Shapes must match; the result takes the shape of `a`.
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

// a + s * b
Tensor add_scaled(const Tensor& a, double s, const Tensor& b);
Tensor clamp(const Tensor& a, double lo, double hi);

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept;

}  // namespace advml
