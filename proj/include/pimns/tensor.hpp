#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pimns {

/// Dense row-major float matrix.
class Tensor2D {
 public:
  Tensor2D() = default;
  Tensor2D(std::size_t rows, std::size_t cols, float fill = 0.0f);
  Tensor2D(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Tensor2D identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool same_shape(const Tensor2D& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  /// Bit-level equality (distinguishes +0/-0, equal NaN payloads compare equal).
  bool bit_equal(const Tensor2D& o) const;

  friend bool operator==(const Tensor2D& a, const Tensor2D& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// a·b with float accumulation in i-k-j order. Throws ShapeError on mismatch.
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);

/// Throws InvalidValueError naming `what` if any entry is NaN or infinite.
void require_finite(const Tensor2D& t, std::string_view what);
void require_finite(std::span<const float> v, std::string_view what);

}  // namespace pimns
