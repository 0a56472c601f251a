#pragma once

#include <cstddef>
#include <vector>

namespace spikezip {

// Dense row-major tensor of doubles, rank 1..3. Values must be finite; the
// checked constructor and every op below enforce this. Instances are plain
// values: copyable, immutable-by-convention once built, safe to share across
// threads.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void check_finite() const;  // throws numeric_error on NaN/Inf

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// c[i][j] = sum_r a[i][r]*b[r][j], reduced in ascending r order so repeated
// calls on the same inputs are bit-identical. Rank-2 only.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);  // rank-2

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);

// row-vector times matrix: [k] x [k×p] -> [p]
Tensor rowvec_matmul(const Tensor& v, const Tensor& m);
// adds `row` [k] to every row of x [m×k]
Tensor add_rowwise(const Tensor& x, const Tensor& row);

// Numerically stable softmax over the last axis (max-subtracted), applied to
// every slice independently.
Tensor softmax(const Tensor& x);
// Per-slice layer normalization over the last axis: (x-mean)/sqrt(var+eps),
// then the gamma/beta affine. gamma and beta have the last-axis length.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor mean_rows(const Tensor& x);  // [m×k] -> [k], token mean-pool
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);
Tensor concat_cols(const std::vector<Tensor>& parts);

// rank-3 helpers: plane h along the first axis
Tensor plane(const Tensor& x, std::size_t index);
void set_plane(Tensor& x, std::size_t index, const Tensor& p);
Tensor stack_planes(const std::vector<Tensor>& planes);

bool bit_equal(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
std::size_t argmax(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }

}  // namespace spikezip
