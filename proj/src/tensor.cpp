#include "spikezip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "spikezip/errors.hpp"

namespace spikezip {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t s : shape) p *= s;
  return p;
}

void validate_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > 3)
    throw shape_error("tensor rank must be between 1 and 3");
  for (std::size_t s : shape)
    if (s == 0) throw shape_error("tensor dimensions must be nonzero");
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) throw shape_error(std::string(what) + ": wrong rank");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) throw shape_error(std::string(what) + ": shape mismatch");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (shape_product(shape_) != data_.size())
    throw shape_error("tensor data length does not match shape");
  check_finite();
}

void Tensor::check_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) throw numeric_error("tensor contains a non-finite value");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], p = b.shape()[1];
  if (k != k2) throw shape_error("matmul: inner dimensions do not match");
  Tensor c({m, p});
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) acc += ap[i * k + r] * bp[r * p + j];
      cp[i * p + j] = acc;
    }
  }
  c.check_finite();
  return c;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  Tensor t({k, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
  c.check_finite();
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  c.check_finite();
  return c;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor c = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * factor;
  c.check_finite();
  return c;
}

Tensor relu(const Tensor& a) {
  Tensor c = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  return c;
}

Tensor rowvec_matmul(const Tensor& v, const Tensor& m) {
  require_rank(v, 1, "rowvec_matmul lhs");
  require_rank(m, 2, "rowvec_matmul rhs");
  const std::size_t k = v.shape()[0];
  if (m.shape()[0] != k) throw shape_error("rowvec_matmul: inner dimensions do not match");
  const std::size_t p = m.shape()[1];
  Tensor out({p});
  for (std::size_t j = 0; j < p; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < k; ++r) acc += v.at(r) * m.at(r, j);
    out.at(j) = acc;
  }
  out.check_finite();
  return out;
}

Tensor add_rowwise(const Tensor& x, const Tensor& row) {
  require_rank(x, 2, "add_rowwise input");
  require_rank(row, 1, "add_rowwise row");
  if (x.shape()[1] != row.shape()[0])
    throw shape_error("add_rowwise: row length does not match column count");
  Tensor c = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.shape()[0]; ++i)
    for (std::size_t j = 0; j < x.shape()[1]; ++j) c.at(i, j) = x.at(i, j) + row.at(j);
  c.check_finite();
  return c;
}

Tensor softmax(const Tensor& x) {
  x.check_finite();
  const std::size_t last = x.shape().back();
  const std::size_t slices = x.size() / last;
  Tensor out = Tensor::zeros_like(x);
  const double* in = x.data();
  double* op = out.data();
  for (std::size_t s = 0; s < slices; ++s) {
    const double* xs = in + s * last;
    double* os = op + s * last;
    double mx = xs[0];
    for (std::size_t j = 1; j < last; ++j) mx = std::max(mx, xs[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < last; ++j) {
      os[j] = std::exp(xs[j] - mx);
      denom += os[j];
    }
    for (std::size_t j = 0; j < last; ++j) os[j] /= denom;
  }
  out.check_finite();
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(gamma, 1, "layernorm gamma");
  require_rank(beta, 1, "layernorm beta");
  const std::size_t last = x.shape().back();
  if (gamma.shape()[0] != last || beta.shape()[0] != last)
    throw shape_error("layernorm: gamma/beta length must equal the last dimension");
  const std::size_t slices = x.size() / last;
  Tensor out = Tensor::zeros_like(x);
  const double* in = x.data();
  double* op = out.data();
  for (std::size_t s = 0; s < slices; ++s) {
    const double* xs = in + s * last;
    double* os = op + s * last;
    double mean = 0.0;
    for (std::size_t j = 0; j < last; ++j) mean += xs[j];
    mean /= static_cast<double>(last);
    double var = 0.0;
    for (std::size_t j = 0; j < last; ++j) {
      const double d = xs[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(last);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < last; ++j)
      os[j] = (xs[j] - mean) * inv * gamma.at(j) + beta.at(j);
  }
  out.check_finite();
  return out;
}

Tensor mean_rows(const Tensor& x) {
  require_rank(x, 2, "mean_rows");
  const std::size_t m = x.shape()[0], k = x.shape()[1];
  Tensor out({k});
  for (std::size_t j = 0; j < k; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += x.at(i, j);
    out.at(j) = acc / static_cast<double>(m);
  }
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
  require_rank(x, 2, "slice_cols");
  if (c0 >= c1 || c1 > x.shape()[1]) throw shape_error("slice_cols: invalid column range");
  const std::size_t m = x.shape()[0], w = c1 - c0;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out.at(i, j) = x.at(i, c0 + j);
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw shape_error("concat_cols: no parts");
  const std::size_t m = parts[0].shape()[0];
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank(p, 2, "concat_cols part");
    if (p.shape()[0] != m) throw shape_error("concat_cols: row counts differ");
    total += p.shape()[1];
  }
  Tensor out({m, total});
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p.shape()[1]; ++j) out.at(i, off + j) = p.at(i, j);
    off += p.shape()[1];
  }
  return out;
}

Tensor plane(const Tensor& x, std::size_t index) {
  require_rank(x, 3, "plane");
  if (index >= x.shape()[0]) throw shape_error("plane: index out of range");
  const std::size_t m = x.shape()[1], k = x.shape()[2];
  Tensor out({m, k});
  std::memcpy(out.data(), x.data() + index * m * k, m * k * sizeof(double));
  return out;
}

void set_plane(Tensor& x, std::size_t index, const Tensor& p) {
  require_rank(x, 3, "set_plane target");
  require_rank(p, 2, "set_plane source");
  if (index >= x.shape()[0] || p.shape()[0] != x.shape()[1] || p.shape()[1] != x.shape()[2])
    throw shape_error("set_plane: shape mismatch");
  std::memcpy(x.data() + index * p.size(), p.data(), p.size() * sizeof(double));
}

Tensor stack_planes(const std::vector<Tensor>& planes) {
  if (planes.empty()) throw shape_error("stack_planes: no planes");
  const std::size_t m = planes[0].shape()[0], k = planes[0].shape()[1];
  Tensor out({planes.size(), m, k});
  for (std::size_t h = 0; h < planes.size(); ++h) set_plane(out, h, planes[h]);
  return out;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

std::size_t argmax(const Tensor& a) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.size(); ++i)
    if (a.data()[i] > a.data()[best]) best = i;
  return best;
}

}  // namespace spikezip
