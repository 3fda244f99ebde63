#include "dgd/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "dgd/kernels.hpp"

namespace dgd {

namespace {

constexpr double kLogFloor = 1e-10;

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_same_shape(const char* op, const ArrayRef& a, const ArrayRef& b) {
  if (a->shape() != b->shape())
    throw DimensionError(std::string(op) + ": shape mismatch: " + shape_str(a->shape()) +
                         " vs " + shape_str(b->shape()));
}

}  // namespace

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

DiffArray::DiffArray(std::vector<std::size_t> shape, bool requires_grad)
    : values(shape_size(shape), 0.0),
      grad(shape_size(shape), 0.0),
      requires_grad(requires_grad),
      shape_(std::move(shape)) {}

ArrayRef DiffArray::make(std::vector<std::size_t> shape, bool requires_grad) {
  return std::make_shared<DiffArray>(std::move(shape), requires_grad);
}

ArrayRef DiffArray::full(std::vector<std::size_t> shape, double fill, bool requires_grad) {
  auto a = make(std::move(shape), requires_grad);
  std::fill(a->values.begin(), a->values.end(), fill);
  return a;
}

ArrayRef DiffArray::from(std::vector<std::size_t> shape, std::vector<double> values,
                         bool requires_grad) {
  auto a = std::make_shared<DiffArray>(std::move(shape), requires_grad);
  if (values.size() != a->size())
    throw DimensionError("DiffArray::from: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(a->shape()));
  a->values = std::move(values);
  return a;
}

ArrayRef DiffArray::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

double DiffArray::value() const {
  if (!is_scalar())
    throw ContractError("DiffArray::value: array of shape " + shape_str(shape_) +
                        " is not scalar");
  return values[0];
}

void DiffArray::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void zero_grad(const std::vector<ArrayRef>& params) {
  for (const auto& p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::record(const ArrayRef& out, std::function<void()> backward_rule) {
  if (out->requires_grad) nodes_.push_back({out, std::move(backward_rule)});
}

void Tape::backward(const ArrayRef& loss) {
  if (!loss->is_scalar())
    throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss->shape()));
  if (nodes_.empty()) throw ContractError("backward: tape is empty");
  if (loss->requires_grad) loss->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->back();
  nodes_.clear();
}

ArrayRef Tape::unary(const ArrayRef& x, const std::function<double(double)>& f,
                     const std::function<double(double, double)>& dfdx_from_in_out) {
  auto out = DiffArray::make(x->shape(), x->requires_grad);
  for (std::size_t i = 0; i < x->size(); ++i) out->values[i] = f(x->values[i]);
  record(out, [x, out, dfdx_from_in_out]() {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < x->size(); ++i)
      x->grad[i] += out->grad[i] * dfdx_from_in_out(x->values[i], out->values[i]);
  });
  return out;
}

ArrayRef Tape::add(const ArrayRef& a, const ArrayRef& b) {
  check_same_shape("add", a, b);
  auto out = DiffArray::make(a->shape(), a->requires_grad || b->requires_grad);
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] + b->values[i];
  record(out, [a, b, out]() {
    if (a->requires_grad)
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i];
  });
  return out;
}

ArrayRef Tape::sub(const ArrayRef& a, const ArrayRef& b) {
  check_same_shape("sub", a, b);
  auto out = DiffArray::make(a->shape(), a->requires_grad || b->requires_grad);
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] - b->values[i];
  record(out, [a, b, out]() {
    if (a->requires_grad)
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] -= out->grad[i];
  });
  return out;
}

ArrayRef Tape::mul(const ArrayRef& a, const ArrayRef& b) {
  check_same_shape("mul", a, b);
  auto out = DiffArray::make(a->shape(), a->requires_grad || b->requires_grad);
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] * b->values[i];
  record(out, [a, b, out]() {
    if (a->requires_grad)
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i] * b->values[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i] * a->values[i];
  });
  return out;
}

ArrayRef Tape::exp(const ArrayRef& x) {
  return unary(
      x, [](double v) { return std::exp(v); },
      [](double, double out) { return out; });
}

ArrayRef Tape::log(const ArrayRef& x) {
  for (double v : x->values)
    if (v <= 0.0)
      throw NumericDomainError("log: non-positive input " + std::to_string(v));
  return unary(
      x, [](double v) { return std::log(std::max(v, kLogFloor)); },
      [](double in, double) { return 1.0 / std::max(in, kLogFloor); });
}

ArrayRef Tape::sigmoid(const ArrayRef& x) {
  return unary(
      x, [](double v) { return stable_sigmoid(v); },
      [](double, double out) { return out * (1.0 - out); });
}

ArrayRef Tape::relu(const ArrayRef& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

ArrayRef Tape::negate(const ArrayRef& x) {
  return unary(
      x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

ArrayRef Tape::scale(const ArrayRef& x, double c) {
  return unary(
      x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

ArrayRef Tape::add_scalar(const ArrayRef& x, double c) {
  return unary(
      x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

ArrayRef Tape::clamp(const ArrayRef& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double in, double) { return (in >= lo && in <= hi) ? 1.0 : 0.0; });
}

ArrayRef Tape::softmax(const ArrayRef& x) {
  const std::size_t rows = x->rows(), cols = x->cols();
  auto out = DiffArray::make(x->shape(), x->requires_grad);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x->values.data() + i * cols;
    double* oi = out->values.data() + i * cols;
    double m = xi[0];
    for (std::size_t j = 1; j < cols; ++j) m = std::max(m, xi[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      oi[j] = std::exp(xi[j] - m);
      total += oi[j];
    }
    for (std::size_t j = 0; j < cols; ++j) oi[j] /= total;
  }
  record(out, [x, out, rows, cols]() {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* s = out->values.data() + i * cols;
      const double* g = out->grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[j] * s[j];
      double* gx = x->grad.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gx[j] += s[j] * (g[j] - dot);
    }
  });
  return out;
}

ArrayRef Tape::log_softmax(const ArrayRef& x) {
  const std::size_t rows = x->rows(), cols = x->cols();
  auto out = DiffArray::make(x->shape(), x->requires_grad);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x->values.data() + i * cols;
    double* oi = out->values.data() + i * cols;
    double m = xi[0];
    for (std::size_t j = 1; j < cols; ++j) m = std::max(m, xi[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += std::exp(xi[j] - m);
    const double lse = m + std::log(total);
    for (std::size_t j = 0; j < cols; ++j) oi[j] = xi[j] - lse;
  }
  record(out, [x, out, rows, cols]() {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* lsm = out->values.data() + i * cols;
      const double* g = out->grad.data() + i * cols;
      double gsum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gsum += g[j];
      double* gx = x->grad.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gx[j] += g[j] - std::exp(lsm[j]) * gsum;
    }
  });
  return out;
}

ArrayRef Tape::matmul(const ArrayRef& a, const ArrayRef& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->dim(1) != b->dim(0))
    throw DimensionError("matmul: incompatible shapes " + shape_str(a->shape()) + " and " +
                         shape_str(b->shape()));
  const std::size_t p = a->dim(0), q = a->dim(1), r = b->dim(1);
  auto out = DiffArray::make({p, r}, a->requires_grad || b->requires_grad);
  kernels::matmul_nn(a->values.data(), b->values.data(), out->values.data(), p, q, r);
  record(out, [a, b, out, p, q, r]() {
    if (a->requires_grad)
      kernels::matmul_nt(out->grad.data(), b->values.data(), a->grad.data(), p, r, q, true);
    if (b->requires_grad)
      kernels::matmul_tn(a->values.data(), out->grad.data(), b->grad.data(), q, p, r, true);
  });
  return out;
}

ArrayRef Tape::add_rowvec(const ArrayRef& m, const ArrayRef& v) {
  const std::size_t rows = m->rows(), cols = m->cols();
  if (v->size() != cols)
    throw DimensionError("add_rowvec: vector " + shape_str(v->shape()) +
                         " does not match row width of " + shape_str(m->shape()));
  auto out = DiffArray::make(m->shape(), m->requires_grad || v->requires_grad);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out->values[i * cols + j] = m->values[i * cols + j] + v->values[j];
  record(out, [m, v, out, rows, cols]() {
    if (m->requires_grad)
      for (std::size_t i = 0; i < rows * cols; ++i) m->grad[i] += out->grad[i];
    if (v->requires_grad)
      kernels::colsum(out->grad.data(), v->grad.data(), rows, cols, true);
  });
  return out;
}

ArrayRef Tape::gather_rows(const ArrayRef& m, std::vector<std::size_t> idx) {
  const std::size_t rows = m->rows(), cols = m->cols();
  for (std::size_t i : idx)
    if (i >= rows)
      throw IndexError("gather_rows: row " + std::to_string(i) + " out of range [0, " +
                       std::to_string(rows) + ")");
  auto out = DiffArray::make({idx.size(), cols}, m->requires_grad);
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(m->values.data() + idx[i] * cols, cols, out->values.data() + i * cols);
  auto idx_ptr = std::make_shared<std::vector<std::size_t>>(std::move(idx));
  record(out, [m, out, idx_ptr, cols]() {
    if (!m->requires_grad) return;
    for (std::size_t i = 0; i < idx_ptr->size(); ++i) {
      double* dst = m->grad.data() + (*idx_ptr)[i] * cols;
      const double* src = out->grad.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
  });
  return out;
}

ArrayRef Tape::select_per_row(const ArrayRef& m, std::vector<std::size_t> col) {
  const std::size_t rows = m->rows(), cols = m->cols();
  if (col.size() != rows)
    throw DimensionError("select_per_row: " + std::to_string(col.size()) + " indices for " +
                         std::to_string(rows) + " rows");
  for (std::size_t c : col)
    if (c >= cols)
      throw IndexError("select_per_row: column " + std::to_string(c) + " out of range [0, " +
                       std::to_string(cols) + ")");
  auto out = DiffArray::make({rows}, m->requires_grad);
  for (std::size_t i = 0; i < rows; ++i) out->values[i] = m->values[i * cols + col[i]];
  auto col_ptr = std::make_shared<std::vector<std::size_t>>(std::move(col));
  record(out, [m, out, col_ptr, cols]() {
    if (!m->requires_grad) return;
    for (std::size_t i = 0; i < out->size(); ++i)
      m->grad[i * cols + (*col_ptr)[i]] += out->grad[i];
  });
  return out;
}

ArrayRef Tape::sum(const ArrayRef& x) {
  double total = 0.0;
  for (double v : x->values) total += v;
  auto out = DiffArray::from({1}, {total}, x->requires_grad);
  record(out, [x, out]() {
    if (!x->requires_grad) return;
    const double g = out->grad[0];
    for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += g;
  });
  return out;
}

ArrayRef Tape::mean(const ArrayRef& x) {
  const double inv_n = 1.0 / static_cast<double>(x->size());
  double total = 0.0;
  for (double v : x->values) total += v;
  auto out = DiffArray::from({1}, {total * inv_n}, x->requires_grad);
  record(out, [x, out, inv_n]() {
    if (!x->requires_grad) return;
    const double g = out->grad[0] * inv_n;
    for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += g;
  });
  return out;
}

ArrayRef Tape::logsumexp(const ArrayRef& x) {
  double m = x->values[0];
  for (double v : x->values) m = std::max(m, v);
  double total = 0.0;
  for (double v : x->values) total += std::exp(v - m);
  auto out = DiffArray::from({1}, {m + std::log(total)}, x->requires_grad);
  record(out, [x, out]() {
    if (!x->requires_grad) return;
    const double g = out->grad[0];
    const double lse = out->values[0];
    for (std::size_t i = 0; i < x->size(); ++i)
      x->grad[i] += g * std::exp(x->values[i] - lse);
  });
  return out;
}

std::vector<std::size_t> Tape::reduced_shape(const ArrayRef& x) {
  if (x->rank() <= 1) return {1};
  std::vector<std::size_t> s(x->shape().begin(), x->shape().end() - 1);
  return s;
}

ArrayRef Tape::sum_lastdim(const ArrayRef& x) {
  const std::size_t rows = x->rows(), cols = x->cols();
  auto out = DiffArray::make(reduced_shape(x), x->requires_grad);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += x->values[i * cols + j];
    out->values[i] = acc;
  }
  record(out, [x, out, rows, cols]() {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < rows; ++i) {
      const double g = out->grad[i];
      double* gx = x->grad.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gx[j] += g;
    }
  });
  return out;
}

ArrayRef Tape::logsumexp_lastdim(const ArrayRef& x) {
  const std::size_t rows = x->rows(), cols = x->cols();
  auto out = DiffArray::make(reduced_shape(x), x->requires_grad);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x->values.data() + i * cols;
    double m = xi[0];
    for (std::size_t j = 1; j < cols; ++j) m = std::max(m, xi[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += std::exp(xi[j] - m);
    out->values[i] = m + std::log(total);
  }
  record(out, [x, out, rows, cols]() {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < rows; ++i) {
      const double g = out->grad[i];
      const double lse = out->values[i];
      const double* xi = x->values.data() + i * cols;
      double* gx = x->grad.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gx[j] += g * std::exp(xi[j] - lse);
    }
  });
  return out;
}

}  // namespace dgd
