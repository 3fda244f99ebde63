#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dgd/errors.hpp"

namespace dgd {

class DiffArray;
using ArrayRef = std::shared_ptr<DiffArray>;

// Dense row-major f64 array carrying an accumulated-gradient buffer of the
// same shape. The unit of all differentiable state (decoder weights, GMM
// parameters, representations) and of every intermediate tape value.
class DiffArray {
 public:
  DiffArray(std::vector<std::size_t> shape, bool requires_grad);

  static ArrayRef make(std::vector<std::size_t> shape, bool requires_grad = false);
  static ArrayRef full(std::vector<std::size_t> shape, double fill, bool requires_grad = false);
  static ArrayRef from(std::vector<std::size_t> shape, std::vector<double> values,
                       bool requires_grad = false);
  static ArrayRef scalar(double v, bool requires_grad = false);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return values.size(); }
  // 2-D view used by row/column ops: cols = last dim, rows = size / cols.
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }
  bool is_scalar() const { return size() == 1; }

  double value() const;  // ContractError unless scalar
  void zero_grad();

  std::vector<double> values;
  std::vector<double> grad;  // same shape as values; zero after zero_grad
  bool requires_grad;

 private:
  std::vector<std::size_t> shape_;
};

void zero_grad(const std::vector<ArrayRef>& params);

std::string shape_str(const std::vector<std::size_t>& shape);

// Records one forward pass as a list of backward rules and replays them in
// reverse on backward(). Values are computed eagerly by the op methods; the
// tape is rebuilt every pass and cleared by backward(). Leaf gradients
// accumulate across passes until zero_grad.
class Tape {
 public:
  // elementwise, shapes must match
  ArrayRef add(const ArrayRef& a, const ArrayRef& b);
  ArrayRef sub(const ArrayRef& a, const ArrayRef& b);
  ArrayRef mul(const ArrayRef& a, const ArrayRef& b);

  ArrayRef exp(const ArrayRef& x);
  // log(max(x, 1e-10)); NumericDomainError if any entry is <= 0
  ArrayRef log(const ArrayRef& x);
  ArrayRef sigmoid(const ArrayRef& x);
  ArrayRef relu(const ArrayRef& x);
  ArrayRef negate(const ArrayRef& x);
  ArrayRef scale(const ArrayRef& x, double c);
  ArrayRef add_scalar(const ArrayRef& x, double c);
  ArrayRef clamp(const ArrayRef& x, double lo, double hi);

  // normalize over the last axis
  ArrayRef softmax(const ArrayRef& x);
  ArrayRef log_softmax(const ArrayRef& x);

  ArrayRef matmul(const ArrayRef& a, const ArrayRef& b);
  // m [R x C] + v [C], v broadcast over rows
  ArrayRef add_rowvec(const ArrayRef& m, const ArrayRef& v);
  // rows of m selected by index; backward scatter-adds into m
  ArrayRef gather_rows(const ArrayRef& m, std::vector<std::size_t> idx);
  // out[i] = m[i][col[i]]
  ArrayRef select_per_row(const ArrayRef& m, std::vector<std::size_t> col);

  ArrayRef sum(const ArrayRef& x);
  ArrayRef mean(const ArrayRef& x);
  ArrayRef logsumexp(const ArrayRef& x);
  ArrayRef sum_lastdim(const ArrayRef& x);
  ArrayRef logsumexp_lastdim(const ArrayRef& x);

  // Fused operations built outside the core register their backward rule
  // here; the rule is dropped when the output does not need gradients.
  void record(const ArrayRef& out, std::function<void()> backward_rule);

  // Seeds d loss/d loss = 1, replays rules in reverse recording order, and
  // clears the tape. Leaf grads are incremented, not overwritten.
  void backward(const ArrayRef& loss);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    ArrayRef out;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;

  ArrayRef unary(const ArrayRef& x, const std::function<double(double)>& f,
                 const std::function<double(double, double)>& dfdx_from_in_out);
  static std::vector<std::size_t> reduced_shape(const ArrayRef& x);
};

}  // namespace dgd
