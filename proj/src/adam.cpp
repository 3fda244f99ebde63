#include "dgd/adam.hpp"

#include <cmath>

#include "dgd/errors.hpp"

namespace dgd {

AdamState::AdamState(std::string group_name, double lr, double beta1, double beta2, double eps,
                     double weight_decay)
    : lr(lr), beta1(beta1), beta2(beta2), eps(eps), weight_decay(weight_decay),
      name_(std::move(group_name)) {}

void AdamState::add_param(const ArrayRef& p, bool decay) {
  slots_.push_back({p, std::vector<double>(p->size(), 0.0),
                    std::vector<double>(p->size(), 0.0), decay});
}

void AdamState::add_params(const std::vector<ArrayRef>& ps, bool decay) {
  for (const auto& p : ps) add_param(p, decay);
}

std::vector<ArrayRef> AdamState::params() const {
  std::vector<ArrayRef> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.p);
  return out;
}

void AdamState::zero_grad() {
  for (auto& s : slots_) s.p->zero_grad();
}

void AdamState::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (auto& s : slots_) {
    for (double g : s.p->grad)
      if (std::isnan(g))
        throw TrainingDivergedError("NaN gradient in parameter group '" + name_ + "'");

    const std::size_t cols = s.p->cols();
    const std::size_t rows = s.p->rows();
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t off = i * cols;
      if (skip_zero_grad_rows) {
        bool all_zero = true;
        for (std::size_t j = 0; j < cols && all_zero; ++j)
          all_zero = s.p->grad[off + j] == 0.0;
        if (all_zero) continue;
      }
      // lr == 0 must leave values bitwise untouched
      const bool update_values = lr != 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t idx = off + j;
        double& x = s.p->values[idx];
        if (s.decay && weight_decay != 0.0 && update_values) x *= 1.0 - lr * weight_decay;
        const double g = s.p->grad[idx];
        s.m[idx] = beta1 * s.m[idx] + (1.0 - beta1) * g;
        s.v[idx] = beta2 * s.v[idx] + (1.0 - beta2) * g * g;
        const double mhat = s.m[idx] / bc1;
        const double vhat = s.v[idx] / bc2;
        if (update_values) x -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
}

}  // namespace dgd
