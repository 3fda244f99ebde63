#include "dgd/likelihoods.hpp"

#include <algorithm>
#include <cmath>

#include "dgd/errors.hpp"
#include "dgd/kernels.hpp"

namespace dgd {

namespace {
constexpr double kFloor = 1e-10;
}

ArrayRef bce_loss(Tape& tape, const ArrayRef& pred, const std::vector<double>& target) {
  if (target.size() != pred->size())
    throw DimensionError("bce_loss: " + std::to_string(target.size()) + " targets for pred " +
                         shape_str(pred->shape()));
  for (double t : target)
    if (!(t >= 0.0 && t <= 1.0))
      throw ContractError("bce_loss: target " + std::to_string(t) + " outside [0, 1]");
  double total = 0.0;
  for (std::size_t i = 0; i < pred->size(); ++i) {
    const double p = pred->values[i];
    total -= target[i] * std::log(std::max(p, kFloor)) +
             (1.0 - target[i]) * std::log(std::max(1.0 - p, kFloor));
  }
  auto out = DiffArray::from({1}, {total}, pred->requires_grad);
  auto target_ptr = std::make_shared<std::vector<double>>(target);
  tape.record(out, [pred, out, target_ptr]() {
    if (!pred->requires_grad) return;
    const double g = out->grad[0];
    for (std::size_t i = 0; i < pred->size(); ++i) {
      const double p = pred->values[i];
      const double t = (*target_ptr)[i];
      pred->grad[i] += g * (-t / std::max(p, kFloor) + (1.0 - t) / std::max(1.0 - p, kFloor));
    }
  });
  return out;
}

NegativeBinomialHead::NegativeBinomialHead(std::size_t n_genes, double init_log_dispersion) {
  log_dispersion = DiffArray::full({n_genes}, init_log_dispersion, true);
}

double nb_log_pmf(double x, double mu, double r) {
  mu = std::max(mu, kFloor);
  const double log_r_mu = std::log(r + mu);
  return std::lgamma(x + r) - std::lgamma(r) - std::lgamma(x + 1.0) +
         r * (std::log(r) - log_r_mu) + x * (std::log(mu) - log_r_mu);
}

ArrayRef nb_loss(Tape& tape, const ArrayRef& pred, const std::vector<double>& counts,
                 const std::vector<double>& scale, const NegativeBinomialHead& head) {
  const std::size_t b = pred->rows(), g = pred->cols();
  if (counts.size() != b * g)
    throw DimensionError("nb_loss: " + std::to_string(counts.size()) + " counts for pred " +
                         shape_str(pred->shape()));
  if (scale.size() != b)
    throw DimensionError("nb_loss: " + std::to_string(scale.size()) + " scales for batch of " +
                         std::to_string(b));
  if (head.n_genes() != g)
    throw DimensionError("nb_loss: dispersion has " + std::to_string(head.n_genes()) +
                         " genes, pred has " + std::to_string(g));
  for (std::size_t i = 0; i < b; ++i)
    if (scale[i] <= 0.0)
      throw DataError("nb_loss: sample " + std::to_string(i) + " has scale " +
                      std::to_string(scale[i]) + " (no counts)");

  auto log_r = head.log_dispersion;
  const double loglik = kernels::nb_loglik(pred->values.data(), counts.data(), scale.data(),
                                           log_r->values.data(), b, g);
  auto out = DiffArray::from({1}, {-loglik}, pred->requires_grad || log_r->requires_grad);
  auto counts_ptr = std::make_shared<std::vector<double>>(counts);
  auto scale_ptr = std::make_shared<std::vector<double>>(scale);
  tape.record(out, [pred, log_r, out, counts_ptr, scale_ptr, b, g]() {
    // loss is the negated log-likelihood
    const double upstream = -out->grad[0];
    std::vector<double> d_pred(b * g, 0.0);
    std::vector<double> d_log_r(g, 0.0);
    kernels::nb_loglik_grad(pred->values.data(), counts_ptr->data(), scale_ptr->data(),
                            log_r->values.data(), b, g, upstream, d_pred.data(),
                            d_log_r.data());
    if (pred->requires_grad)
      for (std::size_t i = 0; i < b * g; ++i) pred->grad[i] += d_pred[i];
    if (log_r->requires_grad)
      for (std::size_t j = 0; j < g; ++j) log_r->grad[j] += d_log_r[j];
  });
  return out;
}

PointMetrics nb_point_metrics(const std::vector<double>& pred, const std::vector<double>& counts,
                              const std::vector<double>& scale, const NegativeBinomialHead& head,
                              std::size_t b, std::size_t g, bool raw_space) {
  PointMetrics out;
  out.nll_per_cell.resize(b);
  out.rmse_per_cell.resize(b);
  double mse_total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (scale[i] <= 0.0)
      throw DataError("nb_point_metrics: sample " + std::to_string(i) + " has no counts");
    double nll = 0.0, se = 0.0;
    for (std::size_t j = 0; j < g; ++j) {
      const double p = pred[i * g + j];
      const double x = counts[i * g + j];
      const double r = std::exp(head.log_dispersion->values[j]);
      nll -= nb_log_pmf(x, p * scale[i], r);
      const double err = raw_space ? p * scale[i] - x : p - x / scale[i];
      se += err * err;
    }
    out.nll_per_cell[i] = nll;
    const double mse = se / static_cast<double>(g);
    out.rmse_per_cell[i] = std::sqrt(mse);
    mse_total += mse;
  }
  out.rmse = std::sqrt(mse_total / static_cast<double>(b));
  return out;
}

PointMetrics bce_point_metrics(const std::vector<double>& pred, const std::vector<double>& target,
                               std::size_t b, std::size_t g) {
  PointMetrics out;
  out.nll_per_cell.resize(b);
  out.rmse_per_cell.resize(b);
  double mse_total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double nll = 0.0, se = 0.0;
    for (std::size_t j = 0; j < g; ++j) {
      const double p = pred[i * g + j];
      const double t = target[i * g + j];
      nll -= t * std::log(std::max(p, kFloor)) + (1.0 - t) * std::log(std::max(1.0 - p, kFloor));
      const double err = p - t;
      se += err * err;
    }
    out.nll_per_cell[i] = nll;
    const double mse = se / static_cast<double>(g);
    out.rmse_per_cell[i] = std::sqrt(mse);
    mse_total += mse;
  }
  out.rmse = std::sqrt(mse_total / static_cast<double>(b));
  return out;
}

}  // namespace dgd
