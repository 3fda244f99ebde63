#pragma once

#include <cstddef>
#include <vector>

#include "dgd/random.hpp"
#include "dgd/tensor.hpp"

namespace dgd {

// Summed binary cross entropy -sum[t log p + (1-t) log(1-p)].
// target entries must lie in [0,1]; pred is expected to be clamped away
// from {0,1} by the decoder output layer.
ArrayRef bce_loss(Tape& tape, const ArrayRef& pred, const std::vector<double>& target);

// Gene-wise learned NB dispersion, stored in log space.
struct NegativeBinomialHead {
  ArrayRef log_dispersion;  // [G]

  NegativeBinomialHead() = default;
  explicit NegativeBinomialHead(std::size_t n_genes, double init_log_dispersion = 0.0);
  std::size_t n_genes() const { return log_dispersion ? log_dispersion->size() : 0; }
  std::vector<ArrayRef> parameters() const { return {log_dispersion}; }
};

// log NB(x | mean mu, dispersion r), the (mu, r) parameterization:
//   lgamma(x+r) - lgamma(r) - lgamma(x+1) + r log(r/(r+mu)) + x log(mu/(r+mu))
double nb_log_pmf(double x, double mu, double r);

// Negative summed NB log-likelihood over a [B x G] batch with per-sample
// scaling: mean[i][g] = pred[i][g] * scale[i]. Differentiable in pred and in
// head.log_dispersion. DataError when a scale entry is <= 0.
ArrayRef nb_loss(Tape& tape, const ArrayRef& pred, const std::vector<double>& counts,
                 const std::vector<double>& scale, const NegativeBinomialHead& head);

struct PointMetrics {
  std::vector<double> nll_per_cell;   // [B]
  std::vector<double> rmse_per_cell;  // [B]
  double rmse = 0.0;                  // sqrt of the cell-averaged MSE
};

// Held-out reconstruction metrics for count data. RMSE is computed in
// normalized (per-max-scaled) space by default; raw_space compares
// pred*scale against the raw counts instead.
PointMetrics nb_point_metrics(const std::vector<double>& pred, const std::vector<double>& counts,
                              const std::vector<double>& scale, const NegativeBinomialHead& head,
                              std::size_t b, std::size_t g, bool raw_space = false);

// Binary-profile analog: per-cell summed BCE as the NLL.
PointMetrics bce_point_metrics(const std::vector<double>& pred, const std::vector<double>& target,
                               std::size_t b, std::size_t g);

}  // namespace dgd
