#include <algorithm>
#include <chrono>

#include "dgd/model.hpp"
#include "dgd/train.hpp"

namespace dgd {

EvalReport evaluate(const ModelBundle& bundle, const Dataset& data,
                    const std::vector<std::size_t>& indices, const double* z_rows,
                    const std::string& model_name, const std::string& split_name) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = indices.size();
  const std::size_t m = bundle.gmm.dim();
  const std::size_t f = data.features();
  const bool raw_space = bundle.rmse_space == "raw";

  EvalReport report;
  report.model = model_name;
  report.split = split_name;

  std::vector<double> nll, rmse;
  nll.reserve(n);
  rmse.reserve(n);
  const std::size_t chunk = 256;
  std::vector<double> target;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t stop = std::min(start + chunk, n);
    const std::vector<std::size_t> idx(indices.begin() + start, indices.begin() + stop);
    const std::size_t b = idx.size();
    const auto pred = bundle.net.forward_values(z_rows + start * m, b);
    target.assign(b * f, 0.0);
    data.fill_batch(idx, target.data());
    PointMetrics pm;
    if (data.profile == Profile::kCounts) {
      pm = nb_point_metrics(pred, target, data.batch_scales(idx), bundle.head, b, f, raw_space);
    } else {
      pm = bce_point_metrics(pred, target, b, f);
    }
    nll.insert(nll.end(), pm.nll_per_cell.begin(), pm.nll_per_cell.end());
    rmse.insert(rmse.end(), pm.rmse_per_cell.begin(), pm.rmse_per_cell.end());
  }
  report.nll_mean = mean_of(nll);
  report.nll_sem = sem_of(nll);
  report.rmse_mean = mean_of(rmse);
  report.rmse_sem = sem_of(rmse);

  if (data.has_labels() && n >= 2) {
    const auto clusters = hard_cluster(bundle.gmm, z_rows, n);
    std::vector<int> truth(n), pred_ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = data.labels[indices[i]];
      pred_ids[i] = static_cast<int>(clusters[i]);
    }
    report.ari = adjusted_rand_index(truth, pred_ids);
    report.has_ari = true;
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace dgd
