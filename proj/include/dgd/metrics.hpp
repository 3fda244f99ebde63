#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dgd {

// Label-class x cluster cross tabulation behind the ARI closed form.
struct ContingencyTable {
  std::size_t n_classes = 0;
  std::size_t n_clusters = 0;
  std::vector<long long> counts;    // [n_classes x n_clusters]
  std::vector<long long> row_sums;  // a_i
  std::vector<long long> col_sums;  // b_j
  long long total = 0;

  static ContingencyTable build(const std::vector<int>& a, const std::vector<int>& b);
};

// Hubert-Arabie adjusted Rand index, (Index - Expected) / (Max - Expected)
// over pair counts; 1 for identical partitions (any relabeling), about 0 for
// independent ones, possibly slightly negative. ContractError on length
// mismatch or fewer than two samples.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct EvalReport {
  std::string model;
  std::string split;
  bool has_ari = false;
  double ari = 0.0;
  double nll_mean = 0.0;
  double nll_sem = 0.0;
  double rmse_mean = 0.0;
  double rmse_sem = 0.0;
  double seconds = 0.0;
};

// model,split,ARI,NLL_mean,NLL_sem,RMSE_mean,RMSE_sem,seconds; ARI column is
// "n/a" without labels, seconds is 0 unless include_timing.
void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path,
                      bool include_timing);

std::string report_table(const std::vector<EvalReport>& reports);

double mean_of(const std::vector<double>& v);
// sd/sqrt(n) with the n-1 sample variance; 0 when n < 2
double sem_of(const std::vector<double>& v);

}  // namespace dgd
