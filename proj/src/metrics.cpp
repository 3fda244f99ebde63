#include "dgd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dgd/errors.hpp"

namespace dgd {

ContingencyTable ContingencyTable::build(const std::vector<int>& a, const std::vector<int>& b) {
  ContingencyTable t;
  int max_a = -1, max_b = -1;
  for (int v : a) max_a = std::max(max_a, v);
  for (int v : b) max_b = std::max(max_b, v);
  t.n_classes = static_cast<std::size_t>(max_a + 1);
  t.n_clusters = static_cast<std::size_t>(max_b + 1);
  t.counts.assign(t.n_classes * t.n_clusters, 0);
  t.row_sums.assign(t.n_classes, 0);
  t.col_sums.assign(t.n_clusters, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) throw ContractError("contingency table: negative label id");
    ++t.counts[static_cast<std::size_t>(a[i]) * t.n_clusters + static_cast<std::size_t>(b[i])];
    ++t.row_sums[a[i]];
    ++t.col_sums[b[i]];
    ++t.total;
  }
  return t;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw ContractError("adjusted_rand_index: length mismatch " + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()));
  if (a.size() < 2) throw ContractError("adjusted_rand_index: need at least two samples");

  // (Index - Expected)/(Max - Expected) rearranged into one ratio of exact
  // integer sums (n(n-1) in place of C(n,2)), so small cases come out
  // exactly rounded: ARI = (2 T I - 2 A B) / (T (A + B) - 2 A B).
  const auto t = ContingencyTable::build(a, b);
  long double index = 0.0L, sum_a = 0.0L, sum_b = 0.0L;
  for (long long n : t.counts) index += static_cast<long double>(n) * (n - 1);
  for (long long n : t.row_sums) sum_a += static_cast<long double>(n) * (n - 1);
  for (long long n : t.col_sums) sum_b += static_cast<long double>(n) * (n - 1);
  const long double total = static_cast<long double>(t.total) * (t.total - 1);
  const long double num = 2.0L * total * index - 2.0L * sum_a * sum_b;
  const long double den = total * (sum_a + sum_b) - 2.0L * sum_a * sum_b;
  if (den == 0.0L) return 1.0;  // both partitions degenerate with identical pair structure
  return static_cast<double>(num / den);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sem_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return sd / std::sqrt(static_cast<double>(v.size()));
}

void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path,
                      bool include_timing) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file: " + path);
  out << "model,split,ARI,NLL_mean,NLL_sem,RMSE_mean,RMSE_sem,seconds\n";
  char buf[512];
  for (const auto& r : reports) {
    char ari[64];
    if (r.has_ari)
      std::snprintf(ari, sizeof ari, "%.17g", r.ari);
    else
      std::snprintf(ari, sizeof ari, "n/a");
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.model.c_str(),
                  r.split.c_str(), ari, r.nll_mean, r.nll_sem, r.rmse_mean, r.rmse_sem,
                  include_timing ? r.seconds : 0.0);
    out << buf;
  }
}

std::string report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-18s %-6s %-8s %-14s %-14s %-10s\n", "model", "split", "ARI",
                "NLL (per cell)", "RMSE", "seconds");
  os << buf;
  for (const auto& r : reports) {
    char ari[32];
    if (r.has_ari)
      std::snprintf(ari, sizeof ari, "%.4f", r.ari);
    else
      std::snprintf(ari, sizeof ari, "n/a");
    char nll[64], rmse[64];
    std::snprintf(nll, sizeof nll, "%.2f±%.2f", r.nll_mean, r.nll_sem);
    std::snprintf(rmse, sizeof rmse, "%.4f±%.4f", r.rmse_mean, r.rmse_sem);
    std::snprintf(buf, sizeof buf, "%-18s %-6s %-8s %-14s %-14s %-10.2f\n", r.model.c_str(),
                  r.split.c_str(), ari, nll, rmse, r.seconds);
    os << buf;
  }
  return os.str();
}

}  // namespace dgd
