#include "dgd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dgd::kernels {

namespace {

int initial_workers() {
  const char* env = std::getenv("DGD_THREADS");
  if (env != nullptr) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

int& worker_setting() {
  static int workers = initial_workers();
  return workers;
}

// Work thresholds below which the serial path is used unconditionally.
constexpr std::size_t kMatmulParallelMin = 1u << 15;
constexpr std::size_t kNbParallelMin = 1u << 12;

bool use_parallel(std::size_t work, std::size_t threshold) {
#ifdef _OPENMP
  return worker_setting() > 1 && work >= threshold;
#else
  (void)work;
  (void)threshold;
  return false;
#endif
}

}  // namespace

int max_workers() { return worker_setting(); }

void set_max_workers(int n) { worker_setting() = std::max(1, n); }

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

namespace {

// One row of the output: c[i] (+)= a_row * b, inner k ascending.
inline void nn_row(const double* a_row, const double* b, double* c_row,
                   std::size_t q, std::size_t r, bool accumulate) {
  if (!accumulate) std::fill(c_row, c_row + r, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    const double aik = a_row[k];
    const double* bk = b + k * r;
    for (std::size_t j = 0; j < r; ++j) c_row[j] += aik * bk[j];
  }
}

inline void nt_row(const double* a_row, const double* b, double* c_row,
                   std::size_t q, std::size_t r, bool accumulate) {
  for (std::size_t j = 0; j < r; ++j) {
    const double* bj = b + j * q;
    double acc = 0.0;
    for (std::size_t k = 0; k < q; ++k) acc += a_row[k] * bj[k];
    c_row[j] = accumulate ? c_row[j] + acc : acc;
  }
}

// c[i] (+)= sum_k a[k][i] * b[k]; i indexes rows of the p x r output.
inline void tn_row(const double* a, const double* b, double* c_row, std::size_t i,
                   std::size_t p, std::size_t q, std::size_t r, bool accumulate) {
  if (!accumulate) std::fill(c_row, c_row + r, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    const double aki = a[k * p + i];
    const double* bk = b + k * r;
    for (std::size_t j = 0; j < r; ++j) c_row[j] += aki * bk[j];
  }
}

}  // namespace

void matmul_nn_serial(const double* a, const double* b, double* c,
                      std::size_t p, std::size_t q, std::size_t r, bool accumulate) {
  for (std::size_t i = 0; i < p; ++i) nn_row(a + i * q, b, c + i * r, q, r, accumulate);
}

void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t p, std::size_t q, std::size_t r, bool accumulate) {
  for (std::size_t i = 0; i < p; ++i) nt_row(a + i * q, b, c + i * r, q, r, accumulate);
}

void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t p, std::size_t q, std::size_t r, bool accumulate) {
  for (std::size_t i = 0; i < p; ++i) tn_row(a, b, c + i * r, i, p, q, r, accumulate);
}

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t p, std::size_t q, std::size_t r, bool accumulate) {
  if (!use_parallel(p * q * r, kMatmulParallelMin)) {
    matmul_nn_serial(a, b, c, p, q, r, accumulate);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for num_threads(worker_setting()) schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p); ++i)
    nn_row(a + i * q, b, c + i * r, q, r, accumulate);
#endif
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t p, std::size_t q, std::size_t r, bool accumulate) {
  if (!use_parallel(p * q * r, kMatmulParallelMin)) {
    matmul_nt_serial(a, b, c, p, q, r, accumulate);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for num_threads(worker_setting()) schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p); ++i)
    nt_row(a + i * q, b, c + i * r, q, r, accumulate);
#endif
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t p, std::size_t q, std::size_t r, bool accumulate) {
  if (!use_parallel(p * q * r, kMatmulParallelMin)) {
    matmul_tn_serial(a, b, c, p, q, r, accumulate);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for num_threads(worker_setting()) schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p); ++i)
    tn_row(a, b, c + i * r, i, p, q, r, accumulate);
#endif
}

// ---------------------------------------------------------------------------
// column sums
// ---------------------------------------------------------------------------

namespace {

inline void colsum_one(const double* m, double* out, std::size_t rows, std::size_t cols,
                       std::size_t j, bool accumulate) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rows; ++i) acc += m[i * cols + j];
  out[j] = accumulate ? out[j] + acc : acc;
}

}  // namespace

void colsum_serial(const double* m, double* out, std::size_t rows, std::size_t cols,
                   bool accumulate) {
  for (std::size_t j = 0; j < cols; ++j) colsum_one(m, out, rows, cols, j, accumulate);
}

void colsum(const double* m, double* out, std::size_t rows, std::size_t cols, bool accumulate) {
  if (!use_parallel(rows * cols, kNbParallelMin)) {
    colsum_serial(m, out, rows, cols, accumulate);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for num_threads(worker_setting()) schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(cols); ++j)
    colsum_one(m, out, rows, cols, static_cast<std::size_t>(j), accumulate);
#endif
}

// ---------------------------------------------------------------------------
// negative binomial terms
// ---------------------------------------------------------------------------

double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return result;
}

namespace {

constexpr double kMeanFloor = 1e-10;  // clamp on means before log/division

// Per-column (gene) slice of the summed log-pmf; one fixed-order pass over
// the batch so the column partial is bitwise stable.
inline double nb_col_loglik(const double* pred, const double* counts, const double* scale,
                            double log_r, std::size_t b, std::size_t g, std::size_t col) {
  const double r = std::exp(log_r);
  const double lgamma_r = std::lgamma(r);
  const double log_rr = r * std::log(r);
  double acc = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double x = counts[i * g + col];
    const double mu = std::max(pred[i * g + col] * scale[i], kMeanFloor);
    const double log_r_mu = std::log(r + mu);
    acc += std::lgamma(x + r) - lgamma_r - std::lgamma(x + 1.0) + log_rr - r * log_r_mu +
           x * (std::log(mu) - log_r_mu);
  }
  return acc;
}

inline void nb_col_grad(const double* pred, const double* counts, const double* scale,
                        double log_r, std::size_t b, std::size_t g, std::size_t col,
                        double upstream, double* d_pred, double* d_log_r) {
  const double r = std::exp(log_r);
  const double psi_r = digamma(r);
  const double log_r_val = std::log(r);
  double acc_r = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double x = counts[i * g + col];
    const double mu = std::max(pred[i * g + col] * scale[i], kMeanFloor);
    const double denom = r + mu;
    // d/d mu of the log-pmf, chained with mu = pred * scale
    d_pred[i * g + col] += upstream * scale[i] * (x / mu - (x + r) / denom);
    // d/d r, chained with r = exp(log_r) at the end
    acc_r += digamma(x + r) - psi_r + log_r_val + 1.0 - std::log(denom) - (r + x) / denom;
  }
  d_log_r[col] += upstream * r * acc_r;
}

}  // namespace

double nb_loglik_serial(const double* pred, const double* counts, const double* scale,
                        const double* log_r, std::size_t b, std::size_t g) {
  double total = 0.0;
  for (std::size_t col = 0; col < g; ++col)
    total += nb_col_loglik(pred, counts, scale, log_r[col], b, g, col);
  return total;
}

double nb_loglik(const double* pred, const double* counts, const double* scale,
                 const double* log_r, std::size_t b, std::size_t g) {
  if (!use_parallel(b * g, kNbParallelMin))
    return nb_loglik_serial(pred, counts, scale, log_r, b, g);
#ifdef _OPENMP
  std::vector<double> col_partial(g);
#pragma omp parallel for num_threads(worker_setting()) schedule(static)
  for (std::ptrdiff_t col = 0; col < static_cast<std::ptrdiff_t>(g); ++col)
    col_partial[col] = nb_col_loglik(pred, counts, scale, log_r[col], b, g, col);
  double total = 0.0;
  for (std::size_t col = 0; col < g; ++col) total += col_partial[col];
  return total;
#else
  return 0.0;  // unreachable
#endif
}

void nb_loglik_grad_serial(const double* pred, const double* counts, const double* scale,
                           const double* log_r, std::size_t b, std::size_t g,
                           double upstream, double* d_pred, double* d_log_r) {
  for (std::size_t col = 0; col < g; ++col)
    nb_col_grad(pred, counts, scale, log_r[col], b, g, col, upstream, d_pred, d_log_r);
}

void nb_loglik_grad(const double* pred, const double* counts, const double* scale,
                    const double* log_r, std::size_t b, std::size_t g,
                    double upstream, double* d_pred, double* d_log_r) {
  if (!use_parallel(b * g, kNbParallelMin)) {
    nb_loglik_grad_serial(pred, counts, scale, log_r, b, g, upstream, d_pred, d_log_r);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for num_threads(worker_setting()) schedule(static)
  for (std::ptrdiff_t col = 0; col < static_cast<std::ptrdiff_t>(g); ++col)
    nb_col_grad(pred, counts, scale, log_r[col], b, g, static_cast<std::size_t>(col),
                upstream, d_pred, d_log_r);
#endif
}

}  // namespace dgd::kernels
