#pragma once

#include <cstddef>

// Hot numeric loops: dense matrix products and the negative-binomial
// likelihood terms. Each kernel exists twice, a serial reference and an
// OpenMP version partitioned so the floating-point reduction order is
// independent of the worker count:
//   - matmul: each output element is one fixed-order dot product owned by
//     a single thread,
//   - column-reduced kernels (colsum, nb_*): threads own whole columns and
//     per-column partials are combined serially in column order.
// Results are therefore bitwise identical for any worker count, and the
// dispatching wrappers below are what the rest of the code calls.
// tools/bench_kernels.cpp times the two versions against each other.

namespace dgd::kernels {

// Worker cap for the OpenMP paths. Initialized from the DGD_THREADS
// environment variable; defaults to 1 (serial) when unset.
int max_workers();
void set_max_workers(int n);

// c[p x r] = a[p x q] * b[q x r]; accumulates into c when accumulate is set.
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t p, std::size_t q, std::size_t r, bool accumulate = false);
// c[p x r] = a[p x q] * b[r x q]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t p, std::size_t q, std::size_t r, bool accumulate = false);
// c[p x r] = a[q x p]^T * b[q x r]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t p, std::size_t q, std::size_t r, bool accumulate = false);

void matmul_nn_serial(const double* a, const double* b, double* c,
                      std::size_t p, std::size_t q, std::size_t r, bool accumulate = false);
void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t p, std::size_t q, std::size_t r, bool accumulate = false);
void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t p, std::size_t q, std::size_t r, bool accumulate = false);

// out[j] = sum_i m[i][j]
void colsum(const double* m, double* out, std::size_t rows, std::size_t cols,
            bool accumulate = false);
void colsum_serial(const double* m, double* out, std::size_t rows, std::size_t cols,
                   bool accumulate = false);

// Summed negative-binomial log-pmf over a batch:
//   sum_{i,g} log NB(counts[i,g] | mean = pred[i,g]*scale[i], dispersion = exp(log_r[g]))
double nb_loglik(const double* pred, const double* counts, const double* scale,
                 const double* log_r, std::size_t b, std::size_t g);
double nb_loglik_serial(const double* pred, const double* counts, const double* scale,
                        const double* log_r, std::size_t b, std::size_t g);

// Gradients of the summed log-pmf, scaled by `upstream` and accumulated into
// d_pred [b x g] and d_log_r [g].
void nb_loglik_grad(const double* pred, const double* counts, const double* scale,
                    const double* log_r, std::size_t b, std::size_t g,
                    double upstream, double* d_pred, double* d_log_r);
void nb_loglik_grad_serial(const double* pred, const double* counts, const double* scale,
                           const double* log_r, std::size_t b, std::size_t g,
                           double upstream, double* d_pred, double* d_log_r);

// digamma(x) for x > 0; the NB dispersion gradient needs it.
double digamma(double x);

}  // namespace dgd::kernels
