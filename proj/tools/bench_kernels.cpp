// Times the OpenMP kernels against their serial references and checks the
// results are bitwise identical. Worker count comes from DGD_THREADS or the
// first argument.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "dgd/kernels.hpp"
#include "dgd/random.hpp"

namespace k = dgd::kernels;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int workers = k::max_workers();
  if (argc > 1) workers = std::max(1, std::atoi(argv[1]));

  dgd::Rng rng(12345);
  std::printf("kernel benchmark: serial reference vs %d workers\n\n", workers);
  std::printf("%-28s %10s %10s %8s  %s\n", "kernel", "serial(ms)", "omp(ms)", "speedup",
              "bitwise");

  // matmul: decoder-sized batches
  {
    const std::size_t p = 256, q = 100, r = 2000;
    std::vector<double> a(p * q), b(q * r), cs(p * r), cp(p * r);
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    const double ts = time_best_of(5, [&] {
      k::matmul_nn_serial(a.data(), b.data(), cs.data(), p, q, r);
    });
    k::set_max_workers(workers);
    const double tp = time_best_of(5, [&] {
      k::matmul_nn(a.data(), b.data(), cp.data(), p, q, r);
    });
    k::set_max_workers(1);
    std::printf("%-28s %10.2f %10.2f %8.2fx  %s\n", "matmul_nn 256x100x2000", ts * 1e3, tp * 1e3,
                ts / tp, cs == cp ? "yes" : "NO");
  }

  // negative binomial log-likelihood and gradients
  {
    const std::size_t b = 128, g = 4000;
    std::vector<double> pred(b * g), counts(b * g), scale(b, 25.0), log_r(g, 0.3);
    for (double& v : pred) v = rng.uniform(0.05, 0.95);
    for (double& v : counts) v = static_cast<double>(rng.index(30));
    double ls = 0.0, lp = 0.0;
    const double ts = time_best_of(5, [&] {
      ls = k::nb_loglik_serial(pred.data(), counts.data(), scale.data(), log_r.data(), b, g);
    });
    k::set_max_workers(workers);
    const double tp = time_best_of(5, [&] {
      lp = k::nb_loglik(pred.data(), counts.data(), scale.data(), log_r.data(), b, g);
    });
    k::set_max_workers(1);
    std::printf("%-28s %10.2f %10.2f %8.2fx  %s\n", "nb_loglik 128x4000", ts * 1e3, tp * 1e3,
                ts / tp, ls == lp ? "yes" : "NO");

    std::vector<double> dps(b * g, 0.0), drs(g, 0.0), dpp(b * g, 0.0), drp(g, 0.0);
    const double tgs = time_best_of(5, [&] {
      k::nb_loglik_grad_serial(pred.data(), counts.data(), scale.data(), log_r.data(), b, g,
                               1.0, dps.data(), drs.data());
    });
    k::set_max_workers(workers);
    const double tgp = time_best_of(5, [&] {
      k::nb_loglik_grad(pred.data(), counts.data(), scale.data(), log_r.data(), b, g, 1.0,
                        dpp.data(), drp.data());
    });
    k::set_max_workers(1);
    // both accumulated the same number of repetitions into their buffers
    std::printf("%-28s %10.2f %10.2f %8.2fx  %s\n", "nb_loglik_grad 128x4000", tgs * 1e3,
                tgp * 1e3, tgs / tgp, (dps == dpp && drs == drp) ? "yes" : "NO");
  }

  // column sums (bias gradients)
  {
    const std::size_t rows = 512, cols = 4000;
    std::vector<double> m(rows * cols), outs(cols, 0.0), outp(cols, 0.0);
    for (double& v : m) v = rng.normal();
    const double ts = time_best_of(5, [&] {
      k::colsum_serial(m.data(), outs.data(), rows, cols);
    });
    k::set_max_workers(workers);
    const double tp = time_best_of(5, [&] {
      k::colsum(m.data(), outp.data(), rows, cols);
    });
    k::set_max_workers(1);
    std::printf("%-28s %10.2f %10.2f %8.2fx  %s\n", "colsum 512x4000", ts * 1e3, tp * 1e3,
                ts / tp, outs == outp ? "yes" : "NO");
  }

  return 0;
}
