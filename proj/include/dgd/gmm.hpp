#pragma once

#include <cstddef>
#include <vector>

#include "dgd/random.hpp"
#include "dgd/tensor.hpp"

namespace dgd {

// Mollified uniform over the m-ball, used as the prior on mixture means.
// Density: exp(A - softplus(sharpness * (|mu|/scale - 1))) with A the
// log-inverse volume of the ball, so the ball interior is approximately
// uniform and the boundary falls off with the given sharpness.
struct SoftballPrior {
  std::size_t dim = 1;
  double scale = 1.0;
  double sharpness = 1.0;

  // A = log Gamma(1 + m/2) - m (log scale + log(pi)/2)
  double log_normalizer() const;

  // count rows of dim entries: scale * l * u/|u|, u ~ N(0, I), l ~ U(0,1)^(1/m)
  std::vector<double> sample(std::size_t count, Rng& rng) const;

  // log-density of one point (no tape; oracle/metrics path)
  double log_prob_row(const double* mu) const;
};

// Sum over the rows of mu of the softball log-density, differentiable in mu.
ArrayRef softball_log_prob(Tape& tape, const SoftballPrior& prior, const ArrayRef& mu);

// Diagonal-covariance Gaussian mixture over representation space. Component
// variances are learned as negative log-covariances, mixture weights as
// pre-softmax coefficients. Priors: softball on means, symmetric
// Dirichlet(alpha) on weights, N(-2 log sigma, sd^2) on each negative
// log-variance entry.
class GaussianMixture {
 public:
  GaussianMixture() = default;
  GaussianMixture(std::size_t n_components, std::size_t dim, double dirichlet_alpha,
                  SoftballPrior mean_prior, double sigma, double logvar_prior_sd = 1.0);

  // means from the softball prior, neg_log_var = -2 log sigma, coefficients 1
  void init_params(Rng& rng);

  std::size_t n_components() const { return k_; }
  std::size_t dim() const { return m_; }

  // log P(z | phi) per row of z [B x m]
  ArrayRef log_prob(Tape& tape, const ArrayRef& z) const;
  // per-row log(w_k N_k(z)) for the assigned component only
  ArrayRef supervised_log_prob(Tape& tape, const ArrayRef& z,
                               const std::vector<std::size_t>& component) const;
  // log P(phi): softball(means) + Dirichlet(weights) + Gaussian(neg log-vars)
  ArrayRef prior_log_prob(Tape& tape) const;

  // ---- frozen-parameter value paths ----
  // energy[i][k] = log w_k + log N_k(z_i)
  std::vector<double> energy_matrix(const double* z, std::size_t b) const;
  std::vector<double> log_prob_values(const double* z, std::size_t b) const;  // [B]
  // row-normalized responsibilities p(k | z_i)
  std::vector<double> posteriors(const double* z, std::size_t b) const;  // [B x K]
  std::vector<double> weights() const;  // softmax(coefficients)
  // n draws [n x m]; component < 0 draws the component per sample from w
  std::vector<double> sample(std::size_t n, Rng& rng, int component = -1) const;

  std::vector<ArrayRef> parameters() const { return {means, neg_log_var, coefficients}; }

  ArrayRef means;         // [K x m]
  ArrayRef neg_log_var;   // [K x m]
  ArrayRef coefficients;  // [K]
  double dirichlet_alpha = 1.0;
  double logvar_prior_mean = 0.0;  // -2 log sigma
  double logvar_prior_sd = 1.0;
  SoftballPrior mean_prior;

 private:
  std::size_t k_ = 0;
  std::size_t m_ = 0;
};

}  // namespace dgd
