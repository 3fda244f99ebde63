#include "dgd/gmm.hpp"

#include <algorithm>
#include <cmath>

#include "dgd/errors.hpp"

namespace dgd {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2

double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log N(z_i | mu_k, diag(exp(-nlv_k))) for every (row, component) pair.
// Forward values and the three-way backward share the same loop structure.
ArrayRef gaussian_loglik_matrix(Tape& tape, const ArrayRef& z, const ArrayRef& means,
                                const ArrayRef& nlv) {
  const std::size_t b = z->rows(), m = z->cols(), k = means->rows();
  auto out = DiffArray::make({b, k},
                             z->requires_grad || means->requires_grad || nlv->requires_grad);
  for (std::size_t i = 0; i < b; ++i) {
    const double* zi = z->values.data() + i * m;
    for (std::size_t c = 0; c < k; ++c) {
      const double* mu = means->values.data() + c * m;
      const double* nv = nlv->values.data() + c * m;
      double acc = 0.0;
      for (std::size_t d = 0; d < m; ++d) {
        const double diff = zi[d] - mu[d];
        acc += -kHalfLog2Pi + 0.5 * nv[d] - 0.5 * diff * diff * std::exp(nv[d]);
      }
      out->values[i * k + c] = acc;
    }
  }
  tape.record(out, [z, means, nlv, out, b, m, k]() {
    for (std::size_t i = 0; i < b; ++i) {
      const double* zi = z->values.data() + i * m;
      const double* gi = out->grad.data() + i * k;
      for (std::size_t c = 0; c < k; ++c) {
        const double g = gi[c];
        if (g == 0.0) continue;
        const double* mu = means->values.data() + c * m;
        const double* nv = nlv->values.data() + c * m;
        for (std::size_t d = 0; d < m; ++d) {
          const double diff = zi[d] - mu[d];
          const double prec = std::exp(nv[d]);
          if (z->requires_grad) z->grad[i * m + d] += g * (-diff * prec);
          if (means->requires_grad) means->grad[c * m + d] += g * (diff * prec);
          if (nlv->requires_grad)
            nlv->grad[c * m + d] += g * (0.5 - 0.5 * diff * diff * prec);
        }
      }
    }
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// softball prior
// ---------------------------------------------------------------------------

double SoftballPrior::log_normalizer() const {
  return std::lgamma(1.0 + 0.5 * static_cast<double>(dim)) -
         static_cast<double>(dim) * (std::log(std::max(scale, 1e-10)) + 0.5 * std::log(M_PI));
}

std::vector<double> SoftballPrior::sample(std::size_t count, Rng& rng) const {
  std::vector<double> out(count * dim);
  std::vector<double> u(dim);
  for (std::size_t i = 0; i < count; ++i) {
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      u[d] = rng.normal();
      norm_sq += u[d] * u[d];
    }
    const double norm = std::max(std::sqrt(norm_sq), 1e-300);
    const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    for (std::size_t d = 0; d < dim; ++d) out[i * dim + d] = scale * radius * u[d] / norm;
  }
  return out;
}

double SoftballPrior::log_prob_row(const double* mu) const {
  double norm_sq = 0.0;
  for (std::size_t d = 0; d < dim; ++d) norm_sq += mu[d] * mu[d];
  const double t = sharpness * (std::sqrt(norm_sq) / std::max(scale, 1e-10) - 1.0);
  return log_normalizer() - softplus(t);
}

ArrayRef softball_log_prob(Tape& tape, const SoftballPrior& prior, const ArrayRef& mu) {
  const std::size_t k = mu->rows(), m = mu->cols();
  if (m != prior.dim)
    throw DimensionError("softball_log_prob: mu " + shape_str(mu->shape()) +
                         " does not match prior dim " + std::to_string(prior.dim));
  const double a = prior.log_normalizer();
  const double inv_scale = 1.0 / std::max(prior.scale, 1e-10);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
      const double v = mu->values[c * m + d];
      norm_sq += v * v;
    }
    total += a - softplus(prior.sharpness * (std::sqrt(norm_sq) * inv_scale - 1.0));
  }
  auto out = DiffArray::from({1}, {total}, mu->requires_grad);
  const double sharpness = prior.sharpness;
  tape.record(out, [mu, out, k, m, sharpness, inv_scale]() {
    const double g = out->grad[0];
    for (std::size_t c = 0; c < k; ++c) {
      double norm_sq = 0.0;
      for (std::size_t d = 0; d < m; ++d) {
        const double v = mu->values[c * m + d];
        norm_sq += v * v;
      }
      const double norm = std::sqrt(norm_sq);
      if (norm < 1e-12) continue;  // radially symmetric: zero gradient at the center
      const double t = sharpness * (norm * inv_scale - 1.0);
      const double coef = -stable_sigmoid(t) * sharpness * inv_scale / norm;
      for (std::size_t d = 0; d < m; ++d)
        mu->grad[c * m + d] += g * coef * mu->values[c * m + d];
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// GaussianMixture
// ---------------------------------------------------------------------------

GaussianMixture::GaussianMixture(std::size_t n_components, std::size_t dim,
                                 double dirichlet_alpha, SoftballPrior mean_prior_in,
                                 double sigma, double logvar_prior_sd_in)
    : dirichlet_alpha(dirichlet_alpha),
      logvar_prior_mean(-2.0 * std::log(sigma)),
      logvar_prior_sd(logvar_prior_sd_in),
      mean_prior(mean_prior_in),
      k_(n_components),
      m_(dim) {
  if (n_components < 1 || dim < 1)
    throw ContractError("GaussianMixture: need K >= 1 and m >= 1");
  mean_prior.dim = dim;
  means = DiffArray::make({k_, m_}, true);
  neg_log_var = DiffArray::full({k_, m_}, logvar_prior_mean, true);
  coefficients = DiffArray::full({k_}, 1.0, true);
}

void GaussianMixture::init_params(Rng& rng) {
  means->values = mean_prior.sample(k_, rng);
  std::fill(neg_log_var->values.begin(), neg_log_var->values.end(), logvar_prior_mean);
  std::fill(coefficients->values.begin(), coefficients->values.end(), 1.0);
}

ArrayRef GaussianMixture::log_prob(Tape& tape, const ArrayRef& z) const {
  if (z->cols() != m_)
    throw DimensionError("gmm log_prob: z " + shape_str(z->shape()) + " does not have " +
                         std::to_string(m_) + " columns");
  auto log_w = tape.log_softmax(coefficients);
  auto comp = gaussian_loglik_matrix(tape, z, means, neg_log_var);
  return tape.logsumexp_lastdim(tape.add_rowvec(comp, log_w));
}

ArrayRef GaussianMixture::supervised_log_prob(Tape& tape, const ArrayRef& z,
                                              const std::vector<std::size_t>& component) const {
  if (z->cols() != m_)
    throw DimensionError("gmm supervised_log_prob: z " + shape_str(z->shape()) +
                         " does not have " + std::to_string(m_) + " columns");
  for (std::size_t c : component)
    if (c >= k_)
      throw IndexError("supervised_log_prob: component " + std::to_string(c) +
                       " out of range [0, " + std::to_string(k_) + ")");
  auto log_w = tape.log_softmax(coefficients);
  auto comp = gaussian_loglik_matrix(tape, z, means, neg_log_var);
  return tape.select_per_row(tape.add_rowvec(comp, log_w), component);
}

ArrayRef GaussianMixture::prior_log_prob(Tape& tape) const {
  auto total = softball_log_prob(tape, mean_prior, means);

  // symmetric Dirichlet on w = softmax(c), log-normalizer included
  const double kd = static_cast<double>(k_);
  const double dir_const = std::lgamma(kd * dirichlet_alpha) - kd * std::lgamma(dirichlet_alpha);
  auto log_w_sum = tape.sum(tape.log_softmax(coefficients));
  total = tape.add(total, tape.add_scalar(tape.scale(log_w_sum, dirichlet_alpha - 1.0),
                                          dir_const));

  // independent Gaussians on every negative log-variance entry
  auto centered = tape.scale(tape.add_scalar(neg_log_var, -logvar_prior_mean),
                             1.0 / logvar_prior_sd);
  auto quad = tape.scale(tape.sum(tape.mul(centered, centered)), -0.5);
  const double lv_const = static_cast<double>(k_ * m_) *
                          (-kHalfLog2Pi - std::log(logvar_prior_sd));
  return tape.add(total, tape.add_scalar(quad, lv_const));
}

std::vector<double> GaussianMixture::weights() const {
  std::vector<double> w(k_);
  double m = coefficients->values[0];
  for (double c : coefficients->values) m = std::max(m, c);
  double total = 0.0;
  for (std::size_t c = 0; c < k_; ++c) {
    w[c] = std::exp(coefficients->values[c] - m);
    total += w[c];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> GaussianMixture::energy_matrix(const double* z, std::size_t b) const {
  // log weights via the same stable form as the tape path
  std::vector<double> log_w(k_);
  double cmax = coefficients->values[0];
  for (double c : coefficients->values) cmax = std::max(cmax, c);
  double total = 0.0;
  for (std::size_t c = 0; c < k_; ++c) total += std::exp(coefficients->values[c] - cmax);
  const double lse = cmax + std::log(total);
  for (std::size_t c = 0; c < k_; ++c) log_w[c] = coefficients->values[c] - lse;

  std::vector<double> energy(b * k_);
  for (std::size_t i = 0; i < b; ++i) {
    const double* zi = z + i * m_;
    for (std::size_t c = 0; c < k_; ++c) {
      const double* mu = means->values.data() + c * m_;
      const double* nv = neg_log_var->values.data() + c * m_;
      double acc = log_w[c];
      for (std::size_t d = 0; d < m_; ++d) {
        const double diff = zi[d] - mu[d];
        acc += -kHalfLog2Pi + 0.5 * nv[d] - 0.5 * diff * diff * std::exp(nv[d]);
      }
      energy[i * k_ + c] = acc;
    }
  }
  return energy;
}

std::vector<double> GaussianMixture::log_prob_values(const double* z, std::size_t b) const {
  auto energy = energy_matrix(z, b);
  std::vector<double> out(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double* ei = energy.data() + i * k_;
    double m = ei[0];
    for (std::size_t c = 1; c < k_; ++c) m = std::max(m, ei[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < k_; ++c) total += std::exp(ei[c] - m);
    out[i] = m + std::log(total);
  }
  return out;
}

std::vector<double> GaussianMixture::posteriors(const double* z, std::size_t b) const {
  auto energy = energy_matrix(z, b);
  for (std::size_t i = 0; i < b; ++i) {
    double* ei = energy.data() + i * k_;
    double m = ei[0];
    for (std::size_t c = 1; c < k_; ++c) m = std::max(m, ei[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      ei[c] = std::exp(ei[c] - m);
      total += ei[c];
    }
    for (std::size_t c = 0; c < k_; ++c) ei[c] /= total;
  }
  return energy;
}

std::vector<double> GaussianMixture::sample(std::size_t n, Rng& rng, int component) const {
  if (component >= static_cast<int>(k_))
    throw IndexError("gmm sample: component " + std::to_string(component) +
                     " out of range [0, " + std::to_string(k_) + ")");
  const auto w = weights();
  std::vector<double> out(n * m_);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = component >= 0 ? static_cast<std::size_t>(component)
                                         : rng.categorical(w);
    const double* mu = means->values.data() + c * m_;
    const double* nv = neg_log_var->values.data() + c * m_;
    for (std::size_t d = 0; d < m_; ++d)
      out[i * m_ + d] = mu[d] + rng.normal() * std::exp(-0.5 * nv[d]);
  }
  return out;
}

}  // namespace dgd
