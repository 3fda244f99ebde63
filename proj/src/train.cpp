#include "dgd/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>

#include "dgd/errors.hpp"

namespace dgd {

namespace {

class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<ArrayRef> params) : params_(std::move(params)) {
    saved_.reserve(params_.size());
    for (auto& p : params_) {
      saved_.push_back(p->requires_grad);
      p->requires_grad = false;
    }
  }
  ~FreezeGuard() {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i]->requires_grad = saved_[i];
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<ArrayRef> params_;
  std::vector<bool> saved_;
};

std::vector<ArrayRef> model_params(const DecoderNet& net, const GaussianMixture& gmm,
                                   const NegativeBinomialHead& head) {
  auto out = net.parameters();
  for (const auto& p : gmm.parameters()) out.push_back(p);
  if (head.log_dispersion) out.push_back(head.log_dispersion);
  return out;
}

// Per-sample reconstruction loss of decoded parameters `pred` [n x G]
// against the dataset rows `idx`.
std::vector<double> per_sample_recon(const Dataset& data, const std::vector<std::size_t>& idx,
                                     const std::vector<double>& pred,
                                     const NegativeBinomialHead& head) {
  const std::size_t n = idx.size(), g = data.features();
  std::vector<double> target(n * g);
  data.fill_batch(idx, target.data());
  std::vector<double> out(n, 0.0);
  if (data.profile == Profile::kCounts) {
    const auto scales = data.batch_scales(idx);
    for (std::size_t i = 0; i < n; ++i) {
      double nll = 0.0;
      for (std::size_t j = 0; j < g; ++j) {
        const double r = std::exp(head.log_dispersion->values[j]);
        nll -= nb_log_pmf(target[i * g + j], pred[i * g + j] * scales[i], r);
      }
      out[i] = nll;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double bce = 0.0;
      for (std::size_t j = 0; j < g; ++j) {
        const double p = pred[i * g + j];
        const double t = target[i * g + j];
        bce -= t * std::log(std::max(p, 1e-10)) +
               (1.0 - t) * std::log(std::max(1.0 - p, 1e-10));
      }
      out[i] = bce;
    }
  }
  return out;
}

}  // namespace

RepresentationSet RepresentationSet::zeros(std::size_t n, std::size_t m) {
  RepresentationSet r;
  r.z = DiffArray::make({n, m}, true);
  return r;
}

RepresentationSet RepresentationSet::from_values(std::size_t n, std::size_t m,
                                                 std::vector<double> values) {
  RepresentationSet r;
  r.z = DiffArray::from({n, m}, std::move(values), true);
  return r;
}

double TrainConfig::resolved_sigma(Profile) const {
  if (sigma_init > 0.0) return sigma_init;
  return 0.2 * softball_scale / static_cast<double>(n_components);
}

void write_history_csv(const History& history, const std::string& path, bool include_timing) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history file: " + path);
  out << "epoch,total_loss,recon_loss,gmm_loss,wall_time_s\n";
  char buf[256];
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& r = history[e];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.6f\n", e, r.total_loss,
                  r.recon_loss, r.gmm_loss, include_timing ? r.wall_time_s : 0.0);
    out << buf;
  }
}

Trainer::Trainer(const Dataset& data, TrainConfig cfg)
    : data_(&data), cfg_(std::move(cfg)), rng_(cfg_.seed) {
  const std::size_t n = data.size();
  if (n == 0) throw DataError("training dataset is empty");
  if (cfg_.epochs != 0 && cfg_.batch_size == 0)
    throw ContractError("batch_size must be positive");
  if (cfg_.n_components < 1) throw ContractError("need at least one mixture component");

  if (cfg_.supervised) {
    if (data.labels.size() != n)
      throw ContractError("supervised training requires a label for every sample");
    assigned_components_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int label = data.labels[i];
      if (label < 0 || static_cast<std::size_t>(label) >= cfg_.n_components)
        throw ContractError("label id " + std::to_string(label) + " exceeds K = " +
                            std::to_string(cfg_.n_components));
      assigned_components_[i] = static_cast<std::size_t>(label);
    }
  }

  std::vector<std::size_t> sizes;
  sizes.push_back(cfg_.latent_dim);
  for (std::size_t h : cfg_.hidden) sizes.push_back(h);
  sizes.push_back(data.features());
  net_ = DecoderNet(sizes, cfg_.hidden_activation);

  SoftballPrior mean_prior{cfg_.latent_dim, cfg_.softball_scale, cfg_.softball_sharpness};
  gmm_ = GaussianMixture(cfg_.n_components, cfg_.latent_dim, cfg_.dirichlet_alpha, mean_prior,
                         cfg_.resolved_sigma(data.profile), cfg_.logvar_prior_sd);
  if (data.profile == Profile::kCounts)
    head_ = NegativeBinomialHead(data.features(), std::log(cfg_.nb_dispersion_init));

  // single generator, order-stamped: GMM means, then decoder weights,
  // then the per-epoch shuffles
  gmm_.init_params(rng_);
  net_.init_params(rng_);
  reps_ = RepresentationSet::zeros(n, cfg_.latent_dim);

  opt_.decoder = AdamState("decoder", cfg_.lr.decoder, cfg_.beta1, cfg_.beta2, cfg_.adam_eps,
                           cfg_.weight_decay);
  opt_.decoder.add_params(net_.weight_parameters(), /*decay=*/true);
  opt_.decoder.add_params(net_.biases, /*decay=*/false);
  if (head_.log_dispersion) opt_.decoder.add_param(head_.log_dispersion, /*decay=*/false);
  opt_.representation =
      AdamState("representation", cfg_.lr.representation, cfg_.beta1, cfg_.beta2, cfg_.adam_eps);
  opt_.representation.skip_zero_grad_rows = true;
  opt_.representation.add_param(reps_.z);
  opt_.gmm = AdamState("gmm", cfg_.lr.gmm, cfg_.beta1, cfg_.beta2, cfg_.adam_eps);
  opt_.gmm.add_params(gmm_.parameters());
}

Trainer::BatchTotals Trainer::run_epoch_batches(bool update_model) {
  const std::size_t n = data_->size();
  const std::size_t f = data_->features();
  const auto perm = rng_.permutation(n);
  BatchTotals totals;

  std::unique_ptr<FreezeGuard> freeze;
  if (!update_model)
    freeze = std::make_unique<FreezeGuard>(model_params(net_, gmm_, head_));

  std::vector<double> batch_values;
  for (std::size_t start = 0, batch_no = 0; start < n; start += cfg_.batch_size, ++batch_no) {
    const std::size_t stop = std::min(start + cfg_.batch_size, n);
    std::vector<std::size_t> idx(perm.begin() + start, perm.begin() + stop);
    const std::size_t b = idx.size();

    Tape tape;
    auto zb = tape.gather_rows(reps_.z, idx);
    auto pred = net_.forward(tape, zb);

    batch_values.assign(b * f, 0.0);
    data_->fill_batch(idx, batch_values.data());
    ArrayRef recon;
    if (data_->profile == Profile::kCounts) {
      recon = nb_loss(tape, pred, batch_values, data_->batch_scales(idx), head_);
    } else {
      recon = bce_loss(tape, pred, batch_values);
    }

    ArrayRef z_loglik;
    if (cfg_.supervised) {
      std::vector<std::size_t> comps(b);
      for (std::size_t i = 0; i < b; ++i) comps[i] = assigned_components_[idx[i]];
      z_loglik = gmm_.supervised_log_prob(tape, zb, comps);
    } else {
      z_loglik = gmm_.log_prob(tape, zb);
    }
    auto gmm_term = tape.negate(tape.sum(z_loglik));
    auto loss = tape.add(recon, gmm_term);

    double prior_value = 0.0;
    if (update_model) {
      const double w = cfg_.prior_weight >= 0.0
                           ? cfg_.prior_weight
                           : static_cast<double>(b) / static_cast<double>(n);
      auto prior = tape.scale(tape.negate(gmm_.prior_log_prob(tape)), w);
      prior_value = prior->value();
      loss = tape.add(loss, prior);
    }

    if (!std::isfinite(loss->value()))
      throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch_) +
                                  ", batch " + std::to_string(batch_no));

    tape.backward(loss);

    if (update_model) {
      opt_.decoder.step();
      opt_.gmm.step();
      opt_.decoder.zero_grad();
      opt_.gmm.zero_grad();
    }

    totals.recon += recon->value();
    totals.gmm += gmm_term->value() + prior_value;
  }
  return totals;
}

void Trainer::representation_step() {
  opt_.representation.step();
  opt_.decoder.zero_grad();
  opt_.gmm.zero_grad();
  opt_.representation.zero_grad();
}

EpochRecord Trainer::run_epoch() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto totals = run_epoch_batches(true);
  representation_step();
  const auto t1 = std::chrono::steady_clock::now();

  const double n = static_cast<double>(data_->size());
  EpochRecord rec;
  rec.recon_loss = totals.recon / n;
  rec.gmm_loss = totals.gmm / n;
  rec.total_loss = rec.recon_loss + rec.gmm_loss;
  rec.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  ++epoch_;
  return rec;
}

History Trainer::train() {
  History history;
  history.reserve(cfg_.epochs);
  for (std::size_t e = 0; e < cfg_.epochs; ++e) {
    if (cfg_.lr_milestone_epoch > 0 && e == cfg_.lr_milestone_epoch)
      opt_.decoder.lr *= cfg_.lr_milestone_factor;
    history.push_back(run_epoch());
  }
  return history;
}

std::vector<std::size_t> hard_cluster(const GaussianMixture& gmm, const double* z,
                                      std::size_t n) {
  const auto energy = gmm.energy_matrix(z, n);
  const std::size_t k = gmm.n_components();
  std::vector<std::size_t> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ei = energy.data() + i * k;
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (ei[c] > ei[best]) best = c;
    out[i] = best;
  }
  return out;
}

InferResult infer_representations(const DecoderNet& net, const GaussianMixture& gmm,
                                  const NegativeBinomialHead& head, const Dataset& data,
                                  const InferOptions& opts) {
  const std::size_t n = data.size();
  const std::size_t m = gmm.dim();
  const std::size_t k = gmm.n_components();
  if (n == 0) throw DataError("inference dataset is empty");

  FreezeGuard freeze(model_params(net, gmm, head));
  Rng rng(opts.seed);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  // reconstruction loss of each component's decoded mean against each sample
  std::vector<std::vector<std::size_t>> ranked;  // per sample, components by loss
  if (opts.init == InferOptions::Init::kComponentMeans) {
    const auto decoded = net.forward_values(gmm.means->values.data(), k);
    std::vector<std::vector<double>> loss_per_comp(k);
    for (std::size_t c = 0; c < k; ++c) {
      // broadcast component c's decoded parameters over all samples
      std::vector<double> pred(n * data.features());
      for (std::size_t i = 0; i < n; ++i)
        std::copy_n(decoded.data() + c * data.features(), data.features(),
                    pred.data() + i * data.features());
      loss_per_comp[c] = per_sample_recon(data, all, pred, head);
    }
    ranked.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> order(k);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return loss_per_comp[a][i] < loss_per_comp[b][i];
      });
      ranked[i] = std::move(order);
    }
  }

  InferResult result;
  result.objective.assign(n, std::numeric_limits<double>::infinity());
  result.init_components.assign(n, 0);
  auto best_z = std::vector<double>(n * m, 0.0);

  const std::size_t starts = std::max<std::size_t>(1, opts.n_starts);
  for (std::size_t s = 0; s < starts; ++s) {
    RepresentationSet reps = RepresentationSet::zeros(n, m);
    if (opts.init == InferOptions::Init::kComponentMeans) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t comp = ranked[i][std::min(s, k - 1)];
        if (s == 0) result.init_components[i] = comp;
        std::copy_n(gmm.means->values.data() + comp * m, m, reps.z->values.data() + i * m);
      }
    } else if (s > 0) {
      reps.z->values = gmm.sample(n, rng);
    }

    AdamState opt("representation", opts.lr, opts.beta1, opts.beta2);
    opt.add_param(reps.z);

    std::vector<double> batch_values;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
      for (std::size_t start = 0; start < n; start += opts.batch_size) {
        const std::size_t stop = std::min(start + opts.batch_size, n);
        std::vector<std::size_t> idx(all.begin() + start, all.begin() + stop);

        Tape tape;
        auto zb = tape.gather_rows(reps.z, idx);
        auto pred = net.forward(tape, zb);
        batch_values.assign(idx.size() * data.features(), 0.0);
        data.fill_batch(idx, batch_values.data());
        ArrayRef recon;
        if (data.profile == Profile::kCounts)
          recon = nb_loss(tape, pred, batch_values, data.batch_scales(idx), head);
        else
          recon = bce_loss(tape, pred, batch_values);
        auto loss = tape.add(recon, tape.negate(tape.sum(gmm.log_prob(tape, zb))));
        if (!std::isfinite(loss->value()))
          throw TrainingDivergedError("non-finite loss during inference, epoch " +
                                      std::to_string(epoch));
        tape.backward(loss);
      }
      opt.step();
      opt.zero_grad();
    }

    // final per-sample objective: reconstruction - log P(z)
    const auto pred = net.forward_values(reps.z->values.data(), n);
    auto recon = per_sample_recon(data, all, pred, head);
    const auto z_loglik = gmm.log_prob_values(reps.z->values.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double obj = recon[i] - z_loglik[i];
      if (obj < result.objective[i]) {
        result.objective[i] = obj;
        std::copy_n(reps.z->values.data() + i * m, m, best_z.data() + i * m);
      }
    }
  }

  result.reps = RepresentationSet::from_values(n, m, std::move(best_z));
  return result;
}

}  // namespace dgd
