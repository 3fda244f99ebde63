#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgd/adam.hpp"
#include "dgd/data.hpp"
#include "dgd/decoder.hpp"
#include "dgd/gmm.hpp"
#include "dgd/likelihoods.hpp"
#include "dgd/random.hpp"

namespace dgd {

// One trainable latent row per training sample, index-aligned with the
// dataset. Rows start at zero unless explicitly provided.
struct RepresentationSet {
  ArrayRef z;  // [N x m], requires_grad

  static RepresentationSet zeros(std::size_t n, std::size_t m);
  static RepresentationSet from_values(std::size_t n, std::size_t m, std::vector<double> values);

  std::size_t size() const { return z ? z->rows() : 0; }
  std::size_t dim() const { return z ? z->cols() : 0; }
};

struct LearningRates {
  double decoder = 1e-3;
  double representation = 1e-2;
  double gmm = 1e-2;
};

struct TrainConfig {
  std::size_t epochs = 800;
  std::size_t batch_size = 256;
  std::size_t latent_dim = 20;
  std::size_t n_components = 1;
  std::vector<std::size_t> hidden = {100, 100, 100};
  DecoderNet::Activation hidden_activation = DecoderNet::Activation::kRelu;
  LearningRates lr;
  double beta1 = 0.5;
  double beta2 = 0.7;
  double adam_eps = 1e-8;
  double weight_decay = 1e-4;  // decoder weights only
  double dirichlet_alpha = 2.0;
  double softball_scale = 1.0;
  double softball_sharpness = 1.0;
  // component sd at initialization; <= 0 selects 0.2 * scale / K
  // (the scDGD values 0.02 / 0.01 are this formula at K = 9 / 18)
  double sigma_init = 0.0;
  double logvar_prior_sd = 1.0;
  double nb_dispersion_init = 2.0;  // r; learned in log space
  // weight of the parameter-prior terms per batch; < 0 selects |batch| / N
  // so one epoch accrues each prior exactly once
  double prior_weight = -1.0;
  bool supervised = false;
  std::uint64_t seed = 0;
  std::size_t lr_milestone_epoch = 500;  // 0 disables the decoder lr step-down
  double lr_milestone_factor = 0.1;

  double resolved_sigma(Profile profile) const;
};

struct EpochRecord {
  double total_loss = 0.0;  // per-sample means
  double recon_loss = 0.0;
  double gmm_loss = 0.0;
  double wall_time_s = 0.0;
};
using History = std::vector<EpochRecord>;

// epoch,total_loss,recon_loss,gmm_loss,wall_time_s. The timing column is
// written as 0 unless include_timing is set, keeping the file reproducible.
void write_history_csv(const History& history, const std::string& path, bool include_timing);

// MAP training: per batch, loss = reconstruction - log P(z|phi) - w log P(phi),
// backprop, Adam step for decoder and GMM; one Adam step per epoch for the
// representations, consuming their accumulated batch gradients.
class Trainer {
 public:
  Trainer(const Dataset& data, TrainConfig cfg);

  History train();

  EpochRecord run_epoch();

  struct BatchTotals {
    double recon = 0.0;
    double gmm = 0.0;  // -log P(z) plus the weighted prior term
  };
  // The batch loop alone: model/GMM steps per batch when update_model,
  // representation gradients left accumulated either way. With
  // update_model=false the decoder/GMM/head parameters are frozen.
  BatchTotals run_epoch_batches(bool update_model = true);
  // Adam step on the representations, then zero every gradient.
  void representation_step();

  DecoderNet& decoder() { return net_; }
  const DecoderNet& decoder() const { return net_; }
  GaussianMixture& gmm() { return gmm_; }
  const GaussianMixture& gmm() const { return gmm_; }
  NegativeBinomialHead& nb_head() { return head_; }
  RepresentationSet& representations() { return reps_; }
  OptimizerTrio& optimizers() { return opt_; }
  Rng& rng() { return rng_; }
  std::size_t epoch_index() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }
  const Dataset& data() const { return *data_; }

 private:
  const Dataset* data_;
  TrainConfig cfg_;
  Rng rng_;
  DecoderNet net_;
  GaussianMixture gmm_;
  NegativeBinomialHead head_;
  RepresentationSet reps_;
  OptimizerTrio opt_;
  std::size_t epoch_ = 0;
  std::vector<std::size_t> assigned_components_;  // supervised: per-sample component
};

// argmax responsibilities, ties to the lowest component index
std::vector<std::size_t> hard_cluster(const GaussianMixture& gmm, const double* z,
                                      std::size_t n);

struct InferOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  enum class Init { kComponentMeans, kZeros } init = Init::kComponentMeans;
  std::size_t n_starts = 1;
  double lr = 1e-2;
  double beta1 = 0.5;
  double beta2 = 0.7;
  std::uint64_t seed = 0;
};

struct InferResult {
  RepresentationSet reps;
  std::vector<std::size_t> init_components;  // component chosen at initialization
  std::vector<double> objective;             // final per-sample recon - log P(z)
};

// Representations for new data under a frozen model: initialize each row
// from the component mean with the lowest per-sample reconstruction loss
// (or from zero), then run the per-epoch representation updates on z alone.
// Additional starts (s-th best component / GMM draws) are kept per sample by
// final objective. Decoder/GMM/head values are bitwise untouched.
InferResult infer_representations(const DecoderNet& net, const GaussianMixture& gmm,
                                  const NegativeBinomialHead& head, const Dataset& data,
                                  const InferOptions& opts);

}  // namespace dgd
