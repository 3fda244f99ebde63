#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dgd/model.hpp"
#include "dgd/train.hpp"
#include "support/synthetic.hpp"

using dgd::Dataset;
using dgd::Trainer;
using dgd::TrainConfig;

namespace {

TrainConfig small_counts_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.n_components = 4;
  cfg.hidden = {16};
  cfg.batch_size = 64;
  cfg.epochs = 5;
  cfg.seed = seed;
  cfg.lr_milestone_epoch = 0;
  return cfg;
}

std::vector<double> flatten_params(const std::vector<dgd::ArrayRef>& params) {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p->values.begin(), p->values.end());
  return out;
}

}  // namespace

TEST_CASE("loss decreases on the 1-D toy problem (fixed standard Gaussian)") {
  auto data = testsupport::make_synthetic_binary(256, 9);
  TrainConfig cfg;
  cfg.latent_dim = 1;
  cfg.n_components = 1;
  cfg.hidden = {};  // single linear layer into the sigmoid output
  cfg.batch_size = 64;
  cfg.epochs = 80;
  cfg.seed = 3;
  cfg.lr.gmm = 0.0;  // freeze the distribution at a standard Gaussian
  cfg.weight_decay = 0.0;
  cfg.lr_milestone_epoch = 0;
  Trainer trainer(data, cfg);
  trainer.gmm().means->values = {0.0};
  trainer.gmm().neg_log_var->values = {0.0};
  const auto history = trainer.train();
  REQUIRE(history.size() == 80);

  auto moving_average = [&](std::size_t end) {
    double acc = 0.0;
    for (std::size_t e = end - 10; e < end; ++e) acc += history[e].total_loss;
    return acc / 10.0;
  };
  for (std::size_t end = 11; end <= history.size(); ++end)
    CHECK(moving_average(end) < moving_average(end - 1));
}

TEST_CASE("zero epochs returns the initialized state unchanged") {
  auto synth = testsupport::make_synthetic_counts(64, 12, 2.0, 5);
  auto cfg = small_counts_config(17);
  cfg.epochs = 0;
  Trainer a(synth.data, cfg);
  const auto before = flatten_params(a.decoder().parameters());
  const auto gmm_before = flatten_params(a.gmm().parameters());
  const auto history = a.train();
  CHECK(history.empty());
  CHECK(flatten_params(a.decoder().parameters()) == before);
  CHECK(flatten_params(a.gmm().parameters()) == gmm_before);
  for (double z : a.representations().z->values) CHECK(z == 0.0);
}

TEST_CASE("one-epoch equivalence: full batch vs mini batches on a frozen model") {
  auto synth = testsupport::make_synthetic_counts(150, 15, 2.0, 23);
  auto cfg = small_counts_config(31);

  cfg.batch_size = 150;
  Trainer full(synth.data, cfg);
  cfg.batch_size = 64;
  Trainer mini(synth.data, cfg);

  full.run_epoch_batches(/*update_model=*/false);
  mini.run_epoch_batches(/*update_model=*/false);

  const auto& gf = full.representations().z->grad;
  const auto& gm = mini.representations().z->grad;
  REQUIRE(gf.size() == gm.size());
  for (std::size_t i = 0; i < gf.size(); ++i) CHECK(std::fabs(gf[i] - gm[i]) < 1e-10);
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
  auto synth = testsupport::make_synthetic_counts(120, 15, 2.0, 77);
  auto cfg = small_counts_config(99);
  cfg.epochs = 8;

  Trainer a(synth.data, cfg);
  Trainer b(synth.data, cfg);
  const auto ha = a.train();
  const auto hb = b.train();
  REQUIRE(ha.size() == hb.size());
  for (std::size_t e = 0; e < ha.size(); ++e) {
    CHECK(ha[e].total_loss == hb[e].total_loss);
    CHECK(ha[e].recon_loss == hb[e].recon_loss);
    CHECK(ha[e].gmm_loss == hb[e].gmm_loss);
  }
  CHECK(flatten_params(a.decoder().parameters()) == flatten_params(b.decoder().parameters()));
  CHECK(flatten_params(a.gmm().parameters()) == flatten_params(b.gmm().parameters()));
  CHECK(a.representations().z->values == b.representations().z->values);
  CHECK(a.nb_head().log_dispersion->values == b.nb_head().log_dispersion->values);
}

TEST_CASE("supervised training demands a label per sample and valid ids") {
  auto synth = testsupport::make_synthetic_counts(40, 10, 2.0, 3);
  auto cfg = small_counts_config(1);
  cfg.supervised = true;
  Dataset unlabeled = synth.data;
  unlabeled.labels.clear();
  CHECK_THROWS_AS(Trainer(unlabeled, cfg), dgd::ContractError);

  cfg.n_components = 2;  // labels run 0..3
  CHECK_THROWS_AS(Trainer(synth.data, cfg), dgd::ContractError);
}

TEST_CASE("empty dataset is rejected") {
  Dataset empty;
  empty.profile = dgd::Profile::kBinary;
  CHECK_THROWS_AS(Trainer(empty, small_counts_config(0)), dgd::DataError);
}

TEST_CASE("exploding representation step raises a diverged error with the epoch") {
  auto synth = testsupport::make_synthetic_counts(48, 10, 2.0, 11);
  auto cfg = small_counts_config(2);
  cfg.epochs = 4;
  cfg.lr.representation = 1e200;
  Trainer t(synth.data, cfg);
  try {
    t.train();
    FAIL("expected TrainingDivergedError");
  } catch (const dgd::TrainingDivergedError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("history csv hides wall time unless asked") {
  dgd::History h{{1.5, 1.0, 0.5, 0.1234}, {1.25, 0.75, 0.5, 0.2}};
  const auto dir = std::filesystem::temp_directory_path() / "dgd_hist_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "history.csv").string();
  dgd::write_history_csv(h, path, /*include_timing=*/false);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "epoch,total_loss,recon_loss,gmm_loss,wall_time_s");
  std::getline(in, row);
  CHECK(row.find("0.000000") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("hard clustering: tie goes to the lowest index, confident hits the component") {
  dgd::GaussianMixture gmm(2, 1, 1.0, dgd::SoftballPrior{1, 1.0, 1.0}, 1.0);
  gmm.means->values = {-1.0, 1.0};
  gmm.neg_log_var->values = {0.0, 0.0};
  const double midpoint[1] = {0.0};
  CHECK(dgd::hard_cluster(gmm, midpoint, 1)[0] == 0);
  const double near_second[1] = {1.0};
  CHECK(dgd::hard_cluster(gmm, near_second, 1)[0] == 1);
}

TEST_CASE("hard clustering matches a brute-force density comparison") {
  dgd::Rng rng(7);
  dgd::GaussianMixture gmm(4, 3, 1.0, dgd::SoftballPrior{3, 1.0, 1.0}, 0.5);
  gmm.init_params(rng);
  for (double& v : gmm.coefficients->values) v = rng.normal();
  const std::size_t n = 50;
  std::vector<double> z(n * 3);
  for (double& v : z) v = rng.normal();
  const auto clusters = dgd::hard_cluster(gmm, z.data(), n);
  const auto w = gmm.weights();
  for (std::size_t i = 0; i < n; ++i) {
    double best = -1e300;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      double logp = std::log(w[k]);
      for (std::size_t d = 0; d < 3; ++d) {
        const double var = std::exp(-gmm.neg_log_var->values[k * 3 + d]);
        const double diff = z[i * 3 + d] - gmm.means->values[k * 3 + d];
        logp += -0.5 * std::log(2.0 * M_PI * var) - 0.5 * diff * diff / var;
      }
      if (logp > best) {
        best = logp;
        best_k = k;
      }
    }
    CHECK(clusters[i] == best_k);
  }
}

TEST_CASE("inference: noise-free data from a component mean selects that component") {
  dgd::Rng rng(19);
  dgd::GaussianMixture gmm(3, 2, 1.0, dgd::SoftballPrior{2, 1.0, 1.0}, 0.3);
  gmm.init_params(rng);
  dgd::DecoderNet net({2, 6, 4});
  net.init_params(rng);
  dgd::NegativeBinomialHead head;  // binary profile: unused

  // dataset rows are exactly the decoded component means
  Dataset data;
  data.profile = dgd::Profile::kBinary;
  data.dense_cols = 4;
  data.dense = net.forward_values(gmm.means->values.data(), 3);

  dgd::InferOptions opts;
  opts.epochs = 2;
  auto result = dgd::infer_representations(net, gmm, head, data, opts);
  CHECK(result.init_components == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("inference: K=1 initializes every sample at the single mean") {
  dgd::Rng rng(23);
  dgd::GaussianMixture gmm(1, 2, 1.0, dgd::SoftballPrior{2, 1.0, 1.0}, 0.3);
  gmm.init_params(rng);
  dgd::DecoderNet net({2, 5});
  net.init_params(rng);
  dgd::NegativeBinomialHead head;

  Dataset data;
  data.profile = dgd::Profile::kBinary;
  data.dense_cols = 5;
  dgd::Rng drng(5);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 5; ++j) data.dense.push_back(drng.uniform(0.05, 0.95));

  dgd::InferOptions opts;
  opts.epochs = 0;  // inspect the raw initialization
  auto result = dgd::infer_representations(net, gmm, head, data, opts);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(result.init_components[i] == 0);
    CHECK(result.reps.z->values[2 * i] == gmm.means->values[0]);
    CHECK(result.reps.z->values[2 * i + 1] == gmm.means->values[1]);
  }
}

TEST_CASE("inference leaves the frozen model bitwise untouched") {
  auto synth = testsupport::make_synthetic_counts(100, 12, 2.0, 41);
  auto cfg = small_counts_config(13);
  cfg.epochs = 3;
  Trainer trainer(synth.data, cfg);
  trainer.train();

  const auto net_before = flatten_params(trainer.decoder().parameters());
  const auto gmm_before = flatten_params(trainer.gmm().parameters());
  const auto head_before = trainer.nb_head().log_dispersion->values;

  auto fresh = testsupport::make_synthetic_counts(30, 12, 2.0, 43);
  dgd::InferOptions opts;
  opts.epochs = 5;
  auto result =
      dgd::infer_representations(trainer.decoder(), trainer.gmm(), trainer.nb_head(),
                                 fresh.data, opts);
  CHECK(result.reps.size() == 30);

  CHECK(flatten_params(trainer.decoder().parameters()) == net_before);
  CHECK(flatten_params(trainer.gmm().parameters()) == gmm_before);
  CHECK(trainer.nb_head().log_dispersion->values == head_before);
  // and the model parameters still require gradients afterwards
  for (const auto& p : trainer.decoder().parameters()) CHECK(p->requires_grad);
}

TEST_CASE("evaluate reports ARI 1.0 on a perfectly recovered clustering") {
  // far-separated components with representations sitting on the means
  dgd::ModelBundle bundle;
  bundle.profile = dgd::Profile::kBinary;
  bundle.net = dgd::DecoderNet({2, 3});
  bundle.gmm = dgd::GaussianMixture(2, 2, 1.0, dgd::SoftballPrior{2, 1.0, 1.0}, 1.0);
  bundle.gmm.means->values = {-5.0, -5.0, 5.0, 5.0};

  Dataset data;
  data.profile = dgd::Profile::kBinary;
  data.dense_cols = 3;
  data.dense.assign(6 * 3, 0.5);
  data.labels = {1, 0, 1, 0, 0, 1};
  data.label_names = {"a", "b"};

  std::vector<double> z;
  for (int label : data.labels) {
    z.push_back(label == 0 ? -5.0 : 5.0);
    z.push_back(label == 0 ? -5.0 : 5.0);
  }
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5};
  auto report = dgd::evaluate(bundle, data, idx, z.data(), "toy", "train");
  CHECK(report.has_ari);
  CHECK(report.ari == doctest::Approx(1.0));
  // every prediction is 0.5, so the per-cell NLL is 3 log 2
  CHECK(report.nll_mean == doctest::Approx(3.0 * std::log(2.0)));
}

TEST_CASE("multiple starts never worsen the per-sample objective") {
  auto synth = testsupport::make_synthetic_counts(60, 12, 2.0, 51);
  auto cfg = small_counts_config(15);
  cfg.epochs = 4;
  Trainer trainer(synth.data, cfg);
  trainer.train();

  auto fresh = testsupport::make_synthetic_counts(20, 12, 2.0, 53);
  dgd::InferOptions one;
  one.epochs = 3;
  dgd::InferOptions three = one;
  three.n_starts = 3;
  auto r1 = dgd::infer_representations(trainer.decoder(), trainer.gmm(), trainer.nb_head(),
                                       fresh.data, one);
  auto r3 = dgd::infer_representations(trainer.decoder(), trainer.gmm(), trainer.nb_head(),
                                       fresh.data, three);
  for (std::size_t i = 0; i < 20; ++i) CHECK(r3.objective[i] <= r1.objective[i] + 1e-12);
}
