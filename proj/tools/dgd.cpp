// Command-line front end: train / infer / sample / eval / export-latent.
// Exit codes: 0 ok, 1 training diverged, 2 usage or data error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgd/data.hpp"
#include "dgd/errors.hpp"
#include "dgd/kernels.hpp"
#include "dgd/metrics.hpp"
#include "dgd/model.hpp"
#include "dgd/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string profile = "counts";
  std::string out;  // output directory; never serialized, always from the command line
  std::string mtx, csv, genes, labels;
  bool rescale255 = false;
  std::string orientation = "auto";
  std::string k = "auto";
  long long epochs = -1;  // -1: profile default (counts 800, binary 500)
  std::size_t batch_size = 256;
  std::size_t latent_dim = 20;
  std::string hidden = "100,100,100";
  std::string hidden_activation = "relu";
  double lr_decoder = 1e-3;
  double lr_representation = 1e-2;
  double lr_gmm = 1e-2;
  double beta1 = 0.5;
  double beta2 = 0.7;
  double weight_decay = 1e-4;
  double alpha = 2.0;
  double softball_scale = 1.0;
  double softball_sharpness = 1.0;
  double sigma_init = 0.0;  // 0: profile default
  double logvar_prior_sd = 1.0;
  double dispersion_init = 2.0;
  double prior_weight = -1.0;
  bool supervised = false;
  std::uint64_t seed = 0;
  long long lr_milestone = 500;
  double lr_milestone_factor = 0.1;
  double split_train = 0.8, split_val = 0.1, split_test = 0.1;
  std::string rmse_space = "normalized";
  bool timing = false;
};

void to_json(json& j, const RunConfig& c) {
  j = json{{"profile", c.profile},
           {"mtx", c.mtx},
           {"csv", c.csv},
           {"genes", c.genes},
           {"labels", c.labels},
           {"rescale255", c.rescale255},
           {"orientation", c.orientation},
           {"k", c.k},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"latent_dim", c.latent_dim},
           {"hidden", c.hidden},
           {"hidden_activation", c.hidden_activation},
           {"lr_decoder", c.lr_decoder},
           {"lr_representation", c.lr_representation},
           {"lr_gmm", c.lr_gmm},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"weight_decay", c.weight_decay},
           {"alpha", c.alpha},
           {"softball_scale", c.softball_scale},
           {"softball_sharpness", c.softball_sharpness},
           {"sigma_init", c.sigma_init},
           {"logvar_prior_sd", c.logvar_prior_sd},
           {"dispersion_init", c.dispersion_init},
           {"prior_weight", c.prior_weight},
           {"supervised", c.supervised},
           {"seed", c.seed},
           {"lr_milestone", c.lr_milestone},
           {"lr_milestone_factor", c.lr_milestone_factor},
           {"split_train", c.split_train},
           {"split_val", c.split_val},
           {"split_test", c.split_test},
           {"rmse_space", c.rmse_space},
           {"timing", c.timing}};
}

void from_json(const json& j, RunConfig& c) {
  RunConfig defaults;
#define DGD_GET(field) c.field = j.value(#field, defaults.field)
  DGD_GET(profile);
  DGD_GET(mtx);
  DGD_GET(csv);
  DGD_GET(genes);
  DGD_GET(labels);
  DGD_GET(rescale255);
  DGD_GET(orientation);
  DGD_GET(k);
  DGD_GET(epochs);
  DGD_GET(batch_size);
  DGD_GET(latent_dim);
  DGD_GET(hidden);
  DGD_GET(hidden_activation);
  DGD_GET(lr_decoder);
  DGD_GET(lr_representation);
  DGD_GET(lr_gmm);
  DGD_GET(beta1);
  DGD_GET(beta2);
  DGD_GET(weight_decay);
  DGD_GET(alpha);
  DGD_GET(softball_scale);
  DGD_GET(softball_sharpness);
  DGD_GET(sigma_init);
  DGD_GET(logvar_prior_sd);
  DGD_GET(dispersion_init);
  DGD_GET(prior_weight);
  DGD_GET(supervised);
  DGD_GET(seed);
  DGD_GET(lr_milestone);
  DGD_GET(lr_milestone_factor);
  DGD_GET(split_train);
  DGD_GET(split_val);
  DGD_GET(split_test);
  DGD_GET(rmse_space);
  DGD_GET(timing);
#undef DGD_GET
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return out;
}

dgd::MtxOptions::Orientation parse_orientation(const std::string& name) {
  if (name == "auto") return dgd::MtxOptions::Orientation::kAuto;
  if (name == "rows") return dgd::MtxOptions::Orientation::kRowsAreSamples;
  if (name == "cols") return dgd::MtxOptions::Orientation::kColsAreSamples;
  throw dgd::ContractError("unknown orientation '" + name + "' (auto|rows|cols)");
}

dgd::Dataset load_run_data(const RunConfig& cfg) {
  if (cfg.profile == "counts") {
    if (cfg.mtx.empty()) throw dgd::DataError("counts profile needs --mtx");
    dgd::MtxOptions opts;
    opts.orientation = parse_orientation(cfg.orientation);
    return dgd::load_mtx(cfg.mtx, cfg.genes, cfg.labels, opts);
  }
  if (cfg.csv.empty()) throw dgd::DataError("binary profile needs --csv");
  return dgd::load_dense_csv(cfg.csv, cfg.rescale255, cfg.labels);
}

std::size_t resolve_k(const RunConfig& cfg, const dgd::Dataset& data) {
  if (cfg.k == "auto") {
    if (!data.has_labels())
      throw dgd::ContractError("--k auto needs labels; pass --k explicitly");
    return data.label_names.size();
  }
  const long long k = std::stoll(cfg.k);
  if (k < 1) throw dgd::ContractError("--k must be at least 1");
  return static_cast<std::size_t>(k);
}

dgd::TrainConfig to_train_config(const RunConfig& cfg, std::size_t k) {
  dgd::TrainConfig t;
  t.epochs = cfg.epochs >= 0 ? static_cast<std::size_t>(cfg.epochs)
                             : (cfg.profile == "counts" ? 800 : 500);
  t.batch_size = cfg.batch_size;
  t.latent_dim = cfg.latent_dim;
  t.n_components = k;
  t.hidden = parse_size_list(cfg.hidden);
  t.hidden_activation = dgd::activation_from_name(cfg.hidden_activation);
  t.lr = {cfg.lr_decoder, cfg.lr_representation, cfg.lr_gmm};
  t.beta1 = cfg.beta1;
  t.beta2 = cfg.beta2;
  t.weight_decay = cfg.weight_decay;
  t.dirichlet_alpha = cfg.alpha;
  t.softball_scale = cfg.softball_scale;
  t.softball_sharpness = cfg.softball_sharpness;
  t.sigma_init = cfg.sigma_init;
  t.logvar_prior_sd = cfg.logvar_prior_sd;
  t.nb_dispersion_init = cfg.dispersion_init;
  t.prior_weight = cfg.prior_weight;
  t.supervised = cfg.supervised;
  t.seed = cfg.seed;
  t.lr_milestone_epoch = cfg.lr_milestone >= 0 ? static_cast<std::size_t>(cfg.lr_milestone) : 0;
  t.lr_milestone_factor = cfg.lr_milestone_factor;
  return t;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw dgd::DataError("cannot write " + path.string());
  out << text;
}

void write_latent_csv(const fs::path& path, const dgd::ArrayRef& z,
                      const std::vector<std::size_t>& sample_ids,
                      const dgd::GaussianMixture& gmm, bool include_means) {
  const std::size_t n = z->rows(), m = z->cols();
  const auto clusters = dgd::hard_cluster(gmm, z->values.data(), n);
  std::ofstream out(path);
  if (!out) throw dgd::DataError("cannot write " + path.string());
  out << "sample_id,kind";
  for (std::size_t d = 1; d <= m; ++d) out << ",z_" << d;
  out << ",component\n";
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    out << sample_ids[i] << ",representation";
    for (std::size_t d = 0; d < m; ++d) {
      std::snprintf(buf, sizeof buf, ",%.17g", z->values[i * m + d]);
      out << buf;
    }
    out << "," << clusters[i] << "\n";
  }
  if (include_means) {
    for (std::size_t c = 0; c < gmm.n_components(); ++c) {
      out << c << ",gmm_mean";
      for (std::size_t d = 0; d < m; ++d) {
        std::snprintf(buf, sizeof buf, ",%.17g", gmm.means->values[c * m + d]);
        out << buf;
      }
      out << "," << c << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  if (cfg.rmse_space != "normalized" && cfg.rmse_space != "raw")
    throw dgd::ContractError("--rmse-space must be normalized or raw");

  auto data = load_run_data(cfg);
  const std::size_t k = resolve_k(cfg, data);
  auto train_cfg = to_train_config(cfg, k);

  const auto split =
      dgd::make_split(data.size(), {cfg.split_train, cfg.split_val, cfg.split_test, cfg.seed});
  auto train_data = data.subset(split.train);
  if (train_data.size() == 0) throw dgd::DataError("train split is empty");

  fs::create_directories(cfg.out);
  {
    json echo = cfg;
    echo["resolved"] = {{"k", k},
                        {"epochs", train_cfg.epochs},
                        {"sigma_init", train_cfg.resolved_sigma(data.profile)},
                        {"n_out", train_data.features()},
                        {"n_train", train_data.size()},
                        {"n_val", split.val.size()},
                        {"n_test", split.test.size()}};
    write_text(fs::path(cfg.out) / "config.json", echo.dump(2) + "\n");
  }

  dgd::Trainer trainer(train_data, train_cfg);
  const auto history = trainer.train();
  dgd::write_history_csv(history, (fs::path(cfg.out) / "history.csv").string(), cfg.timing);

  dgd::ModelBundle bundle;
  bundle.profile = data.profile;
  bundle.net = trainer.decoder();
  bundle.gmm = trainer.gmm();
  bundle.head = trainer.nb_head();
  bundle.representations = trainer.representations().z;
  if (data.profile == dgd::Profile::kCounts) {
    bundle.kept_genes = data.counts.kept_genes;
    bundle.n_genes_total = data.counts.n_genes_total;
    bundle.gene_names = data.counts.gene_names;
  }
  bundle.label_names = data.label_names;
  bundle.supervised = cfg.supervised;
  bundle.rmse_space = cfg.rmse_space;
  bundle.config_json = json(cfg).dump(2);
  dgd::save_checkpoint(bundle, (fs::path(cfg.out) / "checkpoint").string());

  auto report = dgd::evaluate(bundle, train_data,
                              [&] {
                                std::vector<std::size_t> all(train_data.size());
                                for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
                                return all;
                              }(),
                              bundle.representations->values.data(), "dgd", "train");
  dgd::write_report_csv({report}, (fs::path(cfg.out) / "report_train.csv").string(),
                        cfg.timing);
  std::cout << dgd::report_table({report});
  if (!history.empty())
    std::printf("final epoch: total %.4f, recon %.4f, gmm %.4f (per sample)\n",
                history.back().total_loss, history.back().recon_loss,
                history.back().gmm_loss);
  return 0;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

dgd::Dataset load_data_for_bundle(const RunConfig& cfg, const dgd::ModelBundle& bundle) {
  if (bundle.profile == dgd::Profile::kCounts && cfg.mtx.empty() && !cfg.csv.empty())
    throw dgd::CheckpointError("profile mismatch: counts checkpoint but --csv data given");
  if (bundle.profile == dgd::Profile::kBinary && cfg.csv.empty() && !cfg.mtx.empty())
    throw dgd::CheckpointError("profile mismatch: binary checkpoint but --mtx data given");
  RunConfig data_cfg = cfg;
  data_cfg.profile = profile_name(bundle.profile);
  auto raw = load_run_data(data_cfg);
  if (bundle.profile == dgd::Profile::kCounts)
    return dgd::project_counts(raw, bundle.kept_genes, bundle.n_genes_total);
  if (raw.features() != bundle.net.out_dim())
    throw dgd::DimensionError("data has " + std::to_string(raw.features()) +
                              " features, model expects " +
                              std::to_string(bundle.net.out_dim()));
  return raw;
}

int cmd_infer(const RunConfig& cfg, const std::string& checkpoint, std::size_t epochs,
              std::size_t batch, const std::string& init, std::size_t n_starts, double lr) {
  auto bundle = dgd::load_checkpoint(checkpoint);
  auto data = load_data_for_bundle(cfg, bundle);

  dgd::InferOptions opts;
  opts.epochs = epochs;
  opts.batch_size = batch;
  opts.n_starts = n_starts;
  opts.lr = lr;
  opts.seed = cfg.seed;
  if (init == "component-means") opts.init = dgd::InferOptions::Init::kComponentMeans;
  else if (init == "zeros") opts.init = dgd::InferOptions::Init::kZeros;
  else throw dgd::ContractError("unknown init '" + init + "' (component-means|zeros)");

  auto result = dgd::infer_representations(bundle.net, bundle.gmm, bundle.head, data, opts);

  fs::create_directories(cfg.out);
  const std::size_t n = result.reps.size(), m = result.reps.dim();
  const auto post = bundle.gmm.posteriors(result.reps.z->values.data(), n);
  const auto clusters = dgd::hard_cluster(bundle.gmm, result.reps.z->values.data(), n);
  std::ofstream out(fs::path(cfg.out) / "representations.csv");
  if (!out) throw dgd::DataError("cannot write representations.csv");
  out << "sample_id";
  for (std::size_t d = 1; d <= m; ++d) out << ",z_" << d;
  out << ",hard_cluster,max_posterior\n";
  char buf[64];
  const std::size_t kk = bundle.gmm.n_components();
  for (std::size_t i = 0; i < n; ++i) {
    out << i;
    for (std::size_t d = 0; d < m; ++d) {
      std::snprintf(buf, sizeof buf, ",%.17g", result.reps.z->values[i * m + d]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%zu,%.17g", clusters[i], post[i * kk + clusters[i]]);
    out << buf << "\n";
  }
  std::printf("inferred %zu representations into %s\n", n,
              (fs::path(cfg.out) / "representations.csv").c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

int cmd_sample(const RunConfig& cfg, const std::string& checkpoint, std::size_t n,
               int component) {
  auto bundle = dgd::load_checkpoint(checkpoint);
  dgd::Rng rng(cfg.seed);
  const auto latents = bundle.gmm.sample(n, rng, component);
  const auto decoded = bundle.net.forward_values(latents.data(), n);
  const std::size_t n_out = bundle.net.out_dim();

  fs::create_directories(cfg.out);
  std::ofstream out(fs::path(cfg.out) / "samples.csv");
  if (!out) throw dgd::DataError("cannot write samples.csv");
  // header: full gene list when a mask exists, feature indices otherwise
  out << "sample_id";
  const bool masked = bundle.profile == dgd::Profile::kCounts && !bundle.kept_genes.empty();
  const std::size_t width = masked ? bundle.n_genes_total : n_out;
  for (std::size_t j = 0; j < width; ++j) {
    if (!bundle.gene_names.empty() && j < bundle.gene_names.size())
      out << "," << bundle.gene_names[j];
    else
      out << ",feature_" << j;
  }
  out << "\n";
  std::vector<double> row(width);
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    if (masked) {
      for (std::size_t k = 0; k < bundle.kept_genes.size(); ++k)
        row[bundle.kept_genes[k]] = decoded[i * n_out + k];
    } else {
      std::copy_n(decoded.data() + i * n_out, n_out, row.data());
    }
    out << i;
    for (double v : row) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << "\n";
  }
  std::printf("wrote %zu decoded samples\n", n);
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const RunConfig& cli_cfg, const std::string& checkpoint, const std::string& split_name,
             std::size_t infer_epochs, std::size_t infer_batch) {
  auto bundle = dgd::load_checkpoint(checkpoint);
  if (bundle.config_json.empty())
    throw dgd::CheckpointError("checkpoint carries no config echo; cannot re-derive the split");
  RunConfig train_cfg = json::parse(bundle.config_json).get<RunConfig>();

  // data paths may be overridden on the command line (e.g. moved files)
  RunConfig data_cfg = train_cfg;
  if (!cli_cfg.mtx.empty()) data_cfg.mtx = cli_cfg.mtx;
  if (!cli_cfg.csv.empty()) data_cfg.csv = cli_cfg.csv;
  if (!cli_cfg.genes.empty()) data_cfg.genes = cli_cfg.genes;
  if (!cli_cfg.labels.empty()) data_cfg.labels = cli_cfg.labels;
  data_cfg.out = cli_cfg.out;

  auto data = load_data_for_bundle(data_cfg, bundle);
  const auto split = dgd::make_split(
      data.size(),
      {train_cfg.split_train, train_cfg.split_val, train_cfg.split_test, train_cfg.seed});
  const auto& indices = split.by_name(split_name);
  if (indices.empty()) throw dgd::DataError("split '" + split_name + "' is empty");
  auto eval_data = data.subset(indices);

  std::vector<double> z_rows;
  if (split_name == "train") {
    if (!bundle.representations)
      throw dgd::CheckpointError("checkpoint has no stored representations");
    if (bundle.representations->rows() != indices.size())
      throw dgd::CheckpointError("stored representations cover " +
                                 std::to_string(bundle.representations->rows()) +
                                 " samples, split has " + std::to_string(indices.size()));
    z_rows = bundle.representations->values;
  } else {
    dgd::InferOptions opts;
    opts.epochs = infer_epochs;
    opts.batch_size = infer_batch;
    opts.seed = cli_cfg.seed;
    auto result =
        dgd::infer_representations(bundle.net, bundle.gmm, bundle.head, eval_data, opts);
    z_rows = result.reps.z->values;
  }

  std::vector<std::size_t> all(eval_data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto report = dgd::evaluate(bundle, eval_data, all, z_rows.data(), "dgd", split_name);

  fs::create_directories(cli_cfg.out);
  dgd::write_report_csv({report}, (fs::path(cli_cfg.out) / "report.csv").string(),
                        cli_cfg.timing);
  std::cout << dgd::report_table({report});
  return 0;
}

// ---------------------------------------------------------------------------
// export-latent
// ---------------------------------------------------------------------------

int cmd_export_latent(const RunConfig& cfg, const std::string& checkpoint) {
  auto bundle = dgd::load_checkpoint(checkpoint);
  if (!bundle.representations)
    throw dgd::CheckpointError("checkpoint has no stored representations");
  fs::create_directories(cfg.out);
  std::vector<std::size_t> ids(bundle.representations->rows());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  write_latent_csv(fs::path(cfg.out) / "latent.csv", bundle.representations, ids, bundle.gmm,
                   /*include_means=*/true);
  std::printf("exported %zu representations and %zu component means\n", ids.size(),
              bundle.gmm.n_components());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep generative decoder: MAP-estimated representations with a GMM prior"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path, checkpoint, init = "component-means", split_name = "train";
  std::size_t infer_epochs = 10, infer_batch = 32, n_starts = 1, n_samples = 10;
  double infer_lr = 1e-2;
  int component = -1;

  auto add_data_flags = [&](CLI::App* cmd) {
    cmd->add_option("--mtx", cfg.mtx, "Matrix Market counts file");
    cmd->add_option("--csv", cfg.csv, "dense csv for binary-valued data");
    cmd->add_option("--genes", cfg.genes, "newline-delimited gene names");
    cmd->add_option("--labels", cfg.labels, "newline-delimited sample labels");
    cmd->add_flag("--rescale-255", cfg.rescale255, "divide csv values by 255");
    cmd->add_option("--orientation", cfg.orientation, "mtx orientation: auto|rows|cols");
  };

  auto* train = app.add_subcommand("train", "fit decoder, GMM and representations");
  add_data_flags(train);
  train->add_option("--config", config_path, "load a previously written config.json");
  train->add_option("--profile", cfg.profile, "counts|binary");
  train->add_option("--out", cfg.out)->required();
  train->add_option("--k", cfg.k, "component count or 'auto' (one per label)");
  train->add_option("--epochs", cfg.epochs);
  train->add_option("--batch", cfg.batch_size);
  train->add_option("--latent", cfg.latent_dim);
  train->add_option("--hidden", cfg.hidden, "comma-separated hidden sizes, 'none' for linear");
  train->add_option("--hidden-activation", cfg.hidden_activation, "relu|sigmoid");
  train->add_option("--lr-decoder", cfg.lr_decoder);
  train->add_option("--lr-rep", cfg.lr_representation);
  train->add_option("--lr-gmm", cfg.lr_gmm);
  train->add_option("--beta1", cfg.beta1);
  train->add_option("--beta2", cfg.beta2);
  train->add_option("--weight-decay", cfg.weight_decay);
  train->add_option("--alpha", cfg.alpha, "Dirichlet concentration on mixture weights");
  train->add_option("--scale", cfg.softball_scale);
  train->add_option("--sharpness", cfg.softball_sharpness);
  train->add_option("--sigma-init", cfg.sigma_init, "component sd init; 0 = profile default");
  train->add_option("--logvar-prior-sd", cfg.logvar_prior_sd);
  train->add_option("--dispersion-init", cfg.dispersion_init);
  train->add_option("--prior-weight", cfg.prior_weight, "per-batch prior weight; -1 = batch/N");
  train->add_flag("--supervised", cfg.supervised);
  train->add_option("--seed", cfg.seed);
  train->add_option("--lr-milestone", cfg.lr_milestone, "epoch of decoder lr step-down; -1 off");
  train->add_option("--lr-milestone-factor", cfg.lr_milestone_factor);
  train->add_option("--split", [&cfg](const std::vector<std::string>& vals) {
    std::stringstream ss(vals.back());
    std::string item;
    std::vector<double> f;
    while (std::getline(ss, item, ',')) f.push_back(std::stod(item));
    if (f.size() != 3) return false;
    cfg.split_train = f[0];
    cfg.split_val = f[1];
    cfg.split_test = f[2];
    return true;
  }, "train,val,test fractions (default 0.8,0.1,0.1)");
  train->add_option("--rmse-space", cfg.rmse_space, "normalized|raw");
  train->add_flag("--timing", cfg.timing, "write real wall time into history/report files");

  auto* infer = app.add_subcommand("infer", "representations for new data (frozen model)");
  add_data_flags(infer);
  infer->add_option("--checkpoint", checkpoint)->required();
  infer->add_option("--out", cfg.out)->required();
  infer->add_option("--epochs", infer_epochs);
  infer->add_option("--batch", infer_batch);
  infer->add_option("--init", init, "component-means|zeros");
  infer->add_option("--n-starts", n_starts);
  infer->add_option("--lr", infer_lr);
  infer->add_option("--seed", cfg.seed);

  auto* sample = app.add_subcommand("sample", "draw latents and decode them");
  sample->add_option("--checkpoint", checkpoint)->required();
  sample->add_option("--out", cfg.out)->required();
  sample->add_option("--n", n_samples);
  sample->add_option("--component", component, "draw from one component only");
  sample->add_option("--seed", cfg.seed);

  auto* eval = app.add_subcommand("eval", "metrics report for a named split");
  add_data_flags(eval);
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--out", cfg.out)->required();
  eval->add_option("--split", split_name, "train|val|test");
  eval->add_option("--epochs", infer_epochs, "inference epochs for val/test");
  eval->add_option("--batch", infer_batch);
  eval->add_option("--seed", cfg.seed);
  eval->add_flag("--timing", cfg.timing);

  auto* export_latent = app.add_subcommand("export-latent", "train representations + GMM means");
  export_latent->add_option("--checkpoint", checkpoint)->required();
  export_latent->add_option("--out", cfg.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) {
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw dgd::DataError("cannot open config file: " + config_path);
        json j;
        in >> j;
        const std::string out = cfg.out;
        cfg = j.get<RunConfig>();
        cfg.out = out;  // output dir always comes from the command line
      }
      return cmd_train(cfg);
    }
    if (*infer) return cmd_infer(cfg, checkpoint, infer_epochs, infer_batch, init, n_starts,
                                 infer_lr);
    if (*sample) return cmd_sample(cfg, checkpoint, n_samples, component);
    if (*eval) return cmd_eval(cfg, checkpoint, split_name, infer_epochs, infer_batch);
    if (*export_latent) return cmd_export_latent(cfg, checkpoint);
  } catch (const dgd::TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
