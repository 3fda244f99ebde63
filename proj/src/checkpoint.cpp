#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "dgd/errors.hpp"
#include "dgd/model.hpp"

namespace dgd {

namespace {

constexpr char kMagic[8] = {'D', 'G', 'D', 'P', 'A', 'R', 'A', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_block(std::ofstream& out, const std::string& name, const ArrayRef& a) {
  write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, static_cast<std::uint32_t>(a->rank()));
  for (std::size_t d : a->shape()) write_u64(out, d);
  out.write(reinterpret_cast<const char*>(a->values.data()),
            static_cast<std::streamsize>(a->values.size() * sizeof(double)));
}

struct Block {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

std::map<std::string, Block> read_blocks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("bad parameter-file magic in " + path);
  std::uint32_t version = 0, n_blocks = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&n_blocks), sizeof n_blocks);
  if (!in || version != kFormatVersion)
    throw CheckpointError("unsupported parameter-file version " + std::to_string(version));
  std::map<std::string, Block> blocks;
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    std::uint32_t name_len = 0;
    if (!in.read(reinterpret_cast<char*>(&name_len), sizeof name_len))
      throw CheckpointError("truncated block header in " + path);
    std::string name(name_len, '\0');
    std::uint32_t ndim = 0;
    if (!in.read(name.data(), name_len) ||
        !in.read(reinterpret_cast<char*>(&ndim), sizeof ndim))
      throw CheckpointError("truncated block header in " + path);
    Block blk;
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::uint64_t dim = 0;
      if (!in.read(reinterpret_cast<char*>(&dim), sizeof dim))
        throw CheckpointError("truncated block shape in " + path);
      blk.shape.push_back(static_cast<std::size_t>(dim));
      count *= static_cast<std::size_t>(dim);
    }
    blk.values.resize(count);
    if (!in.read(reinterpret_cast<char*>(blk.values.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
      throw CheckpointError("truncated block '" + name + "' in " + path);
    blocks.emplace(std::move(name), std::move(blk));
  }
  return blocks;
}

void assign_block(const std::map<std::string, Block>& blocks, const std::string& name,
                  const ArrayRef& dst) {
  auto it = blocks.find(name);
  if (it == blocks.end()) throw CheckpointError("missing parameter block '" + name + "'");
  if (it->second.shape != dst->shape())
    throw CheckpointError("parameter block '" + name + "' has shape " +
                          shape_str(it->second.shape) + ", expected " + shape_str(dst->shape()));
  dst->values = it->second.values;
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["profile"] = profile_name(bundle.profile);
  manifest["layer_sizes"] = bundle.net.layer_sizes();
  manifest["hidden_activation"] = activation_name(bundle.net.hidden_activation());
  manifest["latent_dim"] = bundle.gmm.dim();
  manifest["n_components"] = bundle.gmm.n_components();
  manifest["gmm"] = {{"dirichlet_alpha", bundle.gmm.dirichlet_alpha},
                     {"softball_scale", bundle.gmm.mean_prior.scale},
                     {"softball_sharpness", bundle.gmm.mean_prior.sharpness},
                     {"logvar_prior_mean", bundle.gmm.logvar_prior_mean},
                     {"logvar_prior_sd", bundle.gmm.logvar_prior_sd}};
  manifest["n_genes_total"] = bundle.n_genes_total;
  manifest["kept_genes"] = bundle.kept_genes;
  manifest["gene_names"] = bundle.gene_names;
  manifest["label_names"] = bundle.label_names;
  manifest["supervised"] = bundle.supervised;
  manifest["rmse_space"] = bundle.rmse_space;
  manifest["has_representations"] = static_cast<bool>(bundle.representations);
  if (bundle.representations) manifest["n_train"] = bundle.representations->rows();
  if (!bundle.config_json.empty())
    manifest["config"] = nlohmann::json::parse(bundle.config_json);

  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw CheckpointError("cannot write manifest in " + dir);
  mf << manifest.dump(2) << "\n";

  std::vector<std::pair<std::string, ArrayRef>> blocks;
  for (std::size_t l = 0; l < bundle.net.weights.size(); ++l) {
    blocks.emplace_back("decoder.w" + std::to_string(l), bundle.net.weights[l]);
    blocks.emplace_back("decoder.b" + std::to_string(l), bundle.net.biases[l]);
  }
  blocks.emplace_back("gmm.means", bundle.gmm.means);
  blocks.emplace_back("gmm.neg_log_var", bundle.gmm.neg_log_var);
  blocks.emplace_back("gmm.coefficients", bundle.gmm.coefficients);
  if (bundle.head.log_dispersion)
    blocks.emplace_back("nb.log_dispersion", bundle.head.log_dispersion);
  if (bundle.representations) blocks.emplace_back("representations", bundle.representations);

  std::ofstream pf(fs::path(dir) / "params.bin", std::ios::binary);
  if (!pf) throw CheckpointError("cannot write params in " + dir);
  pf.write(kMagic, 8);
  write_u32(pf, kFormatVersion);
  write_u32(pf, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, array] : blocks) write_block(pf, name, array);
}

ModelBundle load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw CheckpointError("cannot open manifest in " + dir);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("format_version", 0u) != kFormatVersion)
    throw CheckpointError("unsupported checkpoint format version");

  ModelBundle bundle;
  bundle.profile = profile_from_name(manifest.at("profile").get<std::string>());
  const auto layer_sizes = manifest.at("layer_sizes").get<std::vector<std::size_t>>();
  bundle.net = DecoderNet(layer_sizes,
                          activation_from_name(manifest.at("hidden_activation").get<std::string>()));

  const auto& gj = manifest.at("gmm");
  SoftballPrior prior{manifest.at("latent_dim").get<std::size_t>(),
                      gj.at("softball_scale").get<double>(),
                      gj.at("softball_sharpness").get<double>()};
  bundle.gmm = GaussianMixture(manifest.at("n_components").get<std::size_t>(),
                               manifest.at("latent_dim").get<std::size_t>(),
                               gj.at("dirichlet_alpha").get<double>(), prior, 1.0,
                               gj.at("logvar_prior_sd").get<double>());
  bundle.gmm.logvar_prior_mean = gj.at("logvar_prior_mean").get<double>();

  bundle.n_genes_total = manifest.value("n_genes_total", std::size_t{0});
  bundle.kept_genes = manifest.value("kept_genes", std::vector<std::uint32_t>{});
  bundle.gene_names = manifest.value("gene_names", std::vector<std::string>{});
  bundle.label_names = manifest.value("label_names", std::vector<std::string>{});
  bundle.supervised = manifest.value("supervised", false);
  bundle.rmse_space = manifest.value("rmse_space", std::string("normalized"));
  if (manifest.contains("config")) bundle.config_json = manifest["config"].dump(2);

  const auto blocks = read_blocks((fs::path(dir) / "params.bin").string());
  for (std::size_t l = 0; l < bundle.net.weights.size(); ++l) {
    assign_block(blocks, "decoder.w" + std::to_string(l), bundle.net.weights[l]);
    assign_block(blocks, "decoder.b" + std::to_string(l), bundle.net.biases[l]);
  }
  assign_block(blocks, "gmm.means", bundle.gmm.means);
  assign_block(blocks, "gmm.neg_log_var", bundle.gmm.neg_log_var);
  assign_block(blocks, "gmm.coefficients", bundle.gmm.coefficients);
  if (bundle.profile == Profile::kCounts) {
    bundle.head = NegativeBinomialHead(layer_sizes.back());
    assign_block(blocks, "nb.log_dispersion", bundle.head.log_dispersion);
  }
  if (manifest.value("has_representations", false)) {
    const auto it = blocks.find("representations");
    if (it == blocks.end()) throw CheckpointError("missing representations block");
    bundle.representations = DiffArray::from(it->second.shape, it->second.values, true);
  }
  return bundle;
}

}  // namespace dgd
