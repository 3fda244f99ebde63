#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgd/data.hpp"
#include "dgd/decoder.hpp"
#include "dgd/gmm.hpp"
#include "dgd/likelihoods.hpp"
#include "dgd/metrics.hpp"

namespace dgd {

// Everything a trained run produces, as serialized to a checkpoint
// directory (manifest.json + params.bin).
struct ModelBundle {
  Profile profile = Profile::kBinary;
  DecoderNet net;
  GaussianMixture gmm;
  NegativeBinomialHead head;  // counts profile only
  ArrayRef representations;   // [N_train x m]; may be null

  // feature mask back to the full gene list
  std::vector<std::uint32_t> kept_genes;
  std::size_t n_genes_total = 0;
  std::vector<std::string> gene_names;  // original gene space, may be empty

  std::vector<std::string> label_names;  // first-seen order
  bool supervised = false;
  std::string rmse_space = "normalized";  // or "raw"
  std::string config_json;                // run-config echo kept in the manifest
};

// manifest.json (UTF-8 JSON) plus params.bin (named little-endian f64
// blocks). Loading validates the format version and every block shape.
void save_checkpoint(const ModelBundle& bundle, const std::string& dir);
ModelBundle load_checkpoint(const std::string& dir);

// Reconstruction and clustering metrics for the given rows: decodes z_rows
// [indices.size() x m], per-cell NLL (NB for counts, summed BCE for binary),
// per-cell RMSE in the bundle's RMSE space, and ARI of the hard clustering
// against labels when the dataset has them.
EvalReport evaluate(const ModelBundle& bundle, const Dataset& data,
                    const std::vector<std::size_t>& indices, const double* z_rows,
                    const std::string& model_name, const std::string& split_name);

}  // namespace dgd
