#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

namespace dgd {

enum class Profile { kBinary, kCounts };

std::string profile_name(Profile p);
Profile profile_from_name(const std::string& name);

// Sparse nonnegative-integer expression matrix, stored CSR over the kept
// genes (those with nonzero total count). Column ids index the kept-gene
// list; kept_genes maps back to the original gene space.
struct CountMatrix {
  std::size_t n_samples = 0;
  std::size_t n_genes_total = 0;
  std::vector<std::size_t> indptr;        // n_samples + 1
  std::vector<std::uint32_t> col;         // kept-gene index
  std::vector<double> val;                // counts, all > 0
  std::vector<std::uint32_t> kept_genes;  // ascending original gene ids
  std::vector<double> scale;              // per-sample max count, all > 0
  std::vector<std::string> gene_names;    // size n_genes_total when provided

  std::size_t n_kept() const { return kept_genes.size(); }
};

// Unified training view over both profiles.
struct Dataset {
  Profile profile = Profile::kBinary;

  CountMatrix counts;  // counts profile

  std::vector<double> dense;  // binary profile, row-major [N x dense_cols]
  std::size_t dense_cols = 0;

  std::vector<int> labels;  // empty when absent; ids in first-seen order
  std::vector<std::string> label_names;

  bool has_labels() const { return !labels.empty(); }
  std::size_t size() const {
    return profile == Profile::kCounts ? counts.n_samples : (dense_cols ? dense.size() / dense_cols : 0);
  }
  std::size_t features() const {
    return profile == Profile::kCounts ? counts.n_kept() : dense_cols;
  }
  // densify the selected rows into out [idx.size() x features()]
  void fill_batch(const std::vector<std::size_t>& idx, double* out) const;
  // counts profile: per-sample max counts for the selected rows
  std::vector<double> batch_scales(const std::vector<std::size_t>& idx) const;
  // row subset preserving the feature space (gene mask, label names)
  Dataset subset(const std::vector<std::size_t>& idx) const;
};

// Re-express a counts dataset in a model's feature space: entries for genes
// outside the model mask are dropped, per-sample scales are kept as loaded.
// The gene universes must match.
Dataset project_counts(const Dataset& data, const std::vector<std::uint32_t>& model_kept_genes,
                       std::size_t model_n_genes_total);

struct MtxOptions {
  enum class Orientation { kAuto, kRowsAreSamples, kColsAreSamples };
  Orientation orientation = Orientation::kAuto;
};

// Matrix Market coordinate/general ingestion with optional newline-delimited
// gene and label files. Orientation is normalized to samples x genes,
// auto-detected from the side-file lengths unless overridden.
Dataset load_mtx(const std::string& matrix_path, const std::string& genes_path = "",
                 const std::string& labels_path = "", const MtxOptions& options = {});

// Numeric CSV for binary-valued data; values must land in [0,1] after the
// optional /255 rescale.
Dataset load_dense_csv(const std::string& path, bool rescale_255 = false,
                       const std::string& labels_path = "");

// Coordinate-format writer in the original gene space (round-trip tests and
// small fixtures).
void write_mtx(const CountMatrix& m, const std::string& path);

std::vector<std::string> read_lines(const std::string& path);

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train, val, test;
  const std::vector<std::size_t>& by_name(const std::string& name) const;
};

// Seeded permutation partition; floor(train), floor(val), remainder to test.
Split make_split(std::size_t n, const SplitSpec& spec);

}  // namespace dgd
