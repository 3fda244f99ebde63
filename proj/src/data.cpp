#include "dgd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dgd/errors.hpp"
#include "dgd/random.hpp"

namespace dgd {

std::string profile_name(Profile p) { return p == Profile::kCounts ? "counts" : "binary"; }

Profile profile_from_name(const std::string& name) {
  if (name == "counts") return Profile::kCounts;
  if (name == "binary") return Profile::kBinary;
  throw ContractError("unknown profile: " + name);
}

void Dataset::fill_batch(const std::vector<std::size_t>& idx, double* out) const {
  const std::size_t f = features();
  if (profile == Profile::kCounts) {
    std::fill(out, out + idx.size() * f, 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t row = idx[i];
      if (row >= counts.n_samples)
        throw IndexError("fill_batch: sample " + std::to_string(row) + " out of range");
      for (std::size_t p = counts.indptr[row]; p < counts.indptr[row + 1]; ++p)
        out[i * f + counts.col[p]] = counts.val[p];
    }
  } else {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] * f >= dense.size())
        throw IndexError("fill_batch: sample " + std::to_string(idx[i]) + " out of range");
      std::copy_n(dense.data() + idx[i] * f, f, out + i * f);
    }
  }
}

std::vector<double> Dataset::batch_scales(const std::vector<std::size_t>& idx) const {
  std::vector<double> out(idx.size(), 1.0);
  if (profile == Profile::kCounts)
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = counts.scale[idx[i]];
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
  Dataset out;
  out.profile = profile;
  out.label_names = label_names;
  if (has_labels()) {
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) out.labels.push_back(labels.at(i));
  }
  if (profile == Profile::kCounts) {
    out.counts.n_samples = idx.size();
    out.counts.n_genes_total = counts.n_genes_total;
    out.counts.kept_genes = counts.kept_genes;
    out.counts.gene_names = counts.gene_names;
    out.counts.indptr.reserve(idx.size() + 1);
    for (std::size_t i : idx) {
      if (i >= counts.n_samples)
        throw IndexError("subset: sample " + std::to_string(i) + " out of range");
      out.counts.indptr.push_back(out.counts.col.size());
      for (std::size_t p = counts.indptr[i]; p < counts.indptr[i + 1]; ++p) {
        out.counts.col.push_back(counts.col[p]);
        out.counts.val.push_back(counts.val[p]);
      }
      out.counts.scale.push_back(counts.scale[i]);
    }
    out.counts.indptr.push_back(out.counts.col.size());
  } else {
    out.dense_cols = dense_cols;
    out.dense.reserve(idx.size() * dense_cols);
    for (std::size_t i : idx) {
      if ((i + 1) * dense_cols > dense.size())
        throw IndexError("subset: sample " + std::to_string(i) + " out of range");
      out.dense.insert(out.dense.end(), dense.begin() + i * dense_cols,
                       dense.begin() + (i + 1) * dense_cols);
    }
  }
  return out;
}

Dataset project_counts(const Dataset& data, const std::vector<std::uint32_t>& model_kept_genes,
                       std::size_t model_n_genes_total) {
  if (data.profile != Profile::kCounts)
    throw ContractError("project_counts: counts profile required");
  if (data.counts.n_genes_total != model_n_genes_total)
    throw DataError("gene universe mismatch: data has " +
                    std::to_string(data.counts.n_genes_total) + " genes, model expects " +
                    std::to_string(model_n_genes_total));
  std::vector<std::int64_t> gene_to_model(model_n_genes_total, -1);
  for (std::size_t k = 0; k < model_kept_genes.size(); ++k)
    gene_to_model[model_kept_genes[k]] = static_cast<std::int64_t>(k);

  Dataset out;
  out.profile = Profile::kCounts;
  out.labels = data.labels;
  out.label_names = data.label_names;
  out.counts.n_samples = data.counts.n_samples;
  out.counts.n_genes_total = model_n_genes_total;
  out.counts.kept_genes = model_kept_genes;
  out.counts.gene_names = data.counts.gene_names;
  out.counts.scale = data.counts.scale;  // the sample's own max count, as loaded
  for (std::size_t i = 0; i < data.counts.n_samples; ++i) {
    out.counts.indptr.push_back(out.counts.col.size());
    for (std::size_t p = data.counts.indptr[i]; p < data.counts.indptr[i + 1]; ++p) {
      const std::uint32_t original = data.counts.kept_genes[data.counts.col[p]];
      const std::int64_t model_idx = gene_to_model[original];
      if (model_idx < 0) continue;  // gene unseen at training time
      out.counts.col.push_back(static_cast<std::uint32_t>(model_idx));
      out.counts.val.push_back(data.counts.val[p]);
    }
  }
  out.counts.indptr.push_back(out.counts.col.size());
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // a single trailing blank line is tolerated
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

namespace {

std::vector<int> map_labels(const std::vector<std::string>& raw,
                            std::vector<std::string>& names) {
  std::vector<int> ids(raw.size());
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto it = seen.find(raw[i]);
    if (it == seen.end()) {
      it = seen.emplace(raw[i], static_cast<int>(names.size())).first;
      names.push_back(raw[i]);
    }
    ids[i] = it->second;
  }
  return ids;
}

struct Triplet {
  std::uint32_t row, col;
  double v;
};

}  // namespace

Dataset load_mtx(const std::string& matrix_path, const std::string& genes_path,
                 const std::string& labels_path, const MtxOptions& options) {
  std::ifstream in(matrix_path);
  if (!in) throw DataError("cannot open matrix file: " + matrix_path);

  long line_no = 0;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty Matrix Market file", 1);
  ++line_no;
  {
    std::istringstream hdr(line);
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix")
      throw ParseError("not a Matrix Market header: " + line, line_no);
    if (format != "coordinate")
      throw ParseError("unsupported Matrix Market format '" + format + "' (need coordinate)",
                       line_no);
    if (field != "integer" && field != "real")
      throw ParseError("unsupported Matrix Market field '" + field + "' (need integer or real)",
                       line_no);
    if (symmetry != "general")
      throw ParseError("unsupported Matrix Market symmetry '" + symmetry + "' (need general)",
                       line_no);
  }

  // skip comments, then the size line
  std::size_t n_rows = 0, n_cols = 0, nnz = 0;
  for (;;) {
    if (!std::getline(in, line)) throw ParseError("missing size line", line_no);
    ++line_no;
    if (!line.empty() && line[0] == '%') continue;
    std::istringstream sz(line);
    long long r = -1, c = -1, n = -1;
    if (!(sz >> r >> c >> n) || r < 0 || c < 0 || n < 0)
      throw ParseError("malformed size line: " + line, line_no);
    n_rows = static_cast<std::size_t>(r);
    n_cols = static_cast<std::size_t>(c);
    nnz = static_cast<std::size_t>(n);
    break;
  }
  if (n_rows == 0 || n_cols == 0) throw DataError("no samples in " + matrix_path);

  std::vector<Triplet> entries;
  entries.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(nnz) + " entries, file ended after " +
                           std::to_string(k),
                       line_no);
    ++line_no;
    std::istringstream es(line);
    long long r = 0, c = 0;
    double v = 0.0;
    if (!(es >> r >> c >> v)) throw ParseError("malformed entry: " + line, line_no);
    if (r < 1 || c < 1 || r > static_cast<long long>(n_rows) ||
        c > static_cast<long long>(n_cols))
      throw ParseError("entry index out of bounds: " + line, line_no);
    if (v < 0.0) throw ParseError("negative count " + std::to_string(v), line_no);
    if (std::floor(v) != v) throw ParseError("non-integral count " + std::to_string(v), line_no);
    if (v == 0.0) continue;
    entries.push_back({static_cast<std::uint32_t>(r - 1), static_cast<std::uint32_t>(c - 1), v});
  }

  std::vector<std::string> gene_lines, label_lines;
  if (!genes_path.empty()) gene_lines = read_lines(genes_path);
  if (!labels_path.empty()) label_lines = read_lines(labels_path);

  // Orientation: normalize to samples x genes. Side files disambiguate;
  // rows-are-samples is the fallback.
  bool rows_are_samples = true;
  if (options.orientation == MtxOptions::Orientation::kRowsAreSamples) {
    rows_are_samples = true;
  } else if (options.orientation == MtxOptions::Orientation::kColsAreSamples) {
    rows_are_samples = false;
  } else if (!label_lines.empty()) {
    if (label_lines.size() == n_rows) rows_are_samples = true;
    else if (label_lines.size() == n_cols) rows_are_samples = false;
    else
      throw ParseError("label count " + std::to_string(label_lines.size()) +
                       " matches neither matrix dimension (" + std::to_string(n_rows) + "x" +
                       std::to_string(n_cols) + ")");
  } else if (!gene_lines.empty()) {
    if (gene_lines.size() == n_cols) rows_are_samples = true;
    else if (gene_lines.size() == n_rows) rows_are_samples = false;
    else
      throw ParseError("gene count " + std::to_string(gene_lines.size()) +
                       " matches neither matrix dimension (" + std::to_string(n_rows) + "x" +
                       std::to_string(n_cols) + ")");
  }

  const std::size_t n_samples = rows_are_samples ? n_rows : n_cols;
  const std::size_t n_genes = rows_are_samples ? n_cols : n_rows;
  if (!rows_are_samples)
    for (auto& e : entries) std::swap(e.row, e.col);

  if (!label_lines.empty() && label_lines.size() != n_samples)
    throw ParseError("label count " + std::to_string(label_lines.size()) + " does not match " +
                     std::to_string(n_samples) + " samples");
  if (!gene_lines.empty() && gene_lines.size() != n_genes)
    throw ParseError("gene count " + std::to_string(gene_lines.size()) + " does not match " +
                     std::to_string(n_genes) + " genes");

  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  // merge duplicate coordinates by summation
  std::vector<Triplet> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
      merged.back().v += e.v;
    else
      merged.push_back(e);
  }

  std::vector<double> gene_total(n_genes, 0.0);
  for (const auto& e : merged) gene_total[e.col] += e.v;

  CountMatrix mat;
  mat.n_samples = n_samples;
  mat.n_genes_total = n_genes;
  for (std::uint32_t g = 0; g < n_genes; ++g)
    if (gene_total[g] > 0.0) mat.kept_genes.push_back(g);
  std::vector<std::uint32_t> gene_to_kept(n_genes, 0);
  for (std::size_t k = 0; k < mat.kept_genes.size(); ++k) gene_to_kept[mat.kept_genes[k]] = k;

  mat.indptr.assign(n_samples + 1, 0);
  mat.scale.assign(n_samples, 0.0);
  mat.col.reserve(merged.size());
  mat.val.reserve(merged.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    mat.indptr[i] = mat.col.size();
    double max_count = 0.0;
    while (pos < merged.size() && merged[pos].row == i) {
      mat.col.push_back(gene_to_kept[merged[pos].col]);
      mat.val.push_back(merged[pos].v);
      max_count = std::max(max_count, merged[pos].v);
      ++pos;
    }
    if (max_count <= 0.0)
      throw DataError("sample " + std::to_string(i) + " has no nonzero counts");
    mat.scale[i] = max_count;
  }
  mat.indptr[n_samples] = mat.col.size();
  mat.gene_names = gene_lines;

  Dataset ds;
  ds.profile = Profile::kCounts;
  ds.counts = std::move(mat);
  if (!label_lines.empty()) ds.labels = map_labels(label_lines, ds.label_names);
  return ds;
}

Dataset load_dense_csv(const std::string& path, bool rescale_255,
                       const std::string& labels_path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv file: " + path);
  Dataset ds;
  ds.profile = Profile::kBinary;
  std::string line;
  long line_no = 0;
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t cols = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      std::string cell = line.substr(start, end - start);
      char* parse_end = nullptr;
      double v = std::strtod(cell.c_str(), &parse_end);
      while (parse_end && *parse_end == ' ') ++parse_end;
      if (cell.empty() || parse_end == cell.c_str() || *parse_end != '\0')
        throw ParseError("non-numeric cell '" + cell + "'", line_no);
      if (rescale_255) v /= 255.0;
      if (v < 0.0 || v > 1.0)
        throw DataError("value " + std::to_string(v) + " outside [0, 1] at line " +
                        std::to_string(line_no) +
                        (rescale_255 ? "" : " (use the /255 rescale for 0..255 data)"));
      ds.dense.push_back(v);
      ++cols;
      start = end + 1;
      if (end == line.size()) break;
    }
    if (n_rows == 0) {
      ds.dense_cols = cols;
    } else if (cols != ds.dense_cols) {
      throw ParseError("row has " + std::to_string(cols) + " cells, expected " +
                           std::to_string(ds.dense_cols),
                       line_no);
    }
    ++n_rows;
  }
  if (n_rows == 0) throw DataError("no samples in " + path);
  if (!labels_path.empty()) {
    auto label_lines = read_lines(labels_path);
    if (label_lines.size() != n_rows)
      throw ParseError("label count " + std::to_string(label_lines.size()) +
                       " does not match " + std::to_string(n_rows) + " samples");
    ds.labels = map_labels(label_lines, ds.label_names);
  }
  return ds;
}

void write_mtx(const CountMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "%%MatrixMarket matrix coordinate integer general\n";
  out << m.n_samples << " " << m.n_genes_total << " " << m.val.size() << "\n";
  for (std::size_t i = 0; i < m.n_samples; ++i)
    for (std::size_t p = m.indptr[i]; p < m.indptr[i + 1]; ++p)
      out << i + 1 << " " << m.kept_genes[m.col[p]] + 1 << " "
          << static_cast<long long>(m.val[p]) << "\n";
}

const std::vector<std::size_t>& Split::by_name(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ContractError("unknown split name: " + name);
}

Split make_split(std::size_t n, const SplitSpec& spec) {
  if (spec.train < 0.0 || spec.val < 0.0 || spec.test < 0.0)
    throw ContractError("split fractions must be nonnegative");
  if (std::fabs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw ContractError("split fractions must sum to 1");
  Rng rng(spec.seed);
  auto perm = rng.permutation(n);
  const std::size_t n_train = static_cast<std::size_t>(std::floor(spec.train * n));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(spec.val * n));
  Split s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  return s;
}

}  // namespace dgd
