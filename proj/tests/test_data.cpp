#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "dgd/data.hpp"
#include "dgd/errors.hpp"

using dgd::Dataset;
using dgd::load_dense_csv;
using dgd::load_mtx;
using dgd::make_split;
using dgd::SplitSpec;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dgd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

}  // namespace

TEST_CASE("toy mtx: scales, kept genes, csr layout") {
  TempDir dir;
  const auto mtx = dir.file("toy.mtx",
                            "%%MatrixMarket matrix coordinate integer general\n"
                            "% a comment\n"
                            "2 3 2\n"
                            "1 1 5\n"
                            "2 3 2\n");
  auto ds = load_mtx(mtx);
  CHECK(ds.profile == dgd::Profile::kCounts);
  CHECK(ds.counts.n_samples == 2);
  CHECK(ds.counts.n_genes_total == 3);
  CHECK(ds.counts.scale == std::vector<double>{5.0, 2.0});
  CHECK(ds.counts.kept_genes == std::vector<std::uint32_t>{0, 2});
  CHECK(ds.features() == 2);

  std::vector<double> batch(2 * 2, -1.0);
  ds.fill_batch({0, 1}, batch.data());
  CHECK(batch == std::vector<double>{5, 0, 0, 2});
}

TEST_CASE("empty matrix is a data error") {
  TempDir dir;
  const auto mtx = dir.file("empty.mtx",
                            "%%MatrixMarket matrix coordinate integer general\n"
                            "0 0 0\n");
  CHECK_THROWS_WITH_AS(load_mtx(mtx), doctest::Contains("no samples"), dgd::DataError);
}

TEST_CASE("sample with no counts is rejected with its index") {
  TempDir dir;
  const auto mtx = dir.file("zero_row.mtx",
                            "%%MatrixMarket matrix coordinate integer general\n"
                            "3 2 2\n"
                            "1 1 4\n"
                            "3 2 1\n");
  CHECK_THROWS_WITH_AS(load_mtx(mtx), doctest::Contains("sample 1"), dgd::DataError);
}

TEST_CASE("parse errors carry line numbers") {
  TempDir dir;
  const auto bad_value = dir.file("bad.mtx",
                                  "%%MatrixMarket matrix coordinate integer general\n"
                                  "2 2 1\n"
                                  "1 1 2.5\n");
  CHECK_THROWS_WITH_AS(load_mtx(bad_value), doctest::Contains("line 3"), dgd::ParseError);

  const auto negative = dir.file("neg.mtx",
                                 "%%MatrixMarket matrix coordinate integer general\n"
                                 "2 2 1\n"
                                 "1 1 -3\n");
  CHECK_THROWS_AS(load_mtx(negative), dgd::ParseError);

  const auto bad_header = dir.file("hdr.mtx", "%%MatrixMarket matrix array real general\n1 1\n");
  CHECK_THROWS_AS(load_mtx(bad_header), dgd::ParseError);
}

TEST_CASE("orientation auto-detection from label and gene files") {
  TempDir dir;
  // 3 genes x 2 samples, samples as columns (10x layout)
  const auto mtx = dir.file("cols.mtx",
                            "%%MatrixMarket matrix coordinate integer general\n"
                            "3 2 3\n"
                            "1 1 7\n"
                            "3 1 1\n"
                            "2 2 4\n");
  const auto labels = dir.file("labels.txt", "typeA\ntypeB\n");
  const auto genes = dir.file("genes.txt", "g1\ng2\ng3\n");
  auto ds = load_mtx(mtx, genes, labels);
  CHECK(ds.counts.n_samples == 2);
  CHECK(ds.counts.n_genes_total == 3);
  CHECK(ds.counts.scale == std::vector<double>{7.0, 4.0});
  CHECK(ds.labels == std::vector<int>{0, 1});
  CHECK(ds.label_names == std::vector<std::string>{"typeA", "typeB"});
  CHECK(ds.counts.gene_names == std::vector<std::string>{"g1", "g2", "g3"});

  // explicit override wins
  dgd::MtxOptions opts;
  opts.orientation = dgd::MtxOptions::Orientation::kRowsAreSamples;
  CHECK_THROWS_AS(load_mtx(mtx, genes, labels, opts), dgd::ParseError);  // label len mismatch

  const auto bad_labels = dir.file("bad_labels.txt", "a\nb\nc\nd\n");
  CHECK_THROWS_AS(load_mtx(mtx, "", bad_labels), dgd::ParseError);
}

TEST_CASE("duplicate coordinates are summed") {
  TempDir dir;
  const auto mtx = dir.file("dup.mtx",
                            "%%MatrixMarket matrix coordinate integer general\n"
                            "1 2 3\n"
                            "1 1 2\n"
                            "1 1 3\n"
                            "1 2 1\n");
  auto ds = load_mtx(mtx);
  CHECK(ds.counts.scale == std::vector<double>{5.0});
  CHECK(ds.counts.val == std::vector<double>{5.0, 1.0});
}

TEST_CASE("mtx round trip preserves the triplet set") {
  TempDir dir;
  const auto mtx = dir.file("rt.mtx",
                            "%%MatrixMarket matrix coordinate integer general\n"
                            "3 4 5\n"
                            "3 1 2\n"
                            "1 2 9\n"
                            "2 4 1\n"
                            "1 4 3\n"
                            "2 1 6\n");
  auto first = load_mtx(mtx);
  const auto out = (dir.path / "rt_out.mtx").string();
  dgd::write_mtx(first.counts, out);
  auto second = load_mtx(out);
  CHECK(first.counts.indptr == second.counts.indptr);
  CHECK(first.counts.col == second.counts.col);
  CHECK(first.counts.val == second.counts.val);
  CHECK(first.counts.kept_genes == second.counts.kept_genes);
  CHECK(first.counts.scale == second.counts.scale);
}

TEST_CASE("dense csv: shapes, rescale, and range checks") {
  TempDir dir;
  std::string row784;
  for (int i = 0; i < 784; ++i) row784 += (i ? ",0.5" : "0.5");
  const auto csv = dir.file("img.csv", row784 + "\n" + row784 + "\n");
  auto ds = load_dense_csv(csv);
  CHECK(ds.features() == 784);
  CHECK(ds.size() == 2);

  const auto bytes = dir.file("bytes.csv", "0,128,255\n255,0,64\n");
  auto scaled = load_dense_csv(bytes, /*rescale_255=*/true);
  CHECK(scaled.dense[1] == doctest::Approx(128.0 / 255.0));
  CHECK_THROWS_AS(load_dense_csv(bytes, false), dgd::DataError);  // 300-style range error

  const auto bad = dir.file("bad.csv", "0.5,oops\n");
  CHECK_THROWS_WITH_AS(load_dense_csv(bad), doctest::Contains("line 1"), dgd::ParseError);

  const auto ragged = dir.file("ragged.csv", "0.1,0.2\n0.3\n");
  CHECK_THROWS_AS(load_dense_csv(ragged), dgd::ParseError);
}

TEST_CASE("split: sizes, determinism, and partition property") {
  SplitSpec spec{0.8, 0.1, 0.1, 42};
  auto s = make_split(10, spec);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 1);

  auto again = make_split(10, spec);
  CHECK(s.train == again.train);
  CHECK(s.val == again.val);
  CHECK(s.test == again.test);

  // partition: disjoint and covering
  std::set<std::size_t> all;
  for (auto* part : {&s.train, &s.val, &s.test})
    for (std::size_t i : *part) CHECK(all.insert(i).second);
  CHECK(all.size() == 10);

  auto everything = make_split(7, {1.0, 0.0, 0.0, 1});
  CHECK(everything.train.size() == 7);
  CHECK(everything.test.empty());

  CHECK_THROWS_AS(make_split(10, {0.5, 0.2, 0.2, 0}), dgd::ContractError);
  CHECK_THROWS_AS(make_split(10, {-0.1, 0.6, 0.5, 0}), dgd::ContractError);
}

TEST_CASE("split size drift stays within one sample of exact fractions") {
  for (std::size_t n : {10, 13, 97, 1000}) {
    SplitSpec spec{0.81, 0.09, 0.10, 7};
    auto s = make_split(n, spec);
    CHECK(std::fabs(static_cast<double>(s.train.size()) - 0.81 * n) <= 1.0);
    CHECK(std::fabs(static_cast<double>(s.val.size()) - 0.09 * n) <= 1.0);
    CHECK(std::fabs(static_cast<double>(s.test.size()) - 0.10 * n) <= 1.0 + 1.0);
    CHECK(s.train.size() + s.val.size() + s.test.size() == n);
  }
}

TEST_CASE("unknown split name is a contract error") {
  dgd::Split s;
  CHECK_THROWS_AS(s.by_name("validation"), dgd::ContractError);
}
