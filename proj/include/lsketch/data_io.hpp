#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsketch/dataset.hpp"
#include "lsketch/errors.hpp"
#include "lsketch/io.hpp"
#include "lsketch/matrix.hpp"
#include "lsketch/rng.hpp"

namespace lsketch {

/// Matrices A_i = B C_i + noise_level G_i sharing one column basis B.
///
/// B (n x r) is drawn from `family_seed` alone, so every call with the same
/// family seed sees the same subspace. Row j of B is scaled by a log-normal
/// weight with log-stddev `row_spread`, giving rows of A unequal energy; the
/// weights come from `profile_seed`, so families with different family seeds
/// still share this row-energy profile. Row t of C_i is scaled by `decay^t`,
/// so the leading directions of B dominate consistently across the family.
struct SyntheticFamilySpec {
  std::size_t n = 100;
  std::size_t d = 80;
  std::size_t rank = 8;
  double noise_level = 0.05;
  std::uint64_t family_seed = 1;
  std::size_t count = 20;
  double decay = 0.8;
  double row_spread = 1.0;
  std::uint64_t profile_seed = 0;

  void validate() const {
    if (n == 0 || d == 0 || count == 0) throw DimensionError("synthetic family: n, d and count must be positive");
    if (rank == 0 || rank > std::min(n, d)) throw DimensionError("synthetic family: rank must lie in [1, min(n, d)]");
    if (noise_level < 0.0 || decay <= 0.0 || row_spread < 0.0)
      throw Error("synthetic family: noise_level, decay and row_spread must be nonnegative");
  }
};

/// The family's shared basis B.
inline Matrix family_basis(const SyntheticFamilySpec& spec) {
  spec.validate();
  RngStream rng(spec.family_seed, streams::kData);
  RngStream profile(spec.profile_seed, streams::kData + 100);
  Matrix b(spec.n, spec.rank);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double w = std::exp(spec.row_spread * profile.normal());
    for (double& x : b.row(i)) x = w * rng.normal();
  }
  return b;
}

inline MatrixDataset generate_shared_subspace(const SyntheticFamilySpec& spec, RngStream rng,
                                              DatasetRole role = DatasetRole::Train) {
  const Matrix b = family_basis(spec);
  MatrixDataset ds;
  ds.role = role;
  ds.provenance = "synthetic:n=" + std::to_string(spec.n) + ",d=" + std::to_string(spec.d) +
                  ",r=" + std::to_string(spec.rank) + ",noise=" + io::format_double(spec.noise_level) +
                  ",family_seed=" + std::to_string(spec.family_seed) +
                  ",profile_seed=" + std::to_string(spec.profile_seed);
  ds.matrices.reserve(spec.count);
  const double c_scale = 1.0 / std::sqrt(static_cast<double>(spec.rank));
  for (std::size_t t = 0; t < spec.count; ++t) {
    Matrix c(spec.rank, spec.d);
    double w = c_scale;
    for (std::size_t i = 0; i < spec.rank; ++i, w *= spec.decay)
      for (double& x : c.row(i)) x = w * rng.normal();
    Matrix a = matmul(b, c);
    if (spec.noise_level > 0.0)
      for (double& x : a.data()) x += spec.noise_level * rng.normal();
    ds.matrices.push_back(std::move(a));
  }
  return ds;
}

/// Rescales every matrix to Frobenius norm `target` (zero matrices are left alone).
inline void normalize_fro(MatrixDataset& ds, double target = 1.0) {
  if (!(target > 0.0) || !std::isfinite(target)) throw Error("normalize_fro: target norm must be positive");
  for (auto& a : ds.matrices) {
    const double f = frobenius_norm(a);
    if (f > 0.0) a *= target / f;
  }
}

enum class MatrixFormat { Pgm, Csv, Rawbin };

inline MatrixFormat format_from_name(std::string_view s) {
  if (s == "pgm") return MatrixFormat::Pgm;
  if (s == "csv") return MatrixFormat::Csv;
  if (s == "rawbin" || s == "bin") return MatrixFormat::Rawbin;
  throw Error("unknown matrix format '" + std::string(s) + "'");
}

inline std::string_view format_extension(MatrixFormat f) {
  switch (f) {
    case MatrixFormat::Pgm: return ".pgm";
    case MatrixFormat::Csv: return ".csv";
    case MatrixFormat::Rawbin: return ".bin";
  }
  return "";
}

inline Matrix load_matrix_file(const std::filesystem::path& p, MatrixFormat format) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot open " + p.string());
  switch (format) {
    case MatrixFormat::Pgm: return io::read_pgm(is, p.string());
    case MatrixFormat::Csv: return io::read_csv(is, p.string());
    case MatrixFormat::Rawbin: return io::read_rawbin(is, p.string());
  }
  throw Error("bad format");
}

/// Loads every file with the format's extension, in lexicographic path order.
inline MatrixDataset load_matrix_dir(const std::filesystem::path& dir, MatrixFormat format,
                                     DatasetRole role = DatasetRole::Train) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == format_extension(format)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw IoError(dir.string() + ": no " + std::string(format_extension(format)) + " files");
  }
  MatrixDataset ds;
  ds.role = role;
  ds.provenance = dir.string();
  for (const auto& f : files) {
    Matrix a = load_matrix_file(f, format);
    if (!ds.matrices.empty() && !a.same_shape(ds.matrices.front())) {
      throw DimensionError(f.string() + " is " + a.shape_string() + ", expected " +
                           ds.matrices.front().shape_string());
    }
    ds.matrices.push_back(std::move(a));
  }
  return ds;
}

inline void save_matrix_dir(const std::filesystem::path& dir, const MatrixDataset& ds, MatrixFormat format) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "m%05zu", i);
    const auto path = dir / (std::string(name) + std::string(format_extension(format)));
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    switch (format) {
      case MatrixFormat::Pgm: io::write_pgm(os, ds.matrices[i]); break;
      case MatrixFormat::Csv: io::write_csv(os, ds.matrices[i]); break;
      case MatrixFormat::Rawbin: io::write_rawbin(os, ds.matrices[i]); break;
    }
    if (!os) throw IoError("write failed: " + path.string());
  }
}

/// Disjoint random index sets of the given sizes; deterministic per stream.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t size,
                                                                                   std::size_t train_count,
                                                                                   std::size_t test_count,
                                                                                   RngStream rng) {
  if (train_count + test_count > size) throw Error("split: counts exceed dataset size");
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  return {std::vector<std::size_t>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(train_count)),
          std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(train_count),
                                   idx.begin() + static_cast<std::ptrdiff_t>(train_count + test_count))};
}

/// Disjoint random train/test subsets.
inline std::pair<MatrixDataset, MatrixDataset> split(const MatrixDataset& ds, std::size_t train_count,
                                                     std::size_t test_count, RngStream rng) {
  if (train_count + test_count > ds.size()) {
    throw Error("split: " + std::to_string(train_count) + " + " + std::to_string(test_count) +
                " exceeds dataset size " + std::to_string(ds.size()));
  }
  const auto [train_idx, test_idx] = split_indices(ds.size(), train_count, test_count, rng);
  MatrixDataset train{{}, DatasetRole::Train, ds.provenance + "#train"};
  MatrixDataset test{{}, DatasetRole::Test, ds.provenance + "#test"};
  for (std::size_t i : train_idx) train.matrices.push_back(ds.matrices[i]);
  for (std::size_t i : test_idx) test.matrices.push_back(ds.matrices[i]);
  return {std::move(train), std::move(test)};
}

/// Where a dataset comes from: a synthetic family draw or a directory of files.
struct DataSource {
  enum class Kind { Synthetic, Directory };
  Kind kind = Kind::Synthetic;
  SyntheticFamilySpec family;
  std::uint64_t seed = 0;  // per-matrix draws; the family basis depends on family.family_seed only
  std::filesystem::path dir;
  MatrixFormat format = MatrixFormat::Rawbin;
  std::optional<double> normalize_to;  // target Frobenius norm, if set

  static DataSource synthetic(SyntheticFamilySpec family, std::uint64_t seed) {
    DataSource d;
    d.family = family;
    d.seed = seed;
    return d;
  }
  static DataSource directory(std::filesystem::path dir, MatrixFormat format) {
    DataSource d;
    d.kind = Kind::Directory;
    d.dir = std::move(dir);
    d.format = format;
    return d;
  }
};

inline MatrixDataset load_dataset(const DataSource& src, DatasetRole role) {
  MatrixDataset ds = src.kind == DataSource::Kind::Synthetic
                         ? generate_shared_subspace(src.family, RngStream(src.seed, streams::kData), role)
                         : load_matrix_dir(src.dir, src.format, role);
  if (src.normalize_to) normalize_fro(ds, *src.normalize_to);
  ds.validate();
  return ds;
}

}  // namespace lsketch
