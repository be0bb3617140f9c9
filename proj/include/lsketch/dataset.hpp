#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lsketch/errors.hpp"
#include "lsketch/matrix.hpp"

namespace lsketch {

enum class DatasetRole { Train, Test, Ood };

inline std::string_view role_name(DatasetRole r) {
  switch (r) {
    case DatasetRole::Train: return "train";
    case DatasetRole::Test: return "test";
    case DatasetRole::Ood: return "ood";
  }
  return "unknown";
}

/// Equally shaped matrices sharing one role.
struct MatrixDataset {
  std::vector<Matrix> matrices;
  DatasetRole role = DatasetRole::Train;
  std::string provenance;

  std::size_t size() const noexcept { return matrices.size(); }
  bool empty() const noexcept { return matrices.empty(); }
  std::size_t rows() const { return require_nonempty().front().rows(); }
  std::size_t cols() const { return require_nonempty().front().cols(); }

  const std::vector<Matrix>& require_nonempty() const {
    if (matrices.empty()) throw Error("dataset '" + provenance + "' is empty");
    return matrices;
  }

  void validate() const {
    require_nonempty();
    const Matrix& first = matrices.front();
    if (first.empty()) throw DimensionError("dataset '" + provenance + "' has an empty matrix");
    for (std::size_t i = 1; i < matrices.size(); ++i) {
      if (!matrices[i].same_shape(first)) {
        throw DimensionError("dataset '" + provenance + "': matrix " + std::to_string(i) + " is " +
                             matrices[i].shape_string() + ", expected " + first.shape_string());
      }
    }
  }
};

}  // namespace lsketch
