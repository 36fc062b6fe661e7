#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace abcnn {

// Parameter point theta in R^q and one data instance X in R^p.
using ParamVec = Eigen::VectorXd;
using DataVec = Eigen::VectorXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

// Aligned (theta, X) pairs stored column-wise: thetas is q x N, xs is p x N,
// so sample i is (thetas.col(i), xs.col(i)). Column storage keeps one sample
// contiguous in memory and maps directly onto the on-disk record layout.
struct Dataset {
  Matrix thetas;               // q x N
  Matrix xs;                   // p x N
  std::vector<Split> splits;   // length N
  std::uint64_t seed = 0;
  std::string model_tag;

  Eigen::Index size() const { return thetas.cols(); }
  Eigen::Index param_dim() const { return thetas.rows(); }
  Eigen::Index data_dim() const { return xs.rows(); }

  void validate() const {
    if (thetas.cols() != xs.cols() || static_cast<Eigen::Index>(splits.size()) != thetas.cols())
      throw std::invalid_argument("Dataset: thetas, xs and splits must have the same count");
    if (thetas.cols() == 0) throw std::invalid_argument("Dataset: must hold at least one pair");
    if (!thetas.allFinite() || !xs.allFinite())
      throw std::invalid_argument("Dataset: entries must be finite");
  }

  std::vector<Eigen::Index> indices_of(Split s) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < size(); ++i)
      if (splits[i] == s) out.push_back(i);
    return out;
  }

  // Copies the selected pairs into a new dataset.
  Dataset subset(const std::vector<Eigen::Index>& idx) const {
    Dataset out;
    out.thetas.resize(param_dim(), static_cast<Eigen::Index>(idx.size()));
    out.xs.resize(data_dim(), static_cast<Eigen::Index>(idx.size()));
    out.splits.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.thetas.col(static_cast<Eigen::Index>(k)) = thetas.col(idx[k]);
      out.xs.col(static_cast<Eigen::Index>(k)) = xs.col(idx[k]);
      out.splits.push_back(splits[idx[k]]);
    }
    out.seed = seed;
    out.model_tag = model_tag;
    return out;
  }

  // FNV-1a over the header fields and the raw pair bytes. Used to stamp
  // model checkpoints with the identity of their training data.
  std::uint64_t content_hash() const;
};

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);

inline std::uint64_t fnv1a_str(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace abcnn
