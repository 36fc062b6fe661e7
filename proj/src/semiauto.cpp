#include "abcnn/semiauto.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

namespace abcnn {

Vector expand_basis(const DataVec& x, const CandidateBasis& basis) {
  if (basis.kind == CandidateBasis::Kind::RawComponents) return x;
  const auto p = x.size();
  Vector out(p * basis.max_degree);
  Vector pow = Vector::Ones(p);
  for (int d = 0; d < basis.max_degree; ++d) {
    pow.array() *= x.array();
    out.segment(d * p, p) = pow;
  }
  return out;
}

Matrix expand_basis_batch(const Matrix& X, const CandidateBasis& basis) {
  if (basis.kind == CandidateBasis::Kind::RawComponents) return X;
  const auto p = X.rows();
  Matrix out(p * basis.max_degree, X.cols());
  Matrix pow = Matrix::Ones(p, X.cols());
  for (int d = 0; d < basis.max_degree; ++d) {
    pow.array() *= X.array();
    out.middleRows(d * p, p) = pow;
  }
  return out;
}

LinearSummary fit_linear_summary(const Dataset& data, const CandidateBasis& basis) {
  data.validate();
  const auto train_idx = data.indices_of(Split::train);
  if (train_idx.empty()) throw std::invalid_argument("fit_linear_summary: no train split");

  const auto q = data.param_dim();
  const auto K = basis.expanded_dim(data.data_dim());
  const auto n = static_cast<Eigen::Index>(train_idx.size());

  // Accumulate Gram and cross moments in chunks, then center analytically.
  Matrix gram = Matrix::Zero(K, K);
  Matrix cross = Matrix::Zero(K, q);
  Vector phi_sum = Vector::Zero(K);
  Vector theta_sum = Vector::Zero(q);
  constexpr Eigen::Index kChunk = 2048;
  Matrix xb, tb;
  for (Eigen::Index begin = 0; begin < n; begin += kChunk) {
    const auto b = std::min(kChunk, n - begin);
    xb.resize(data.data_dim(), b);
    tb.resize(q, b);
    for (Eigen::Index k = 0; k < b; ++k) {
      xb.col(k) = data.xs.col(train_idx[static_cast<std::size_t>(begin + k)]);
      tb.col(k) = data.thetas.col(train_idx[static_cast<std::size_t>(begin + k)]);
    }
    const Matrix phi = expand_basis_batch(xb, basis);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
    cross.noalias() += phi * tb.transpose();
    phi_sum += phi.rowwise().sum();
    theta_sum += tb.rowwise().sum();
  }
  gram = gram.selfadjointView<Eigen::Lower>();

  const Vector phi_mean = phi_sum / static_cast<double>(n);
  const Vector theta_mean = theta_sum / static_cast<double>(n);
  Matrix gram_c = gram - static_cast<double>(n) * phi_mean * phi_mean.transpose();
  const Matrix cross_c = cross - static_cast<double>(n) * phi_mean * theta_mean.transpose();

  auto solve = [&](const Matrix& g) -> std::pair<bool, Matrix> {
    Eigen::LDLT<Matrix> ldlt(g);
    if (ldlt.info() != Eigen::Success) return {false, {}};
    const Vector d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    if (!(dmax > 0.0) || d.minCoeff() <= dmax * 1e-13) return {false, {}};
    Matrix beta_t = ldlt.solve(cross_c);
    if (!beta_t.allFinite()) return {false, {}};
    return {true, std::move(beta_t)};
  };

  auto [ok, beta_t] = solve(gram_c);
  if (!ok) {
    const double ridge = 1e-8 * gram_c.trace();
    std::cerr << "fit_linear_summary: rank-deficient normal equations, ridge fallback (lambda="
              << ridge << ")\n";
    gram_c.diagonal().array() += ridge;
    auto [ok2, beta2] = solve(gram_c);
    if (!ok2) throw std::runtime_error("fit_linear_summary: normal equations unsolvable even with ridge");
    beta_t = std::move(beta2);
  }

  LinearSummary s;
  s.basis = basis;
  s.coefficients = beta_t.transpose();  // q x K
  s.intercept = theta_mean - s.coefficients * phi_mean;
  return s;
}

void save_linear_summary(const LinearSummary& s, const std::string& path, std::uint64_t seed,
                         std::uint64_t train_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_linear_summary: cannot open " + path);
  nlohmann::json hdr{{"format", "abcnn-model"},
                     {"version", 1},
                     {"kind", "linear-summary"},
                     {"basis", s.basis.tag()},
                     {"q", s.intercept.size()},
                     {"k", s.coefficients.cols()},
                     {"seed", seed},
                     {"train_hash", train_hash}};
  out << hdr.dump() << '\n';
  out.write(reinterpret_cast<const char*>(s.intercept.data()),
            static_cast<std::streamsize>(sizeof(double) * s.intercept.size()));
  out.write(reinterpret_cast<const char*>(s.coefficients.data()),
            static_cast<std::streamsize>(sizeof(double) * s.coefficients.size()));
  if (!out) throw std::runtime_error("save_linear_summary: write failed for " + path);
}

LinearSummary load_linear_summary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_linear_summary: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header line");
  nlohmann::json hdr = nlohmann::json::parse(line, nullptr, false);
  if (hdr.is_discarded()) throw std::runtime_error(path + ": header is not valid JSON");
  if (hdr.value("format", "") != "abcnn-model")
    throw std::runtime_error(path + ": not an abcnn model file");
  if (hdr.value("kind", "") != "linear-summary")
    throw std::runtime_error(path + ": checkpoint kind is not 'linear-summary'");

  LinearSummary s;
  const std::string btag = hdr.value("basis", "");
  if (btag == "raw")
    s.basis = CandidateBasis::raw();
  else if (btag.rfind("poly", 0) == 0)
    s.basis = CandidateBasis::poly(std::stoi(btag.substr(4)));
  else
    throw std::runtime_error(path + ": unknown basis tag '" + btag + "'");

  const auto q = hdr.at("q").get<Eigen::Index>();
  const auto k = hdr.at("k").get<Eigen::Index>();
  if (q < 1 || k < 1) throw std::runtime_error(path + ": degenerate dimensions in header");
  s.intercept.resize(q);
  s.coefficients.resize(q, k);
  in.read(reinterpret_cast<char*>(s.intercept.data()),
          static_cast<std::streamsize>(sizeof(double) * q));
  in.read(reinterpret_cast<char*>(s.coefficients.data()),
          static_cast<std::streamsize>(sizeof(double) * q * k));
  if (!in) throw std::runtime_error(path + ": parameter payload does not match header");
  char extra;
  if (in.read(&extra, 1)) throw std::runtime_error(path + ": trailing bytes beyond declared parameters");
  return s;
}

std::string checkpoint_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint_kind: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header line");
  nlohmann::json hdr = nlohmann::json::parse(line, nullptr, false);
  if (hdr.is_discarded() || hdr.value("format", "") != "abcnn-model")
    throw std::runtime_error(path + ": not an abcnn model file");
  return hdr.value("kind", "");
}

}  // namespace abcnn
