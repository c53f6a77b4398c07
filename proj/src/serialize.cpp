#include "eegintent/serialize.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <memory>

namespace eegintent {

namespace {

double finite_number(const Json& j, const char* what) {
  if (!j.is_number()) throw DataError(std::string("expected a number in ") + what);
  return j.get<double>();
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw DataError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw DataError("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = finite_number(row[static_cast<std::size_t>(c)], "matrix");
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw DataError("vector must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = finite_number(j[i], "vector");
  return v;
}

Json to_json(const Standardizer& s) {
  Json j;
  j["type"] = "standardizer";
  j["mean"] = vector_to_json(s.mean);
  j["sd"] = vector_to_json(s.sd);
  Json mask = Json::array();
  for (bool b : s.constant_mask) mask.push_back(b);
  j["constant_mask"] = std::move(mask);
  return j;
}

Standardizer standardizer_from_json(const Json& j) {
  Standardizer s;
  s.mean = vector_from_json(field(j, "mean"));
  s.sd = vector_from_json(field(j, "sd"));
  for (const auto& b : field(j, "constant_mask")) s.constant_mask.push_back(b.get<bool>());
  if (s.sd.size() != s.mean.size() || s.constant_mask.size() != static_cast<std::size_t>(s.mean.size())) {
    throw DataError("standardizer fields differ in length");
  }
  return s;
}

Json to_json(const PcaModel& m) {
  Json j;
  j["type"] = "pca";
  j["n_components"] = m.n_components();
  j["n_features"] = m.components.cols();
  j["components"] = matrix_to_json(m.components);
  j["explained_variance"] = vector_to_json(m.explained_variance);
  j["explained_variance_ratio"] = vector_to_json(m.explained_variance_ratio);
  j["training_mean"] = vector_to_json(m.training_mean);
  return j;
}

PcaModel pca_from_json(const Json& j) {
  PcaModel m;
  m.components = matrix_from_json(field(j, "components"));
  m.explained_variance = vector_from_json(field(j, "explained_variance"));
  m.explained_variance_ratio = vector_from_json(field(j, "explained_variance_ratio"));
  m.training_mean = vector_from_json(field(j, "training_mean"));
  if (field(j, "n_components").get<int>() != m.n_components() || m.training_mean.size() != m.components.cols()) {
    throw DataError("pca document shapes disagree");
  }
  return m;
}

Json to_json(const HmmModel& m) {
  Json j;
  j["type"] = "gaussian_hmm";
  j["n_states"] = m.n_states();
  j["n_dims"] = m.n_dims();
  j["covariance"] = m.covariance == CovarianceType::Diagonal ? "diagonal" : "full";
  j["initial"] = vector_to_json(m.initial);
  j["transition"] = matrix_to_json(m.transition);
  j["means"] = matrix_to_json(m.means);
  if (m.covariance == CovarianceType::Diagonal) {
    j["variances"] = matrix_to_json(m.variances);
  } else {
    Json covs = Json::array();
    for (const auto& c : m.covariances) covs.push_back(matrix_to_json(c));
    j["covariances"] = std::move(covs);
  }
  return j;
}

HmmModel hmm_from_json(const Json& j) {
  HmmModel m;
  const auto cov = field(j, "covariance").get<std::string>();
  if (cov == "diagonal") {
    m.covariance = CovarianceType::Diagonal;
  } else if (cov == "full") {
    m.covariance = CovarianceType::Full;
  } else {
    throw DataError("unknown covariance type '" + cov + "'");
  }
  m.initial = vector_from_json(field(j, "initial"));
  m.transition = matrix_from_json(field(j, "transition"));
  m.means = matrix_from_json(field(j, "means"));
  if (m.covariance == CovarianceType::Diagonal) {
    m.variances = matrix_from_json(field(j, "variances"));
  } else {
    for (const auto& c : field(j, "covariances")) m.covariances.push_back(matrix_from_json(c));
  }
  if (field(j, "n_states").get<int>() != m.n_states()) throw DataError("n_states disagrees with the initial vector");
  try {
    check_model(m);
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid hmm document: ") + e.what());
  }
  return m;
}

Json to_json(const FitReport& r) {
  Json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["variance_floor_hit"] = r.variance_floor_hit;
  j["underdetermined"] = r.underdetermined;
  j["log_likelihood_trace"] = r.log_likelihood_trace;
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

}  // namespace eegintent
