#pragma once

// JSON documents for fitted models and a SHA-256 helper for run manifests.

#include "eegintent/hmm.hpp"
#include "eegintent/preprocess.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace eegintent {

using Json = nlohmann::ordered_json;

/// Matrices are arrays of rows.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const Json& j);

Json to_json(const PcaModel& m);
PcaModel pca_from_json(const Json& j);

Json to_json(const HmmModel& m);
HmmModel hmm_from_json(const Json& j);

Json to_json(const FitReport& r);

/// Pretty-printed with a trailing newline. Doubles use shortest round-trip
/// formatting, so writing the same value twice gives identical bytes.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Lower-case hex digest of the file contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace eegintent
