#pragma once

#include "geosteer/manifolds.hpp"
#include "geosteer/surrogate.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace geosteer {

inline constexpr int kFormatVersion = 1;

/// Malformed or unsupported file contents.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Waypoint distributions recorded from a model, scored without an evaluable map.
struct RecordedTrajectory {
  std::string strategy;
  std::string label_a;
  std::string label_b;
  Mat distributions;  // waypoints x classes
};

/// Surrogate behavior map settings stored with generated datasets.
struct SurrogateRecord {
  SurrogateParams params;
  Mat centers;
  Mat frame;

  SoftmaxDistanceMap behavior_map() const {
    return SoftmaxDistanceMap(centers, params.temperature, params.other_floor);
  }
};

struct DatasetFile {
  int version = kFormatVersion;
  ConceptSpace space;
  LabeledSamples activations;
  LabeledSamples distributions;
  std::vector<RecordedTrajectory> trajectories;
  std::optional<SurrogateRecord> surrogate;
  /// Free-form provenance (layer, token position, config hash, seed).
  nlohmann::json metadata = nlohmann::json::object();

  /// Checks dimensions, labels and simplex membership; throws FormatError.
  void validate() const;
};

DatasetFile dataset_from_synthetic(const SyntheticDataset& data);

struct ManifoldsFile {
  int version = kFormatVersion;
  ActivationManifold activation;
  BehaviorManifold behavior;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const ConceptSpace& space);
ConceptSpace concept_space_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Parameterization& param);
Parameterization parameterization_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SurrogateParams& params);
SurrogateParams surrogate_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DatasetFile& data);
/// Distribution rows with non-positive entries are clipped to 1e-12 and
/// renormalised; rows that already lie on the simplex are kept bit-exact.
DatasetFile dataset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ManifoldsFile& m);
ManifoldsFile manifolds_from_json(const nlohmann::json& j);

std::string dump(const nlohmann::json& j);
/// Writes to a temporary sibling then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

void save_dataset(const std::filesystem::path& path, const DatasetFile& data);
DatasetFile load_dataset(const std::filesystem::path& path);
void save_manifolds(const std::filesystem::path& path, const ManifoldsFile& m);
ManifoldsFile load_manifolds(const std::filesystem::path& path);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace geosteer
