#pragma once

#include "geosteer/serialization.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace geosteer {

/// Invalid flag combination or value; the CLI exits with status 2.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Every CLI flag. A config file holds the same keys.
struct RunConfig {
  std::string kind = "cyclic";
  int labels = 7;
  int rows = 5;
  int cols = 5;
  double period = 0.0;
  std::uint64_t seed = 0;
  double noise = 0.02;
  int ambient_dim = 128;
  int samples = 20;

  std::string out = "out";
  std::string dataset;    // default <out>/dataset.json
  std::string manifolds;  // default <out>/manifolds.json

  int pca_dim = 64;
  int interior = -1;  // -1 picks by label count
  int waypoints = 50;
  int pairs = 50;
  std::vector<std::string> strategies{"linear", "manifold"};
  std::optional<double> alpha;
  int bases = 16;
  double base_sigma = 0.01;
  // Without it the pullback bows outward off the cyclic surrogate to soften
  // the map's label transitions.
  double norm_reg = 1e-3;
  bool quiet = false;

  void validate() const;
  std::string dataset_path() const;
  std::string manifolds_path() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Overrides fields of `base` with the keys present in `j`; unknown keys are an error.
RunConfig apply_config(RunConfig base, const nlohmann::json& j);
/// FNV-1a of the settings that affect results (paths and verbosity excluded).
std::string config_hash(const RunConfig& c);

struct MeanSe {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};
MeanSe mean_stderr(const std::vector<double>& xs);

struct PairedTest {
  std::size_t n = 0;
  double mean_difference = 0.0;  // mean of a - b
  double stderr_difference = 0.0;
  double t = 0.0;
  double p_value = 1.0;  // two-sided
};
/// Paired t-test of a against b. Throws InsufficientData for fewer than two pairs.
PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Ordered label pairs (i != j); when more than `max_pairs` exist a seeded
/// sample is drawn and returned in index order.
std::vector<std::pair<std::size_t, std::size_t>> select_pairs(std::size_t label_count, int max_pairs,
                                                              std::uint64_t seed);

ConceptSpace space_from_config(const RunConfig& c);

/// Each command returns the number of warnings; errors throw.
int cmd_generate(const RunConfig& c, std::ostream& log);
int cmd_fit(const RunConfig& c, std::ostream& log);
int cmd_isometry(const RunConfig& c, std::ostream& log);
int cmd_steer(const RunConfig& c, std::ostream& log);
int cmd_pullback(const RunConfig& c, std::ostream& log);
int cmd_report(const RunConfig& c, std::ostream& log);

}  // namespace geosteer
