#include "geosteer/commands.hpp"

#include "geosteer/isometry.hpp"
#include "geosteer/pullback.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace geosteer {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  if (!std::isfinite(x)) throw std::logic_error("non-finite value in report table");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Table {
public:
  explicit Table(std::vector<std::string> header) : width_(header.size()) { add(std::move(header)); }

  void add(std::vector<std::string> row) {
    if (row.size() != width_) throw std::logic_error("table row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_field(row[i]);
    }
    text_ += '\n';
  }
  void write(const fs::path& path) const { write_text_atomic(path, text_); }

private:
  std::size_t width_;
  std::string text_;
};

// Settings that affect results; paths and verbosity are left out so that
// reruns in another directory produce identical files.
json result_settings(const RunConfig& c) {
  json j = to_json(c);
  for (const char* k : {"out", "dataset", "manifolds", "quiet"}) j.erase(k);
  return j;
}

json metadata(const RunConfig& c) {
  return {{"version", kFormatVersion}, {"config_hash", config_hash(c)}, {"seed", c.seed}, {"config", result_settings(c)}};
}

void say(const RunConfig& c, std::ostream& log, const std::string& line) {
  if (!c.quiet) log << line << '\n';
}

int report_warnings(const RunConfig& c, std::ostream& log, const Diagnostics& diag) {
  if (!c.quiet) {
    for (const auto& w : diag.warnings) log << "warning: " << w << '\n';
  }
  return static_cast<int>(diag.warnings.size());
}

std::string pair_name(const ConceptSpace& space, std::size_t i, std::size_t j) {
  return space.labels()[i] + "->" + space.labels()[j];
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<Strategy> out;
  for (const auto& n : names) {
    Strategy s;
    try {
      s = strategy_from_string(n);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (s != Strategy::linear && s != Strategy::manifold) {
      throw UsageError("steer supports the strategies linear and manifold, not '" + n + "'");
    }
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw UsageError("no steering strategies given");
  return out;
}

Vec first3(const PcaBasis& pca, const Vec& h) {
  Vec z = pca.project(h);
  Vec out = Vec::Zero(3);
  const Eigen::Index n = std::min<Eigen::Index>(3, z.size());
  out.head(n) = z.head(n);
  return out;
}

ManifoldsFile load_fitted(const RunConfig& c) {
  if (!fs::exists(c.manifolds_path())) {
    throw std::runtime_error("no fitted manifolds at " + c.manifolds_path() + " (run fit first)");
  }
  return load_manifolds(c.manifolds_path());
}

void check_same_labels(const ManifoldsFile& m, const DatasetFile& d) {
  if (m.activation.space().labels() != d.space.labels()) {
    throw std::runtime_error("manifolds and dataset disagree on labels");
  }
}

void write_section(const RunConfig& c, const std::string& name, const json& j) {
  write_text_atomic(fs::path(c.out) / (name + ".json"), dump(j));
}

}  // namespace

void RunConfig::validate() const {
  if (kind != "cyclic" && kind != "sequential" && kind != "grid" && kind != "cylinder") {
    throw UsageError("unknown kind '" + kind + "' (cyclic, sequential, grid, cylinder)");
  }
  if (labels < 3) throw UsageError("--labels must be >= 3");
  if (rows < 2 || cols < 2) throw UsageError("--rows and --cols must be >= 2");
  if (period < 0.0 || !std::isfinite(period)) throw UsageError("--period must be >= 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw UsageError("--noise must be >= 0");
  if (ambient_dim < 2) throw UsageError("--ambient-dim must be >= 2");
  if (samples < 1) throw UsageError("--samples must be >= 1");
  if (pca_dim < 1) throw UsageError("--pca-dim must be >= 1");
  if (waypoints < 1) throw UsageError("--waypoints must be >= 1");
  if (pairs < 1) throw UsageError("--pairs must be >= 1");
  if (bases < 1) throw UsageError("--bases must be >= 1");
  if (!(base_sigma >= 0.0)) throw UsageError("--base-sigma must be >= 0");
  if (!(norm_reg >= 0.0)) throw UsageError("--norm-reg must be >= 0");
  if (alpha && !(*alpha >= 0.0 && std::isfinite(*alpha))) throw UsageError("--alpha must be >= 0");
  if (out.empty()) throw UsageError("--out must not be empty");
  parse_strategies(strategies);
}

std::string RunConfig::dataset_path() const {
  return dataset.empty() ? (fs::path(out) / "dataset.json").string() : dataset;
}

std::string RunConfig::manifolds_path() const {
  return manifolds.empty() ? (fs::path(out) / "manifolds.json").string() : manifolds;
}

json to_json(const RunConfig& c) {
  return {{"kind", c.kind},
          {"labels", c.labels},
          {"rows", c.rows},
          {"cols", c.cols},
          {"period", c.period},
          {"seed", c.seed},
          {"noise", c.noise},
          {"ambient_dim", c.ambient_dim},
          {"samples", c.samples},
          {"out", c.out},
          {"dataset", c.dataset},
          {"manifolds", c.manifolds},
          {"pca_dim", c.pca_dim},
          {"interior", c.interior},
          {"waypoints", c.waypoints},
          {"pairs", c.pairs},
          {"strategies", c.strategies},
          {"alpha", c.alpha ? json(*c.alpha) : json(nullptr)},
          {"bases", c.bases},
          {"base_sigma", c.base_sigma},
          {"norm_reg", c.norm_reg},
          {"quiet", c.quiet}};
}

RunConfig apply_config(RunConfig c, const json& j) {
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "kind") c.kind = v.get<std::string>();
      else if (key == "labels") c.labels = v.get<int>();
      else if (key == "rows") c.rows = v.get<int>();
      else if (key == "cols") c.cols = v.get<int>();
      else if (key == "period") c.period = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "noise") c.noise = v.get<double>();
      else if (key == "ambient_dim") c.ambient_dim = v.get<int>();
      else if (key == "samples") c.samples = v.get<int>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "dataset") c.dataset = v.get<std::string>();
      else if (key == "manifolds") c.manifolds = v.get<std::string>();
      else if (key == "pca_dim") c.pca_dim = v.get<int>();
      else if (key == "interior") c.interior = v.get<int>();
      else if (key == "waypoints") c.waypoints = v.get<int>();
      else if (key == "pairs") c.pairs = v.get<int>();
      else if (key == "strategies") c.strategies = v.get<std::vector<std::string>>();
      else if (key == "alpha") c.alpha = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "bases") c.bases = v.get<int>();
      else if (key == "base_sigma") c.base_sigma = v.get<double>();
      else if (key == "norm_reg") c.norm_reg = v.get<double>();
      else if (key == "quiet") c.quiet = v.get<bool>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const json::type_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return c;
}

std::string config_hash(const RunConfig& c) {
  return fnv1a_hex(result_settings(c).dump());
}

MeanSe mean_stderr(const std::vector<double>& xs) {
  MeanSe r;
  r.n = xs.size();
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return r;
}

PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: length mismatch");
  if (a.size() < 2) throw InsufficientData("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const MeanSe m = mean_stderr(d);
  PairedTest t;
  t.n = a.size();
  t.mean_difference = m.mean;
  t.stderr_difference = m.stderr_;
  if (m.stderr_ == 0.0) {
    t.t = m.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::max(), m.mean);
    t.p_value = m.mean == 0.0 ? 1.0 : 0.0;
    return t;
  }
  t.t = m.mean / m.stderr_;
  boost::math::students_t dist(static_cast<double>(t.n - 1));
  t.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t.t)));
  return t;
}

std::vector<std::pair<std::size_t, std::size_t>> select_pairs(std::size_t label_count, int max_pairs,
                                                              std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < label_count; ++i) {
    for (std::size_t j = 0; j < label_count; ++j) {
      if (i != j) all.emplace_back(i, j);
    }
  }
  if (max_pairs < 0 || all.size() <= static_cast<std::size_t>(max_pairs)) return all;
  // Partial Fisher-Yates with an explicit index draw keeps the sample
  // independent of the standard library's shuffle.
  std::mt19937_64 rng(seed);
  const auto k = static_cast<std::size_t>(max_pairs);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (all.size() - i));
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

ConceptSpace space_from_config(const RunConfig& c) {
  const Structure s = structure_from_string(c.kind);
  if (s == Structure::cyclic || s == Structure::sequential) return make_concept_space(s, {c.labels}, c.period);
  return make_concept_space(s, {c.rows, c.cols}, c.period);
}

int cmd_generate(const RunConfig& c, std::ostream& log) {
  c.validate();
  SurrogateParams params;
  params.ambient_dim = c.ambient_dim;
  params.noise_sigma = c.noise;
  params.samples_per_label = c.samples;
  params.seed = c.seed;
  params.validate();
  const ConceptSpace space = space_from_config(c);
  DatasetFile file = dataset_from_synthetic(embed_ground_truth(space, params));
  file.metadata = {{"source", "surrogate"}, {"seed", c.seed}, {"config_hash", config_hash(c)}};
  const std::string text = dump(to_json(file));
  file.validate();
  write_text_atomic(c.dataset_path(), text);
  std::ostringstream line;
  line << "generated " << c.kind << " dataset: " << space.size() << " labels, " << file.activations.size()
       << " samples, ambient " << params.ambient_dim << ", hash " << fnv1a_hex(text) << " -> " << c.dataset_path();
  if (space.periodic(0) || space.periodic(1)) {
    line << " (periodic axis " << (space.periodic(0) ? 0 : 1) << ", period "
         << space.period(space.periodic(0) ? 0 : 1) << ")";
  }
  say(c, log, line.str());
  return 0;
}

int cmd_fit(const RunConfig& c, std::ostream& log) {
  c.validate();
  const DatasetFile data = load_dataset(c.dataset_path());
  Diagnostics diag;
  ActivationFitOptions opts;
  const int max_dim = static_cast<int>(std::min(data.activations.data.rows(), data.activations.data.cols()));
  opts.pca_dim = c.pca_dim;
  if (opts.pca_dim > max_dim) {
    diag.warn("--pca-dim " + std::to_string(c.pca_dim) + " exceeds the data rank bound; using " +
              std::to_string(max_dim));
    opts.pca_dim = max_dim;
  }
  ManifoldsFile m;
  try {
    m.activation = fit_activation_manifold(data.activations, data.space, opts);
    m.behavior = fit_behavior_manifold(data.distributions, data.space);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("fit failed: ") + e.what());
  }
  m.metadata = metadata(c);
  m.metadata["dataset_metadata"] = data.metadata;
  save_manifolds(c.manifolds_path(), m);
  std::ostringstream line;
  line << "fitted manifolds over " << data.space.size() << " labels (pca " << opts.pca_dim << ", "
       << data.distributions.data.cols() << " classes) -> " << c.manifolds_path();
  say(c, log, line.str());
  return report_warnings(c, log, diag);
}

int cmd_isometry(const RunConfig& c, std::ostream& log) {
  c.validate();
  const ManifoldsFile m = load_fitted(c);
  const IsometryReport rep = isometry_report(m.activation, m.behavior, c.interior);
  const auto names = rep.vertex_labels();
  const fs::path out(c.out);

  Table summary({"metric", "value"});
  summary.add({"r_mh_my", fmt(rep.r_mh_my)});
  summary.add({"r_linear_my", fmt(rep.r_linear_my)});
  summary.add({"vertices", std::to_string(rep.vertices.size())});
  summary.add({"interior_points", std::to_string(rep.interior_points)});
  summary.add({"excluded_pairs", std::to_string(rep.excluded_pairs.size())});
  summary.add({"seed", std::to_string(c.seed)});
  summary.add({"config_hash", config_hash(c)});
  summary.write(out / "isometry_summary.csv");

  json distances = json::object();
  const std::pair<const char*, const Mat*> mats[] = {
      {"linear", &rep.distances_linear}, {"mh", &rep.distances_mh}, {"my", &rep.distances_my}};
  for (const auto& [name, mat] : mats) {
    std::vector<std::string> header{"vertex"};
    header.insert(header.end(), names.begin(), names.end());
    Table t(header);
    json rows = json::array();
    for (Eigen::Index i = 0; i < mat->rows(); ++i) {
      std::vector<std::string> row{names[static_cast<std::size_t>(i)]};
      json jr = json::array();
      for (Eigen::Index k = 0; k < mat->cols(); ++k) {
        row.push_back(fmt((*mat)(i, k)));
        jr.push_back((*mat)(i, k));
      }
      t.add(row);
      rows.push_back(jr);
    }
    t.write(out / (std::string("distances_") + name + ".csv"));
    distances[name] = rows;
  }

  Table mds({"space", "vertex", "label", "x", "y", "z"});
  json mds_json = json::object();
  const std::pair<const char*, const MdsEmbedding*> embs[] = {
      {"linear", &rep.mds_linear}, {"mh", &rep.mds_mh}, {"my", &rep.mds_my}};
  for (const auto& [name, emb] : embs) {
    json pts = json::array();
    for (Eigen::Index i = 0; i < emb->points.rows(); ++i) {
      double xyz[3] = {0.0, 0.0, 0.0};
      for (Eigen::Index d = 0; d < std::min<Eigen::Index>(3, emb->points.cols()); ++d) xyz[d] = emb->points(i, d);
      mds.add({name, std::to_string(i), names[static_cast<std::size_t>(i)], fmt(xyz[0]), fmt(xyz[1]), fmt(xyz[2])});
      pts.push_back({xyz[0], xyz[1], xyz[2]});
    }
    mds_json[name] = {{"points", pts}, {"stress", emb->stress}};
  }
  mds.write(out / "mds.csv");

  Table excluded({"vertex_a", "vertex_b", "label_a", "label_b"});
  json excl = json::array();
  for (const auto& [a, b] : rep.excluded_pairs) {
    excluded.add({std::to_string(a), std::to_string(b), names[a], names[b]});
    excl.push_back({a, b});
  }
  excluded.write(out / "excluded_pairs.csv");

  json vertices = json::array();
  for (const auto& v : rep.vertices) vertices.push_back({{"label", v.label}, {"u", {v.u.x(), v.u.y()}}});
  write_section(c, "isometry",
                {{"metadata", metadata(c)},
                 {"r_mh_my", rep.r_mh_my},
                 {"r_linear_my", rep.r_linear_my},
                 {"interior_points", rep.interior_points},
                 {"vertices", vertices},
                 {"excluded_pairs", excl},
                 {"distances", distances},
                 {"mds", mds_json}});

  std::ostringstream line;
  line << "isometry: r(mh, my) = " << fmt(rep.r_mh_my) << ", r(linear, my) = " << fmt(rep.r_linear_my) << " over "
       << rep.vertices.size() << " vertices, " << rep.excluded_pairs.size() << " excluded pairs";
  say(c, log, line.str());
  return 0;
}

namespace {

int steer_recorded(const RunConfig& c, std::ostream& log, const DatasetFile& data, const ManifoldsFile& m) {
  Table rows({"pair", "label_a", "label_b", "strategy", "energy", "max_offadjacent_gain", "seed", "config_hash"});
  json records = json::array();
  std::map<std::string, std::vector<double>> by_strategy;
  for (const auto& t : data.trajectories) {
    BehaviorTrajectory traj;
    traj.strategy = strategy_from_string(t.strategy);
    for (Eigen::Index k = 0; k < t.distributions.rows(); ++k) {
      traj.points.emplace_back(t.distributions.row(k).transpose());
    }
    const double e = cumulative_energy(traj, m.behavior);
    const double gain = max_offadjacent_gain(traj, data.space);
    const std::string pair = t.label_a + "->" + t.label_b;
    rows.add({pair, t.label_a, t.label_b, t.strategy, fmt(e), fmt(gain), std::to_string(c.seed), config_hash(c)});
    records.push_back({{"pair", pair}, {"strategy", t.strategy}, {"energy", e}, {"max_offadjacent_gain", gain}});
    by_strategy[t.strategy].push_back(e);
  }
  rows.write(fs::path(c.out) / "recorded_pairs.csv");
  Table summary({"strategy", "n_pairs", "mean_energy", "stderr_energy"});
  json sj = json::array();
  for (const auto& [s, es] : by_strategy) {
    const MeanSe ms = mean_stderr(es);
    summary.add({s, std::to_string(ms.n), fmt(ms.mean), fmt(ms.stderr_)});
    sj.push_back({{"strategy", s}, {"n_pairs", ms.n}, {"mean_energy", ms.mean}, {"stderr_energy", ms.stderr_}});
    say(c, log, "recorded " + s + ": E_BC = " + fmt(ms.mean) + " +- " + fmt(ms.stderr_) + " over " +
                    std::to_string(ms.n) + " trajectories");
  }
  summary.write(fs::path(c.out) / "steer_summary.csv");
  write_section(c, "steer", {{"metadata", metadata(c)}, {"recorded", records}, {"summary", sj}});
  return 0;
}

}  // namespace

int cmd_steer(const RunConfig& c, std::ostream& log) {
  c.validate();
  const auto strategies = parse_strategies(c.strategies);
  const DatasetFile data = load_dataset(c.dataset_path());
  const ManifoldsFile m = load_fitted(c);
  check_same_labels(m, data);
  if (!data.surrogate) {
    if (data.trajectories.empty()) {
      throw std::runtime_error("dataset has no evaluable behavior map and no recorded trajectories to score");
    }
    return steer_recorded(c, log, data, m);
  }

  const SoftmaxDistanceMap map = data.surrogate->behavior_map();
  const auto bases = make_base_inputs(data.surrogate->frame, c.bases, c.base_sigma, c.seed + 1);
  const ConceptSpace& space = m.activation.space();
  const auto pairs = select_pairs(space.size(), c.pairs, c.seed);
  const std::string hash = config_hash(c);
  Diagnostics diag;

  MetricSpec flat;
  MetricSpec density;
  density.kind = MetricSpec::Kind::density;
  density.manifold = &m.activation;
  MetricSpec pull;
  pull.kind = MetricSpec::Kind::pullback;
  pull.map = &map;

  std::vector<std::string> traj_header{"pair", "strategy", "k", "t", "energy", "x", "y", "z"};
  for (const auto& l : data.space.labels()) traj_header.push_back("p_" + l);
  traj_header.push_back("p_other");
  Table traj_table(traj_header);
  Table rows({"pair", "label_a", "label_b", "strategy", "energy", "length_flat", "length_density", "length_pullback",
              "max_offadjacent_gain", "seed", "config_hash"});
  json records = json::array();
  std::map<Strategy, std::vector<double>> energies;
  std::map<Strategy, std::vector<double>> gains;
  std::vector<std::string> failed;

  for (const auto& [i, j] : pairs) {
    const std::string pair = pair_name(space, i, j);
    const std::string& la = space.labels()[i];
    const std::string& lb = space.labels()[j];
    try {
      std::map<Strategy, json> pair_records;
      for (Strategy s : strategies) {
        const SteeringPath path =
            s == Strategy::linear
                ? linear_path(m.activation.decode_ambient(space.coord(i)), m.activation.decode_ambient(space.coord(j)),
                              c.waypoints)
                : manifold_path(m.activation, la, lb, c.waypoints);
        const BehaviorTrajectory traj = induce_trajectory(map, path, bases);
        const auto e_k = waypoint_energies(traj, m.behavior);
        const double energy = std::accumulate(e_k.begin(), e_k.end(), 0.0);
        const double gain = max_offadjacent_gain(traj, data.space);
        const double lf = path_length(path, flat, &diag);
        const double ld = path_length(path, density, &diag);
        const double lp = path_length(path, pull, &diag);
        pair_records[s] = {{"pair", pair},           {"label_a", la},         {"label_b", lb},
                           {"strategy", to_string(s)}, {"energy", energy},      {"length_flat", lf},
                           {"length_density", ld},   {"length_pullback", lp}, {"max_offadjacent_gain", gain},
                           {"waypoint_energies", e_k}};
        rows.add({pair, la, lb, to_string(s), fmt(energy), fmt(lf), fmt(ld), fmt(lp), fmt(gain), std::to_string(c.seed),
                  hash});
        for (std::size_t k = 0; k < traj.size(); ++k) {
          const Vec xyz = first3(m.activation.pca(), path.waypoints[k]);
          std::vector<std::string> row{pair, to_string(s), std::to_string(k), fmt(path.t_values[k]), fmt(e_k[k]),
                                       fmt(xyz(0)), fmt(xyz(1)), fmt(xyz(2))};
          const Vec& p = traj.points[k].probabilities();
          for (Eigen::Index q = 0; q < p.size(); ++q) row.push_back(fmt(p(q)));
          traj_table.add(row);
        }
        energies[s].push_back(energy);
        gains[s].push_back(gain);
      }
      for (auto& [s, r] : pair_records) records.push_back(std::move(r));
    } catch (const std::runtime_error& e) {
      failed.push_back(pair + ": " + e.what());
      diag.warn("pair " + pair + " failed: " + e.what());
    }
  }
  const fs::path out(c.out);
  rows.write(out / "steer_pairs.csv");
  traj_table.write(out / "trajectories.csv");

  Table summary({"strategy", "n_pairs", "mean_energy", "stderr_energy", "max_offadjacent_gain", "seed", "config_hash"});
  json summary_json = json::array();
  for (Strategy s : strategies) {
    const MeanSe ms = mean_stderr(energies[s]);
    const double g = gains[s].empty() ? 0.0 : *std::max_element(gains[s].begin(), gains[s].end());
    summary.add({to_string(s), std::to_string(ms.n), fmt(ms.mean), fmt(ms.stderr_), fmt(g), std::to_string(c.seed), hash});
    summary_json.push_back({{"strategy", to_string(s)},
                            {"n_pairs", ms.n},
                            {"mean_energy", ms.mean},
                            {"stderr_energy", ms.stderr_},
                            {"max_offadjacent_gain", g}});
    say(c, log, std::string("steer ") + to_string(s) + ": E_BC = " + fmt(ms.mean) + " +- " + fmt(ms.stderr_) +
                    " over " + std::to_string(ms.n) + " pairs, max off-adjacent gain " + fmt(g));
  }
  summary.write(out / "steer_summary.csv");

  json comparison = nullptr;
  const bool both = energies.count(Strategy::linear) && energies.count(Strategy::manifold);
  if (both && energies[Strategy::linear].size() >= 2) {
    const auto& lin = energies[Strategy::linear];
    const auto& man = energies[Strategy::manifold];
    const PairedTest t = paired_t_test(lin, man);
    std::size_t wins = 0;
    for (std::size_t k = 0; k < lin.size(); ++k) wins += man[k] < lin[k] ? 1 : 0;
    const double frac = static_cast<double>(wins) / static_cast<double>(lin.size());
    Table cmp({"baseline", "strategy", "n_pairs", "mean_difference", "stderr_difference", "t", "p_value",
               "fraction_lower", "seed", "config_hash"});
    cmp.add({"linear", "manifold", std::to_string(t.n), fmt(t.mean_difference), fmt(t.stderr_difference), fmt(t.t),
             fmt(t.p_value), fmt(frac), std::to_string(c.seed), hash});
    cmp.write(out / "steer_comparison.csv");
    comparison = {{"baseline", "linear"},     {"strategy", "manifold"},    {"n_pairs", t.n},
                  {"mean_difference", t.mean_difference}, {"stderr_difference", t.stderr_difference},
                  {"t", t.t},                 {"p_value", t.p_value},      {"fraction_lower", frac}};
    say(c, log, "manifold below linear on " + std::to_string(wins) + "/" + std::to_string(lin.size()) +
                    " pairs, paired t-test p = " + fmt(t.p_value));
  }
  write_section(c, "steer",
                {{"metadata", metadata(c)},
                 {"pairs", records},
                 {"summary", summary_json},
                 {"comparison", comparison},
                 {"failures", failed}});
  if (pairs.size() == failed.size()) throw std::runtime_error("every steering pair failed");
  return report_warnings(c, log, diag);
}

int cmd_pullback(const RunConfig& c, std::ostream& log) {
  c.validate();
  const DatasetFile data = load_dataset(c.dataset_path());
  const ManifoldsFile m = load_fitted(c);
  check_same_labels(m, data);
  if (!data.surrogate) {
    throw std::runtime_error("pullback needs an evaluable behavior map; this dataset only has recorded trajectories");
  }
  const SoftmaxDistanceMap map = data.surrogate->behavior_map();
  const auto bases = make_base_inputs(data.surrogate->frame, c.bases, c.base_sigma, c.seed + 1);
  const ConceptSpace& space = m.activation.space();
  const auto pairs = select_pairs(space.size(), c.pairs, c.seed);
  const std::string hash = config_hash(c);

  PullbackConfig cfg;
  cfg.norm_reg_weight = c.norm_reg;
  cfg.subspace_dims = std::min(cfg.subspace_dims, m.activation.pca().dims());
  ConformalOptions conformal;
  if (c.alpha) cfg.waypoints = conformal.waypoints;
  const std::string target_kind = c.alpha ? "conformal" : "behavior_manifold";

  Table rows({"pair", "label_a", "label_b", "target", "alpha", "initial_loss", "final_loss", "converged",
              "r2_pullback", "r2_chord", "mmd_chord", "mmd_pullback", "mmd_manifold", "beats_chord", "seed",
              "config_hash"});
  Table failures({"pair", "label_a", "label_b", "error", "seed", "config_hash"});
  json records = json::array();
  json failed = json::array();
  std::vector<double> r2p, r2c, mmdc, mmdp, mmdm;
  std::size_t beats = 0;
  Diagnostics diag;

  for (const auto& [i, j] : pairs) {
    const std::string pair = pair_name(space, i, j);
    const std::string& la = space.labels()[i];
    const std::string& lb = space.labels()[j];
    try {
      std::vector<BehaviorDistribution> target;
      if (c.alpha) {
        const auto pa = m.behavior.decode_distribution(space.coord(i));
        const auto pb = m.behavior.decode_distribution(space.coord(j));
        ConformalTarget ct = conformal_target(pa, pb, m.behavior, *c.alpha, conformal);
        for (auto& w : ct.diagnostics.warnings) diag.warn(pair + ": " + w);
        target = std::move(ct.points);
      } else {
        target = behavior_target(m.behavior, la, lb, cfg.waypoints);
      }
      const PullbackResult res = optimize_pullback(map, target, bases, m.activation, la, lb, cfg);
      for (const auto& w : res.diagnostics.warnings) diag.warn(pair + ": " + w);
      if (!std::isfinite(res.final_loss)) throw std::runtime_error("optimizer diverged (non-finite loss)");
      if (!std::isfinite(res.r2_vs_manifold) || !std::isfinite(res.r2_linear_baseline)) {
        throw std::runtime_error("intrinsic R2 undefined for this pair");
      }
      const SteeringPath chord = linear_path(m.activation.decode_ambient(space.coord(i)),
                                             m.activation.decode_ambient(space.coord(j)), cfg.waypoints);
      const SteeringPath man = manifold_path(m.activation, la, lb, cfg.waypoints);
      const double dc = mean_manifold_distance(chord, m.activation);
      const double dp = mean_manifold_distance(res.path, m.activation);
      const double dm = mean_manifold_distance(man, m.activation);
      const bool win = res.r2_vs_manifold > res.r2_linear_baseline;
      beats += win ? 1 : 0;
      r2p.push_back(res.r2_vs_manifold);
      r2c.push_back(res.r2_linear_baseline);
      mmdc.push_back(dc);
      mmdp.push_back(dp);
      mmdm.push_back(dm);
      rows.add({pair, la, lb, target_kind, fmt(c.alpha.value_or(0.0)), fmt(res.initial_loss), fmt(res.final_loss),
                res.converged ? "1" : "0", fmt(res.r2_vs_manifold), fmt(res.r2_linear_baseline), fmt(dc), fmt(dp),
                fmt(dm), win ? "1" : "0", std::to_string(c.seed), hash});
      records.push_back({{"pair", pair},
                         {"label_a", la},
                         {"label_b", lb},
                         {"initial_loss", res.initial_loss},
                         {"final_loss", res.final_loss},
                         {"loss_history", res.loss_history},
                         {"converged", res.converged},
                         {"r2_pullback", res.r2_vs_manifold},
                         {"r2_chord", res.r2_linear_baseline},
                         {"mmd_chord", dc},
                         {"mmd_pullback", dp},
                         {"mmd_manifold", dm}});
    } catch (const std::exception& e) {
      failures.add({pair, la, lb, e.what(), std::to_string(c.seed), hash});
      failed.push_back({{"pair", pair}, {"error", e.what()}});
      diag.warn("pair " + pair + " failed: " + e.what());
    }
  }
  const fs::path out(c.out);
  rows.write(out / "pullback_pairs.csv");
  failures.write(out / "pullback_failures.csv");

  const std::size_t n = r2p.size();
  const double frac = n ? static_cast<double>(beats) / static_cast<double>(n) : 0.0;
  Table summary({"metric", "mean", "stderr", "n"});
  json summary_json = json::object();
  const std::pair<const char*, const std::vector<double>*> cols[] = {{"r2_pullback", &r2p},
                                                                      {"r2_chord", &r2c},
                                                                      {"mmd_chord", &mmdc},
                                                                      {"mmd_pullback", &mmdp},
                                                                      {"mmd_manifold", &mmdm}};
  for (const auto& [name, xs] : cols) {
    const MeanSe ms = mean_stderr(*xs);
    summary.add({name, fmt(ms.mean), fmt(ms.stderr_), std::to_string(ms.n)});
    summary_json[name] = {{"mean", ms.mean}, {"stderr", ms.stderr_}, {"n", ms.n}};
  }
  summary.add({"fraction_beats_chord", fmt(frac), "0", std::to_string(n)});
  summary_json["fraction_beats_chord"] = frac;
  summary_json["failures"] = failed.size();
  if (n >= 2) {
    const PairedTest t = paired_t_test(r2p, r2c);
    summary.add({"r2_difference_p_value", fmt(t.p_value), fmt(t.stderr_difference), std::to_string(t.n)});
    summary_json["r2_difference"] = {{"mean", t.mean_difference}, {"t", t.t}, {"p_value", t.p_value}};
  }
  summary.write(out / "pullback_summary.csv");
  write_section(c, "pullback",
                {{"metadata", metadata(c)},
                 {"target", target_kind},
                 {"alpha", c.alpha ? json(*c.alpha) : json(nullptr)},
                 {"pairs", records},
                 {"failures", failed},
                 {"summary", summary_json}});
  say(c, log, "pullback: R2 " + fmt(mean_stderr(r2p).mean) + " vs chord " + fmt(mean_stderr(r2c).mean) +
                  ", beats chord on " + std::to_string(beats) + "/" + std::to_string(n) + " pairs, " +
                  std::to_string(failed.size()) + " failed");
  if (n == 0) throw std::runtime_error("every pullback pair failed");
  return report_warnings(c, log, diag);
}

int cmd_report(const RunConfig& c, std::ostream& log) {
  c.validate();
  const fs::path out(c.out);
  json bundle = {{"metadata", metadata(c)}};
  int found = 0;
  Diagnostics diag;
  for (const char* section : {"isometry", "steer", "pullback"}) {
    const fs::path p = out / (std::string(section) + ".json");
    if (!fs::exists(p)) {
      bundle[section] = nullptr;
      diag.warn(std::string("no ") + section + " section in " + out.string());
      continue;
    }
    json j = read_json(p);
    if (j.contains("metadata") && j["metadata"].value("config_hash", "") != config_hash(c)) {
      diag.warn(std::string(section) + " section was produced with a different configuration");
    }
    bundle[section] = std::move(j);
    ++found;
  }
  if (found == 0) throw std::runtime_error("no report sections found in " + out.string());
  write_text_atomic(out / "report.json", dump(bundle));

  if (!bundle["isometry"].is_null()) {
    say(c, log, "isometry  r(mh, my) = " + fmt(bundle["isometry"]["r_mh_my"].get<double>()) +
                    "  r(linear, my) = " + fmt(bundle["isometry"]["r_linear_my"].get<double>()));
  }
  if (!bundle["steer"].is_null()) {
    for (const auto& s : bundle["steer"]["summary"]) {
      say(c, log, "steer     " + s["strategy"].get<std::string>() + "  E_BC = " + fmt(s["mean_energy"].get<double>()) +
                      " +- " + fmt(s["stderr_energy"].get<double>()));
    }
  }
  if (!bundle["pullback"].is_null()) {
    const json& s = bundle["pullback"]["summary"];
    say(c, log, "pullback  R2 = " + fmt(s["r2_pullback"]["mean"].get<double>()) + " vs chord " +
                    fmt(s["r2_chord"]["mean"].get<double>()) + ", beats chord on " +
                    fmt(100.0 * s["fraction_beats_chord"].get<double>()) + "% of pairs");
  }
  say(c, log, "report -> " + (out / "report.json").string());
  return report_warnings(c, log, diag);
}

}  // namespace geosteer
