#include "geosteer/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace geosteer {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

json std_vec_json(const std::vector<double>& v) { return json(v); }

double number(const json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string("expected a number for ") + what);
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw FormatError(std::string("non-finite value in ") + what);
  return x;
}

Vec vec_from(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string("expected an array for ") + what);
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  return v;
}

Mat mat_from(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string("expected a matrix for ") + what);
  if (j.empty()) return {};
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw FormatError(std::string("ragged matrix in ") + what);
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], what);
    }
  }
  return m;
}

std::vector<double> std_vec_from(const json& j, const char* what) {
  const Vec v = vec_from(j, what);
  return {v.data(), v.data() + v.size()};
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

void check_version(const json& j, const char* kind) {
  const json& v = field(j, "version");
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
    throw FormatError(std::string("unsupported ") + kind + " format version " + v.dump());
  }
}

json samples_json(const LabeledSamples& s) {
  json rows = json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    rows.push_back({{"label", s.labels[i]}, {"values", vec_json(s.data.row(static_cast<Eigen::Index>(i)).transpose())}});
  }
  return rows;
}

LabeledSamples samples_from(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string("expected records for ") + what);
  LabeledSamples s;
  json values = json::array();
  for (const auto& rec : j) {
    s.labels.push_back(field(rec, "label").get<std::string>());
    values.push_back(field(rec, "values"));
  }
  s.data = mat_from(values, what);
  return s;
}

json pca_json(const PcaBasis& pca) {
  return {{"ambient_dim", pca.ambient_dim},
          {"mean", vec_json(pca.mean)},
          {"components", mat_json(pca.components.transpose())},
          {"explained_variance", vec_json(pca.explained_variance)}};
}

PcaBasis pca_from(const json& j) {
  PcaBasis pca;
  pca.ambient_dim = field(j, "ambient_dim").get<int>();
  pca.mean = vec_from(field(j, "mean"), "pca.mean");
  pca.components = mat_from(field(j, "components"), "pca.components").transpose();
  pca.explained_variance = vec_from(field(j, "explained_variance"), "pca.explained_variance");
  if (pca.mean.size() != pca.ambient_dim || pca.components.rows() != pca.ambient_dim ||
      pca.explained_variance.size() != pca.components.cols()) {
    throw FormatError("pca basis dimensions disagree");
  }
  return pca;
}

json chart_json(const ManifoldChart& chart) {
  return {{"kind", chart.kind() == ManifoldChart::Kind::sphere ? "sphere" : "euclidean"},
          {"space", to_json(chart.space())},
          {"parameterization", to_json(chart.parameterization())},
          {"base", vec_json(chart.base())},
          {"distance_scale", chart.distance_scale()},
          {"grid", {{"samples_1d", chart.grid().samples_1d}, {"samples_2d", chart.grid().samples_2d}}}};
}

ManifoldChart chart_from(const json& j) {
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind != "sphere" && kind != "euclidean") throw FormatError("unknown chart kind '" + kind + "'");
  ProjectionGrid grid;
  grid.samples_1d = field(field(j, "grid"), "samples_1d").get<int>();
  grid.samples_2d = field(field(j, "grid"), "samples_2d").get<int>();
  return ManifoldChart(parameterization_from_json(field(j, "parameterization")),
                       concept_space_from_json(field(j, "space")),
                       kind == "sphere" ? ManifoldChart::Kind::sphere : ManifoldChart::Kind::euclidean,
                       vec_from(field(j, "base"), "chart.base"), number(field(j, "distance_scale"), "distance_scale"),
                       grid);
}

// Rows already on the open simplex are kept untouched so that files round-trip.
Mat ingest_distributions(const Mat& raw) {
  Mat out = raw;
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const Vec row = raw.row(r).transpose();
    if ((row.array() > 0.0).all() && std::abs(row.sum() - 1.0) <= 1e-9) continue;
    if ((row.array() < 0.0).any()) throw FormatError("negative probability in distribution record " + std::to_string(r));
    out.row(r) = BehaviorDistribution::clipped(row, 1e-12).probabilities().transpose();
  }
  return out;
}

}  // namespace

json to_json(const ConceptSpace& space) {
  json positions = json::array();
  for (Eigen::Index r = 0; r < space.positions().rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < space.positions().cols(); ++c) row.push_back(space.positions()(r, c));
    positions.push_back(row);
  }
  return {{"structure", to_string(space.structure())},
          {"labels", space.labels()},
          {"coords", mat_json(space.coords())},
          {"periods", {space.period(0), space.period(1)}},
          {"positions", positions},
          {"extents", {space.extents()[0], space.extents()[1]}}};
}

ConceptSpace concept_space_from_json(const json& j) {
  const Structure structure = structure_from_string(field(j, "structure").get<std::string>());
  auto labels = field(j, "labels").get<std::vector<std::string>>();
  Mat coords = mat_from(field(j, "coords"), "space.coords");
  const json& periods = field(j, "periods");
  const json& extents = field(j, "extents");
  const json& pos = field(j, "positions");
  Eigen::MatrixXi positions(static_cast<Eigen::Index>(pos.size()),
                            pos.empty() ? 0 : static_cast<Eigen::Index>(pos[0].size()));
  for (std::size_t r = 0; r < pos.size(); ++r) {
    if (pos[r].size() != static_cast<std::size_t>(positions.cols())) throw FormatError("ragged label positions");
    for (std::size_t c = 0; c < pos[r].size(); ++c) {
      positions(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pos[r][c].get<int>();
    }
  }
  try {
    return ConceptSpace(structure, std::move(labels), std::move(coords),
                        {number(periods.at(0), "periods"), number(periods.at(1), "periods")}, std::move(positions),
                        {extents.at(0).get<int>(), extents.at(1).get<int>()});
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid concept space: ") + e.what());
  }
}

json to_json(const Parameterization& param) {
  if (const auto* s = std::get_if<CubicSpline>(&param)) {
    return {{"type", "cubic"},
            {"boundary", s->boundary() == Boundary::periodic ? "periodic" : "natural"},
            {"knots", std_vec_json(s->knots())},
            {"values", mat_json(s->values())},
            {"second_derivatives", mat_json(s->second_derivatives())},
            {"period", s->period()},
            {"smoothing", s->smoothing()},
            {"weights", std_vec_json(s->weights())}};
  }
  const auto& t = std::get<TpsSurface>(param);
  json periodic = nullptr;
  if (t.periodic()) periodic = {{"axis", t.periodic()->axis}, {"period", t.periodic()->period}};
  return {{"type", "tps"},
          {"control_points", mat_json(t.control_points())},
          {"control_values", mat_json(t.control_values())},
          {"centers", mat_json(t.centers())},
          {"kernel_weights", mat_json(t.kernel_weights())},
          {"affine", mat_json(t.affine())},
          {"periodic", periodic}};
}

Parameterization parameterization_from_json(const json& j) {
  const std::string type = field(j, "type").get<std::string>();
  if (type == "cubic") {
    const std::string b = field(j, "boundary").get<std::string>();
    if (b != "natural" && b != "periodic") throw FormatError("unknown spline boundary '" + b + "'");
    return CubicSpline::from_coefficients(b == "periodic" ? Boundary::periodic : Boundary::natural,
                                          std_vec_from(field(j, "knots"), "knots"),
                                          mat_from(field(j, "values"), "spline values"),
                                          mat_from(field(j, "second_derivatives"), "second derivatives"),
                                          number(field(j, "period"), "period"),
                                          number(field(j, "smoothing"), "smoothing"),
                                          std_vec_from(field(j, "weights"), "weights"));
  }
  if (type == "tps") {
    std::optional<PeriodicAxis> periodic;
    const json& p = field(j, "periodic");
    if (!p.is_null()) periodic = PeriodicAxis{field(p, "axis").get<int>(), number(field(p, "period"), "period")};
    return TpsSurface::from_coefficients(mat_from(field(j, "control_points"), "control points"),
                                         mat_from(field(j, "control_values"), "control values"),
                                         mat_from(field(j, "centers"), "centers"),
                                         mat_from(field(j, "kernel_weights"), "kernel weights"),
                                         mat_from(field(j, "affine"), "affine"), periodic);
  }
  throw FormatError("unknown parameterization type '" + type + "'");
}

json to_json(const SurrogateParams& p) {
  return {{"ambient_dim", p.ambient_dim},
          {"spacing", p.spacing},
          {"cyclic_harmonic", p.cyclic_harmonic},
          {"sequential_bend", p.sequential_bend},
          {"sequential_coil", p.sequential_coil},
          {"sheet_step_angle", p.sheet_step_angle},
          {"tube_step_angle", p.tube_step_angle},
          {"noise_sigma", p.noise_sigma},
          {"samples_per_label", p.samples_per_label},
          {"temperature", p.temperature},
          {"other_floor", p.other_floor},
          {"seed", p.seed}};
}

SurrogateParams surrogate_params_from_json(const json& j) {
  SurrogateParams p;
  p.ambient_dim = field(j, "ambient_dim").get<int>();
  p.spacing = number(field(j, "spacing"), "spacing");
  p.cyclic_harmonic = number(field(j, "cyclic_harmonic"), "cyclic_harmonic");
  p.sequential_bend = number(field(j, "sequential_bend"), "sequential_bend");
  p.sequential_coil = number(field(j, "sequential_coil"), "sequential_coil");
  p.sheet_step_angle = number(field(j, "sheet_step_angle"), "sheet_step_angle");
  p.tube_step_angle = number(field(j, "tube_step_angle"), "tube_step_angle");
  p.noise_sigma = number(field(j, "noise_sigma"), "noise_sigma");
  p.samples_per_label = field(j, "samples_per_label").get<int>();
  p.temperature = number(field(j, "temperature"), "temperature");
  p.other_floor = number(field(j, "other_floor"), "other_floor");
  p.seed = field(j, "seed").get<std::uint64_t>();
  return p;
}

void DatasetFile::validate() const {
  if (version != kFormatVersion) throw FormatError("unsupported dataset format version " + std::to_string(version));
  if (activations.size() == 0) throw FormatError("dataset has no activation records");
  if (distributions.size() == 0) throw FormatError("dataset has no distribution records");
  for (const auto* s : {&activations, &distributions}) {
    for (const auto& l : s->labels) {
      if (!space.find(l)) throw FormatError("record label '" + l + "' is not in the concept space");
    }
    if (!s->data.allFinite()) throw FormatError("dataset contains non-finite values");
  }
  if (distributions.data.cols() < 2) throw FormatError("distributions need at least two classes");
  for (Eigen::Index r = 0; r < distributions.data.rows(); ++r) {
    try {
      BehaviorDistribution(distributions.data.row(r).transpose());
    } catch (const std::invalid_argument& e) {
      throw FormatError("distribution record " + std::to_string(r) + ": " + e.what());
    }
  }
  for (const auto& t : trajectories) {
    if (t.distributions.cols() != distributions.data.cols()) {
      throw FormatError("recorded trajectory class count differs from the distribution records");
    }
    if (t.distributions.rows() < 2) throw FormatError("recorded trajectory needs at least two waypoints");
    strategy_from_string(t.strategy);
  }
  if (surrogate) {
    if (surrogate->centers.cols() != activations.data.cols() ||
        surrogate->centers.rows() + 1 != distributions.data.cols()) {
      throw FormatError("surrogate map dimensions disagree with the records");
    }
  }
}

DatasetFile dataset_from_synthetic(const SyntheticDataset& data) {
  DatasetFile f;
  f.space = data.space;
  f.activations = data.activations;
  f.distributions = data.distributions;
  f.surrogate = SurrogateRecord{data.params, data.centers, data.frame};
  f.metadata["seed"] = data.params.seed;
  return f;
}

json to_json(const DatasetFile& data) {
  json j = {{"version", data.version},
            {"format", "geosteer-dataset"},
            {"metadata", data.metadata},
            {"concept_space", to_json(data.space)},
            {"activations", samples_json(data.activations)},
            {"distributions", samples_json(data.distributions)}};
  json traj = json::array();
  for (const auto& t : data.trajectories) {
    traj.push_back({{"strategy", t.strategy},
                    {"label_a", t.label_a},
                    {"label_b", t.label_b},
                    {"distributions", mat_json(t.distributions)}});
  }
  j["trajectories"] = traj;
  if (data.surrogate) {
    j["surrogate"] = {{"params", to_json(data.surrogate->params)},
                      {"centers", mat_json(data.surrogate->centers)},
                      {"frame", mat_json(data.surrogate->frame)}};
  } else {
    j["surrogate"] = nullptr;
  }
  return j;
}

DatasetFile dataset_from_json(const json& j) {
  check_version(j, "dataset");
  DatasetFile f;
  f.metadata = j.value("metadata", json::object());
  f.space = concept_space_from_json(field(j, "concept_space"));
  f.activations = samples_from(field(j, "activations"), "activations");
  f.distributions = samples_from(field(j, "distributions"), "distributions");
  f.distributions.data = ingest_distributions(f.distributions.data);
  if (j.contains("trajectories")) {
    for (const auto& t : j.at("trajectories")) {
      RecordedTrajectory rec{field(t, "strategy").get<std::string>(), field(t, "label_a").get<std::string>(),
                             field(t, "label_b").get<std::string>(),
                             ingest_distributions(mat_from(field(t, "distributions"), "trajectory"))};
      f.trajectories.push_back(std::move(rec));
    }
  }
  if (j.contains("surrogate") && !j.at("surrogate").is_null()) {
    const json& s = j.at("surrogate");
    f.surrogate = SurrogateRecord{surrogate_params_from_json(field(s, "params")),
                                  mat_from(field(s, "centers"), "surrogate centers"),
                                  mat_from(field(s, "frame"), "surrogate frame")};
  }
  f.validate();
  return f;
}

json to_json(const ManifoldsFile& m) {
  const ActivationManifold& a = m.activation;
  return {{"version", m.version},
          {"format", "geosteer-manifolds"},
          {"metadata", m.metadata},
          {"activation",
           {{"pca", pca_json(a.pca())},
            {"centroids", mat_json(a.centroids())},
            {"raw_centroids", mat_json(a.raw_centroids())},
            {"sample_counts", a.sample_counts()},
            {"sample_sigma", a.sample_sigma()},
            {"chart", chart_json(a.chart())}}},
          {"behavior", {{"centroids", mat_json(m.behavior.centroids())}, {"chart", chart_json(m.behavior.chart())}}}};
}

ManifoldsFile manifolds_from_json(const json& j) {
  check_version(j, "manifolds");
  ManifoldsFile m;
  m.metadata = j.value("metadata", json::object());
  const json& a = field(j, "activation");
  m.activation = ActivationManifold(pca_from(field(a, "pca")), mat_from(field(a, "centroids"), "centroids"),
                                    mat_from(field(a, "raw_centroids"), "raw centroids"),
                                    field(a, "sample_counts").get<std::vector<int>>(),
                                    number(field(a, "sample_sigma"), "sample_sigma"), chart_from(field(a, "chart")));
  const json& b = field(j, "behavior");
  m.behavior = BehaviorManifold(mat_from(field(b, "centroids"), "behavior centroids"), chart_from(field(b, "chart")));
  if (m.activation.space().labels() != m.behavior.space().labels()) {
    throw FormatError("activation and behavior manifolds disagree on labels");
  }
  return m;
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const DatasetFile& data) {
  data.validate();
  write_text_atomic(path, dump(to_json(data)));
}

DatasetFile load_dataset(const std::filesystem::path& path) {
  try {
    return dataset_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_manifolds(const std::filesystem::path& path, const ManifoldsFile& m) {
  write_text_atomic(path, dump(to_json(m)));
}

ManifoldsFile load_manifolds(const std::filesystem::path& path) {
  try {
    return manifolds_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace geosteer
