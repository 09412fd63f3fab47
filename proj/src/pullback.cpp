#include "geosteer/pullback.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace geosteer {

// ---------------------------------------------------------------------------
// Behavior-space targets
// ---------------------------------------------------------------------------

std::vector<BehaviorDistribution> behavior_target(const BehaviorManifold& my, const std::string& label_a,
                                                  const std::string& label_b, int K) {
  if (K < 1) throw std::invalid_argument("behavior_target: K must be >= 1");
  const ConceptSpace& space = my.space();
  const Coord ua = space.coord(space.index_of(label_a));
  const Coord ub = space.coord(space.index_of(label_b));
  std::vector<BehaviorDistribution> out;
  for (int k = 0; k <= K; ++k) out.push_back(my.decode_distribution(space.interpolate(ua, ub, static_cast<double>(k) / K)));
  return out;
}

namespace {

Vec slerp(const Vec& a, const Vec& b, double t) {
  const double cosine = std::clamp(a.dot(b), -1.0, 1.0);
  const double theta = std::acos(cosine);
  if (theta < 1e-12) return ((1.0 - t) * a + t * b).normalized();
  const double s = std::sin(theta);
  return (std::sin((1.0 - t) * theta) / s) * a + (std::sin(t * theta) / s) * b;
}

BehaviorDistribution from_sqrt(const Vec& y) { return BehaviorDistribution::clipped(y.array().square().matrix(), 1e-300); }

// Hellinger length of the great-circle arc between unit vectors a chord |d| apart.
double arc_from_chord(double chord) { return std::sqrt(2.0) * std::asin(std::min(1.0, 0.5 * chord)); }

}  // namespace

std::vector<BehaviorDistribution> hellinger_geodesic(const BehaviorDistribution& p_a, const BehaviorDistribution& p_b,
                                                     int K) {
  if (K < 1) throw std::invalid_argument("hellinger_geodesic: K must be >= 1");
  if (p_a.size() != p_b.size()) throw std::invalid_argument("hellinger_geodesic: class count mismatch");
  const Vec a = p_a.probabilities().cwiseSqrt().normalized();
  const Vec b = p_b.probabilities().cwiseSqrt().normalized();
  std::vector<BehaviorDistribution> out{p_a};
  for (int k = 1; k < K; ++k) out.push_back(from_sqrt(slerp(a, b, static_cast<double>(k) / K)));
  out.push_back(p_b);
  return out;
}

double conformal_length(const std::vector<Vec>& sqrt_points, const BehaviorManifold& my, double alpha) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < sqrt_points.size(); ++k) {
    const double arc = arc_from_chord((sqrt_points[k + 1] - sqrt_points[k]).norm());
    if (arc == 0.0) continue;
    double cost = 1.0;
    if (alpha != 0.0) {
      const Vec mid = (sqrt_points[k] + sqrt_points[k + 1]).normalized();
      cost = std::exp(alpha * my.project(mid).distance);
    }
    total += cost * arc;
  }
  return total;
}

ConformalTarget conformal_target(const BehaviorDistribution& p_a, const BehaviorDistribution& p_b,
                                 const BehaviorManifold& my, double alpha, const ConformalOptions& options) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("conformal_target: alpha must be >= 0");
  if (p_a.size() != my.classes() || p_b.size() != my.classes()) {
    throw std::invalid_argument("conformal_target: class count mismatch with the behavior manifold");
  }
  if (!(options.alpha_step > 0.0)) throw std::invalid_argument("conformal_target: alpha_step must be positive");
  const int K = options.waypoints;
  if (K < 1) throw std::invalid_argument("conformal_target: waypoints must be >= 1");

  ConformalTarget out;
  out.points = hellinger_geodesic(p_a, p_b, K);
  std::vector<Vec> y;
  for (const auto& p : out.points) y.push_back(p.probabilities().cwiseSqrt());
  out.cost_length = conformal_length(y, my, alpha);
  out.cost_history = {out.cost_length};
  if (alpha == 0.0 || K < 2 || (y.front() - y.back()).norm() == 0.0) return out;

  // Interior Hellinger coordinates are w / |w| with w = x * x, which keeps
  // them in the closed positive orthant without constraints.
  const Eigen::Index C = y.front().size();
  const int interior = K - 1;
  auto unpack = [&](const Vec& x, std::vector<Vec>& pts, std::vector<Vec>& ws) {
    pts.front() = y.front();
    pts.back() = y.back();
    for (int k = 1; k < K; ++k) {
      const auto a = static_cast<std::size_t>(k);
      ws[a] = x.segment((k - 1) * C, C).array().square().matrix();
      pts[a] = ws[a] / ws[a].norm();
    }
  };

  double stage_alpha = 0.0;
  // Minimises log(cost length) at stage_alpha; same minimiser, far better scaled.
  const ValueAndGradient fg = [&](const Vec& x, Vec& grad) {
    std::vector<Vec> pts(y.size());
    std::vector<Vec> ws(y.size());
    unpack(x, pts, ws);
    std::vector<Vec> gy(pts.size(), Vec::Zero(C));
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      const auto a = static_cast<std::size_t>(k);
      const Vec delta = pts[a + 1] - pts[a];
      const double chord = delta.norm();
      const Vec s = pts[a] + pts[a + 1];
      const double s_norm = s.norm();
      const Vec mid = s / s_norm;
      const Projection proj = my.project(mid);
      const double cost = std::exp(stage_alpha * proj.distance);
      const double arc = arc_from_chord(chord);
      total += cost * arc;

      if (chord > 0.0 && chord < 2.0) {
        const Vec d_arc = delta / (std::sqrt(2.0) * chord * std::sqrt(1.0 - 0.25 * chord * chord));
        gy[a + 1] += cost * d_arc;
        gy[a] -= cost * d_arc;
      }
      if (proj.distance > 0.0) {
        // Envelope theorem: the foot of the projection is held fixed.
        const Vec d_cost = (stage_alpha * cost / (2.0 * proj.distance)) * (mid - proj.foot);
        const Vec d_s = arc * (d_cost - mid * mid.dot(d_cost)) / s_norm;
        gy[a] += d_s;
        gy[a + 1] += d_s;
      }
    }
    for (int k = 1; k < K; ++k) {
      const auto a = static_cast<std::size_t>(k);
      const Vec& g = gy[a];
      const Vec dw = (g - pts[a] * pts[a].dot(g)) / ws[a].norm();
      grad.segment((k - 1) * C, C) = 2.0 * x.segment((k - 1) * C, C).cwiseProduct(dw) / total;
    }
    return std::log(total);
  };

  Vec x_geo(C * interior);
  for (int k = 1; k < K; ++k) x_geo.segment((k - 1) * C, C) = y[static_cast<std::size_t>(k)].cwiseSqrt();

  std::vector<Vec> pts(y.size());
  std::vector<Vec> ws(y.size());
  struct Run {
    Vec x;
    double cost;
    std::vector<double> history;  // cost at the target alpha, best so far
    bool converged;
  };
  auto solve = [&](Vec x, int stages) {
    unpack(x, pts, ws);
    Run run{x, conformal_length(pts, my, alpha), {}, false};
    run.history.push_back(run.cost);
    for (int stage = 1; stage <= stages; ++stage) {
      stage_alpha = alpha * stage / stages;
      OptimizerResult res = lbfgs_minimize(fg, run.x, options.optimizer);
      if (res.line_search_failed) {
        out.diagnostics.warn("conformal_target: line search failed at alpha " + std::to_string(stage_alpha) +
                             "; keeping the best iterate");
      }
      unpack(res.x, pts, ws);
      const double cost = conformal_length(pts, my, alpha);
      // Continuation stages only replace the iterate when they help at the target alpha.
      if (cost > run.cost) continue;
      if (stage == stages) {
        for (std::size_t i = 1; i < res.loss_history.size(); ++i) {
          run.history.push_back(std::min(run.history.back(), std::exp(res.loss_history[i])));
        }
        run.converged = res.converged;
      }
      run.x = res.x;
      run.cost = cost;
      run.history.push_back(std::min(run.history.back(), cost));
    }
    return run;
  };

  Run best = solve(x_geo, std::max(1, static_cast<int>(std::ceil(alpha / options.alpha_step))));

  // Second start: along M_y between the projections of the endpoints.
  const ConceptSpace& space = my.space();
  const Coord ua = my.project(y.front()).u;
  const Coord ub = my.project(y.back()).u;
  Vec x_man(C * interior);
  for (int k = 1; k < K; ++k) {
    const Vec on = my.decode(space.interpolate(ua, ub, static_cast<double>(k) / K));
    x_man.segment((k - 1) * C, C) = on.cwiseMax(1e-12).cwiseSqrt();
  }
  Run alt = solve(x_man, 1);
  if (alt.cost < best.cost) {
    std::vector<double> history{out.cost_length};
    for (double c : alt.history) history.push_back(std::min(history.back(), c));
    alt.history = std::move(history);
    best = std::move(alt);
  }

  out.converged = best.converged;
  out.cost_history = std::move(best.history);
  unpack(best.x, pts, ws);
  for (int k = 1; k < K; ++k) {
    const auto a = static_cast<std::size_t>(k);
    out.points[a] = from_sqrt(pts[a]);
  }
  out.cost_length = conformal_length(pts, my, alpha);
  out.cost_history.back() = std::min(out.cost_history.back(), out.cost_length);
  return out;
}

// ---------------------------------------------------------------------------
// Pullback optimisation
// ---------------------------------------------------------------------------

void PullbackConfig::validate(int pca_dims) const {
  if (control_points < 2) throw std::invalid_argument("pullback: control_points must be >= 2");
  if (waypoints < 1) throw std::invalid_argument("pullback: waypoints must be >= 1");
  if (control_points > waypoints + 1) throw std::invalid_argument("pullback: control_points must not exceed K + 1");
  if (subspace_dims < 1 || subspace_dims > pca_dims) {
    throw std::invalid_argument("pullback: subspace_dims must be in [1, PCA dim]");
  }
  if (norm_reg_weight < 0.0) throw std::invalid_argument("pullback: norm_reg_weight must be >= 0");
  optimizer.validate();
  if (init == Init::custom && (custom_controls.rows() != control_points || custom_controls.cols() != subspace_dims)) {
    throw std::invalid_argument("pullback: custom controls must be control_points x subspace_dims");
  }
}

PullbackPath::PullbackPath(const ActivationManifold& mh, const std::string& label_a, const std::string& label_b,
                           int control_points, int waypoints, int subspace_dims) {
  const ConceptSpace& space = mh.space();
  start_ = mh.decode_ambient(space.coord(space.index_of(label_a)));
  end_ = mh.decode_ambient(space.coord(space.index_of(label_b)));
  if (subspace_dims < 1 || subspace_dims > mh.pca().dims()) {
    throw std::invalid_argument("pullback: subspace_dims must be in [1, PCA dim]");
  }
  if (control_points < 2 || waypoints < 1) throw std::invalid_argument("pullback: invalid path resolution");
  basis_ = mh.pca().components.leftCols(subspace_dims);

  const auto fractions = [&] {
    std::vector<double> f;
    for (int j = 0; j < control_points; ++j) f.push_back(static_cast<double>(j) / (control_points - 1));
    return f;
  }();
  weights_.resize(waypoints + 1, control_points);
  if (control_points == 2) {
    for (int k = 0; k <= waypoints; ++k) {
      const double t = static_cast<double>(k) / waypoints;
      weights_(k, 0) = 1.0 - t;
      weights_(k, 1) = t;
    }
  } else {
    const CubicSpline unit = fit_natural_cubic(fractions, Mat::Identity(control_points, control_points));
    for (int k = 0; k <= waypoints; ++k) weights_.row(k) = unit.eval(static_cast<double>(k) / waypoints).transpose();
  }
  for (int k = 0; k <= waypoints; ++k) {
    const Vec c = chord_point(static_cast<double>(k) / waypoints);
    anchors_.push_back(c - basis_ * (basis_.transpose() * c));
  }
}

std::vector<double> PullbackPath::control_fractions() const {
  std::vector<double> f;
  const int C = control_count();
  for (int j = 0; j < C; ++j) f.push_back(static_cast<double>(j) / (C - 1));
  return f;
}

Vec PullbackPath::chord_point(double t) const { return (1.0 - t) * start_ + t * end_; }

Mat PullbackPath::chord_controls() const {
  std::vector<Vec> pts;
  for (double t : control_fractions()) pts.push_back(chord_point(t));
  return controls_through(pts);
}

Mat PullbackPath::controls_through(const std::vector<Vec>& ambient_points) const {
  if (static_cast<int>(ambient_points.size()) != control_count()) {
    throw std::invalid_argument("pullback: one ambient point per control fraction required");
  }
  Mat s(control_count(), basis_.cols());
  for (int j = 0; j < control_count(); ++j) s.row(j) = (basis_.transpose() * ambient_points[static_cast<std::size_t>(j)]).transpose();
  return s;
}

std::vector<Vec> PullbackPath::waypoints(const Mat& controls) const {
  const Mat coords = weights_ * controls;  // (K+1) x subspace
  std::vector<Vec> out;
  for (Eigen::Index k = 0; k < coords.rows(); ++k) {
    out.push_back(anchors_[static_cast<std::size_t>(k)] + basis_ * coords.row(k).transpose());
  }
  return out;
}

PullbackResult optimize_pullback(const BehaviorMap& map, const std::vector<BehaviorDistribution>& target,
                                 const std::vector<BaseInput>& bases, const ActivationManifold& mh,
                                 const std::string& label_a, const std::string& label_b,
                                 const PullbackConfig& config) {
  config.validate(mh.pca().dims());
  if (static_cast<int>(target.size()) != config.waypoints + 1) {
    throw std::invalid_argument("optimize_pullback: target must have K + 1 points");
  }
  if (bases.empty()) throw std::invalid_argument("optimize_pullback: no base inputs");
  for (const auto& p : target) {
    if (static_cast<int>(p.size()) != map.classes()) throw std::invalid_argument("optimize_pullback: class count mismatch");
  }

  const PullbackPath param(mh, label_a, label_b, config.control_points, config.waypoints, config.subspace_dims);
  const Mat& W = param.weights();
  const Mat& V = param.basis();
  const PcaBasis& pca = mh.pca();
  const auto C = static_cast<Eigen::Index>(config.control_points);
  const auto D = static_cast<Eigen::Index>(config.subspace_dims);
  const int K = config.waypoints;

  const ConceptSpace& space = mh.space();
  const double norm_a = mh.decode(space.coord(space.index_of(label_a))).norm();
  const double norm_b = mh.decode(space.coord(space.index_of(label_b))).norm();

  std::vector<Vec> sqrt_target;
  for (const auto& p : target) sqrt_target.push_back(p.probabilities().cwiseSqrt());

  PullbackResult result;
  bool jacobian_warned = false;
  const ValueAndGradient fg = [&](const Vec& x, Vec& grad) {
    const Mat S = Eigen::Map<const Mat>(x.data(), C, D);
    const std::vector<Vec> pts = param.waypoints(S);
    Mat gz(K + 1, D);  // d loss / d subspace coordinate of each waypoint
    double loss = 0.0;
    for (int k = 0; k <= K; ++k) {
      const auto a = static_cast<std::size_t>(k);
      Vec mean = Vec::Zero(map.classes());
      Mat jac = Mat::Zero(map.classes(), pts[a].size());
      for (const auto& b : bases) {
        mean += map.evaluate(pts[a], b).probabilities();
        Diagnostics local;
        jac += behavior_jacobian(map, pts[a], b, &local);
        if (!local.empty() && !jacobian_warned) {
          result.diagnostics.warn(local.warnings.front());
          jacobian_warned = true;
        }
      }
      mean /= static_cast<double>(bases.size());
      jac /= static_cast<double>(bases.size());
      const Vec root = mean.cwiseSqrt();
      loss += 0.5 * (root - sqrt_target[a]).squaredNorm();
      const Vec d_mean = 0.5 * (Vec::Ones(mean.size()) - sqrt_target[a].cwiseQuotient(root));
      Vec d_h = jac.transpose() * d_mean;

      if (config.norm_reg_weight > 0.0) {
        const Vec z = pca.project(pts[a]);
        const double n = z.norm();
        const double t = static_cast<double>(k) / K;
        const double gap = n - ((1.0 - t) * norm_a + t * norm_b);
        loss += config.norm_reg_weight * gap * gap;
        if (n > 0.0) d_h += (2.0 * config.norm_reg_weight * gap / n) * (pca.components * z);
      }
      gz.row(k) = (V.transpose() * d_h).transpose();
    }
    const Mat gS = W.transpose() * gz;
    grad = Eigen::Map<const Vec>(gS.data(), gS.size());
    return loss;
  };

  const Mat S0 = config.init == PullbackConfig::Init::custom ? config.custom_controls : param.chord_controls();
  const Vec x0 = Eigen::Map<const Vec>(S0.data(), S0.size());
  Vec g0(x0.size());
  result.initial_loss = fg(x0, g0);
  if (!std::isfinite(result.initial_loss) || !g0.allFinite()) {
    throw std::invalid_argument("optimize_pullback: non-finite loss at initialisation");
  }

  const OptimizerResult opt = lbfgs_minimize(fg, x0, config.optimizer);
  result.final_loss = opt.loss;
  result.loss_history = opt.loss_history;
  result.converged = opt.converged;
  result.line_search_failed = opt.line_search_failed;
  if (opt.line_search_failed) result.diagnostics.warn("optimize_pullback: line search failed; returning best iterate");

  const Mat S = Eigen::Map<const Mat>(opt.x.data(), C, D);
  result.path = make_path(param.waypoints(S), Strategy::pullback);

  const SteeringPath reference = manifold_path(mh, label_a, label_b, K);
  const SteeringPath chord = linear_path(param.chord_point(0.0), param.chord_point(1.0), K);
  try {
    result.r2_vs_manifold = intrinsic_r2(result.path, reference);
    result.r2_linear_baseline = intrinsic_r2(chord, reference);
  } catch (const UndefinedR2& e) {
    result.r2_vs_manifold = result.r2_linear_baseline = std::numeric_limits<double>::quiet_NaN();
    result.diagnostics.warn(e.what());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Recovery scores
// ---------------------------------------------------------------------------

namespace {

double point_segment_distance_sq(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

}  // namespace

double intrinsic_r2_in_basis(const SteeringPath& candidate, const SteeringPath& reference, const Mat& basis,
                             const Vec& origin) {
  if (candidate.size() == 0 || reference.size() < 2) throw UndefinedR2("intrinsic_r2: empty path");
  const Mat cand = (candidate.as_matrix().rowwise() - origin.transpose()) * basis;
  const Mat ref = (reference.as_matrix().rowwise() - origin.transpose()) * basis;

  const Vec cand_mean = cand.colwise().mean().transpose();
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (Eigen::Index k = 0; k < cand.rows(); ++k) {
    const Vec y = cand.row(k).transpose();
    ss_tot += (y - cand_mean).squaredNorm();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j + 1 < ref.rows(); ++j) {
      best = std::min(best, point_segment_distance_sq(y, ref.row(j).transpose(), ref.row(j + 1).transpose()));
    }
    ss_res += best;
  }
  if (!(ss_tot > 0.0)) throw UndefinedR2("intrinsic_r2: candidate path has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double intrinsic_r2(const SteeringPath& candidate, const SteeringPath& reference, double variance_threshold) {
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    throw std::invalid_argument("intrinsic_r2: variance_threshold must be in (0, 1]");
  }
  if (reference.size() < 2) throw UndefinedR2("intrinsic_r2: reference needs at least two waypoints");
  if (candidate.size() > 0 && candidate.waypoints.front().size() != reference.waypoints.front().size()) {
    throw std::invalid_argument("intrinsic_r2: dimension mismatch");
  }
  const Mat ref = reference.as_matrix();
  const Vec origin = ref.colwise().mean().transpose();
  const Mat centred = ref.rowwise() - origin.transpose();
  const double total = centred.squaredNorm();
  if (!(total > 0.0)) throw UndefinedR2("intrinsic_r2: reference path has zero variance");

  Eigen::JacobiSVD<Mat> svd(centred, Eigen::ComputeThinV);
  const Vec sv2 = svd.singularValues().array().square();
  Eigen::Index r = 0;
  double captured = 0.0;
  while (r < sv2.size() && captured < variance_threshold * total) captured += sv2(r++);
  r = std::max<Eigen::Index>(r, 1);
  return intrinsic_r2_in_basis(candidate, reference, svd.matrixV().leftCols(r), origin);
}

double mean_manifold_distance(const SteeringPath& path, const ActivationManifold& mh) {
  if (path.size() == 0) throw std::invalid_argument("mean_manifold_distance: empty path");
  double total = 0.0;
  for (const auto& w : path.waypoints) total += mh.project_ambient(w).distance;
  return total / static_cast<double>(path.size());
}

}  // namespace geosteer
