#include "geosteer/splines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace geosteer {

namespace {

void check_knots(const std::vector<double>& knots, const Mat& values, std::size_t min_count,
                 const char* who) {
  if (knots.size() < min_count) {
    throw std::invalid_argument(std::string(who) + ": need at least " +
                                std::to_string(min_count) + " knots");
  }
  if (static_cast<std::size_t>(values.rows()) != knots.size()) {
    throw std::invalid_argument(std::string(who) + ": one value row per knot required");
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i])) throw std::invalid_argument(std::string(who) + ": non-finite knot");
    if (i > 0 && !(knots[i] > knots[i - 1])) {
      throw std::invalid_argument(std::string(who) + ": knots must be strictly increasing");
    }
  }
  if (!values.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite value");
}

// Solves a tridiagonal system with a matrix right-hand side (Thomas algorithm).
// sub[i] couples row i to i-1, super[i] couples row i to i+1.
Mat solve_tridiagonal(const std::vector<double>& sub, std::vector<double> diag,
                      const std::vector<double>& super, Mat rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * super[i - 1];
    rhs.row(i) -= w * rhs.row(i - 1);
  }
  rhs.row(n - 1) /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs.row(i) = (rhs.row(i) - super[i] * rhs.row(i + 1)) / diag[i];
  }
  return rhs;
}

}  // namespace

// ---------------------------------------------------------------------------
// CubicSpline
// ---------------------------------------------------------------------------

CubicSpline CubicSpline::from_coefficients(Boundary boundary, std::vector<double> knots,
                                           Mat values, Mat second_derivatives, double period,
                                           double smoothing, std::vector<double> weights) {
  check_knots(knots, values, 2, "CubicSpline");
  if (second_derivatives.rows() != values.rows() || second_derivatives.cols() != values.cols()) {
    throw std::invalid_argument("CubicSpline: coefficient shape mismatch");
  }
  CubicSpline s;
  s.boundary_ = boundary;
  s.knots_ = std::move(knots);
  s.values_ = std::move(values);
  s.second_ = std::move(second_derivatives);
  s.period_ = period;
  s.smoothing_ = smoothing;
  s.weights_ = std::move(weights);
  return s;
}

double CubicSpline::wrap(double t) const {
  if (boundary_ != Boundary::periodic) return t;
  const double t0 = knots_.front();
  double r = std::fmod(t - t0, period_);
  if (r < 0.0) r += period_;
  if (r >= period_) r = 0.0;
  return t0 + r;
}

CubicSpline::Segment CubicSpline::locate(double t) const {
  const std::size_t n = knots_.size();
  if (boundary_ == Boundary::periodic && t >= knots_.back()) {
    const double h = knots_.front() + period_ - knots_.back();
    return {n - 1, 0, h, (knots_.front() + period_ - t) / h};
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
  hi = std::clamp<std::size_t>(hi, 1, n - 1);
  const std::size_t lo = hi - 1;
  const double h = knots_[hi] - knots_[lo];
  return {lo, hi, h, (knots_[hi] - t) / h};
}

Vec CubicSpline::eval(double t) const { return derivative(t, 0); }

Vec CubicSpline::derivative(double t, int order) const {
  if (order < 0 || order > 3) throw std::invalid_argument("CubicSpline::derivative: order must be 0..3");
  if (knots_.empty()) throw std::logic_error("CubicSpline: not fitted");

  if (boundary_ == Boundary::natural) {
    // Linear continuation outside the knot range.
    const bool below = t < knots_.front();
    const bool above = t > knots_.back();
    if (below || above) {
      const double edge = below ? knots_.front() : knots_.back();
      if (order >= 2) return Vec::Zero(dim());
      const Vec slope = derivative(edge, 1);
      if (order == 1) return slope;
      return derivative(edge, 0) + (t - edge) * slope;
    }
  }

  const double x = wrap(t);
  const Segment seg = locate(x);
  const double a = seg.a;
  const double b = 1.0 - a;
  const double h = seg.h;
  const auto yl = values_.row(seg.lo);
  const auto yh = values_.row(seg.hi);
  const auto ml = second_.row(seg.lo);
  const auto mh = second_.row(seg.hi);

  switch (order) {
    case 0:
      return (a * yl + b * yh + ((a * a * a - a) * ml + (b * b * b - b) * mh) * (h * h / 6.0))
          .transpose();
    case 1:
      return ((yh - yl) / h - (3.0 * a * a - 1.0) / 6.0 * h * ml + (3.0 * b * b - 1.0) / 6.0 * h * mh)
          .transpose();
    case 2:
      return (a * ml + b * mh).transpose();
    default:
      return ((mh - ml) / h).transpose();
  }
}

CubicSpline fit_natural_cubic(std::vector<double> knots, Mat values) {
  check_knots(knots, values, 3, "fit_natural_cubic");
  const std::size_t n = knots.size();
  const std::size_t m = n - 2;

  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = knots[i + 1] - knots[i];

  std::vector<double> sub(m), diag(m), super(m);
  Mat rhs(m, values.cols());
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = k + 1;
    sub[k] = h[i - 1];
    diag[k] = 2.0 * (h[i - 1] + h[i]);
    super[k] = h[i];
    rhs.row(k) = 6.0 * ((values.row(i + 1) - values.row(i)) / h[i] -
                        (values.row(i) - values.row(i - 1)) / h[i - 1]);
  }

  CubicSpline s;
  s.boundary_ = Boundary::natural;
  s.second_ = Mat::Zero(n, values.cols());
  s.second_.middleRows(1, m) = solve_tridiagonal(sub, diag, super, std::move(rhs));
  s.knots_ = std::move(knots);
  s.values_ = std::move(values);
  return s;
}

CubicSpline fit_periodic_cubic(std::vector<double> knots, Mat values, double period) {
  check_knots(knots, values, 3, "fit_periodic_cubic");
  if (!(period > 0.0) || knots.front() < 0.0 || knots.back() >= period) {
    throw std::invalid_argument("fit_periodic_cubic: knots must lie in [0, period)");
  }
  const std::size_t n = knots.size();

  // h[i] spans knot i -> i+1, with the last interval closing the loop.
  std::vector<double> h(n);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = knots[i + 1] - knots[i];
  h[n - 1] = knots.front() + period - knots.back();

  auto y = [&](std::size_t i) { return values.row(i % n); };
  std::vector<double> sub(n), diag(n), super(n);
  Mat rhs(n, values.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double hp = h[(i + n - 1) % n];
    const double hc = h[i];
    sub[i] = hp;
    diag[i] = 2.0 * (hp + hc);
    super[i] = hc;
    rhs.row(i) = 6.0 * ((y(i + 1) - y(i)) / hc - (y(i) - y(i + n - 1)) / hp);
  }

  // Cyclic tridiagonal system via Sherman-Morrison: A = T + u v^T with the
  // corner entries A(0, n-1) = A(n-1, 0) = h[n-1] folded into the diagonal.
  const double corner = h[n - 1];
  const double gamma = -diag[0];
  std::vector<double> tdiag = diag;
  tdiag[0] -= gamma;
  tdiag[n - 1] -= corner * corner / gamma;

  const Mat base = solve_tridiagonal(sub, tdiag, super, rhs);
  Mat u = Mat::Zero(n, 1);
  u(0, 0) = gamma;
  u(n - 1, 0) = corner;
  const Mat z = solve_tridiagonal(sub, tdiag, super, u);
  // v = (1, 0, ..., 0, corner / gamma)
  const double vz = z(0, 0) + corner / gamma * z(n - 1, 0);
  Mat second(n, values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const double vy = base(0, c) + corner / gamma * base(n - 1, c);
    second.col(c) = base.col(c) - z.col(0) * (vy / (1.0 + vz));
  }

  CubicSpline s;
  s.boundary_ = Boundary::periodic;
  s.period_ = period;
  s.knots_ = std::move(knots);
  s.values_ = std::move(values);
  s.second_ = std::move(second);
  return s;
}

CubicSpline fit_smoothing_cubic(std::vector<double> knots, Mat values, std::vector<double> weights,
                                double smoothing) {
  check_knots(knots, values, 3, "fit_smoothing_cubic");
  if (weights.size() != knots.size()) {
    throw std::invalid_argument("fit_smoothing_cubic: one weight per knot required");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("fit_smoothing_cubic: weights must be positive");
  }
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw std::invalid_argument("fit_smoothing_cubic: smoothing must be >= 0");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(knots.size());
  const Eigen::Index m = n - 2;
  Vec h(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) h(i) = knots[i + 1] - knots[i];

  // Green & Silverman band matrices: Q is n x (n-2), R is (n-2) x (n-2).
  Mat q = Mat::Zero(n, m);
  Mat r = Mat::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index i = j + 1;
    q(i - 1, j) = 1.0 / h(i - 1);
    q(i, j) = -1.0 / h(i - 1) - 1.0 / h(i);
    q(i + 1, j) = 1.0 / h(i);
    r(j, j) = (h(i - 1) + h(i)) / 3.0;
    if (j + 1 < m) {
      r(j, j + 1) = h(i) / 6.0;
      r(j + 1, j) = h(i) / 6.0;
    }
  }
  Vec inv_w(n);
  for (Eigen::Index i = 0; i < n; ++i) inv_w(i) = 1.0 / weights[static_cast<std::size_t>(i)];

  const Mat scaled_q = (smoothing * inv_w).asDiagonal() * q;  // lambda W^-1 Q
  const Mat system = r + q.transpose() * scaled_q;
  const Mat gamma = system.ldlt().solve(q.transpose() * values);
  Mat fitted = values - scaled_q * gamma;

  CubicSpline s;
  s.boundary_ = Boundary::natural;
  s.second_ = Mat::Zero(n, values.cols());
  s.second_.middleRows(1, m) = gamma;
  s.knots_ = std::move(knots);
  s.values_ = std::move(fitted);
  s.smoothing_ = smoothing;
  s.weights_ = std::move(weights);
  return s;
}

// ---------------------------------------------------------------------------
// Thin-plate splines
// ---------------------------------------------------------------------------

double tps_kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

namespace {

// Ridge on the kernel diagonal; near-duplicate centroids occur with noisy data.
constexpr double kTpsRegularisation = 1e-10;

double wrap_axis(double v, double period) {
  double r = std::fmod(v, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace

Vec TpsSurface::polynomial_row(const Coord& u) const {
  if (periodic_) {
    Vec row(2);
    row << 1.0, u(1 - periodic_->axis);
    return row;
  }
  Vec row(3);
  row << 1.0, u(0), u(1);
  return row;
}

TpsSurface TpsSurface::from_coefficients(Mat control_points, Mat control_values, Mat centers,
                                         Mat kernel_weights, Mat affine,
                                         std::optional<PeriodicAxis> periodic) {
  const Eigen::Index poly = periodic ? 2 : 3;
  if (control_points.cols() != 2 || centers.cols() != 2 || kernel_weights.rows() != centers.rows() ||
      affine.rows() != poly || affine.cols() != kernel_weights.cols() ||
      control_values.rows() != control_points.rows()) {
    throw std::invalid_argument("TpsSurface: coefficient shape mismatch");
  }
  TpsSurface s;
  s.control_points_ = std::move(control_points);
  s.control_values_ = std::move(control_values);
  s.centers_ = std::move(centers);
  s.weights_ = std::move(kernel_weights);
  s.affine_ = std::move(affine);
  s.periodic_ = periodic;
  return s;
}

Vec TpsSurface::eval(const Coord& u) const {
  Coord q = u;
  if (periodic_) q(periodic_->axis) = wrap_axis(q(periodic_->axis), periodic_->period);
  Vec out = affine_.transpose() * polynomial_row(q);
  for (Eigen::Index j = 0; j < centers_.rows(); ++j) {
    const double r = std::hypot(q(0) - centers_(j, 0), q(1) - centers_(j, 1));
    const double k = tps_kernel(r);
    if (k != 0.0) out.noalias() += k * weights_.row(j).transpose();
  }
  return out;
}

double TpsSurface::bending_energy() const {
  const Eigen::Index m = centers_.rows();
  Mat kernel(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      kernel(i, j) = tps_kernel((centers_.row(i) - centers_.row(j)).norm());
    }
  }
  return 8.0 * std::numbers::pi * (weights_.transpose() * kernel * weights_).trace();
}

TpsSurface fit_thin_plate(const Mat& intrinsic, const Mat& values,
                          std::optional<PeriodicAxis> periodic_axis) {
  if (intrinsic.cols() != 2) throw std::invalid_argument("fit_thin_plate: intrinsic coordinates must be 2-D");
  if (intrinsic.rows() != values.rows()) {
    throw std::invalid_argument("fit_thin_plate: one value row per control point required");
  }
  if (intrinsic.rows() < 4) throw std::invalid_argument("fit_thin_plate: need at least 4 control points");
  if (!intrinsic.allFinite() || !values.allFinite()) {
    throw std::invalid_argument("fit_thin_plate: non-finite input");
  }

  Mat centers = intrinsic;
  Mat targets = values;
  if (periodic_axis) {
    const int ax = periodic_axis->axis;
    const double period = periodic_axis->period;
    if ((ax != 0 && ax != 1) || !(period > 0.0)) {
      throw std::invalid_argument("fit_thin_plate: invalid periodic axis");
    }
    if (intrinsic.col(ax).minCoeff() < 0.0 || intrinsic.col(ax).maxCoeff() >= period) {
      throw std::invalid_argument("fit_thin_plate: periodic coordinates must lie in [0, period)");
    }
    const Eigen::Index m = intrinsic.rows();
    centers.resize(3 * m, 2);
    targets.resize(3 * m, values.cols());
    centers.topRows(m) = intrinsic;
    centers.middleRows(m, m) = intrinsic;
    centers.bottomRows(m) = intrinsic;
    centers.middleRows(m, m).col(ax).array() += period;
    centers.bottomRows(m).col(ax).array() -= period;
    targets.topRows(m) = values;
    targets.middleRows(m, m) = values;
    targets.bottomRows(m) = values;
  }

  TpsSurface s;
  s.periodic_ = periodic_axis;
  const Eigen::Index m = centers.rows();
  const Eigen::Index p = periodic_axis ? 2 : 3;

  Mat poly(m, p);
  for (Eigen::Index i = 0; i < m; ++i) poly.row(i) = s.polynomial_row(centers.row(i).transpose()).transpose();
  Eigen::ColPivHouseholderQR<Mat> rank_check(poly);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < p) {
    throw std::invalid_argument("fit_thin_plate: control points are collinear (singular polynomial block)");
  }

  Mat system = Mat::Zero(m + p, m + p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double k = tps_kernel((centers.row(i) - centers.row(j)).norm());
      system(i, j) = k;
      system(j, i) = k;
    }
    system(i, i) = kTpsRegularisation;
  }
  system.topRightCorner(m, p) = poly;
  system.bottomLeftCorner(p, m) = poly.transpose();

  Mat rhs = Mat::Zero(m + p, values.cols());
  rhs.topRows(m) = targets;
  const Mat solution = system.fullPivLu().solve(rhs);

  s.control_points_ = intrinsic;
  s.control_values_ = values;
  s.centers_ = std::move(centers);
  s.weights_ = solution.topRows(m);
  s.affine_ = solution.bottomRows(p);
  return s;
}

Vec eval(const Parameterization& param, const Coord& u) {
  return std::visit(
      [&](const auto& p) -> Vec {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, CubicSpline>) {
          return p.eval(u(0));
        } else {
          return p.eval(u);
        }
      },
      param);
}

int value_dim(const Parameterization& param) {
  return std::visit([](const auto& p) { return p.dim(); }, param);
}

}  // namespace geosteer
