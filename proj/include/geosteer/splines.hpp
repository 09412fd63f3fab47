#pragma once

#include "geosteer/types.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace geosteer {

enum class Boundary { natural, periodic };

/// Vector-valued C² cubic spline, one scalar spline per value column.
///
/// Stored as knot values plus second derivatives at the knots, so every
/// variant (natural, periodic, smoothing) shares one evaluator. Natural
/// splines continue linearly beyond the end knots; periodic splines wrap.
class CubicSpline {
public:
  CubicSpline() = default;

  /// Rebuilds a spline from stored coefficients without refitting.
  static CubicSpline from_coefficients(Boundary boundary, std::vector<double> knots, Mat values,
                                       Mat second_derivatives, double period = 0.0,
                                       double smoothing = 0.0, std::vector<double> weights = {});

  Vec eval(double t) const;
  /// Derivative of order 0..3 at t.
  Vec derivative(double t, int order) const;

  Boundary boundary() const noexcept { return boundary_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  /// Spline values at the knots (the fitted values when smoothing > 0).
  const Mat& values() const noexcept { return values_; }
  const Mat& second_derivatives() const noexcept { return second_; }
  double period() const noexcept { return period_; }
  double smoothing() const noexcept { return smoothing_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  int dim() const noexcept { return static_cast<int>(values_.cols()); }

  /// Parameter range covered by the knots ([t0, t0 + period) when periodic).
  double domain_begin() const noexcept { return knots_.front(); }
  double domain_end() const noexcept {
    return boundary_ == Boundary::periodic ? knots_.front() + period_ : knots_.back();
  }

private:
  friend CubicSpline fit_natural_cubic(std::vector<double>, Mat);
  friend CubicSpline fit_periodic_cubic(std::vector<double>, Mat, double);
  friend CubicSpline fit_smoothing_cubic(std::vector<double>, Mat, std::vector<double>, double);

  // Interval index and local parameter for t already mapped into the domain.
  struct Segment {
    std::size_t lo;
    std::size_t hi;
    double h;
    double a;  // weight of the left knot
  };
  Segment locate(double t) const;
  double wrap(double t) const;

  Boundary boundary_ = Boundary::natural;
  std::vector<double> knots_;
  Mat values_;
  Mat second_;
  double period_ = 0.0;
  double smoothing_ = 0.0;
  std::vector<double> weights_;
};

/// Natural cubic interpolant (zero second derivative at both ends).
/// `values` has one row per knot. Requires >= 3 strictly increasing knots.
CubicSpline fit_natural_cubic(std::vector<double> knots, Mat values);

/// Periodic cubic interpolant. Knots lie in [0, period); the closing value at
/// `period` is implied by the first row and must not be repeated.
CubicSpline fit_periodic_cubic(std::vector<double> knots, Mat values, double period);

/// Reinsch smoothing spline minimising
///   sum_i w_i |y_i - f(t_i)|^2 + smoothing * integral |f''|^2.
/// smoothing = 0 reproduces the natural interpolant.
CubicSpline fit_smoothing_cubic(std::vector<double> knots, Mat values,
                                std::vector<double> weights, double smoothing);

// ---------------------------------------------------------------------------
// Thin-plate splines
// ---------------------------------------------------------------------------

struct PeriodicAxis {
  int axis = 0;
  double period = 0.0;
};

/// r^2 log r, continuous at r = 0.
double tps_kernel(double r);

/// Two-dimensional thin-plate spline with affine polynomial part.
///
/// With a periodic axis every control point is repeated one period above and
/// below on that axis and the affine column for that axis is dropped. Queries
/// are wrapped into [0, period) on the periodic axis.
class TpsSurface {
public:
  TpsSurface() = default;

  static TpsSurface from_coefficients(Mat control_points, Mat control_values, Mat centers,
                                      Mat kernel_weights, Mat affine,
                                      std::optional<PeriodicAxis> periodic);

  Vec eval(const Coord& u) const;

  /// Bending energy 8*pi * sum_d w_d^T K w_d of the fitted surface.
  double bending_energy() const;

  const Mat& control_points() const noexcept { return control_points_; }
  const Mat& control_values() const noexcept { return control_values_; }
  /// Kernel centres: the control points, followed by ghost copies if periodic.
  const Mat& centers() const noexcept { return centers_; }
  const Mat& kernel_weights() const noexcept { return weights_; }
  /// Rows: constant term, then one row per retained coordinate axis.
  const Mat& affine() const noexcept { return affine_; }
  const std::optional<PeriodicAxis>& periodic() const noexcept { return periodic_; }
  int dim() const noexcept { return static_cast<int>(control_values_.cols()); }

  /// Polynomial basis [1, u_0, u_1] without the periodic axis column.
  Vec polynomial_row(const Coord& u) const;

private:
  friend TpsSurface fit_thin_plate(const Mat&, const Mat&, std::optional<PeriodicAxis>);

  Mat control_points_;
  Mat control_values_;
  Mat centers_;
  Mat weights_;
  Mat affine_;
  std::optional<PeriodicAxis> periodic_;
};

/// Fits a thin-plate spline through `intrinsic` (m x 2) -> `values` (m x d).
/// Throws std::invalid_argument for fewer than 4 points or a rank-deficient
/// polynomial block (collinear control points).
TpsSurface fit_thin_plate(const Mat& intrinsic, const Mat& values,
                          std::optional<PeriodicAxis> periodic_axis = std::nullopt);

/// Either a curve or a surface over intrinsic coordinates.
using Parameterization = std::variant<CubicSpline, TpsSurface>;

Vec eval(const Parameterization& param, const Coord& u);
int value_dim(const Parameterization& param);

}  // namespace geosteer
