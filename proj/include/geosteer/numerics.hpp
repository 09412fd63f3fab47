#pragma once

#include "geosteer/types.hpp"

#include <functional>
#include <span>

namespace geosteer {

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

/// Unwhitened principal subspace of a point cloud.
///
/// `components` holds one orthonormal direction per column, ordered by
/// decreasing explained variance. Each column is sign-normalised so that its
/// largest-magnitude entry is positive.
struct PcaBasis {
  Vec mean;
  Mat components;          // ambient_dim x k
  Vec explained_variance;  // k, non-increasing
  int ambient_dim = 0;

  int dims() const noexcept { return static_cast<int>(components.cols()); }

  /// Coordinates of an ambient vector in the basis.
  Vec project(const Vec& x) const;
  /// Ambient point for basis coordinates (mean + components * z).
  Vec reconstruct(const Vec& z) const;
  /// Part of `x - mean` that the basis does not capture.
  Vec residual(const Vec& x) const;

  /// Copy restricted to the leading `k` components.
  PcaBasis truncated(int k) const;
};

/// Fits a k-component PCA basis to the rows of `data` (samples x ambient).
/// Variances use the n-1 denominator. Throws std::invalid_argument when k is
/// outside [1, min(ambient, samples)].
PcaBasis pca_fit(const Mat& data, int k);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Sample Pearson correlation. Throws UndefinedCorrelation on constant input.
double pearson(std::span<const double> x, std::span<const double> y);

struct MdsEmbedding {
  Mat points;       // n x dim, centred
  Vec eigenvalues;  // all n eigenvalues of the double-centred Gram, non-increasing
  double stress = 0.0;
  int negative_eigenvalues = 0;  // clamped to zero before embedding
};

/// Classical (Torgerson) multidimensional scaling.
MdsEmbedding classical_mds(const Mat& distances, int dim);

// ---------------------------------------------------------------------------
// Optimisation
// ---------------------------------------------------------------------------

struct OptimizerConfig {
  int max_outer_steps = 50;
  int max_inner_iterations = 5;
  /// Zero disables the loss-based stop.
  double relative_loss_tolerance = 1e-3;
  int memory_size = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  /// Stop once the infinity norm of the gradient drops to this value.
  double gradient_tolerance = 1e-12;

  void validate() const;
};

struct OptimizerResult {
  Vec x;
  double loss = 0.0;
  /// Loss at x0 followed by the loss after every outer step. Non-increasing
  /// up to the rounding error of the loss.
  std::vector<double> loss_history;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Objective that also writes its gradient into `grad` (already sized).
using ValueAndGradient = std::function<double(const Vec& x, Vec& grad)>;

/// Limited-memory BFGS with a strong-Wolfe line search.
///
/// One outer step runs up to `max_inner_iterations` quasi-Newton iterations
/// with the curvature history carried across steps. Iteration stops when the
/// relative loss change between consecutive outer steps falls below
/// `relative_loss_tolerance`, when the gradient vanishes, or when the step
/// budget runs out. A failed line search ends the run at the best iterate and
/// sets `line_search_failed`.
OptimizerResult lbfgs_minimize(const ValueAndGradient& fg, const Vec& x0,
                               const OptimizerConfig& config = {});

OptimizerResult lbfgs_minimize(const std::function<double(const Vec&)>& objective,
                               const std::function<Vec(const Vec&)>& gradient,
                               const Vec& x0, const OptimizerConfig& config = {});

/// Central-difference gradient with step h.
Vec finite_diff_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                         double h);

}  // namespace geosteer
