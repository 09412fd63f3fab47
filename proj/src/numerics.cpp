#include "geosteer/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace geosteer {

namespace {

// Flip each column so its largest-magnitude entry is positive.
void normalise_column_signs(Mat& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::Index best = 0;
    m.col(c).cwiseAbs().maxCoeff(&best);
    if (m(best, c) < 0.0) m.col(c) *= -1.0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

Vec PcaBasis::project(const Vec& x) const { return components.transpose() * (x - mean); }

Vec PcaBasis::reconstruct(const Vec& z) const { return mean + components * z; }

Vec PcaBasis::residual(const Vec& x) const {
  const Vec centred = x - mean;
  return centred - components * (components.transpose() * centred);
}

PcaBasis PcaBasis::truncated(int k) const {
  if (k < 1 || k > dims()) throw std::invalid_argument("PcaBasis::truncated: k out of range");
  PcaBasis out;
  out.mean = mean;
  out.components = components.leftCols(k);
  out.explained_variance = explained_variance.head(k);
  out.ambient_dim = ambient_dim;
  return out;
}

PcaBasis pca_fit(const Mat& data, int k) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("pca_fit: empty data");
  if (k < 1 || k > std::min(n, d)) {
    throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(std::min(n, d)) + "]");
  }

  PcaBasis basis;
  basis.ambient_dim = static_cast<int>(d);
  basis.mean = data.colwise().mean().transpose();
  const Mat centred = data.rowwise() - basis.mean.transpose();

  Eigen::BDCSVD<Mat> svd(centred, Eigen::ComputeThinV);
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  basis.components = svd.matrixV().leftCols(k);
  basis.explained_variance = svd.singularValues().head(k).array().square() / denom;
  normalise_column_signs(basis.components);
  return basis;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("pearson: need at least 3 samples");

  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MdsEmbedding classical_mds(const Mat& distances, int dim) {
  const auto n = distances.rows();
  if (n == 0 || distances.cols() != n) throw std::invalid_argument("classical_mds: matrix must be square");
  if (dim < 1 || dim > n) throw std::invalid_argument("classical_mds: dim out of range");
  if (!distances.allFinite()) throw std::invalid_argument("classical_mds: non-finite distance");
  if ((distances - distances.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("classical_mds: matrix is not symmetric");
  }
  if (distances.minCoeff() < 0.0) throw std::invalid_argument("classical_mds: negative distance");
  if (distances.diagonal().cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("classical_mds: non-zero diagonal");
  }

  const Mat sym = 0.5 * (distances + distances.transpose());
  const Mat sq = sym.array().square().matrix();
  // B = -1/2 J D^2 J with J the centring matrix.
  const Vec row_mean = sq.rowwise().mean();
  const double grand_mean = sq.mean();
  Mat gram = -0.5 * ((sq.colwise() - row_mean).rowwise() - row_mean.transpose());
  gram.array() -= 0.5 * grand_mean;

  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  const Vec ascending = eig.eigenvalues();
  const Mat vectors_asc = eig.eigenvectors();

  MdsEmbedding out;
  out.eigenvalues = ascending.reverse();
  Mat vectors = vectors_asc.rowwise().reverse();

  const double scale = std::max(out.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.eigenvalues(i) < -1e-12 * scale) ++out.negative_eigenvalues;
  }

  Mat top = vectors.leftCols(dim);
  normalise_column_signs(top);
  out.points.resize(n, dim);
  for (int c = 0; c < dim; ++c) {
    const double lambda = std::max(out.eigenvalues(c), 0.0);
    out.points.col(c) = top.col(c) * std::sqrt(lambda);
  }
  // Remove round-off drift from the centring.
  out.points.rowwise() -= out.points.colwise().mean();

  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double fitted = (out.points.row(i) - out.points.row(j)).norm();
      num += (sym(i, j) - fitted) * (sym(i, j) - fitted);
      den += sym(i, j) * sym(i, j);
    }
  }
  out.stress = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// L-BFGS
// ---------------------------------------------------------------------------

void OptimizerConfig::validate() const {
  if (max_outer_steps < 1 || max_inner_iterations < 1 || memory_size < 1) {
    throw std::invalid_argument("OptimizerConfig: step counts and memory must be positive");
  }
  if (!(relative_loss_tolerance >= 0.0)) {
    throw std::invalid_argument("OptimizerConfig: relative_loss_tolerance must be >= 0");
  }
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw std::invalid_argument("OptimizerConfig: need 0 < c1 < c2 < 1");
  }
}

namespace {

struct Trial {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative
  Vec x;
  Vec grad;
};

// Minimiser of the cubic interpolating two trial points, or bisection when the
// cubic has no real minimiser in the safeguarded interior.
double cubic_step(const Trial& a, const Trial& b) {
  const double lo = std::min(a.step, b.step);
  const double hi = std::max(a.step, b.step);
  const double width = hi - lo;
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
  const double disc = d1 * d1 - a.slope * b.slope;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom != 0.0) {
      const double t = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
      if (std::isfinite(t) && t > lo + 0.1 * width && t < hi - 0.1 * width) return t;
    }
  }
  return 0.5 * (lo + hi);
}

class StrongWolfe {
public:
  StrongWolfe(const ValueAndGradient& fg, const OptimizerConfig& cfg, int& evaluations)
      : fg_(fg), cfg_(cfg), evaluations_(evaluations) {}

  // Returns true and fills `out` on success.
  bool search(const Vec& x, double f0, const Vec& g0, const Vec& dir, double initial_step,
              Trial& out) {
    const double slope0 = g0.dot(dir);
    Trial prev{0.0, f0, slope0, x, g0};
    double step = initial_step;
    for (int i = 0; i < kMaxEvaluations; ++i) {
      Trial cur = evaluate(x, dir, step);
      if (!std::isfinite(cur.value)) {
        // Shrink into the finite region.
        step = 0.5 * (prev.step + step);
        continue;
      }
      if (roundoff_accept(cur, f0, slope0)) {
        out = std::move(cur);
        return true;
      }
      if (cur.value > f0 + cfg_.wolfe_c1 * step * slope0 || (i > 0 && cur.value >= prev.value)) {
        return zoom(x, f0, slope0, dir, prev, cur, out);
      }
      if (std::abs(cur.slope) <= -cfg_.wolfe_c2 * slope0) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(x, f0, slope0, dir, cur, prev, out);
      prev = std::move(cur);
      step *= 2.0;
    }
    return false;
  }

private:
  static constexpr int kMaxEvaluations = 25;

  // Near a minimum the Armijo decrease drops below the rounding error of f.
  // There a point within that error of f0 is accepted if the gradient meets
  // the strong curvature condition, which stays informative when values do not.
  bool roundoff_accept(const Trial& cur, double f0, double slope0) const {
    if (!std::isfinite(cur.value)) return false;
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
    if (cur.value > f0 + noise) return false;
    if (-cfg_.wolfe_c1 * cur.step * slope0 > noise) return false;
    return std::abs(cur.slope) <= -cfg_.wolfe_c2 * slope0;
  }

  Trial evaluate(const Vec& x, const Vec& dir, double step) {
    Trial t;
    t.step = step;
    t.x = x + step * dir;
    t.grad.resize(x.size());
    t.value = fg_(t.x, t.grad);
    ++evaluations_;
    t.slope = t.grad.dot(dir);
    if (!t.grad.allFinite()) t.value = std::numeric_limits<double>::infinity();
    return t;
  }

  bool zoom(const Vec& x, double f0, double slope0, const Vec& dir, Trial lo, Trial hi,
            Trial& out) {
    for (int i = 0; i < kMaxEvaluations; ++i) {
      if (std::abs(hi.step - lo.step) * dir.lpNorm<Eigen::Infinity>() < 1e-16) break;
      const double step = cubic_step(lo, hi);
      Trial cur = evaluate(x, dir, step);
      if (roundoff_accept(cur, f0, slope0)) {
        out = std::move(cur);
        return true;
      }
      if (!std::isfinite(cur.value) || cur.value > f0 + cfg_.wolfe_c1 * step * slope0 ||
          cur.value >= lo.value) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -cfg_.wolfe_c2 * slope0) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    // Interval collapsed: accept the low end if it made progress.
    if (lo.step > 0.0 && lo.value < f0) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  const ValueAndGradient& fg_;
  const OptimizerConfig& cfg_;
  int& evaluations_;
};

}  // namespace

OptimizerResult lbfgs_minimize(const ValueAndGradient& fg, const Vec& x0,
                               const OptimizerConfig& config) {
  config.validate();
  if (!x0.allFinite()) throw std::invalid_argument("lbfgs_minimize: non-finite x0");

  OptimizerResult result;
  Vec x = x0;
  Vec g(x.size());
  double f = fg(x, g);
  result.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) {
    throw std::invalid_argument("lbfgs_minimize: non-finite objective or gradient at x0");
  }
  result.loss_history.push_back(f);

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;
  StrongWolfe line_search(fg, config, result.evaluations);

  bool stop = false;
  for (int outer = 0; outer < config.max_outer_steps && !stop; ++outer) {
    const double loss_before = f;
    for (int inner = 0; inner < config.max_inner_iterations; ++inner) {
      if (g.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
        result.converged = true;
        stop = true;
        break;
      }

      // Two-loop recursion.
      Vec q = -g;
      const std::size_t m = s_hist.size();
      std::vector<double> alpha(m);
      for (std::size_t i = m; i-- > 0;) {
        alpha[i] = rho_hist[i] * s_hist[i].dot(q);
        q -= alpha[i] * y_hist[i];
      }
      if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho_hist[i] * y_hist[i].dot(q);
        q += (alpha[i] - beta) * s_hist[i];
      }
      Vec dir = std::move(q);
      if (!(g.dot(dir) < 0.0)) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        dir = -g;
      }

      const double initial_step =
          s_hist.empty() ? std::min(1.0, 1.0 / g.lpNorm<1>()) : 1.0;
      Trial accepted;
      if (!line_search.search(x, f, g, dir, initial_step, accepted)) {
        result.line_search_failed = true;
        stop = true;
        break;
      }

      Vec s = accepted.x - x;
      Vec y = accepted.grad - g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (static_cast<int>(s_hist.size()) == config.memory_size) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
      }
      x = std::move(accepted.x);
      g = std::move(accepted.grad);
      f = accepted.value;
      ++result.iterations;
    }
    result.loss_history.push_back(f);
    if (stop) break;
    const double rel = std::abs(loss_before - f) /
                       std::max(std::abs(loss_before), std::numeric_limits<double>::min());
    if (rel < config.relative_loss_tolerance) {
      result.converged = true;
      break;
    }
  }
  if (result.line_search_failed) result.converged = false;

  result.x = std::move(x);
  result.loss = f;
  return result;
}

OptimizerResult lbfgs_minimize(const std::function<double(const Vec&)>& objective,
                               const std::function<Vec(const Vec&)>& gradient, const Vec& x0,
                               const OptimizerConfig& config) {
  const ValueAndGradient fg = [&](const Vec& x, Vec& grad) {
    grad = gradient(x);
    return objective(x);
  };
  return lbfgs_minimize(fg, x0, config);
}

Vec finite_diff_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be positive");
  Vec grad(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::invalid_argument("finite_diff_gradient: non-finite evaluation at coordinate " +
                                  std::to_string(i));
    }
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace geosteer
