#pragma once

#include <optional>
#include <vector>

#include "trajnet/linalg.hpp"

namespace trajnet {

/// Multi-process squared-exponential kernel parameters. All strictly positive.
struct KernelParams {
  double sigma2 = 1.0;     // global variance
  double phi2 = 1.0;       // squared length-scale
  double eta2 = 1.0;       // nugget, same-process same-time only
  std::vector<double> xi;  // per-process scale factors

  bool valid() const;
};

/// xi_{s1} xi_{s2} sigma2 exp(-(ti - tj)^2 / phi2) + eta2 [s1 == s2 and ti == tj]
double kernel_entry(const KernelParams& params, int s1, int s2, double ti, double tj);

/// Assembled kernel over the concatenated process grids, with its Cholesky
/// factorization. Immutable once built.
class KernelMatrix {
 public:
  /// Ridge ladder tried in order: 0, 1e-10, 1e-9, ..., 1e-6.
  static const std::vector<double>& jitter_ladder();

  KernelMatrix(const KernelParams& params, const std::vector<std::vector<double>>& times);

  /// Wraps an arbitrary covariance (used for tests and generic Gaussians).
  explicit KernelMatrix(Matrix cov);

  const Matrix& matrix() const { return k_; }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  double ridge() const { return ridge_; }
  double log_det() const { return log_det_; }
  Eigen::Index dim() const { return k_.rows(); }
  /// K^{-1}, computed on first use.
  const Matrix& inverse() const;
  /// Lower Cholesky factor of K + ridge I.
  Matrix lower() const { return llt_.matrixL(); }

 private:
  void factorize(const std::string& context);

  Matrix k_;
  Eigen::LLT<Matrix> llt_;
  double ridge_ = 0.0;
  double log_det_ = 0.0;
  mutable std::optional<Matrix> inverse_;
};

KernelMatrix build_kernel_matrix(const KernelParams& params, const std::vector<std::vector<double>>& times);

double gaussian_logpdf_cov(const Vector& x, const Vector& mu, const KernelMatrix& k);

struct GaussianConditional {
  std::vector<Eigen::Index> missing;   // indices of the conditioned-out block
  std::vector<Eigen::Index> observed;
  Vector mean;
  Matrix cov;
  bool noop = false;  // nothing missing
};

/// Distribution of x[missing] given x[observed] under N(mu, cov).
GaussianConditional gaussian_conditional(const Vector& x, const std::vector<bool>& observed, const Vector& mu,
                                         const Matrix& cov);

}  // namespace trajnet
