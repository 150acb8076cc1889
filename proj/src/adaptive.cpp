#include "trajnet/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trajnet {

AdaptiveProposal::AdaptiveProposal(int dim, double initial_sd, double eps)
    : dim_(dim), initial_sd_(initial_sd), eps_(eps), mean_(Vector::Zero(dim)), m2_(Matrix::Zero(dim, dim)) {
  refresh_factor();
}

Matrix AdaptiveProposal::proposal_covariance() const {
  const double lambda2 = std::exp(2.0 * log_scale_);
  if (!empirical_ || count_ < 2) return lambda2 * initial_sd_ * initial_sd_ * Matrix::Identity(dim_, dim_);
  Matrix c = m2_ / static_cast<double>(count_ - 1);
  c.diagonal().array() += eps_;
  return lambda2 * (2.38 * 2.38 / dim_) * c;
}

void AdaptiveProposal::refresh_factor() {
  const Matrix cov = symmetrize(proposal_covariance());
  if (auto llt = try_cholesky(cov)) {
    factor_ = llt->matrixL();
  } else {
    // Fall back to the diagonal when rounding breaks positive definiteness.
    factor_ = cov.diagonal().cwiseMax(eps_).cwiseSqrt().asDiagonal();
  }
}

Vector AdaptiveProposal::propose(const Vector& current, Rng& rng) const {
  return current + factor_ * std_normal_vector(rng, dim_);
}

void AdaptiveProposal::record(const Vector& state, double accept_prob, bool use_empirical) {
  if (frozen_) return;
  ++count_;
  ++steps_;
  accepted_sum_ += accept_prob;
  const Vector delta = state - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (state - mean_).transpose();
  log_scale_ += std::pow(static_cast<double>(steps_), -0.6) * (accept_prob - 0.234);
  log_scale_ = std::clamp(log_scale_, -20.0, 20.0);
  empirical_ = use_empirical;
  // Refactorizing every step is O(d^3); thin it out for large blocks.
  const long every = std::max(1, dim_ / 20);
  if (steps_ % every == 0) refresh_factor();
}

double mh_acceptance(double lp_current, double lp_proposed) {
  if (std::isnan(lp_proposed) || lp_proposed == -std::numeric_limits<double>::infinity()) return 0.0;
  if (lp_proposed >= lp_current) return 1.0;
  const double a = std::exp(lp_proposed - lp_current);
  return std::isnan(a) ? 0.0 : a;
}

}  // namespace trajnet
