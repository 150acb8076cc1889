#pragma once

#include "trajnet/linalg.hpp"
#include "trajnet/random.hpp"

namespace trajnet {

/// Adaptive random-walk Metropolis proposal (Haario et al.): Gaussian step
/// with covariance lambda^2 * (2.38^2 / d) * (C + eps I), C the running
/// covariance of the chain. Before the empirical covariance is switched on the
/// step is lambda^2 * initial_sd^2 I. lambda follows a Robbins-Monro recursion
/// towards 0.234 acceptance. Everything stops changing once frozen.
class AdaptiveProposal {
 public:
  explicit AdaptiveProposal(int dim = 1, double initial_sd = 0.1, double eps = 1e-6);

  int dim() const { return dim_; }
  Vector propose(const Vector& current, Rng& rng) const;

  /// Records the state after an MH step. `use_empirical` switches the
  /// proposal to the running covariance.
  void record(const Vector& state, double accept_prob, bool use_empirical);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  Matrix proposal_covariance() const;
  double log_scale() const { return log_scale_; }
  long count() const { return count_; }
  double acceptance_rate() const { return steps_ > 0 ? accepted_sum_ / static_cast<double>(steps_) : 0.0; }

 private:
  void refresh_factor();

  int dim_;
  double initial_sd_;
  double eps_;
  long count_ = 0;
  long steps_ = 0;
  double accepted_sum_ = 0.0;
  Vector mean_;
  Matrix m2_;
  double log_scale_ = 0.0;
  bool empirical_ = false;
  bool frozen_ = false;
  Matrix factor_;
};

/// min(1, exp(lp_proposed - lp_current)); zero for a -inf or NaN proposal.
double mh_acceptance(double lp_current, double lp_proposed);

}  // namespace trajnet
