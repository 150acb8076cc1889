#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "trajnet/linalg.hpp"

namespace trajnet {

using Rng = std::mt19937_64;

/// Named sub-streams derived from one user seed. Every random quantity in a
/// run flows from `make_stream(seed, kind, index)`.
enum class Stream : std::uint64_t { Chain = 1, Cluster = 2, Simulation = 3, Test = 4 };

Rng make_stream(std::uint64_t seed, Stream kind, std::uint64_t index = 0);

/// Fresh engine seeded from the next outputs of `parent`.
Rng split(Rng& parent);

double std_normal(Rng& rng);
double uniform01(Rng& rng);
/// Gamma with shape `a` and rate `b` (mean a/b).
double gamma_rate(Rng& rng, double a, double b);
/// Inverse-gamma with shape `a` and scale `b` (mean b/(a-1)).
double inv_gamma(Rng& rng, double a, double b);
double beta_dist(Rng& rng, double a, double b);
double chi_squared(Rng& rng, double dof);

Vector std_normal_vector(Rng& rng, Eigen::Index n);

/// Draw from N(Q^{-1} b, Q^{-1}) given the Cholesky factor of the precision Q.
Vector mvn_canonical(Rng& rng, const Eigen::LLT<Matrix>& precision_llt, const Vector& b);

/// Draw from N(mu, LL^T) given the lower Cholesky factor L of the covariance.
Vector mvn_cov_factor(Rng& rng, const Vector& mu, const Matrix& lower);

/// Index drawn with probability proportional to exp(log_w); -inf weights allowed.
std::size_t sample_log_weights(Rng& rng, const std::vector<double>& log_w);

double log_sum_exp(const std::vector<double>& v);

// Log-densities of the scalar priors.
double inv_gamma_logpdf(double x, double a, double b);
double gamma_logpdf(double x, double a, double b);

}  // namespace trajnet
