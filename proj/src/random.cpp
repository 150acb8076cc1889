#include "trajnet/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "trajnet/errors.hpp"

namespace trajnet {

Rng make_stream(std::uint64_t seed, Stream kind, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

Rng split(Rng& parent) {
  std::seed_seq seq{static_cast<std::uint32_t>(parent()), static_cast<std::uint32_t>(parent()),
                    static_cast<std::uint32_t>(parent()), static_cast<std::uint32_t>(parent())};
  return Rng(seq);
}

double std_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double gamma_rate(Rng& rng, double a, double b) {
  return std::gamma_distribution<double>(a, 1.0 / b)(rng);
}

double inv_gamma(Rng& rng, double a, double b) { return 1.0 / gamma_rate(rng, a, b); }

double beta_dist(Rng& rng, double a, double b) {
  const double x = gamma_rate(rng, a, 1.0);
  const double y = gamma_rate(rng, b, 1.0);
  return x / (x + y);
}

double chi_squared(Rng& rng, double dof) { return gamma_rate(rng, 0.5 * dof, 0.5); }

Vector std_normal_vector(Rng& rng, Eigen::Index n) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = std_normal(rng);
  return z;
}

Vector mvn_canonical(Rng& rng, const Eigen::LLT<Matrix>& precision_llt, const Vector& b) {
  const Vector mean = precision_llt.solve(b);
  const Vector z = std_normal_vector(rng, b.size());
  // Q = L L^T, so L^{-T} z has covariance Q^{-1}.
  const Vector dev = precision_llt.matrixU().solve(z);
  return mean + dev;
}

Vector mvn_cov_factor(Rng& rng, const Vector& mu, const Matrix& lower) {
  return mu + lower.triangularView<Eigen::Lower>() * std_normal_vector(rng, mu.size());
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::size_t sample_log_weights(Rng& rng, const std::vector<double>& log_w) {
  const double lse = log_sum_exp(log_w);
  if (!std::isfinite(lse)) throw NumericalError("sample_log_weights: no finite weight");
  double u = uniform01(rng);
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    u -= std::exp(log_w[k] - lse);
    if (u <= 0.0) return k;
  }
  // Rounding residue: return the last index with positive weight.
  for (std::size_t k = log_w.size(); k-- > 0;) {
    if (std::isfinite(log_w[k])) return k;
  }
  return log_w.size() - 1;
}

double inv_gamma_logpdf(double x, double a, double b) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double gamma_logpdf(double x, double a, double b) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
}

}  // namespace trajnet
