#include "trajnet/ggm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trajnet/errors.hpp"

namespace trajnet {
namespace {

/// Upper-triangular T with T^T T = Psi^{-1}.
Matrix upper_factor_of_inverse(const Matrix& psi) {
  auto llt = try_cholesky(psi);
  if (!llt) throw NumericalError("G-Wishart scale matrix is not positive definite");
  const Matrix inv = llt->solve(Matrix::Identity(psi.rows(), psi.cols()));
  auto llt_inv = try_cholesky(symmetrize(inv));
  if (!llt_inv) throw NumericalError("inverse scale matrix is not positive definite");
  return llt_inv->matrixU();
}

void check_params(const GWishartParams& params, const Graph& g) {
  if (params.Psi.rows() != params.Psi.cols()) throw ContractError("G-Wishart: Psi must be square");
  if (params.p() != g.p()) throw ContractError("G-Wishart: graph size does not match Psi");
  if (!(params.nu > 2.0)) throw ContractError("G-Wishart: nu must exceed 2");
}

}  // namespace

double default_edge_probability(int p) {
  if (p < 3) throw ContractError("default edge probability needs p >= 3");
  return 2.0 / (p - 1);
}

double graph_prior_logpmf(const Graph& g, double d) {
  if (!(d > 0.0 && d < 1.0)) throw ContractError("edge probability must be in (0, 1)");
  const int e = g.edge_count();
  return e * std::log(d) + (g.max_edges() - e) * std::log1p(-d);
}

Graph sample_graph_prior(int p, double d, Rng& rng) {
  Graph g(p);
  for (int i = 0; i < g.max_edges(); ++i) {
    if (uniform01(rng) < d) g.toggle_edge_index(i);
  }
  return g;
}

double pattern_violation(const Matrix& omega, const Graph& g) {
  double worst = 0.0;
  for (int h = 0; h < g.p(); ++h) {
    for (int k = h + 1; k < g.p(); ++k) {
      if (!g.has_edge(h, k)) worst = std::max({worst, std::abs(omega(h, k)), std::abs(omega(k, h))});
    }
  }
  return worst;
}

double gwishart_logdensity_unnorm(const Matrix& omega, const GWishartParams& params, const Graph& g) {
  check_params(params, g);
  if (omega.rows() != g.p() || omega.cols() != g.p()) throw ContractError("G-Wishart density: dimension mismatch");
  if (pattern_violation(omega, g) > 0.0) throw ContractError("G-Wishart density: omega violates the graph's zero pattern");
  auto llt = try_cholesky(omega);
  if (!llt) throw ContractError("G-Wishart density: omega is not positive definite");
  return 0.5 * (params.nu - 2.0) * log_det_from_llt(*llt) - 0.5 * (params.Psi.cwiseProduct(omega)).sum();
}

Matrix wishart_sample(const GWishartParams& params, Rng& rng) {
  const int p = params.p();
  const Matrix t = upper_factor_of_inverse(params.Psi);
  Matrix psi = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    psi(i, i) = std::sqrt(chi_squared(rng, params.nu + (p - 1 - i)));
    for (int j = i + 1; j < p; ++j) psi(i, j) = std_normal(rng);
  }
  const Matrix phi = psi.triangularView<Eigen::Upper>() * t;
  return symmetrize(phi.transpose() * phi);
}

Matrix gwishart_sample(const GWishartParams& params, const Graph& g, Rng& rng, int max_iterations) {
  check_params(params, g);
  const int p = g.p();
  Matrix omega = wishart_sample(params, rng);
  if (g.is_complete()) return omega;

  auto llt = try_cholesky(omega);
  if (!llt) throw NumericalError("G-Wishart sampler: Wishart draw not positive definite");
  const Matrix sigma = llt->solve(Matrix::Identity(p, p));
  Matrix w = sigma;
  std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) nbrs[static_cast<std::size_t>(j)] = g.neighbors(j);

  int it = 0;
  for (; it < max_iterations; ++it) {
    double change = 0.0;
    for (int j = 0; j < p; ++j) {
      const auto& nj = nbrs[static_cast<std::size_t>(j)];
      Vector col = Vector::Zero(p);
      if (!nj.empty()) {
        const Matrix w_nn = w(nj, nj);
        const Vector s_nj = sigma(nj, std::vector<int>{j});
        const Vector beta = w_nn.llt().solve(s_nj);
        col = w(Eigen::all, nj) * beta;
      }
      for (int k = 0; k < p; ++k) {
        if (k == j) continue;
        change = std::max(change, std::abs(w(k, j) - col(k)));
        w(k, j) = col(k);
        w(j, k) = col(k);
      }
    }
    if (change <= 1e-13 * w.diagonal().cwiseAbs().maxCoeff()) break;
  }

  auto wllt = try_cholesky(w);
  if (!wllt) throw NumericalError("G-Wishart sampler: completed covariance not positive definite after " +
                                  std::to_string(it) + " iterations");
  omega = symmetrize(wllt->solve(Matrix::Identity(p, p)));
  const double scale = std::max(1.0, omega.diagonal().cwiseAbs().maxCoeff());
  const double violation = pattern_violation(omega, g);
  if (it >= max_iterations || violation > 1e-10 * scale) {
    throw NumericalError("G-Wishart sampler: pattern completion did not converge (iterations " +
                         std::to_string(it) + ", violation " + std::to_string(violation) + ")");
  }
  for (int h = 0; h < p; ++h) {
    for (int k = h + 1; k < p; ++k) {
      if (!g.has_edge(h, k)) omega(h, k) = omega(k, h) = 0.0;
    }
  }
  if (!try_cholesky(omega)) throw NumericalError("G-Wishart sampler: result not positive definite");
  return omega;
}

LogNormEstimate gwishart_lognorm_mc(const GWishartParams& params, const Graph& g, int n_mc, Rng& rng) {
  check_params(params, g);
  if (n_mc < 1) throw ContractError("gwishart_lognorm_mc: n_mc must be positive");
  const int p = g.p();
  const double b = params.nu;
  const Matrix t = upper_factor_of_inverse(params.Psi);

  std::vector<int> up(static_cast<std::size_t>(p), 0), down(static_cast<std::size_t>(p), 0);
  for (auto [h, k] : g.edges()) {
    ++up[static_cast<std::size_t>(h)];
    ++down[static_cast<std::size_t>(k)];
  }
  double log_c = 0.0;
  for (int i = 0; i < p; ++i) {
    const double nu_i = up[static_cast<std::size_t>(i)];
    const double b_i = nu_i + down[static_cast<std::size_t>(i)] + 1.0;
    log_c += 0.5 * (b + nu_i) * std::log(2.0) + 0.5 * nu_i * kLog2Pi + std::lgamma(0.5 * (b + nu_i)) +
             (b + b_i - 1.0) * std::log(t(i, i));
  }
  if (g.is_complete()) return {log_c, 0.0};

  std::vector<double> log_f(static_cast<std::size_t>(n_mc));
  Matrix psi = Matrix::Zero(p, p);
  Matrix phi = Matrix::Zero(p, p);
  for (int m = 0; m < n_mc; ++m) {
    double acc = 0.0;
    for (int r = 0; r < p; ++r) {
      psi(r, r) = std::sqrt(chi_squared(rng, b + up[static_cast<std::size_t>(r)]));
      phi(r, r) = psi(r, r) * t(r, r);
      for (int s = r + 1; s < p; ++s) {
        // partial = sum_{j=r}^{s-1} psi(r,j) t(j,s)
        double partial = 0.0;
        for (int j = r; j < s; ++j) partial += psi(r, j) * t(j, s);
        if (g.has_edge(r, s)) {
          psi(r, s) = std_normal(rng);
          phi(r, s) = partial + psi(r, s) * t(s, s);
        } else {
          // Omega(r,s) = sum_{i<=r} phi(i,r) phi(i,s) = 0
          double cross = 0.0;
          for (int i = 0; i < r; ++i) cross += phi(i, r) * phi(i, s);
          phi(r, s) = -cross / phi(r, r);
          psi(r, s) = (phi(r, s) - partial) / t(s, s);
          acc += psi(r, s) * psi(r, s);
        }
      }
    }
    log_f[static_cast<std::size_t>(m)] = -0.5 * acc;
  }
  const double lse = log_sum_exp(log_f);
  const double log_mean = lse - std::log(static_cast<double>(n_mc));
  // Relative standard error of the mean of f = exp(log_f).
  double s1 = 0.0, s2 = 0.0;
  for (double lf : log_f) {
    const double r = std::exp(lf - log_mean);
    s1 += r;
    s2 += r * r;
  }
  const double n = static_cast<double>(n_mc);
  const double var = std::max(s2 / n - (s1 / n) * (s1 / n), 0.0);
  return {log_c + log_mean, std::sqrt(var / n)};
}

bool NormConstCache::same_params(const GWishartParams& params) const {
  return has_params_ && params.nu == nu_ && params.Psi.rows() == psi_.rows() && params.Psi == psi_;
}

void NormConstCache::clear() {
  values_.clear();
  has_params_ = false;
}

double NormConstCache::log_norm(const GWishartParams& params, const Graph& g, int n_mc, Rng& rng) {
  if (!same_params(params)) {
    values_.clear();
    nu_ = params.nu;
    psi_ = params.Psi;
    has_params_ = true;
  }
  if (auto it = values_.find(g.key()); it != values_.end()) return it->second;
  if (values_.size() >= max_entries_) values_.clear();
  const double v = gwishart_lognorm_mc(params, g, n_mc, rng).estimate;
  values_.emplace(g.key(), v);
  return v;
}

BdResult bd_update(const Matrix& scatter, int n, const Graph& g, const GWishartParams& prior, double d, Rng& rng,
                   BdCaches& caches, const BdOptions& options) {
  check_params(prior, g);
  if (scatter.rows() != g.p() || scatter.cols() != g.p()) throw ContractError("bd_update: scatter dimension mismatch");
  if (!(d > 0.0 && d < 1.0)) throw ContractError("bd_update: edge probability must be in (0, 1)");
  const GWishartParams post{prior.nu + n, symmetrize(prior.Psi + scatter)};
  BdResult res;
  res.graph = g;
  const int moves = options.n_moves < 0 ? g.p() : options.n_moves;
  if (g.max_edges() > 0) {
    const bool no_data = n == 0 && scatter.isZero(0.0);
    auto log_marginal = [&](const Graph& h) {
      if (no_data) return 0.0;
      return caches.posterior.log_norm(post, h, options.n_mc, rng) - caches.prior.log_norm(prior, h, options.n_mc, rng);
    };
    const double log_odds = std::log(d) - std::log1p(-d);
    std::uniform_int_distribution<int> pick(0, g.max_edges() - 1);
    double current = log_marginal(res.graph);
    for (int m = 0; m < moves; ++m) {
      const int e = pick(rng);
      Graph next = res.graph;
      next.toggle_edge_index(e);
      const double proposed = log_marginal(next);
      // Birth adds an edge (prior odds d/(1-d)), death removes one.
      const double log_rate = proposed - current + (next.edge_at_index(e) ? log_odds : -log_odds);
      if (!std::isfinite(log_rate)) {
        ++res.degenerate;
        continue;
      }
      if (log_rate >= 0.0 || std::log(uniform01(rng)) < log_rate) {
        res.graph = std::move(next);
        current = proposed;
        ++res.accepted;
      }
    }
  }
  res.omega = gwishart_sample(post, res.graph, rng);
  return res;
}

BdResult bd_update_rows(const Matrix& centered_rows, const Graph& g, const GWishartParams& prior, double d, Rng& rng,
                        BdCaches& caches, const BdOptions& options) {
  if (centered_rows.rows() > 0 && centered_rows.cols() != g.p()) throw ContractError("bd_update: data dimension mismatch");
  const Matrix scatter = centered_rows.rows() > 0 ? Matrix(centered_rows.transpose() * centered_rows)
                                                  : Matrix(Matrix::Zero(g.p(), g.p()));
  return bd_update(scatter, static_cast<int>(centered_rows.rows()), g, prior, d, rng, caches, options);
}

std::vector<Graph> enumerate_graphs(int p) {
  if (p < 1 || p > 5) throw ContractError("enumerate_graphs: p must be between 1 and 5");
  const int e = p * (p - 1) / 2;
  std::vector<Graph> out;
  out.reserve(std::size_t{1} << e);
  for (unsigned long mask = 0; mask < (1UL << e); ++mask) out.push_back(Graph::from_mask(p, mask));
  return out;
}

double gaussian_logdensity_precision(const Vector& m, const Vector& mu, const Matrix& omega) {
  if (m.size() != mu.size() || omega.rows() != m.size() || omega.cols() != m.size()) {
    throw ContractError("gaussian_logdensity_precision: dimension mismatch");
  }
  auto llt = try_cholesky(omega);
  if (!llt) throw NumericalError("gaussian_logdensity_precision: omega is not positive definite");
  const Vector r = m - mu;
  return 0.5 * log_det_from_llt(*llt) - 0.5 * static_cast<double>(m.size()) * kLog2Pi - 0.5 * r.dot(omega * r);
}

}  // namespace trajnet
