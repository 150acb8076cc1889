#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "trajnet/graph.hpp"
#include "trajnet/linalg.hpp"
#include "trajnet/random.hpp"

namespace trajnet {

/// G-Wishart(nu, Psi, G) with density proportional to
///   |Omega|^{(nu - 2)/2} exp(-tr(Psi Omega)/2)   on the cone of PD matrices with zeros off G.
/// For the complete graph this is a Wishart with nu + p - 1 degrees of freedom
/// and scale Psi^{-1}.
struct GWishartParams {
  double nu = 3.0;
  Matrix Psi;

  int p() const { return static_cast<int>(Psi.rows()); }
};

/// Default edge inclusion probability 2 / (p - 1).
double default_edge_probability(int p);

/// Log pmf of the i.i.d. Bernoulli(d) edge prior.
double graph_prior_logpmf(const Graph& g, double d);

/// Graph with i.i.d. Bernoulli(d) edges.
Graph sample_graph_prior(int p, double d, Rng& rng);

/// Largest |omega(h,k)| over non-edges h != k.
double pattern_violation(const Matrix& omega, const Graph& g);

/// ((nu - 2)/2) log|Omega| - tr(Psi Omega)/2; throws ContractError when
/// omega breaks the zero pattern of g or is not PD.
double gwishart_logdensity_unnorm(const Matrix& omega, const GWishartParams& params, const Graph& g);

/// Complete-graph draw (Bartlett decomposition).
Matrix wishart_sample(const GWishartParams& params, Rng& rng);

/// Exact G-Wishart draw: complete-graph Wishart followed by iterative
/// completion onto the zero pattern. Structural zeros are exact in the result.
Matrix gwishart_sample(const GWishartParams& params, const Graph& g, Rng& rng, int max_iterations = 10000);

struct LogNormEstimate {
  double estimate = 0.0;   // log I_G(nu, Psi)
  double std_error = 0.0;  // delta-method standard error on the log scale
};

/// Monte Carlo estimate of log I_G(nu, Psi), the normalizing constant of the
/// unnormalized density above, via the Cholesky-cone representation with
/// free entries Gaussian / chi and non-free entries completed. Exact (zero
/// error) for the complete graph.
LogNormEstimate gwishart_lognorm_mc(const GWishartParams& params, const Graph& g, int n_mc, Rng& rng);

/// Estimates of log I_G for one fixed (nu, Psi), keyed by graph. Reset
/// automatically when queried with different parameters.
class NormConstCache {
 public:
  explicit NormConstCache(std::size_t max_entries = 200000) : max_entries_(max_entries) {}

  double log_norm(const GWishartParams& params, const Graph& g, int n_mc, Rng& rng);
  std::size_t size() const { return values_.size(); }
  void clear();

 private:
  bool same_params(const GWishartParams& params) const;

  std::size_t max_entries_;
  bool has_params_ = false;
  double nu_ = 0.0;
  Matrix psi_;
  std::unordered_map<std::string, double> values_;
};

struct BdOptions {
  int n_moves = -1;  // single-edge flips per call; -1 means p
  int n_mc = 500;    // Monte Carlo draws per normalizing constant
};

struct BdResult {
  Graph graph;
  Matrix omega;
  int accepted = 0;
  int degenerate = 0;  // moves whose rate was non-finite (chain stayed)
};

/// Caches owned by the caller: the prior constants for the chain lifetime,
/// the posterior constants while the cluster's data stay unchanged.
struct BdCaches {
  NormConstCache prior;
  NormConstCache posterior;
};

/// Birth-death structure update for one cluster. `scatter` is sum r r^T over
/// the n centered observations. Each move picks one edge uniformly and flips
/// it with probability min(1, rate), where the rate is the posterior odds of
/// the neighbouring graph with Omega integrated out:
///   [I_{G'}(nu+n, Psi+S) / I_{G'}(nu, Psi)] / [I_G(nu+n, Psi+S) / I_G(nu, Psi)] * pi(G')/pi(G).
/// Omega is then redrawn from G-Wishart(nu + n, Psi + S, G).
BdResult bd_update(const Matrix& scatter, int n, const Graph& g, const GWishartParams& prior, double d, Rng& rng,
                   BdCaches& caches, const BdOptions& options = {});

/// Same, from the n x p matrix of centered observations.
BdResult bd_update_rows(const Matrix& centered_rows, const Graph& g, const GWishartParams& prior, double d, Rng& rng,
                        BdCaches& caches, const BdOptions& options = {});

/// All 2^{p(p-1)/2} graphs, ordered by edge mask; p <= 5.
std::vector<Graph> enumerate_graphs(int p);

/// log N(m | mu, Omega^{-1}) in precision form.
double gaussian_logdensity_precision(const Vector& m, const Vector& mu, const Matrix& omega);

}  // namespace trajnet
