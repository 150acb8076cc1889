#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajnet/adaptive.hpp"
#include "trajnet/dp_partition.hpp"
#include "trajnet/ggm.hpp"
#include "trajnet/gp_kernel.hpp"
#include "trajnet/preprocess.hpp"
#include "trajnet/sample_store.hpp"

namespace trajnet {

/// Inverse-gamma (shape a, scale b) priors for the variances, gamma (shape
/// a, rate b) for each xi_s, Gaussian for every entry of mu_theta.
struct Hyperpriors {
  double tau2_a = 3.0, tau2_b = 2.0;
  double sigma2_a = 3.0, sigma2_b = 2.0;
  double phi2_a = 3.0, phi2_b = 2.0;
  double eta2_a = 3.0, eta2_b = 2.0;
  double xi_a = 1.0, xi_b = 1.0;
  double mu_theta_mean = 0.0, mu_theta_sd = 1.0;
};

/// Likelihood blocks. Switching a block off leaves its parameters under the
/// prior; `regression = false` pins both coefficient matrices at zero.
struct ModelSwitches {
  bool longitudinal = true;
  bool metabolites = true;
  bool regression = true;
};

struct SamplerConfig {
  long n_iter = 50000;
  long n_burnin = 40000;
  long thin = 2;
  long adapt_init = 100;
  std::uint64_t seed = 1;
  std::uint64_t chain = 0;  // sub-stream index
  Hyperpriors hyper;
  DPConfig dp;
  std::optional<double> nu;  // default p_M + 2
  double psi_scale = 10.0;   // Psi = psi_scale * I
  std::optional<double> d;   // default 2 / (p_M - 1)
  int n_mc = 500;
  int init_clusters = 1;
  ModelSwitches model;
  std::optional<std::vector<int>> fixed_partition;
  long snapshot_every = 1000;
  std::string snapshot_path;  // empty: no snapshots

  void validate() const;
  long expected_records() const { return (n_iter - n_burnin) / thin; }
};

/// Model-ready arrays. Y and M keep NaN in unobserved cells; X is complete.
struct ModelData {
  Matrix Y;
  Mask Y_obs;
  Matrix M;
  Mask M_obs;
  Matrix X;
  std::vector<std::vector<double>> times;
  std::vector<std::string> subject_ids;
  std::vector<std::string> process_names;
  std::vector<std::string> metabolite_names;
  std::vector<std::string> covariate_names;

  static ModelData from_dataset(const Dataset& data);

  int N() const { return static_cast<int>(Y.rows()); }
  int p_Y() const { return static_cast<int>(Y.cols()); }
  int p_M() const { return static_cast<int>(M.cols()); }
  int q() const { return static_cast<int>(X.cols()); }
  int S() const { return static_cast<int>(times.size()); }
  std::vector<int> process_of() const;
  void validate() const;
};

struct ClusterAtom {
  Vector theta;
  Graph graph;
  Matrix omega;
  double omega_logdet = 0.0;
};

struct ChainState {
  Partition partition;
  std::vector<ClusterAtom> atoms;
  Matrix beta_Y;  // p_Y x q
  Matrix beta_M;  // p_M x q
  Vector tau2;    // per process
  Vector mu_theta;
  KernelParams kernel;
  Matrix Y;  // observed entries plus current imputations
  Matrix M;
  long iteration = 0;
};

/// One Metropolis-within-Gibbs chain. The update methods are public so that
/// single blocks can be iterated on a frozen state.
class Sampler {
 public:
  Sampler(SamplerConfig config, ModelData data);

  const SamplerConfig& config() const { return config_; }
  const ModelData& data() const { return data_; }
  ChainState& state() { return state_; }
  const ChainState& state() const { return state_; }
  Rng& rng() { return rng_; }
  const GWishartParams& gwishart() const { return gwishart_; }
  double edge_probability() const { return d_; }
  const KernelMatrix& kernel_matrix() const { return *kernel_; }

  /// Replaces the kernel parameters and refactorizes.
  void set_kernel(const KernelParams& params);
  /// Replaces the partition and atoms (e.g. for frozen-state tests).
  void set_clusters(Partition partition, std::vector<ClusterAtom> atoms);

  /// One full iteration in the fixed order: imputation, urn sweep, theta*,
  /// graphs, beta_Y, beta_M, tau2, mu_theta, kernel hyperparameters.
  void step();

  void impute_missing();
  void urn_sweep();
  void update_theta_star();
  void update_graphs();
  void update_beta_Y();
  void update_beta_M();
  void update_tau2();
  void update_mu_theta();
  void update_kernel_hyperparams();

  /// Complete-data log-likelihood of the enabled blocks.
  double log_likelihood() const;
  ClusterAtom draw_atom(Rng& rng) const;
  ClusterAtom make_atom(Vector theta, Graph g, Matrix omega) const;
  SampleRecord record() const;
  StoreMetadata metadata() const;
  std::string snapshot_json() const;

  const AdaptiveProposal& beta_Y_proposal() const { return prop_beta_y_; }
  const AdaptiveProposal& beta_M_proposal() const { return prop_beta_m_; }
  const AdaptiveProposal& kernel_proposal() const { return prop_kernel_; }

 private:
  void initialize();
  Vector tau2_per_coordinate() const;
  Matrix theta_rows() const;
  double beta_Y_logpost(const Matrix& beta) const;
  double beta_M_logpost(const Matrix& beta) const;
  double kernel_logpost(const Vector& u, std::optional<KernelMatrix>& built) const;
  bool adapting() const { return state_.iteration < config_.n_burnin; }
  bool empirical() const { return state_.iteration >= config_.adapt_init; }

  SamplerConfig config_;
  ModelData data_;
  std::vector<int> process_of_;
  GWishartParams gwishart_;
  double d_ = 0.5;
  ChainState state_;
  Rng rng_;
  std::optional<KernelMatrix> kernel_;
  Matrix kernel_lower_;
  NormConstCache prior_cache_;
  AdaptiveProposal prop_beta_y_, prop_beta_m_, prop_kernel_;
};

/// Checks a user-supplied label vector for a fixed-partition run.
Partition validate_fixed_partition(const std::vector<int>& labels, int n);

/// Runs the chain and streams saved records (iterations t >= n_burnin with
/// (t - n_burnin + 1) % thin == 0) to `sink`.
void run_chain(const SamplerConfig& config, const ModelData& data, SampleSink& sink);
SampleStore run_chain(const SamplerConfig& config, const ModelData& data);

/// run_chain with the urn sweep skipped; requires config.fixed_partition.
void run_fixed_partition(const SamplerConfig& config, const ModelData& data, SampleSink& sink);
SampleStore run_fixed_partition(const SamplerConfig& config, const ModelData& data);

}  // namespace trajnet
