#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "trajnet/errors.hpp"
#include "trajnet/ggm.hpp"
#include "trajnet/random.hpp"

namespace trajnet {

/// Cluster labels 0..K-1, numbered by first appearance (canonical form).
class Partition {
 public:
  Partition() = default;
  /// Canonicalizes arbitrary non-negative labels.
  explicit Partition(std::vector<int> labels);

  static Partition single_cluster(int n) { return Partition(std::vector<int>(static_cast<std::size_t>(n), 0)); }

  int N() const { return static_cast<int>(labels_.size()); }
  int K() const { return k_; }
  int operator[](int i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }
  std::vector<int> sizes() const;
  std::vector<std::vector<int>> members() const;

  bool operator==(const Partition& other) const = default;

 private:
  std::vector<int> labels_;
  int k_ = 0;
};

/// Relabels by order of first appearance; returns old label of each new label.
std::vector<int> canonicalize_labels(std::vector<int>& labels);

/// Every set partition of {0..n-1} as restricted-growth label vectors.
std::vector<Partition> enumerate_set_partitions(int n);

struct DPConfig {
  double alpha = 0.18;
  int m_aux = 2;
};

struct KMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact mean and variance of the number of clusters under the CRP.
KMoments crp_k_moments(double alpha, int n);

/// Truncated stick-breaking weights with v_j ~ Beta(1, alpha).
std::vector<double> stick_breaking_weights(double alpha, int truncation, Rng& rng);

/// log[alpha^K Gamma(alpha) / Gamma(alpha + N)] + sum_j log Gamma(n_j): the DP EPPF.
double crp_log_eppf(const Partition& rho, double alpha);

/// What the urn sweep needs from the model: per-subject log-likelihood at an
/// atom and a draw from the base measure.
template <class M>
concept UrnModel = requires(M& m, const typename M::Atom& atom, int i, Rng& rng) {
  { m.log_likelihood(i, atom) } -> std::convertible_to<double>;
  { m.draw_atom(rng) } -> std::same_as<typename M::Atom>;
};

/// One Gibbs pass over subjects with auxiliary atoms for a non-conjugate base
/// measure. Subject i is removed from its cluster; if that empties it, the
/// freed atom becomes the first auxiliary candidate, the remaining m_aux
/// candidates are fresh base-measure draws. Existing cluster j has weight
/// n_{-i,j} L_i(atom_j); each auxiliary has weight (alpha/m_aux) L_i(aux).
/// On return labels are canonical and atoms[j] belongs to cluster j.
template <UrnModel Model>
void polya_urn_sweep(Partition& partition, std::vector<typename Model::Atom>& atoms, Model& model,
                     const DPConfig& dp, Rng& rng) {
  using Atom = typename Model::Atom;
  if (static_cast<int>(atoms.size()) != partition.K()) throw ContractError("polya_urn_sweep: one atom per cluster required");
  if (!(dp.alpha > 0.0) || dp.m_aux < 1) throw ContractError("polya_urn_sweep: invalid DP configuration");
  std::vector<int> labels = partition.labels();
  std::vector<int> sizes = partition.sizes();
  const double log_aux = std::log(dp.alpha / dp.m_aux);
  const int n = partition.N();

  for (int i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    std::vector<Atom> aux;
    aux.reserve(static_cast<std::size_t>(dp.m_aux));
    if (--sizes[static_cast<std::size_t>(c)] == 0) {
      aux.push_back(std::move(atoms[static_cast<std::size_t>(c)]));
      atoms.erase(atoms.begin() + c);
      sizes.erase(sizes.begin() + c);
      for (int& l : labels)
        if (l > c) --l;
    }
    while (static_cast<int>(aux.size()) < dp.m_aux) aux.push_back(model.draw_atom(rng));

    const std::size_t k = atoms.size();
    std::vector<double> logw(k + aux.size());
    for (std::size_t j = 0; j < k; ++j) logw[j] = std::log(static_cast<double>(sizes[j])) + model.log_likelihood(i, atoms[j]);
    for (std::size_t a = 0; a < aux.size(); ++a) logw[k + a] = log_aux + model.log_likelihood(i, aux[a]);
    for (double w : logw) {
      if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
        throw NumericalError("polya_urn_sweep: non-finite likelihood for subject " + std::to_string(i) + " (" +
                             std::to_string(k) + " clusters, " + std::to_string(aux.size()) + " auxiliary atoms)");
      }
    }
    const std::size_t pick = sample_log_weights(rng, logw);
    if (pick < k) {
      labels[static_cast<std::size_t>(i)] = static_cast<int>(pick);
      ++sizes[pick];
    } else {
      atoms.push_back(std::move(aux[pick - k]));
      sizes.push_back(1);
      labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
    }
  }

  const std::vector<int> order = canonicalize_labels(labels);
  std::vector<Atom> reordered;
  reordered.reserve(atoms.size());
  for (int old : order) reordered.push_back(std::move(atoms[static_cast<std::size_t>(old)]));
  atoms = std::move(reordered);
  partition = Partition(std::move(labels));
}

/// log sum_G [I_G(nu + n_j, Psi + S_j) / I_G(nu, Psi)] pi(G) for one cluster,
/// S_j the scatter of the member rows of `m`. p <= 4.
double ppmx_cluster_log_similarity(const std::vector<int>& members, const Matrix& m, const GWishartParams& prior,
                                   double d, int n_mc, Rng& rng);

/// Log of the marginal partition probability (up to a constant free of rho)
/// of the metabolite-only model, with normalizing constants estimated by
/// Monte Carlo and graphs enumerated. Rows of `m` are centered observations.
double ppmx_log_marginal_partition(const Partition& rho, const Matrix& m, double alpha, const GWishartParams& prior,
                                   double d, int n_mc, Rng& rng);

}  // namespace trajnet
