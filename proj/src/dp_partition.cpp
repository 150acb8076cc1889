#include "trajnet/dp_partition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace trajnet {

std::vector<int> canonicalize_labels(std::vector<int>& labels) {
  std::vector<int> new_of_old;
  std::vector<int> order;
  for (int& l : labels) {
    if (l < 0) throw ContractError("partition labels must be non-negative");
    if (static_cast<std::size_t>(l) >= new_of_old.size()) new_of_old.resize(static_cast<std::size_t>(l) + 1, -1);
    int& mapped = new_of_old[static_cast<std::size_t>(l)];
    if (mapped < 0) {
      mapped = static_cast<int>(order.size());
      order.push_back(l);
    }
    l = mapped;
  }
  return order;
}

Partition::Partition(std::vector<int> labels) : labels_(std::move(labels)) {
  k_ = static_cast<int>(canonicalize_labels(labels_).size());
}

std::vector<int> Partition::sizes() const {
  std::vector<int> s(static_cast<std::size_t>(k_), 0);
  for (int l : labels_) ++s[static_cast<std::size_t>(l)];
  return s;
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> m(static_cast<std::size_t>(k_));
  for (int i = 0; i < N(); ++i) m[static_cast<std::size_t>(labels_[static_cast<std::size_t>(i)])].push_back(i);
  return m;
}

std::vector<Partition> enumerate_set_partitions(int n) {
  if (n < 1 || n > 12) throw ContractError("enumerate_set_partitions: n must be between 1 and 12");
  std::vector<Partition> out;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int i, int k) {
    if (i == n) {
      out.emplace_back(labels);
      return;
    }
    for (int l = 0; l <= k; ++l) {
      labels[static_cast<std::size_t>(i)] = l;
      rec(i + 1, std::max(k, l + 1));
    }
  };
  rec(1, 1);
  return out;
}

KMoments crp_k_moments(double alpha, int n) {
  if (!(alpha > 0.0) || n < 1) throw ContractError("crp_k_moments: alpha > 0 and N >= 1 required");
  KMoments m;
  for (int i = 1; i <= n; ++i) {
    const double denom = alpha + (i - 1);
    m.mean += alpha / denom;
    m.variance += alpha * (i - 1) / (denom * denom);
  }
  return m;
}

std::vector<double> stick_breaking_weights(double alpha, int truncation, Rng& rng) {
  if (!(alpha > 0.0) || truncation < 1) throw ContractError("stick_breaking_weights: alpha > 0, truncation >= 1");
  std::vector<double> w(static_cast<std::size_t>(truncation));
  double remaining = 1.0;
  for (auto& wj : w) {
    const double v = beta_dist(rng, 1.0, alpha);
    wj = v * remaining;
    remaining *= 1.0 - v;
  }
  return w;
}

double crp_log_eppf(const Partition& rho, double alpha) {
  double v = rho.K() * std::log(alpha) + std::lgamma(alpha) - std::lgamma(alpha + rho.N());
  for (int s : rho.sizes()) v += std::lgamma(static_cast<double>(s));
  return v;
}

double ppmx_cluster_log_similarity(const std::vector<int>& members, const Matrix& m, const GWishartParams& prior,
                                   double d, int n_mc, Rng& rng) {
  const int p = static_cast<int>(m.cols());
  if (p > 4) throw ContractError("ppmx: enumeration limited to p_M <= 4");
  Matrix scatter = Matrix::Zero(p, p);
  for (int i : members) scatter += m.row(i).transpose() * m.row(i);
  const GWishartParams post{prior.nu + static_cast<double>(members.size()), symmetrize(prior.Psi + scatter)};
  std::vector<double> terms;
  for (const Graph& g : enumerate_graphs(p)) {
    terms.push_back(gwishart_lognorm_mc(post, g, n_mc, rng).estimate - gwishart_lognorm_mc(prior, g, n_mc, rng).estimate +
                    graph_prior_logpmf(g, d));
  }
  return log_sum_exp(terms);
}

double ppmx_log_marginal_partition(const Partition& rho, const Matrix& m, double alpha, const GWishartParams& prior,
                                   double d, int n_mc, Rng& rng) {
  if (m.cols() > 4) throw ContractError("ppmx: enumeration limited to p_M <= 4");
  if (rho.N() != m.rows()) throw ContractError("ppmx: partition size does not match data");
  double v = crp_log_eppf(rho, alpha);
  for (const auto& members : rho.members()) v += ppmx_cluster_log_similarity(members, m, prior, d, n_mc, rng);
  return v;
}

}  // namespace trajnet
