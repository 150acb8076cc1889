#include "trajnet/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "trajnet/errors.hpp"

namespace trajnet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

/// Row-major flattening used for the coefficient blocks.
Vector flatten(const Matrix& b) {
  Vector v(b.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < b.rows(); ++r)
    for (Eigen::Index c = 0; c < b.cols(); ++c) v(k++) = b(r, c);
  return v;
}

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix b(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) b(r, c) = v(k++);
  return b;
}

/// One random-walk MH step; returns whether the move was accepted.
template <class LogPost>
bool mh_step(AdaptiveProposal& prop, Vector& x, LogPost&& logpost, Rng& rng, bool adapt, bool empirical) {
  const double lp_x = logpost(x);
  const Vector y = prop.propose(x, rng);
  const double lp_y = logpost(y);
  const double a = mh_acceptance(lp_x, lp_y);
  const bool accept = a >= 1.0 || uniform01(rng) < a;
  if (accept) x = y;
  if (adapt) prop.record(x, a, empirical);
  return accept;
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
  auto a = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

}  // namespace

void SamplerConfig::validate() const {
  require(n_iter > 0, "mcmc.n_iter must be positive");
  require(n_burnin >= 0 && n_burnin < n_iter, "mcmc.n_burnin must satisfy 0 <= n_burnin < n_iter");
  require(thin >= 1, "mcmc.thin must be at least 1");
  require(adapt_init >= 0, "mcmc.adapt_init must be non-negative");
  for (double v : {hyper.tau2_a, hyper.tau2_b, hyper.sigma2_a, hyper.sigma2_b, hyper.phi2_a, hyper.phi2_b, hyper.eta2_a,
                   hyper.eta2_b, hyper.xi_a, hyper.xi_b, hyper.mu_theta_sd}) {
    require(v > 0.0 && std::isfinite(v), "model hyperprior parameters must be positive and finite");
  }
  require(std::isfinite(hyper.mu_theta_mean), "model.mu_theta_mean must be finite");
  require(dp.alpha > 0.0 && std::isfinite(dp.alpha), "model.alpha must be positive");
  require(dp.m_aux >= 1, "model.m_aux must be at least 1");
  require(!nu || *nu > 2.0, "model.nu must exceed 2");
  require(psi_scale > 0.0, "model.psi_scale must be positive");
  require(!d || (*d > 0.0 && *d < 1.0), "model.edge_prob must lie in (0, 1)");
  require(n_mc >= 1, "model.n_mc must be at least 1");
  require(init_clusters >= 1, "mcmc.init_clusters must be at least 1");
  require(snapshot_every >= 1, "mcmc.snapshot_every must be at least 1");
}

ModelData ModelData::from_dataset(const Dataset& data) {
  ModelData m;
  m.Y = data.longitudinal.Y;
  m.Y_obs = data.longitudinal.observed;
  m.M = data.metabolites.M;
  m.M_obs = data.metabolites.observed;
  m.X = data.covariates.X;
  m.times = data.longitudinal.times;
  m.subject_ids = data.subject_ids;
  m.process_names = data.longitudinal.process_names;
  m.metabolite_names = data.metabolites.column_names;
  m.covariate_names = data.covariates.column_names;
  m.validate();
  return m;
}

std::vector<int> ModelData::process_of() const {
  std::vector<int> out;
  for (int s = 0; s < S(); ++s) out.insert(out.end(), times[static_cast<std::size_t>(s)].size(), s);
  return out;
}

void ModelData::validate() const {
  const int n = N();
  if (n < 1) throw ContractError("model data: no subjects");
  if (M.rows() != n || X.rows() != n) throw ContractError("model data: row counts differ between blocks");
  if (Y_obs.rows() != Y.rows() || Y_obs.cols() != Y.cols() || M_obs.rows() != M.rows() || M_obs.cols() != M.cols()) {
    throw ContractError("model data: mask dimensions do not match");
  }
  if (p_Y() < 1 || p_M() < 1) throw ContractError("model data: empty longitudinal or metabolite block");
  if (static_cast<int>(process_of().size()) != p_Y()) throw ContractError("model data: time grids do not match Y columns");
  if (!X.allFinite()) throw ContractError("model data: covariates must be imputed");
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    for (Eigen::Index j = 0; j < Y.cols(); ++j)
      if (Y_obs(i, j) && !std::isfinite(Y(i, j))) throw ContractError("model data: observed response is not finite");
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      if (M_obs(i, j) && !std::isfinite(M(i, j))) throw ContractError("model data: observed metabolite is not finite");
}

Partition validate_fixed_partition(const std::vector<int>& labels, int n) {
  if (static_cast<int>(labels.size()) != n) {
    throw ContractError("fixed partition has " + std::to_string(labels.size()) + " labels but the data have " +
                        std::to_string(n) + " subjects");
  }
  int k = 0;
  for (int l : labels) {
    if (l < 0) throw ContractError("fixed partition: negative label " + std::to_string(l));
    k = std::max(k, l + 1);
  }
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  for (int l : labels) used[static_cast<std::size_t>(l)] = true;
  for (int l = 0; l < k; ++l)
    if (!used[static_cast<std::size_t>(l)]) throw ContractError("fixed partition: label " + std::to_string(l) + " is empty");
  return Partition(labels);
}

Sampler::Sampler(SamplerConfig config, ModelData data)
    : config_(std::move(config)), data_(std::move(data)) {
  config_.validate();
  data_.validate();
  process_of_ = data_.process_of();
  const int p_M = data_.p_M();
  gwishart_.nu = config_.nu.value_or(p_M + 2.0);
  gwishart_.Psi = config_.psi_scale * Matrix::Identity(p_M, p_M);
  d_ = config_.d ? *config_.d : (p_M >= 3 ? default_edge_probability(p_M) : 0.5);
  if (d_ >= 1.0) d_ = 0.5;
  rng_ = make_stream(config_.seed, Stream::Chain, config_.chain);
  const int q = data_.q();
  prop_beta_y_ = AdaptiveProposal(std::max(1, data_.p_Y() * q));
  prop_beta_m_ = AdaptiveProposal(std::max(1, p_M * q));
  prop_kernel_ = AdaptiveProposal(3 + data_.S());
  initialize();
}

void Sampler::initialize() {
  const int n = data_.N();
  const int S = data_.S();
  const auto& h = config_.hyper;
  ChainState& st = state_;
  st.iteration = 0;

  // Missing cells start at the observed column mean.
  auto fill = [](const Matrix& raw, const Mask& obs) {
    Matrix out = raw;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      double sum = 0.0;
      int cnt = 0;
      for (Eigen::Index i = 0; i < raw.rows(); ++i)
        if (obs(i, j)) sum += raw(i, j), ++cnt;
      const double mean = cnt > 0 ? sum / cnt : 0.0;
      for (Eigen::Index i = 0; i < raw.rows(); ++i)
        if (!obs(i, j)) out(i, j) = mean;
    }
    return out;
  };
  st.Y = fill(data_.Y, data_.Y_obs);
  st.M = fill(data_.M, data_.M_obs);

  st.beta_Y = Matrix::Zero(data_.p_Y(), data_.q());
  st.beta_M = Matrix::Zero(data_.p_M(), data_.q());
  auto ig_mean = [](double a, double b) { return a > 1.0 ? b / (a - 1.0) : b; };
  st.tau2 = Vector::Constant(S, ig_mean(h.tau2_a, h.tau2_b));
  st.kernel.sigma2 = ig_mean(h.sigma2_a, h.sigma2_b);
  st.kernel.phi2 = ig_mean(h.phi2_a, h.phi2_b);
  st.kernel.eta2 = ig_mean(h.eta2_a, h.eta2_b);
  st.kernel.xi.assign(static_cast<std::size_t>(S), h.xi_a / h.xi_b);
  st.mu_theta = Vector::Constant(data_.p_Y(), h.mu_theta_mean);
  set_kernel(st.kernel);

  Partition part;
  if (config_.fixed_partition) {
    part = validate_fixed_partition(*config_.fixed_partition, n);
  } else if (config_.init_clusters > 1) {
    std::uniform_int_distribution<int> pick(0, config_.init_clusters - 1);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& l : labels) l = pick(rng_);
    part = Partition(std::move(labels));
  } else {
    part = Partition::single_cluster(n);
  }
  std::vector<ClusterAtom> atoms;
  const auto members = part.members();
  for (int j = 0; j < part.K(); ++j) {
    Vector theta = st.mu_theta;
    if (config_.model.longitudinal) {
      theta.setZero();
      for (int i : members[static_cast<std::size_t>(j)]) theta += st.Y.row(i).transpose();
      theta /= static_cast<double>(members[static_cast<std::size_t>(j)].size());
    }
    atoms.push_back(make_atom(std::move(theta), Graph(data_.p_M()), Matrix::Identity(data_.p_M(), data_.p_M())));
  }
  set_clusters(std::move(part), std::move(atoms));
}

void Sampler::set_kernel(const KernelParams& params) {
  kernel_.emplace(params, data_.times);
  kernel_lower_ = kernel_->lower();
  state_.kernel = params;
}

void Sampler::set_clusters(Partition partition, std::vector<ClusterAtom> atoms) {
  if (partition.N() != data_.N() || static_cast<int>(atoms.size()) != partition.K()) {
    throw ContractError("set_clusters: partition and atoms do not match the data");
  }
  state_.partition = std::move(partition);
  state_.atoms = std::move(atoms);
}

ClusterAtom Sampler::make_atom(Vector theta, Graph g, Matrix omega) const {
  ClusterAtom a;
  a.theta = std::move(theta);
  a.graph = std::move(g);
  auto llt = try_cholesky(omega);
  if (!llt) throw NumericalError("cluster precision matrix is not positive definite");
  a.omega_logdet = log_det_from_llt(*llt);
  a.omega = std::move(omega);
  return a;
}

ClusterAtom Sampler::draw_atom(Rng& rng) const {
  Vector theta = mvn_cov_factor(rng, state_.mu_theta, kernel_lower_);
  Graph g = sample_graph_prior(data_.p_M(), d_, rng);
  Matrix omega = gwishart_sample(gwishart_, g, rng);
  return make_atom(std::move(theta), std::move(g), std::move(omega));
}

Vector Sampler::tau2_per_coordinate() const {
  Vector v(data_.p_Y());
  for (int t = 0; t < data_.p_Y(); ++t) v(t) = state_.tau2(process_of_[static_cast<std::size_t>(t)]);
  return v;
}

Matrix Sampler::theta_rows() const {
  Matrix th(data_.N(), data_.p_Y());
  for (int i = 0; i < data_.N(); ++i) th.row(i) = state_.atoms[static_cast<std::size_t>(state_.partition[i])].theta.transpose();
  return th;
}

void Sampler::impute_missing() {
  ChainState& st = state_;
  if (config_.model.longitudinal) {
    const Vector tau2 = tau2_per_coordinate();
    for (int i = 0; i < data_.N(); ++i) {
      const ClusterAtom& a = st.atoms[static_cast<std::size_t>(st.partition[i])];
      for (int t = 0; t < data_.p_Y(); ++t) {
        if (data_.Y_obs(i, t)) continue;
        const double mean = a.theta(t) + st.beta_Y.row(t).dot(data_.X.row(i));
        st.Y(i, t) = mean + std::sqrt(tau2(t)) * std_normal(rng_);
      }
    }
  }
  if (config_.model.metabolites) {
    const int p = data_.p_M();
    for (int i = 0; i < data_.N(); ++i) {
      std::vector<int> mis, obs;
      for (int j = 0; j < p; ++j) (data_.M_obs(i, j) ? obs : mis).push_back(j);
      if (mis.empty()) continue;
      const ClusterAtom& a = st.atoms[static_cast<std::size_t>(st.partition[i])];
      const Vector mu = st.beta_M * data_.X.row(i).transpose();
      // x_m | x_o ~ N(mu_m - Q_mm^{-1} Q_mo (x_o - mu_o), Q_mm^{-1})
      Matrix q_mm(mis.size(), mis.size());
      Vector b(mis.size());
      for (std::size_t r = 0; r < mis.size(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < mis.size(); ++c) {
          q_mm(r, c) = a.omega(mis[r], mis[c]);
          acc += q_mm(r, c) * mu(mis[c]);
        }
        for (int o : obs) acc -= a.omega(mis[r], o) * (st.M(i, o) - mu(o));
        b(r) = acc;
      }
      auto llt = try_cholesky(q_mm);
      if (!llt) throw NumericalError("impute_missing: conditional precision not PD for subject " + data_.subject_ids.at(i));
      const Vector x = mvn_canonical(rng_, *llt, b);
      for (std::size_t r = 0; r < mis.size(); ++r) st.M(i, mis[r]) = x(r);
    }
  }
}

namespace {

struct UrnAdaptor {
  using Atom = ClusterAtom;
  const Sampler* sampler;
  bool longitudinal;
  bool metabolites;
  Matrix resid_Y;  // Y - X beta_Y^T
  Matrix resid_M;  // M - X beta_M^T
  Vector inv_tau2;
  double const_Y = 0.0;
  double const_M = 0.0;

  double log_likelihood(int i, const Atom& a) const {
    double ll = 0.0;
    if (longitudinal) {
      const Vector r = resid_Y.row(i).transpose() - a.theta;
      ll += const_Y - 0.5 * (r.array().square() * inv_tau2.array()).sum();
    }
    if (metabolites) {
      const Vector r = resid_M.row(i).transpose();
      ll += const_M + 0.5 * a.omega_logdet - 0.5 * r.dot(a.omega * r);
    }
    return ll;
  }
  Atom draw_atom(Rng& rng) { return sampler->draw_atom(rng); }
};

}  // namespace

void Sampler::urn_sweep() {
  ChainState& st = state_;
  UrnAdaptor model{this, config_.model.longitudinal, config_.model.metabolites, {}, {}, {}, 0.0, 0.0};
  if (model.longitudinal) {
    model.resid_Y = st.Y - data_.X * st.beta_Y.transpose();
    const Vector tau2 = tau2_per_coordinate();
    model.inv_tau2 = tau2.cwiseInverse();
    model.const_Y = -0.5 * (data_.p_Y() * kLog2Pi + tau2.array().log().sum());
  }
  if (model.metabolites) {
    model.resid_M = st.M - data_.X * st.beta_M.transpose();
    model.const_M = -0.5 * data_.p_M() * kLog2Pi;
  }
  polya_urn_sweep(st.partition, st.atoms, model, config_.dp, rng_);
}

void Sampler::update_theta_star() {
  ChainState& st = state_;
  const Matrix& kinv = kernel_->inverse();
  const Vector prior_b = kinv * st.mu_theta;
  const Vector tau2 = tau2_per_coordinate();
  const auto members = st.partition.members();
  Matrix resid;
  if (config_.model.longitudinal) resid = st.Y - data_.X * st.beta_Y.transpose();
  for (int j = 0; j < st.partition.K(); ++j) {
    ClusterAtom& a = st.atoms[static_cast<std::size_t>(j)];
    if (!config_.model.longitudinal) {
      a.theta = mvn_cov_factor(rng_, st.mu_theta, kernel_lower_);
      continue;
    }
    const auto& mem = members[static_cast<std::size_t>(j)];
    Matrix q = kinv;
    q.diagonal() += (static_cast<double>(mem.size()) / tau2.array()).matrix();
    Vector sum = Vector::Zero(data_.p_Y());
    for (int i : mem) sum += resid.row(i).transpose();
    const Vector b = prior_b + sum.cwiseQuotient(tau2);
    auto llt = try_cholesky(symmetrize(q));
    if (!llt) throw NumericalError("update_theta_star: posterior precision not PD for cluster " + std::to_string(j));
    a.theta = mvn_canonical(rng_, *llt, b);
  }
}

void Sampler::update_graphs() {
  ChainState& st = state_;
  const auto members = st.partition.members();
  Matrix resid;
  if (config_.model.metabolites) resid = st.M - data_.X * st.beta_M.transpose();
  BdOptions opts;
  opts.n_mc = config_.n_mc;
  for (int j = 0; j < st.partition.K(); ++j) {
    ClusterAtom& a = st.atoms[static_cast<std::size_t>(j)];
    Rng cluster_rng = split(rng_);
    BdCaches caches;
    std::swap(caches.prior, prior_cache_);
    Matrix scatter = Matrix::Zero(data_.p_M(), data_.p_M());
    int n = 0;
    if (config_.model.metabolites) {
      for (int i : members[static_cast<std::size_t>(j)]) {
        const Vector r = resid.row(i).transpose();
        scatter.noalias() += r * r.transpose();
        ++n;
      }
    }
    BdResult res = bd_update(scatter, n, a.graph, gwishart_, d_, cluster_rng, caches, opts);
    std::swap(caches.prior, prior_cache_);
    a = make_atom(std::move(a.theta), std::move(res.graph), std::move(res.omega));
  }
}

double Sampler::beta_Y_logpost(const Matrix& beta) const {
  double lp = -0.5 * beta.squaredNorm();
  if (config_.model.longitudinal) {
    const Matrix r = state_.Y - theta_rows() - data_.X * beta.transpose();
    const Vector inv = tau2_per_coordinate().cwiseInverse();
    lp += -0.5 * (r.array().square().rowwise() * inv.transpose().array()).sum();
  }
  return lp;
}

double Sampler::beta_M_logpost(const Matrix& beta) const {
  double lp = -0.5 * beta.squaredNorm();
  if (config_.model.metabolites) {
    const Matrix r = state_.M - data_.X * beta.transpose();
    for (int i = 0; i < data_.N(); ++i) {
      const Vector ri = r.row(i).transpose();
      lp -= 0.5 * ri.dot(state_.atoms[static_cast<std::size_t>(state_.partition[i])].omega * ri);
    }
  }
  return lp;
}

void Sampler::update_beta_Y() {
  if (!config_.model.regression || data_.q() == 0) return;
  Vector x = flatten(state_.beta_Y);
  const auto rows = state_.beta_Y.rows(), cols = state_.beta_Y.cols();
  mh_step(prop_beta_y_, x, [&](const Vector& v) { return beta_Y_logpost(unflatten(v, rows, cols)); }, rng_, adapting(),
          empirical());
  state_.beta_Y = unflatten(x, rows, cols);
}

void Sampler::update_beta_M() {
  if (!config_.model.regression || data_.q() == 0) return;
  Vector x = flatten(state_.beta_M);
  const auto rows = state_.beta_M.rows(), cols = state_.beta_M.cols();
  mh_step(prop_beta_m_, x, [&](const Vector& v) { return beta_M_logpost(unflatten(v, rows, cols)); }, rng_, adapting(),
          empirical());
  state_.beta_M = unflatten(x, rows, cols);
}

void Sampler::update_tau2() {
  ChainState& st = state_;
  const auto& h = config_.hyper;
  const int S = data_.S();
  Vector ssr = Vector::Zero(S);
  Vector count = Vector::Zero(S);
  if (config_.model.longitudinal) {
    const Matrix r = st.Y - theta_rows() - data_.X * st.beta_Y.transpose();
    for (int t = 0; t < data_.p_Y(); ++t) {
      const int s = process_of_[static_cast<std::size_t>(t)];
      ssr(s) += r.col(t).squaredNorm();
      count(s) += data_.N();
    }
  }
  for (int s = 0; s < S; ++s) st.tau2(s) = inv_gamma(rng_, h.tau2_a + 0.5 * count(s), h.tau2_b + 0.5 * ssr(s));
}

void Sampler::update_mu_theta() {
  ChainState& st = state_;
  const auto& h = config_.hyper;
  const double prior_prec = 1.0 / (h.mu_theta_sd * h.mu_theta_sd);
  const Matrix& kinv = kernel_->inverse();
  Vector sum = Vector::Zero(data_.p_Y());
  for (const auto& a : st.atoms) sum += a.theta;
  Matrix q = static_cast<double>(st.atoms.size()) * kinv;
  q.diagonal().array() += prior_prec;
  const Vector b = Vector::Constant(data_.p_Y(), prior_prec * h.mu_theta_mean) + kinv * sum;
  auto llt = try_cholesky(symmetrize(q));
  if (!llt) throw NumericalError("update_mu_theta: posterior precision not PD");
  st.mu_theta = mvn_canonical(rng_, *llt, b);
}

double Sampler::kernel_logpost(const Vector& u, std::optional<KernelMatrix>& built) const {
  const auto& h = config_.hyper;
  const int S = data_.S();
  KernelParams kp;
  kp.sigma2 = std::exp(u(0));
  kp.phi2 = std::exp(u(1));
  kp.eta2 = std::exp(u(2));
  for (int s = 0; s < S; ++s) kp.xi.push_back(std::exp(u(3 + s)));
  if (!kp.valid() || !u.allFinite()) return kNegInf;
  double lp = inv_gamma_logpdf(kp.sigma2, h.sigma2_a, h.sigma2_b) + inv_gamma_logpdf(kp.phi2, h.phi2_a, h.phi2_b) +
              inv_gamma_logpdf(kp.eta2, h.eta2_a, h.eta2_b);
  for (double x : kp.xi) lp += gamma_logpdf(x, h.xi_a, h.xi_b);
  lp += u.sum();  // log-scale Jacobian
  if (!std::isfinite(lp)) return kNegInf;
  try {
    built.emplace(kp, data_.times);
  } catch (const NumericalError&) {
    return kNegInf;
  }
  for (const auto& a : state_.atoms) lp += gaussian_logpdf_cov(a.theta, state_.mu_theta, *built);
  return std::isnan(lp) ? kNegInf : lp;
}

void Sampler::update_kernel_hyperparams() {
  const int S = data_.S();
  const KernelParams& kp = state_.kernel;
  Vector u(3 + S);
  u << std::log(kp.sigma2), std::log(kp.phi2), std::log(kp.eta2), Vector::Zero(S);
  for (int s = 0; s < S; ++s) u(3 + s) = std::log(kp.xi[static_cast<std::size_t>(s)]);
  std::optional<KernelMatrix> current, proposed;
  bool proposing = false;
  auto logpost = [&](const Vector& v) { return kernel_logpost(v, proposing ? proposed : current); };
  // mh_step evaluates the current point first, then the proposal.
  auto wrapped = [&](const Vector& v) {
    const double lp = logpost(v);
    proposing = true;
    return lp;
  };
  if (mh_step(prop_kernel_, u, wrapped, rng_, adapting(), empirical())) {
    KernelParams next;
    next.sigma2 = std::exp(u(0));
    next.phi2 = std::exp(u(1));
    next.eta2 = std::exp(u(2));
    for (int s = 0; s < S; ++s) next.xi.push_back(std::exp(u(3 + s)));
    state_.kernel = next;
    kernel_ = std::move(proposed);
    kernel_lower_ = kernel_->lower();
  }
}

double Sampler::log_likelihood() const {
  const ChainState& st = state_;
  double ll = 0.0;
  if (config_.model.longitudinal) {
    const Matrix r = st.Y - theta_rows() - data_.X * st.beta_Y.transpose();
    const Vector tau2 = tau2_per_coordinate();
    ll += -0.5 * data_.N() * (data_.p_Y() * kLog2Pi + tau2.array().log().sum());
    ll += -0.5 * (r.array().square().rowwise() * tau2.cwiseInverse().transpose().array()).sum();
  }
  if (config_.model.metabolites) {
    const Matrix r = st.M - data_.X * st.beta_M.transpose();
    for (int i = 0; i < data_.N(); ++i) {
      const ClusterAtom& a = st.atoms[static_cast<std::size_t>(st.partition[i])];
      const Vector ri = r.row(i).transpose();
      ll += 0.5 * a.omega_logdet - 0.5 * data_.p_M() * kLog2Pi - 0.5 * ri.dot(a.omega * ri);
    }
  }
  return ll;
}

void Sampler::step() {
  if (state_.iteration >= config_.n_burnin) {
    prop_beta_y_.freeze();
    prop_beta_m_.freeze();
    prop_kernel_.freeze();
  }
  impute_missing();
  if (!config_.fixed_partition) urn_sweep();
  update_theta_star();
  update_graphs();
  update_beta_Y();
  update_beta_M();
  update_tau2();
  update_mu_theta();
  update_kernel_hyperparams();
  ++state_.iteration;
}

SampleRecord Sampler::record() const {
  const ChainState& st = state_;
  SampleRecord r;
  r.iteration = st.iteration;
  r.labels = st.partition.labels();
  r.mu_theta = st.mu_theta;
  for (const auto& a : st.atoms) {
    r.theta_star.push_back(a.theta);
    r.graphs.push_back(a.graph);
    r.omegas.push_back(a.omega);
  }
  r.beta_Y = st.beta_Y;
  r.beta_M = st.beta_M;
  r.tau2 = st.tau2;
  r.kernel = st.kernel;
  r.loglik = log_likelihood();
  return r;
}

StoreMetadata Sampler::metadata() const {
  StoreMetadata m;
  m.N = data_.N();
  m.p_Y = data_.p_Y();
  m.p_M = data_.p_M();
  m.q = data_.q();
  m.subject_ids = data_.subject_ids;
  m.process_names = data_.process_names;
  m.times = data_.times;
  m.metabolite_names = data_.metabolite_names;
  m.covariate_names = data_.covariate_names;
  m.fixed_partition = config_.fixed_partition.has_value();
  m.n_iter = config_.n_iter;
  m.n_burnin = config_.n_burnin;
  m.thin = config_.thin;
  m.seed = config_.seed;
  return m;
}

std::string Sampler::snapshot_json() const {
  using json = nlohmann::ordered_json;
  const ChainState& st = state_;
  json j;
  j["iteration"] = st.iteration;
  j["labels"] = st.partition.labels();
  j["tau2"] = std::vector<double>(st.tau2.data(), st.tau2.data() + st.tau2.size());
  j["kernel"] = {{"sigma2", st.kernel.sigma2}, {"phi2", st.kernel.phi2}, {"eta2", st.kernel.eta2}, {"xi", st.kernel.xi}};
  j["mu_theta"] = std::vector<double>(st.mu_theta.data(), st.mu_theta.data() + st.mu_theta.size());
  j["beta_Y"] = matrix_json(st.beta_Y);
  j["beta_M"] = matrix_json(st.beta_M);
  j["clusters"] = json::array();
  for (const auto& a : st.atoms) {
    json c;
    c["theta"] = std::vector<double>(a.theta.data(), a.theta.data() + a.theta.size());
    c["edges"] = a.graph.edges();
    c["omega"] = matrix_json(a.omega);
    j["clusters"].push_back(c);
  }
  return j.dump(1) + "\n";
}

namespace {

void write_snapshot(const Sampler& s, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << s.snapshot_json();
  }
  std::filesystem::rename(tmp, path);
}

void drive(const SamplerConfig& config, const ModelData& data, SampleSink& sink) {
  Sampler s(config, data);
  sink.begin(s.metadata());
  for (long t = 0; t < config.n_iter; ++t) {
    try {
      s.step();
    } catch (const NumericalError& e) {
      std::string where = "iteration " + std::to_string(t) + ": " + e.what();
      if (!config.snapshot_path.empty()) {
        write_snapshot(s, config.snapshot_path);
        where += "; state snapshot: " + config.snapshot_path;
      }
      throw NumericalError(where);
    }
    if (t >= config.n_burnin && (t - config.n_burnin + 1) % config.thin == 0) sink.write(s.record());
    if (!config.snapshot_path.empty() && ((t + 1) % config.snapshot_every == 0 || t + 1 == config.n_iter)) {
      write_snapshot(s, config.snapshot_path);
    }
  }
  sink.finish();
}

}  // namespace

void run_chain(const SamplerConfig& config, const ModelData& data, SampleSink& sink) { drive(config, data, sink); }

SampleStore run_chain(const SamplerConfig& config, const ModelData& data) {
  SampleStore store;
  run_chain(config, data, store);
  return store;
}

void run_fixed_partition(const SamplerConfig& config, const ModelData& data, SampleSink& sink) {
  if (!config.fixed_partition) throw ContractError("run_fixed_partition: no fixed partition given");
  validate_fixed_partition(*config.fixed_partition, data.N());
  drive(config, data, sink);
}

SampleStore run_fixed_partition(const SamplerConfig& config, const ModelData& data) {
  SampleStore store;
  run_fixed_partition(config, data, store);
  return store;
}

}  // namespace trajnet
