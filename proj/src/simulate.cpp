#include "trajnet/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <nlohmann/json.hpp>

#include "trajnet/csv.hpp"
#include "trajnet/errors.hpp"
#include "trajnet/random.hpp"

namespace trajnet {

namespace {

using json = nlohmann::ordered_json;

std::string numbered(const std::string& prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, i);
  return prefix + buf;
}

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

/// Path graph through `order`, using at most `edges` edges.
Graph path_graph(int p, const std::vector<int>& order, int edges) {
  Graph g(p);
  for (int e = 0; e < edges && e + 1 < static_cast<int>(order.size()); ++e) {
    g.set_edge(order[static_cast<std::size_t>(e)], order[static_cast<std::size_t>(e) + 1], true);
  }
  return g;
}

std::ofstream open_file(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

void SimulationConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("simulate: " + what);
  };
  need(N >= 1, "N must be positive");
  need(K >= 1 && K <= N, "K must be between 1 and N");
  need(S >= 1 && n_s >= 1, "S and n_s must be positive");
  need(time_step > 0.0, "time_step must be positive");
  need(p_M >= 1, "p_M must be positive");
  need(q >= 0, "q must be non-negative");
  need(missing_rate >= 0.0 && missing_rate < 1.0, "missing_rate must be in [0, 1)");
  need(partial_corr >= 0.0 && partial_corr < 0.5, "partial_corr must be in [0, 0.5)");
  need(tau2 > 0.0 && beta_sd >= 0.0, "tau2 must be positive and beta_sd non-negative");
  need(kernel.sigma2 > 0.0 && kernel.phi2 > 0.0 && kernel.eta2 > 0.0, "kernel parameters must be positive");
  need(kernel.xi.empty() || static_cast<int>(kernel.xi.size()) == S, "kernel xi needs one value per process");
}

SimulatedData simulate_dataset(const SimulationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_stream(seed, Stream::Simulation);
  SimulatedData sim;
  SimulationTruth& tr = sim.truth;
  const int N = cfg.N, S = cfg.S, p_M = cfg.p_M, q = cfg.q, K = cfg.K;
  const int p_Y = S * cfg.n_s;

  for (int i = 0; i < N; ++i) tr.subject_ids.push_back(numbered("s", i + 1, 3));
  for (int s = 0; s < S; ++s) {
    tr.process_names.push_back(numbered("y", s + 1, 1));
    std::vector<double> grid;
    for (int t = 0; t < cfg.n_s; ++t) grid.push_back(t * cfg.time_step);
    tr.times.push_back(grid);
  }
  for (int j = 0; j < p_M; ++j) tr.metabolite_names.push_back(numbered("m", j + 1, 2));
  for (int c = 0; c < q; ++c) tr.covariate_names.push_back(numbered("x", c + 1, 1));

  tr.kernel = cfg.kernel;
  if (tr.kernel.xi.empty()) tr.kernel.xi.assign(static_cast<std::size_t>(S), 1.0);
  const KernelMatrix kern(tr.kernel, tr.times);
  const Matrix L = kern.lower();

  // Balanced contiguous blocks.
  for (int i = 0; i < N; ++i) tr.labels.push_back(static_cast<int>(static_cast<long>(i) * K / N));

  // Cluster k: a path over 0, 1, 2 followed by cluster-specific nodes.
  const int n_edges = std::min(4, p_M - 1);
  std::vector<int> rest(static_cast<std::size_t>(std::max(0, p_M - 3)));
  std::iota(rest.begin(), rest.end(), 3);
  for (int k = 0; k < K; ++k) {
    std::vector<int> order;
    for (int v = 0; v < std::min(3, p_M); ++v) order.push_back(v);
    std::vector<int> tail = rest;
    if (k == 1) {
      std::reverse(tail.begin(), tail.end());
    } else if (k > 1) {
      std::shuffle(tail.begin(), tail.end(), rng);
    }
    order.insert(order.end(), tail.begin(), tail.end());
    Graph g = path_graph(p_M, order, n_edges);
    Matrix omega = Matrix::Identity(p_M, p_M);
    for (auto [h, l] : g.edges()) omega(h, l) = omega(l, h) = -cfg.partial_corr;
    tr.graphs.push_back(g);
    tr.omegas.push_back(omega);

    const double shift = K > 1 ? cfg.theta_shift * (2.0 * k / (K - 1) - 1.0) : 0.0;
    tr.theta_star.push_back(mvn_cov_factor(rng, Vector::Constant(p_Y, shift), L));
  }

  tr.beta_Y = Matrix::Zero(p_Y, q);
  tr.beta_M = Matrix::Zero(p_M, q);
  for (Eigen::Index i = 0; i < tr.beta_Y.size(); ++i) tr.beta_Y.data()[i] = cfg.beta_sd * std_normal(rng);
  for (Eigen::Index i = 0; i < tr.beta_M.size(); ++i) tr.beta_M.data()[i] = cfg.beta_sd * std_normal(rng);
  tr.tau2 = Vector::Constant(S, cfg.tau2);

  sim.X.resize(N, q);
  for (Eigen::Index i = 0; i < sim.X.size(); ++i) sim.X.data()[i] = std_normal(rng);

  std::vector<Matrix> cov_factor;
  for (const auto& om : tr.omegas) cov_factor.push_back(Eigen::LLT<Matrix>(om.inverse()).matrixL());

  sim.Y.resize(N, p_Y);
  sim.M.resize(N, p_M);
  const double tau = std::sqrt(cfg.tau2);
  for (int i = 0; i < N; ++i) {
    const auto k = static_cast<std::size_t>(tr.labels[static_cast<std::size_t>(i)]);
    const Vector x = sim.X.row(i).transpose();
    const Vector mean_y = tr.theta_star[k] + tr.beta_Y * x;
    for (int t = 0; t < p_Y; ++t) sim.Y(i, t) = mean_y(t) + tau * std_normal(rng);
    sim.M.row(i) = mvn_cov_factor(rng, tr.beta_M * x, cov_factor[k]).transpose();
  }
  for (Eigen::Index i = 0; i < sim.Y.size(); ++i)
    if (uniform01(rng) < cfg.missing_rate) sim.Y.data()[i] = std::nan("");
  for (Eigen::Index i = 0; i < sim.M.size(); ++i)
    if (uniform01(rng) < cfg.missing_rate) sim.M.data()[i] = std::nan("");
  return sim;
}

std::string truth_json(const SimulationTruth& tr) {
  json j;
  j["subject_ids"] = tr.subject_ids;
  j["process_names"] = tr.process_names;
  j["times"] = tr.times;
  j["metabolite_names"] = tr.metabolite_names;
  j["covariate_names"] = tr.covariate_names;
  j["partition"] = tr.labels;
  j["graphs"] = json::array();
  for (const auto& g : tr.graphs) j["graphs"].push_back(g.edges());
  j["precisions"] = json::array();
  for (const auto& o : tr.omegas) j["precisions"].push_back(matrix_json(o));
  j["theta_star"] = json::array();
  for (const auto& t : tr.theta_star) j["theta_star"].push_back(std::vector<double>(t.data(), t.data() + t.size()));
  j["beta_Y"] = matrix_json(tr.beta_Y);
  j["beta_M"] = matrix_json(tr.beta_M);
  j["tau2"] = std::vector<double>(tr.tau2.data(), tr.tau2.data() + tr.tau2.size());
  j["kernel"] = {{"sigma2", tr.kernel.sigma2}, {"phi2", tr.kernel.phi2}, {"eta2", tr.kernel.eta2}, {"xi", tr.kernel.xi}};
  return j.dump(2) + "\n";
}

SimulationTruth read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  SimulationTruth tr;
  try {
    const json j = json::parse(in);
    tr.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
    tr.process_names = j.at("process_names").get<std::vector<std::string>>();
    tr.times = j.at("times").get<std::vector<std::vector<double>>>();
    tr.metabolite_names = j.at("metabolite_names").get<std::vector<std::string>>();
    tr.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    tr.labels = j.at("partition").get<std::vector<int>>();
    const int p = static_cast<int>(tr.metabolite_names.size());
    for (const auto& edges : j.at("graphs")) {
      Graph g(p);
      for (const auto& e : edges) g.set_edge(e[0].get<int>(), e[1].get<int>(), true);
      tr.graphs.push_back(g);
    }
    for (const auto& t : j.at("theta_star")) {
      const auto v = t.get<std::vector<double>>();
      tr.theta_star.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  } catch (const json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
  return tr;
}

void write_simulation(const SimulatedData& sim, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  const SimulationTruth& tr = sim.truth;
  const int N = static_cast<int>(tr.subject_ids.size());
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };

  {
    auto out = open_file(root / "longitudinal.csv");
    out << "subject_id,process,time,value\n";
    for (int i = 0; i < N; ++i) {
      int col = 0;
      for (std::size_t s = 0; s < tr.times.size(); ++s)
        for (double t : tr.times[s]) {
          out << tr.subject_ids[static_cast<std::size_t>(i)] << ',' << tr.process_names[s] << ',' << format_double(t)
              << ',' << cell(sim.Y(i, col++)) << '\n';
        }
    }
  }
  auto write_wide = [&](const std::string& name, const std::vector<std::string>& cols, const Matrix& m) {
    auto out = open_file(root / name);
    out << "subject_id";
    for (const auto& c : cols) out << ',' << c;
    out << '\n';
    for (int i = 0; i < N; ++i) {
      out << tr.subject_ids[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << cell(m(i, j));
      out << '\n';
    }
  };
  write_wide("metabolites.csv", tr.metabolite_names, sim.M);
  write_wide("covariates.csv", tr.covariate_names, sim.X);
  open_file(root / "truth.json") << truth_json(tr);
}

}  // namespace trajnet
