#include "trajnet/posterior_summary.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "trajnet/csv.hpp"
#include "trajnet/errors.hpp"

namespace trajnet {

Matrix coclustering(const LabelSamples& samples) {
  if (samples.empty()) throw ContractError("coclustering: no samples");
  const auto n = static_cast<Eigen::Index>(samples.front().size());
  Matrix p = Matrix::Zero(n, n);
  for (const auto& s : samples) {
    if (static_cast<Eigen::Index>(s.size()) != n) throw ContractError("coclustering: samples differ in length");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (s[static_cast<std::size_t>(i)] == s[static_cast<std::size_t>(j)]) p(i, j) += 1.0;
  }
  p /= static_cast<double>(samples.size());
  p.triangularView<Eigen::StrictlyLower>() = p.transpose();
  p.diagonal().setOnes();
  return p;
}

double binder_loss(const std::vector<int>& labels, const Matrix& coclust) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (coclust.rows() != n || coclust.cols() != n) throw ContractError("binder_loss: dimension mismatch");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
      loss += std::abs(same - coclust(i, j));
    }
  return loss;
}

BinderResult binder_partition(const LabelSamples& samples, const Matrix& coclust) {
  if (samples.empty()) throw ContractError("binder_partition: no samples");
  std::map<std::vector<int>, double> seen;
  BinderResult best;
  bool have = false;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    std::vector<int> labels = samples[t];
    canonicalize_labels(labels);
    auto it = seen.find(labels);
    const double loss = it != seen.end() ? it->second : (seen[labels] = binder_loss(labels, coclust));
    if (!have || loss < best.loss - 1e-12 * std::max(1.0, best.loss)) {
      best.partition = Partition(labels);
      best.sample_index = t;
      best.loss = loss;
      have = true;
    }
  }
  return best;
}

Matrix edge_probabilities(const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw ContractError("edge_probabilities: no samples");
  const int p = graphs.front().p();
  Matrix pi = Matrix::Zero(p, p);
  for (const auto& g : graphs) {
    if (g.p() != p) throw ContractError("edge_probabilities: graphs differ in size");
    for (auto [h, k] : g.edges()) pi(h, k) += 1.0;
  }
  pi /= static_cast<double>(graphs.size());
  pi.triangularView<Eigen::StrictlyLower>() = pi.transpose();
  return pi;
}

Graph median_graph(const Matrix& pi, double threshold) {
  if (pi.rows() != pi.cols()) throw ContractError("median_graph: matrix must be square");
  const int p = static_cast<int>(pi.rows());
  Graph g(p);
  for (int h = 0; h < p; ++h)
    for (int k = h + 1; k < p; ++k)
      if (pi(h, k) > threshold) g.set_edge(h, k, true);
  return g;
}

Graph differential_network(const Matrix& pi1, const Matrix& pi2, double threshold) {
  if (pi1.rows() != pi2.rows() || pi1.cols() != pi2.cols() || pi1.rows() != pi1.cols()) {
    throw ContractError("differential_network: dimension mismatch");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ContractError("differential_network: threshold must be in (0, 1]");
  const int p = static_cast<int>(pi1.rows());
  Graph g(p);
  for (int h = 0; h < p; ++h)
    for (int k = h + 1; k < p; ++k)
      if (std::abs(pi1(h, k) - pi2(h, k)) > threshold) g.set_edge(h, k, true);
  return g;
}

double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw ContractError("quantile: no values");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<CoefficientInterval> coefficient_intervals(const std::vector<Vector>& samples, double level) {
  if (samples.size() < 2) throw ContractError("coefficient_intervals: at least two samples required");
  if (!(level >= 0.0 && level <= 1.0)) throw ContractError("coefficient_intervals: level must be in [0, 1]");
  const Eigen::Index d = samples.front().size();
  std::vector<CoefficientInterval> out(static_cast<std::size_t>(d));
  std::vector<double> col(samples.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t t = 0; t < samples.size(); ++t) {
      if (samples[t].size() != d) throw ContractError("coefficient_intervals: samples differ in length");
      col[t] = samples[t](j);
      sum += col[t];
    }
    auto& ci = out[static_cast<std::size_t>(j)];
    ci.mean = sum / static_cast<double>(samples.size());
    ci.lo = quantile(col, 0.5 * (1.0 - level));
    ci.hi = quantile(col, 0.5 * (1.0 + level));
    ci.relevant = ci.lo > 0.0 || ci.hi < 0.0;
  }
  return out;
}

std::vector<ClusterTrajectory> cluster_trajectories(const std::vector<std::vector<Vector>>& theta_samples,
                                                    const Partition& partition,
                                                    const std::vector<std::vector<double>>& times) {
  if (theta_samples.empty()) throw ContractError("cluster_trajectories: no samples");
  const int K = partition.K();
  Eigen::Index p = 0;
  for (const auto& t : times) p += static_cast<Eigen::Index>(t.size());
  std::vector<Vector> mean(static_cast<std::size_t>(K), Vector::Zero(p));
  for (const auto& sample : theta_samples) {
    if (static_cast<int>(sample.size()) != K) {
      throw ContractError("cluster_trajectories: sample with " + std::to_string(sample.size()) +
                          " clusters, partition has " + std::to_string(K));
    }
    for (int k = 0; k < K; ++k) {
      if (sample[static_cast<std::size_t>(k)].size() != p) throw ContractError("cluster_trajectories: length mismatch");
      mean[static_cast<std::size_t>(k)] += sample[static_cast<std::size_t>(k)];
    }
  }
  std::vector<ClusterTrajectory> out;
  for (int k = 0; k < K; ++k) {
    const Vector m = mean[static_cast<std::size_t>(k)] / static_cast<double>(theta_samples.size());
    Eigen::Index off = 0;
    for (std::size_t s = 0; s < times.size(); ++s) {
      ClusterTrajectory tr;
      tr.cluster = k;
      tr.process = static_cast<int>(s);
      tr.times = times[s];
      for (std::size_t t = 0; t < times[s].size(); ++t) tr.mean.push_back(m(off + static_cast<Eigen::Index>(t)));
      off += static_cast<Eigen::Index>(times[s].size());
      out.push_back(std::move(tr));
    }
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ContractError("adjusted_rand_index: labelings differ in length");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, v] : joint) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double total = c2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

EdgeScore edge_f1(const Graph& estimate, const Graph& truth) {
  if (estimate.p() != truth.p()) throw ContractError("edge_f1: graphs differ in size");
  double tp = 0.0;
  for (auto [h, k] : estimate.edges())
    if (truth.has_edge(h, k)) tp += 1.0;
  const double ne = estimate.edge_count(), nt = truth.edge_count();
  EdgeScore s;
  if (ne == 0.0 && nt == 0.0) return {1.0, 1.0, 1.0};
  s.precision = ne > 0.0 ? tp / ne : 0.0;
  s.recall = nt > 0.0 ? tp / nt : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

namespace {

std::ofstream open_file(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& names) {
  auto out = open_file(path);
  out << "name";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
}

std::vector<std::string> response_names(const StoreMetadata& m) {
  std::vector<std::string> out;
  for (int s = 0; s < m.S(); ++s)
    for (double t : m.times[static_cast<std::size_t>(s)]) out.push_back(m.process_names[static_cast<std::size_t>(s)] + "@" + format_double(t));
  return out;
}

}  // namespace

std::vector<std::string> write_summary(const SampleStore& store, const std::string& dir, const SummaryOptions& options) {
  namespace fs = std::filesystem;
  if (store.records.empty()) throw ConfigError("sample store has no records");
  const StoreMetadata& m = store.meta;
  fs::create_directories(dir);
  const fs::path root(dir);
  std::vector<std::string> written;

  LabelSamples labels;
  for (const auto& r : store.records) labels.push_back(r.labels);
  const Matrix P = coclustering(labels);
  write_matrix_csv(root / "coclustering.csv", P, m.subject_ids);
  written.push_back("coclustering.csv");

  const BinderResult binder = binder_partition(labels, P);
  {
    auto out = open_file(root / "binder_partition.csv");
    out << "subject_id,cluster\n";
    for (int i = 0; i < m.N; ++i) out << m.subject_ids[static_cast<std::size_t>(i)] << ',' << binder.partition[i] << '\n';
    written.push_back("binder_partition.csv");
  }

  if (store.records.size() >= 2) {
    auto out = open_file(root / "beta_intervals.csv");
    out << "block,response,covariate,mean,lo,hi,relevant\n";
    const auto responses = response_names(m);
    auto emit = [&](const std::string& block, const std::vector<std::string>& rows, auto get) {
      std::vector<Vector> samples;
      for (const auto& r : store.records) {
        const Matrix& b = get(r);
        Vector v(b.size());
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < b.rows(); ++i)
          for (Eigen::Index j = 0; j < b.cols(); ++j) v(k++) = b(i, j);
        samples.push_back(std::move(v));
      }
      if (samples.front().size() == 0) return;
      const auto ci = coefficient_intervals(samples, options.level);
      std::size_t k = 0;
      for (const auto& rn : rows)
        for (int c = 0; c < m.q; ++c, ++k) {
          out << block << ',' << rn << ',' << m.covariate_names[static_cast<std::size_t>(c)] << ','
              << format_double(ci[k].mean) << ',' << format_double(ci[k].lo) << ',' << format_double(ci[k].hi) << ','
              << (ci[k].relevant ? 1 : 0) << '\n';
        }
    };
    emit("Y", responses, [](const SampleRecord& r) -> const Matrix& { return r.beta_Y; });
    emit("M", m.metabolite_names, [](const SampleRecord& r) -> const Matrix& { return r.beta_M; });
    written.push_back("beta_intervals.csv");
  }

  if (!m.fixed_partition) return written;

  const Partition& part = binder.partition;
  const int K = part.K();
  std::vector<Matrix> pis;
  for (int k = 0; k < K; ++k) {
    std::vector<Graph> gs;
    for (const auto& r : store.records) gs.push_back(r.graphs.at(static_cast<std::size_t>(k)));
    pis.push_back(edge_probabilities(gs));
    const std::string probs = "edge_probs_cluster" + std::to_string(k) + ".csv";
    write_matrix_csv(root / probs, pis.back(), m.metabolite_names);
    const std::string median = "median_graph_cluster" + std::to_string(k) + ".json";
    open_file(root / median) << graph_to_json(median_graph(pis.back()), m.metabolite_names);
    written.push_back(probs);
    written.push_back(median);
  }
  std::vector<std::pair<int, int>> pairs = options.diffnet_pairs;
  if (pairs.empty())
    for (int a = 0; a < K; ++a)
      for (int b = a + 1; b < K; ++b) pairs.emplace_back(a, b);
  for (auto [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= K || b >= K || a == b) {
      throw ConfigError("diffnet clusters " + std::to_string(a) + " and " + std::to_string(b) + " are not valid for " +
                        std::to_string(K) + " clusters");
    }
    const std::string name = "diffnet_" + std::to_string(a) + "_" + std::to_string(b) + ".json";
    open_file(root / name) << graph_to_json(differential_network(pis[static_cast<std::size_t>(a)],
                                                                 pis[static_cast<std::size_t>(b)], options.diffnet_threshold),
                                            m.metabolite_names);
    written.push_back(name);
  }

  std::vector<std::vector<Vector>> thetas;
  for (const auto& r : store.records) thetas.push_back(r.theta_star);
  auto out = open_file(root / "trajectories.csv");
  out << "cluster,process,time,mean\n";
  for (const auto& tr : cluster_trajectories(thetas, part, m.times))
    for (std::size_t t = 0; t < tr.times.size(); ++t)
      out << tr.cluster << ',' << m.process_names[static_cast<std::size_t>(tr.process)] << ',' << format_double(tr.times[t])
          << ',' << format_double(tr.mean[t]) << '\n';
  written.push_back("trajectories.csv");
  return written;
}

}  // namespace trajnet
