#pragma once

#include <string>
#include <utility>
#include <vector>

#include "trajnet/dp_partition.hpp"
#include "trajnet/graph.hpp"
#include "trajnet/linalg.hpp"
#include "trajnet/sample_store.hpp"

namespace trajnet {

using LabelSamples = std::vector<std::vector<int>>;

/// P(i,j) = fraction of samples with c_i == c_j.
Matrix coclustering(const LabelSamples& samples);

/// sum_{i<j} |1{c_i = c_j} - P(i,j)|
double binder_loss(const std::vector<int>& labels, const Matrix& coclust);

struct BinderResult {
  Partition partition;
  std::size_t sample_index = 0;
  double loss = 0.0;
};

/// Sampled partition with the smallest Binder loss; earliest sample on ties.
BinderResult binder_partition(const LabelSamples& samples, const Matrix& coclust);

/// Edge inclusion frequencies over graph samples (zero diagonal).
Matrix edge_probabilities(const std::vector<Graph>& graphs);

/// Edges with probability strictly above `threshold` (0.5 by default).
Graph median_graph(const Matrix& pi, double threshold = 0.5);

/// Edges where |pi1 - pi2| > threshold.
Graph differential_network(const Matrix& pi1, const Matrix& pi2, double threshold = 0.9);

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double prob);

struct CoefficientInterval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool relevant = false;  // interval excludes zero
};

/// Equal-tailed intervals per coordinate of vector-valued samples.
std::vector<CoefficientInterval> coefficient_intervals(const std::vector<Vector>& samples, double level = 0.95);

struct ClusterTrajectory {
  int cluster = 0;
  int process = 0;
  std::vector<double> times;
  std::vector<double> mean;
};

/// Posterior mean of theta* per cluster, cut into process segments.
/// theta_samples[t][k] is the draw of cluster k in sample t; every sample
/// must carry partition.K() clusters.
std::vector<ClusterTrajectory> cluster_trajectories(const std::vector<std::vector<Vector>>& theta_samples,
                                                    const Partition& partition,
                                                    const std::vector<std::vector<double>>& times);

/// Adjusted Rand index between two labelings of the same subjects.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct EdgeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Edge recovery of `estimate` against `truth`; empty-vs-empty scores 1.
EdgeScore edge_f1(const Graph& estimate, const Graph& truth);

struct SummaryOptions {
  std::vector<std::pair<int, int>> diffnet_pairs;  // empty: every pair
  double diffnet_threshold = 0.9;
  double level = 0.95;
};

/// Writes coclustering.csv, binder_partition.csv and beta_intervals.csv; for
/// fixed-partition stores also edge_probs_cluster<k>.csv,
/// median_graph_cluster<k>.json, diffnet_<k1>_<k2>.json and trajectories.csv.
/// Returns the file names written.
std::vector<std::string> write_summary(const SampleStore& store, const std::string& dir, const SummaryOptions& options);

}  // namespace trajnet
