#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajnet/dp_partition.hpp"
#include "trajnet/gp_kernel.hpp"
#include "trajnet/graph.hpp"
#include "trajnet/linalg.hpp"

namespace trajnet {

/// Forward simulation settings. The defaults give the two-cluster scenario:
/// 60 subjects, two processes on five time points, six metabolites, one
/// covariate and 5% missing cells.
struct SimulationConfig {
  int N = 60;
  int K = 2;
  int S = 2;
  int n_s = 5;
  double time_step = 0.5;
  int p_M = 6;
  int q = 1;
  double missing_rate = 0.05;
  double theta_shift = 1.5;   // cluster k mean offset, spread over [-shift, shift]
  double partial_corr = 0.45; // on every true edge
  double tau2 = 0.25;
  double beta_sd = 0.5;
  KernelParams kernel{1.0, 1.0, 0.05, {}};

  void validate() const;
};

struct SimulationTruth {
  std::vector<std::string> subject_ids;
  std::vector<std::string> process_names;
  std::vector<std::vector<double>> times;
  std::vector<std::string> metabolite_names;
  std::vector<std::string> covariate_names;
  std::vector<int> labels;
  std::vector<Graph> graphs;
  std::vector<Matrix> omegas;
  std::vector<Vector> theta_star;
  Matrix beta_Y;
  Matrix beta_M;
  Vector tau2;
  KernelParams kernel;
};

struct SimulatedData {
  SimulationTruth truth;
  Matrix Y;  // N x p_Y, NaN where masked
  Matrix M;  // N x p_M, NaN where masked
  Matrix X;  // N x q
};

/// Draws a dataset from the model with `seed` feeding the simulation stream.
SimulatedData simulate_dataset(const SimulationConfig& config, std::uint64_t seed);

/// Writes longitudinal.csv, metabolites.csv, covariates.csv and truth.json.
void write_simulation(const SimulatedData& sim, const std::string& dir);

std::string truth_json(const SimulationTruth& truth);

/// Reads truth.json back (labels, graphs, theta*).
SimulationTruth read_truth(const std::string& path);

}  // namespace trajnet
