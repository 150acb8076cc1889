// Model data builders shared by the sampler tests and the acceptance suite.
#pragma once

#include <string>
#include <vector>

#include "trajnet/sampler.hpp"
#include "trajnet/simulate.hpp"

namespace fixture {

using trajnet::Matrix;
using trajnet::ModelData;

/// Fully observed zeros with the given grids.
inline ModelData blank(int n, const std::vector<std::vector<double>>& times, int p_M, int q) {
  ModelData d;
  int p_Y = 0;
  for (const auto& t : times) p_Y += static_cast<int>(t.size());
  d.Y = Matrix::Zero(n, p_Y);
  d.Y_obs = trajnet::Mask::Constant(n, p_Y, true);
  d.M = Matrix::Zero(n, p_M);
  d.M_obs = trajnet::Mask::Constant(n, p_M, true);
  d.X = Matrix::Zero(n, q);
  d.times = times;
  for (int i = 0; i < n; ++i) d.subject_ids.push_back("s" + std::to_string(i));
  for (std::size_t s = 0; s < times.size(); ++s) d.process_names.push_back("y" + std::to_string(s));
  for (int j = 0; j < p_M; ++j) d.metabolite_names.push_back("m" + std::to_string(j));
  for (int c = 0; c < q; ++c) d.covariate_names.push_back("x" + std::to_string(c));
  return d;
}

/// Observation masks follow the NaN cells of the simulation.
inline ModelData from_simulation(const trajnet::SimulatedData& sim) {
  ModelData d;
  d.Y = sim.Y;
  d.Y_obs = sim.Y.array().isFinite();
  d.M = sim.M;
  d.M_obs = sim.M.array().isFinite();
  d.X = sim.X;
  d.times = sim.truth.times;
  d.subject_ids = sim.truth.subject_ids;
  d.process_names = sim.truth.process_names;
  d.metabolite_names = sim.truth.metabolite_names;
  d.covariate_names = sim.truth.covariate_names;
  d.validate();
  return d;
}

/// Rows `idx` of every block.
inline ModelData subset(const ModelData& d, const std::vector<int>& idx) {
  ModelData out = d;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.Y.resize(n, d.Y.cols());
  out.Y_obs.resize(n, d.Y.cols());
  out.M.resize(n, d.M.cols());
  out.M_obs.resize(n, d.M.cols());
  out.X.resize(n, d.X.cols());
  out.subject_ids.clear();
  for (Eigen::Index r = 0; r < n; ++r) {
    const int i = idx[static_cast<std::size_t>(r)];
    out.Y.row(r) = d.Y.row(i);
    out.Y_obs.row(r) = d.Y_obs.row(i);
    out.M.row(r) = d.M.row(i);
    out.M_obs.row(r) = d.M_obs.row(i);
    out.X.row(r) = d.X.row(i);
    out.subject_ids.push_back(d.subject_ids[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Sample mean and variance.
inline std::pair<double, double> moments(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return {m, s / static_cast<double>(x.size() - 1)};
}

}  // namespace fixture
