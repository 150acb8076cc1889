#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "trajnet/gp_kernel.hpp"
#include "trajnet/graph.hpp"
#include "trajnet/linalg.hpp"

namespace trajnet {

/// Dimensions and labels shared by every record of a run.
struct StoreMetadata {
  int N = 0;
  int p_Y = 0;
  int p_M = 0;
  int q = 0;
  std::vector<std::string> subject_ids;
  std::vector<std::string> process_names;
  std::vector<std::vector<double>> times;
  std::vector<std::string> metabolite_names;
  std::vector<std::string> covariate_names;
  bool fixed_partition = false;
  long n_iter = 0;
  long n_burnin = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  long records = 0;

  int S() const { return static_cast<int>(times.size()); }
};

/// One saved iteration.
struct SampleRecord {
  long iteration = 0;
  std::vector<int> labels;
  Vector mu_theta;
  std::vector<Vector> theta_star;  // per cluster
  std::vector<Graph> graphs;       // per cluster
  std::vector<Matrix> omegas;      // per cluster
  Matrix beta_Y;                   // p_Y x q
  Matrix beta_M;                   // p_M x q
  Vector tau2;                     // per process
  KernelParams kernel;
  double loglik = 0.0;

  int K() const { return static_cast<int>(theta_star.size()); }
};

class SampleSink {
 public:
  virtual ~SampleSink() = default;
  virtual void begin(const StoreMetadata& meta) = 0;
  virtual void write(const SampleRecord& record) = 0;
  virtual void finish() = 0;
};

/// In-memory store; also what the reader returns.
struct SampleStore : SampleSink {
  StoreMetadata meta;
  std::vector<SampleRecord> records;

  void begin(const StoreMetadata& m) override { meta = m; }
  void write(const SampleRecord& r) override { records.push_back(r); }
  void finish() override { meta.records = static_cast<long>(records.size()); }
};

/// Streams records to partitions.csv, beta_Y.csv, beta_M.csv, scalars.csv,
/// graphs.jsonl and theta_star.jsonl; store.json is written by finish().
class DiskSink : public SampleSink {
 public:
  explicit DiskSink(std::string dir);
  void begin(const StoreMetadata& meta) override;
  void write(const SampleRecord& record) override;
  void finish() override;

 private:
  std::string dir_;
  StoreMetadata meta_;
  std::ofstream partitions_, beta_y_, beta_m_, scalars_, graphs_, theta_;
};

/// Forwards to several sinks.
class TeeSink : public SampleSink {
 public:
  explicit TeeSink(std::vector<SampleSink*> sinks) : sinks_(std::move(sinks)) {}
  void begin(const StoreMetadata& meta) override;
  void write(const SampleRecord& record) override;
  void finish() override;

 private:
  std::vector<SampleSink*> sinks_;
};

/// File names making up a store directory.
const std::vector<std::string>& store_files();

/// Loads a complete store. Missing files are listed in the error; record
/// counts must agree with store.json.
SampleStore read_sample_store(const std::string& dir);

std::string metadata_json(const StoreMetadata& meta);

}  // namespace trajnet
