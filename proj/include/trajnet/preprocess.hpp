#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajnet/linalg.hpp"

namespace trajnet {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Longitudinal responses on a per-process time grid shared by all subjects.
/// Row i of `Y` concatenates the S process segments (length p_Y = sum n_s);
/// unobserved cells hold NaN and are false in `observed`.
struct LongitudinalDataset {
  std::vector<std::string> process_names;
  std::vector<std::vector<double>> times;  // strictly increasing per process
  Matrix Y;
  Mask observed;

  int S() const { return static_cast<int>(times.size()); }
  int N() const { return static_cast<int>(Y.rows()); }
  int p_Y() const { return static_cast<int>(Y.cols()); }
  int n_s(int s) const { return static_cast<int>(times[static_cast<std::size_t>(s)].size()); }
  int offset(int s) const;
  /// Process index of each concatenated coordinate.
  std::vector<int> process_of_coordinate() const;
};

struct TransformRecord {
  std::optional<double> lambda;  // Box-Cox exponent when applied
  bool logit = false;
  double mean = 0.0;
  double sd = 1.0;
};

struct MetaboliteMatrix {
  Matrix M;  // N x p_M, NaN when missing
  Mask observed;
  std::vector<std::string> column_names;
  std::vector<TransformRecord> transforms;

  int p_M() const { return static_cast<int>(M.cols()); }
};

struct CovariateMatrix {
  Matrix X;  // N x q, NaN when missing before imputation
  std::vector<std::string> column_names;
  std::vector<bool> categorical;
  std::vector<TransformRecord> transforms;

  int q() const { return static_cast<int>(X.cols()); }
};

struct Dataset {
  std::vector<std::string> subject_ids;
  LongitudinalDataset longitudinal;
  MetaboliteMatrix metabolites;
  CovariateMatrix covariates;
  std::vector<TransformRecord> longitudinal_transforms;  // one per process
  std::vector<std::string> warnings;

  int N() const { return static_cast<int>(subject_ids.size()); }
};

struct DataPaths {
  std::string longitudinal;
  std::string metabolites;
  std::string covariates;
};

enum class MetaboliteTransform { BoxCox, None };

struct PreprocessOptions {
  std::vector<std::string> processes;  // declared names; empty = order of appearance
  std::vector<std::string> logit_processes;
  bool standardize_longitudinal = true;
  MetaboliteTransform metabolite_transform = MetaboliteTransform::BoxCox;
  std::vector<std::string> categorical_covariates;
};

double logit_transform(double p);
double inverse_logit(double x);

/// (x^lambda - 1)/lambda, log(x) at lambda = 0.
double box_cox(double x, double lambda);
double inverse_box_cox(double y, double lambda);

/// Box-Cox grid {-2.0, -1.9, ..., 2.0}.
std::vector<double> box_cox_grid();

/// Profile Gaussian log-likelihood of lambda (additive constants dropped).
double box_cox_profile_loglik(std::span<const double> x, double lambda);

/// Grid maximizer of the profile likelihood; NaN entries are skipped.
double fit_box_cox(std::span<const double> column);

struct Standardized {
  std::vector<double> values;  // NaN preserved
  double mean = 0.0;
  double sd = 1.0;
};

/// Centers and scales observed entries (sample sd, n-1 denominator).
Standardized standardize(std::span<const double> column);

/// Mean fill for continuous columns, mode fill (smallest level on ties) for
/// categorical ones.
CovariateMatrix impute_covariates(const CovariateMatrix& x);

/// Reads the three CSV files and aligns them by subject id. No transforms
/// are applied here.
Dataset load_dataset(const DataPaths& paths, const PreprocessOptions& options);

/// Applies logit / Box-Cox / standardization and covariate imputation.
Dataset preprocess(Dataset raw, const PreprocessOptions& options);

/// JSON text for transforms.json.
std::string transforms_json(const Dataset& data);

}  // namespace trajnet
