#include "trajnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "trajnet/csv.hpp"
#include "trajnet/errors.hpp"

namespace trajnet {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string fmt_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

int LongitudinalDataset::offset(int s) const {
  int off = 0;
  for (int k = 0; k < s; ++k) off += n_s(k);
  return off;
}

std::vector<int> LongitudinalDataset::process_of_coordinate() const {
  std::vector<int> out;
  for (int s = 0; s < S(); ++s) out.insert(out.end(), static_cast<std::size_t>(n_s(s)), s);
  return out;
}

double logit_transform(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("logit: value " + fmt_num(p) + " outside (0, 1)");
  return std::log(p / (1.0 - p));
}

double inverse_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double box_cox(double x, double lambda) {
  if (!(x > 0.0)) throw DomainError("box_cox: value " + fmt_num(x) + " is not positive");
  const double lx = std::log(x);
  if (lambda == 0.0) return lx;
  return std::expm1(lambda * lx) / lambda;
}

double inverse_box_cox(double y, double lambda) {
  if (lambda == 0.0) return std::exp(y);
  return std::exp(std::log1p(lambda * y) / lambda);
}

std::vector<double> box_cox_grid() {
  std::vector<double> g;
  for (int k = -20; k <= 20; ++k) g.push_back(k / 10.0);
  return g;
}

double box_cox_profile_loglik(std::span<const double> x, double lambda) {
  double sum = 0.0, sumsq = 0.0, sumlog = 0.0;
  std::size_t n = 0;
  for (double v : x) {
    if (std::isnan(v)) continue;
    const double y = box_cox(v, lambda);
    sum += y;
    sumsq += y * y;
    sumlog += std::log(v);
    ++n;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(sumsq / static_cast<double>(n) - mean * mean, 0.0);
  return -0.5 * static_cast<double>(n) * std::log(var) + (lambda - 1.0) * sumlog;
}

double fit_box_cox(std::span<const double> column) {
  std::vector<double> obs;
  for (double v : column) {
    if (std::isnan(v)) continue;
    if (!(v > 0.0)) throw DomainError("fit_box_cox: nonpositive value " + fmt_num(v));
    obs.push_back(v);
  }
  if (obs.size() < 2) throw DomainError("fit_box_cox: fewer than two observed values");
  if (std::all_of(obs.begin(), obs.end(), [&](double v) { return v == obs.front(); })) {
    throw DomainError("fit_box_cox: constant column");
  }
  double best = 1.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double lambda : box_cox_grid()) {
    const double ll = box_cox_profile_loglik(obs, lambda);
    if (ll > best_ll) {
      best_ll = ll;
      best = lambda;
    }
  }
  return best;
}

Standardized standardize(std::span<const double> column) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : column) {
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  }
  if (n < 2) throw DomainError("standardize: fewer than two observed values");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : column) {
    if (!std::isnan(v)) ss += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DomainError("standardize: degenerate column (zero variance)");
  Standardized out;
  out.mean = mean;
  out.sd = sd;
  out.values.reserve(column.size());
  for (double v : column) out.values.push_back(std::isnan(v) ? v : (v - mean) / sd);
  return out;
}

CovariateMatrix impute_covariates(const CovariateMatrix& x) {
  CovariateMatrix out = x;
  for (int j = 0; j < x.q(); ++j) {
    std::vector<double> obs;
    for (Eigen::Index i = 0; i < x.X.rows(); ++i) {
      if (!std::isnan(x.X(i, j))) obs.push_back(x.X(i, j));
    }
    if (obs.empty()) {
      throw DomainError("impute_covariates: column '" + x.column_names[static_cast<std::size_t>(j)] +
                        "' has no observed values");
    }
    double fill = 0.0;
    if (x.categorical[static_cast<std::size_t>(j)]) {
      std::map<double, int> counts;
      for (double v : obs) ++counts[v];
      int best = -1;
      for (const auto& [level, c] : counts) {
        if (c > best) {
          best = c;
          fill = level;
        }
      }
    } else {
      for (double v : obs) fill += v;
      fill /= static_cast<double>(obs.size());
    }
    for (Eigen::Index i = 0; i < x.X.rows(); ++i) {
      if (std::isnan(out.X(i, j))) out.X(i, j) = fill;
    }
  }
  return out;
}

namespace {

struct KeyedTable {
  CsvTable table;
  std::vector<std::string> value_columns;
  std::unordered_map<std::string, std::size_t> row_of;  // subject id -> row index
};

KeyedTable read_keyed(const std::string& path) {
  KeyedTable kt;
  kt.table = read_csv(path);
  const std::size_t id_col = kt.table.column("subject_id");
  if (id_col != 0) throw ParseError(path, 1, "first column must be subject_id");
  kt.value_columns.assign(kt.table.header.begin() + 1, kt.table.header.end());
  if (kt.value_columns.empty()) throw ParseError(path, 1, "no value columns");
  std::set<std::string> seen;
  for (const auto& col : kt.value_columns) {
    if (!seen.insert(col).second) throw ParseError(path, 1, "duplicate column '" + col + "'");
  }
  for (std::size_t r = 0; r < kt.table.rows.size(); ++r) {
    const auto& row = kt.table.rows[r];
    const std::string& id = row.cells[0];
    if (id.empty()) throw ParseError(path, row.line, "empty subject_id");
    if (!kt.row_of.emplace(id, r).second) {
      throw ParseError(path, row.line, "duplicate subject_id '" + id + "'");
    }
  }
  return kt;
}

bool is_numeric(const std::string& s) {
  if (s.empty()) return true;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end != s.c_str() && *end == '\0';
}

}  // namespace

Dataset load_dataset(const DataPaths& paths, const PreprocessOptions& options) {
  Dataset data;

  // Covariates define the retained subjects and their order.
  KeyedTable cov = read_keyed(paths.covariates);
  for (const auto& name : options.categorical_covariates) {
    if (!contains(cov.value_columns, name)) {
      throw ParseError(paths.covariates, 1, "declared categorical covariate '" + name + "' not found");
    }
  }
  const std::size_t q = cov.value_columns.size();
  std::vector<std::size_t> kept_rows;
  for (std::size_t r = 0; r < cov.table.rows.size(); ++r) {
    const auto& cells = cov.table.rows[r].cells;
    const bool all_missing = q > 0 && std::all_of(cells.begin() + 1, cells.end(),
                                         [](const std::string& c) { return c.empty() || c == "NA"; });
    if (all_missing) {
      data.warnings.push_back("subject '" + cells[0] + "' dropped: all covariates missing");
      continue;
    }
    kept_rows.push_back(r);
    data.subject_ids.push_back(cells[0]);
  }
  const int N = static_cast<int>(kept_rows.size());
  std::unordered_map<std::string, int> index_of;
  for (int i = 0; i < N; ++i) index_of[data.subject_ids[static_cast<std::size_t>(i)]] = i;

  auto& X = data.covariates;
  X.column_names = cov.value_columns;
  X.X = Matrix::Constant(N, static_cast<Eigen::Index>(q), kNaN);
  X.categorical.assign(q, false);
  for (std::size_t j = 0; j < q; ++j) {
    const bool cat = contains(options.categorical_covariates, cov.value_columns[j]);
    X.categorical[j] = cat;
    bool numeric = true;
    std::set<std::string> levels;
    for (std::size_t r : kept_rows) {
      const std::string& c = cov.table.rows[r].cells[j + 1];
      if (c.empty() || c == "NA") continue;
      levels.insert(c);
      numeric = numeric && is_numeric(c);
    }
    if (!numeric && !cat) {
      throw ParseError(paths.covariates, 1,
                       "column '" + cov.value_columns[j] + "' is non-numeric but not declared categorical");
    }
    std::map<std::string, double> code;
    if (!numeric) {
      double k = 1.0;
      for (const auto& l : levels) code[l] = k++;
    }
    for (int i = 0; i < N; ++i) {
      const auto& row = cov.table.rows[kept_rows[static_cast<std::size_t>(i)]];
      const std::string& c = row.cells[j + 1];
      if (c.empty() || c == "NA") continue;
      X.X(i, static_cast<Eigen::Index>(j)) = numeric ? parse_cell(c, paths.covariates, row.line) : code[c];
    }
  }

  // Metabolites: subjects without a row keep a fully missing mask.
  KeyedTable met = read_keyed(paths.metabolites);
  auto& M = data.metabolites;
  M.column_names = met.value_columns;
  const auto p_M = static_cast<Eigen::Index>(met.value_columns.size());
  M.M = Matrix::Constant(N, p_M, kNaN);
  for (const auto& row : met.table.rows) {
    auto it = index_of.find(row.cells[0]);
    if (it == index_of.end()) {
      data.warnings.push_back("subject '" + row.cells[0] + "' in metabolites has no covariates; dropped");
      continue;
    }
    for (Eigen::Index j = 0; j < p_M; ++j) {
      M.M(it->second, j) = parse_cell(row.cells[static_cast<std::size_t>(j) + 1], paths.metabolites, row.line);
    }
  }
  M.observed = M.M.array().isNaN() == false;

  // Longitudinal long format.
  CsvTable lt = read_csv(paths.longitudinal);
  const std::size_t c_id = lt.column("subject_id"), c_proc = lt.column("process"),
                    c_time = lt.column("time"), c_val = lt.column("value");
  auto& L = data.longitudinal;
  L.process_names = options.processes;
  std::map<std::string, int> proc_index;
  for (std::size_t s = 0; s < L.process_names.size(); ++s) proc_index[L.process_names[s]] = static_cast<int>(s);

  struct Obs {
    int subject;
    int process;
    double time;
    double value;
  };
  std::vector<Obs> obs;
  std::map<std::pair<std::string, int>, std::pair<double, long>> last_time;  // (subject, process) -> (time, line)
  std::set<std::string> dropped_long;
  for (const auto& row : lt.rows) {
    const std::string& id = row.cells[c_id];
    const std::string& proc = row.cells[c_proc];
    int s;
    if (auto pit = proc_index.find(proc); pit != proc_index.end()) {
      s = pit->second;
    } else if (options.processes.empty()) {
      s = static_cast<int>(L.process_names.size());
      L.process_names.push_back(proc);
      proc_index[proc] = s;
    } else {
      throw ParseError(paths.longitudinal, row.line, "undeclared process '" + proc + "'");
    }
    const double t = parse_cell(row.cells[c_time], paths.longitudinal, row.line);
    if (std::isnan(t)) throw ParseError(paths.longitudinal, row.line, "missing time");
    const double v = parse_cell(row.cells[c_val], paths.longitudinal, row.line);
    auto key = std::make_pair(id, s);
    if (auto lit = last_time.find(key); lit != last_time.end() && !(t > lit->second.first)) {
      throw ParseError(paths.longitudinal, row.line,
                       "time grid not strictly increasing for subject '" + id + "', process '" + proc + "'");
    }
    last_time[key] = {t, row.line};
    auto it = index_of.find(id);
    if (it == index_of.end()) {
      if (dropped_long.insert(id).second) {
        data.warnings.push_back("subject '" + id + "' in longitudinal data has no covariates; dropped");
      }
      continue;
    }
    obs.push_back({it->second, s, t, v});
  }
  const int S = static_cast<int>(L.process_names.size());
  if (S == 0) throw ParseError(paths.longitudinal, 1, "no longitudinal processes");
  std::vector<std::set<double>> grids(static_cast<std::size_t>(S));
  for (const auto& o : obs) grids[static_cast<std::size_t>(o.process)].insert(o.time);
  for (int s = 0; s < S; ++s) {
    if (grids[static_cast<std::size_t>(s)].empty()) {
      throw ParseError(paths.longitudinal, 1, "process '" + L.process_names[static_cast<std::size_t>(s)] + "' has no rows");
    }
    L.times.emplace_back(grids[static_cast<std::size_t>(s)].begin(), grids[static_cast<std::size_t>(s)].end());
  }
  int p_Y = 0;
  for (int s = 0; s < S; ++s) p_Y += L.n_s(s);
  L.Y = Matrix::Constant(N, p_Y, kNaN);
  for (const auto& o : obs) {
    const auto& grid = L.times[static_cast<std::size_t>(o.process)];
    const auto pos = std::lower_bound(grid.begin(), grid.end(), o.time) - grid.begin();
    L.Y(o.subject, L.offset(o.process) + static_cast<int>(pos)) = o.value;
  }
  L.observed = L.Y.array().isNaN() == false;
  data.longitudinal_transforms.assign(static_cast<std::size_t>(S), TransformRecord{});
  data.metabolites.transforms.assign(static_cast<std::size_t>(p_M), TransformRecord{});
  data.covariates.transforms.assign(q, TransformRecord{});
  return data;
}

Dataset preprocess(Dataset data, const PreprocessOptions& options) {
  auto& L = data.longitudinal;
  for (const auto& name : options.logit_processes) {
    if (!contains(L.process_names, name)) throw ConfigError("logit process '" + name + "' not in data");
  }
  for (int s = 0; s < L.S(); ++s) {
    const auto& name = L.process_names[static_cast<std::size_t>(s)];
    auto& rec = data.longitudinal_transforms[static_cast<std::size_t>(s)];
    const int off = L.offset(s);
    if (contains(options.logit_processes, name)) {
      rec.logit = true;
      for (int i = 0; i < L.N(); ++i) {
        for (int t = 0; t < L.n_s(s); ++t) {
          double& v = L.Y(i, off + t);
          if (std::isnan(v)) continue;
          try {
            v = logit_transform(v);
          } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " (subject '" + data.subject_ids[static_cast<std::size_t>(i)] +
                              "', process '" + name + "', time " + fmt_num(L.times[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)]) + ")");
          }
        }
      }
    }
    if (options.standardize_longitudinal) {
      std::vector<double> pooled;
      for (int i = 0; i < L.N(); ++i)
        for (int t = 0; t < L.n_s(s); ++t) pooled.push_back(L.Y(i, off + t));
      Standardized z;
      try {
        z = standardize(pooled);
      } catch (const DomainError& e) {
        throw DomainError(std::string(e.what()) + " (process '" + name + "')");
      }
      rec.mean = z.mean;
      rec.sd = z.sd;
      std::size_t k = 0;
      for (int i = 0; i < L.N(); ++i)
        for (int t = 0; t < L.n_s(s); ++t) L.Y(i, off + t) = z.values[k++];
    }
  }

  auto& M = data.metabolites;
  for (int j = 0; j < M.p_M(); ++j) {
    const auto& name = M.column_names[static_cast<std::size_t>(j)];
    auto& rec = M.transforms[static_cast<std::size_t>(j)];
    std::vector<double> col(M.M.col(j).data(), M.M.col(j).data() + M.M.rows());
    try {
      if (options.metabolite_transform == MetaboliteTransform::BoxCox) {
        const double lambda = fit_box_cox(col);
        rec.lambda = lambda;
        for (double& v : col)
          if (!std::isnan(v)) v = box_cox(v, lambda);
      }
      Standardized z = standardize(col);
      rec.mean = z.mean;
      rec.sd = z.sd;
      for (Eigen::Index i = 0; i < M.M.rows(); ++i) M.M(i, j) = z.values[static_cast<std::size_t>(i)];
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " (metabolite column '" + name + "')");
    }
  }

  auto& X = data.covariates;
  X = impute_covariates(X);
  for (int j = 0; j < X.q(); ++j) {
    if (X.categorical[static_cast<std::size_t>(j)]) continue;
    std::vector<double> col(X.X.col(j).data(), X.X.col(j).data() + X.X.rows());
    try {
      Standardized z = standardize(col);
      X.transforms[static_cast<std::size_t>(j)].mean = z.mean;
      X.transforms[static_cast<std::size_t>(j)].sd = z.sd;
      for (Eigen::Index i = 0; i < X.X.rows(); ++i) X.X(i, j) = z.values[static_cast<std::size_t>(i)];
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " (covariate column '" + X.column_names[static_cast<std::size_t>(j)] + "')");
    }
  }
  return data;
}

std::string transforms_json(const Dataset& data) {
  using nlohmann::ordered_json;
  auto rec_json = [](const TransformRecord& r) {
    ordered_json j;
    j["lambda"] = r.lambda ? ordered_json(*r.lambda) : ordered_json(nullptr);
    j["logit"] = r.logit;
    j["mean"] = r.mean;
    j["sd"] = r.sd;
    return j;
  };
  ordered_json out;
  ordered_json lon = ordered_json::object();
  for (std::size_t s = 0; s < data.longitudinal_transforms.size(); ++s)
    lon[data.longitudinal.process_names[s]] = rec_json(data.longitudinal_transforms[s]);
  ordered_json met = ordered_json::object();
  for (std::size_t j = 0; j < data.metabolites.transforms.size(); ++j)
    met[data.metabolites.column_names[j]] = rec_json(data.metabolites.transforms[j]);
  ordered_json cov = ordered_json::object();
  for (std::size_t j = 0; j < data.covariates.transforms.size(); ++j) {
    if (data.covariates.categorical[j]) continue;
    cov[data.covariates.column_names[j]] = rec_json(data.covariates.transforms[j]);
  }
  out["longitudinal"] = lon;
  out["metabolites"] = met;
  out["covariates"] = cov;
  return out.dump(2) + "\n";
}

}  // namespace trajnet
