#include "trajnet/sample_store.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "trajnet/csv.hpp"
#include "trajnet/errors.hpp"

namespace trajnet {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::ofstream out(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
  return out;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

void write_matrix_row(std::ofstream& out, long iteration, const Matrix& b) {
  out << iteration;
  for (Eigen::Index r = 0; r < b.rows(); ++r)
    for (Eigen::Index c = 0; c < b.cols(); ++c) out << ',' << format_double(b(r, c));
  out << '\n';
}

void write_matrix_header(std::ofstream& out, Eigen::Index rows, Eigen::Index cols) {
  out << "iteration";
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out << ",b" << r << '_' << c;
  out << '\n';
}

std::vector<double> numeric_row(const CsvRow& row, const std::string& path, std::size_t expected) {
  if (row.cells.size() != expected) {
    throw ParseError(path, row.line, "expected " + std::to_string(expected) + " fields, found " +
                                         std::to_string(row.cells.size()));
  }
  std::vector<double> out;
  out.reserve(row.cells.size());
  for (const auto& c : row.cells) out.push_back(parse_cell(c, path, row.line));
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  std::vector<json> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), n, e.what());
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& store_files() {
  static const std::vector<std::string> files{"store.json",  "partitions.csv", "beta_Y.csv",      "beta_M.csv",
                                              "scalars.csv", "graphs.jsonl",   "theta_star.jsonl"};
  return files;
}

std::string metadata_json(const StoreMetadata& m) {
  json j;
  j["N"] = m.N;
  j["p_Y"] = m.p_Y;
  j["p_M"] = m.p_M;
  j["q"] = m.q;
  j["subject_ids"] = m.subject_ids;
  j["process_names"] = m.process_names;
  j["times"] = m.times;
  j["metabolite_names"] = m.metabolite_names;
  j["covariate_names"] = m.covariate_names;
  j["fixed_partition"] = m.fixed_partition;
  j["n_iter"] = m.n_iter;
  j["n_burnin"] = m.n_burnin;
  j["thin"] = m.thin;
  j["seed"] = m.seed;
  j["records"] = m.records;
  return j.dump(2) + "\n";
}

DiskSink::DiskSink(std::string dir) : dir_(std::move(dir)) {}

void DiskSink::begin(const StoreMetadata& meta) {
  meta_ = meta;
  fs::create_directories(dir_);
  // A stale store.json would make a half-written store look complete.
  fs::remove(fs::path(dir_) / "store.json");
  partitions_ = open_out(dir_, "partitions.csv");
  beta_y_ = open_out(dir_, "beta_Y.csv");
  beta_m_ = open_out(dir_, "beta_M.csv");
  scalars_ = open_out(dir_, "scalars.csv");
  graphs_ = open_out(dir_, "graphs.jsonl");
  theta_ = open_out(dir_, "theta_star.jsonl");

  partitions_ << "iteration";
  for (int i = 0; i < meta.N; ++i) partitions_ << ",c_" << i;
  partitions_ << '\n';
  write_matrix_header(beta_y_, meta.p_Y, meta.q);
  write_matrix_header(beta_m_, meta.p_M, meta.q);
  scalars_ << "iteration,K";
  for (int s = 0; s < meta.S(); ++s) scalars_ << ",tau2_" << s;
  scalars_ << ",sigma2,phi2,eta2";
  for (int s = 0; s < meta.S(); ++s) scalars_ << ",xi_" << s;
  scalars_ << ",loglik\n";
  meta_.records = 0;
}

void DiskSink::write(const SampleRecord& r) {
  partitions_ << r.iteration;
  for (int c : r.labels) partitions_ << ',' << c;
  partitions_ << '\n';
  write_matrix_row(beta_y_, r.iteration, r.beta_Y);
  write_matrix_row(beta_m_, r.iteration, r.beta_M);

  scalars_ << r.iteration << ',' << r.K();
  for (Eigen::Index s = 0; s < r.tau2.size(); ++s) scalars_ << ',' << format_double(r.tau2(s));
  scalars_ << ',' << format_double(r.kernel.sigma2) << ',' << format_double(r.kernel.phi2) << ','
           << format_double(r.kernel.eta2);
  for (double x : r.kernel.xi) scalars_ << ',' << format_double(x);
  scalars_ << ',' << format_double(r.loglik) << '\n';

  // Omega is stored on its support only: the diagonal and one value per edge.
  json g;
  g["iteration"] = r.iteration;
  g["clusters"] = json::array();
  for (std::size_t k = 0; k < r.graphs.size(); ++k) {
    json c;
    json edges = json::array();
    json vals = json::array();
    for (auto [h, l] : r.graphs[k].edges()) {
      edges.push_back({h, l});
      vals.push_back(r.omegas[k](h, l));
    }
    c["edges"] = edges;
    c["omega_diag"] = vector_json(r.omegas[k].diagonal());
    c["omega_edges"] = vals;
    g["clusters"].push_back(c);
  }
  graphs_ << g.dump() << '\n';

  json t;
  t["iteration"] = r.iteration;
  t["mu_theta"] = vector_json(r.mu_theta);
  t["clusters"] = json::array();
  for (const auto& th : r.theta_star) t["clusters"].push_back(vector_json(th));
  theta_ << t.dump() << '\n';
  ++meta_.records;
}

void DiskSink::finish() {
  for (auto* f : {&partitions_, &beta_y_, &beta_m_, &scalars_, &graphs_, &theta_}) {
    f->flush();
    if (!*f) throw ConfigError("write failure in " + dir_);
    f->close();
  }
  auto meta = open_out(dir_, "store.json");
  meta << metadata_json(meta_);
}

void TeeSink::begin(const StoreMetadata& meta) {
  for (auto* s : sinks_) s->begin(meta);
}
void TeeSink::write(const SampleRecord& record) {
  for (auto* s : sinks_) s->write(record);
}
void TeeSink::finish() {
  for (auto* s : sinks_) s->finish();
}

SampleStore read_sample_store(const std::string& dir) {
  const fs::path root(dir);
  std::vector<std::string> missing;
  for (const auto& f : store_files())
    if (!fs::exists(root / f)) missing.push_back(f);
  if (!missing.empty()) {
    std::string list;
    for (const auto& f : missing) list += (list.empty() ? "" : ", ") + f;
    throw ConfigError("incomplete sample store " + dir + ": missing " + list);
  }

  SampleStore store;
  StoreMetadata& m = store.meta;
  {
    std::ifstream in(root / "store.json");
    json j;
    try {
      j = json::parse(in);
      m.N = j.at("N");
      m.p_Y = j.at("p_Y");
      m.p_M = j.at("p_M");
      m.q = j.at("q");
      m.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
      m.process_names = j.at("process_names").get<std::vector<std::string>>();
      m.times = j.at("times").get<std::vector<std::vector<double>>>();
      m.metabolite_names = j.at("metabolite_names").get<std::vector<std::string>>();
      m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
      m.fixed_partition = j.at("fixed_partition");
      m.n_iter = j.at("n_iter");
      m.n_burnin = j.at("n_burnin");
      m.thin = j.at("thin");
      m.seed = j.at("seed");
      m.records = j.at("records");
    } catch (const json::exception& e) {
      throw ParseError((root / "store.json").string(), 0, e.what());
    }
  }
  const auto n_rec = static_cast<std::size_t>(m.records);
  const int S = m.S();

  auto check_count = [&](const std::string& name, std::size_t found) {
    if (found != n_rec) {
      throw ConfigError("truncated sample store: " + name + " has " + std::to_string(found) + " records, store.json says " +
                        std::to_string(n_rec));
    }
  };

  const CsvTable parts = read_csv((root / "partitions.csv").string());
  const CsvTable by = read_csv((root / "beta_Y.csv").string());
  const CsvTable bm = read_csv((root / "beta_M.csv").string());
  const CsvTable sc = read_csv((root / "scalars.csv").string());
  const auto graphs = read_jsonl(root / "graphs.jsonl");
  const auto thetas = read_jsonl(root / "theta_star.jsonl");
  check_count("partitions.csv", parts.rows.size());
  check_count("beta_Y.csv", by.rows.size());
  check_count("beta_M.csv", bm.rows.size());
  check_count("scalars.csv", sc.rows.size());
  check_count("graphs.jsonl", graphs.size());
  check_count("theta_star.jsonl", thetas.size());

  store.records.resize(n_rec);
  for (std::size_t t = 0; t < n_rec; ++t) {
    SampleRecord& r = store.records[t];
    const auto pv = numeric_row(parts.rows[t], parts.path, static_cast<std::size_t>(m.N) + 1);
    r.iteration = static_cast<long>(pv[0]);
    r.labels.assign(pv.size() - 1, 0);
    for (std::size_t i = 1; i < pv.size(); ++i) r.labels[i - 1] = static_cast<int>(pv[i]);

    auto fill = [&](const CsvTable& tab, int rows, Matrix& b) {
      const auto v = numeric_row(tab.rows[t], tab.path, static_cast<std::size_t>(rows * m.q) + 1);
      b.resize(rows, m.q);
      std::size_t k = 1;
      for (int i = 0; i < rows; ++i)
        for (int c = 0; c < m.q; ++c) b(i, c) = v[k++];
    };
    fill(by, m.p_Y, r.beta_Y);
    fill(bm, m.p_M, r.beta_M);

    const auto sv = numeric_row(sc.rows[t], sc.path, static_cast<std::size_t>(2 * S + 6));
    r.tau2.resize(S);
    for (int s = 0; s < S; ++s) r.tau2(s) = sv[static_cast<std::size_t>(2 + s)];
    r.kernel.sigma2 = sv[static_cast<std::size_t>(2 + S)];
    r.kernel.phi2 = sv[static_cast<std::size_t>(3 + S)];
    r.kernel.eta2 = sv[static_cast<std::size_t>(4 + S)];
    r.kernel.xi.assign(sv.begin() + 5 + S, sv.begin() + 5 + 2 * S);
    r.loglik = sv.back();

    try {
      const json& th = thetas[t];
      r.mu_theta = vector_from_json(th.at("mu_theta"));
      for (const auto& c : th.at("clusters")) r.theta_star.push_back(vector_from_json(c));
      const json& gj = graphs[t];
      for (const auto& c : gj.at("clusters")) {
        Graph g(m.p_M);
        Matrix omega = Matrix::Zero(m.p_M, m.p_M);
        const Vector diag = vector_from_json(c.at("omega_diag"));
        omega.diagonal() = diag;
        const auto& edges = c.at("edges");
        const auto& vals = c.at("omega_edges");
        for (std::size_t e = 0; e < edges.size(); ++e) {
          const int h = edges[e][0];
          const int l = edges[e][1];
          g.set_edge(h, l, true);
          omega(h, l) = omega(l, h) = vals[e].get<double>();
        }
        r.graphs.push_back(std::move(g));
        r.omegas.push_back(std::move(omega));
      }
    } catch (const json::exception& e) {
      throw ParseError((root / "graphs.jsonl").string(), static_cast<long>(t) + 1, e.what());
    }
    const auto k = static_cast<std::size_t>(r.theta_star.size());
    if (r.graphs.size() != k || static_cast<long>(r.iteration) != static_cast<long>(graphs[t].at("iteration"))) {
      throw ConfigError("sample store " + dir + ": records of iteration " + std::to_string(r.iteration) +
                        " disagree across files");
    }
  }
  return store;
}

}  // namespace trajnet
