// trajnet: simulate, fit and summarize joint trajectory / network clusterings.

#include <CLI11.hpp>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "trajnet/config.hpp"
#include "trajnet/csv.hpp"
#include "trajnet/errors.hpp"
#include "trajnet/manifest.hpp"
#include "trajnet/posterior_summary.hpp"
#include "trajnet/sample_store.hpp"
#include "trajnet/sampler.hpp"
#include "trajnet/simulate.hpp"

namespace fs = std::filesystem;
using namespace trajnet;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

/// --out, then $TRAJNET_OUT, then [output] dir.
std::string output_dir(const Common& c, const RunConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("TRAJNET_OUT"); env && *env) return env;
  return cfg.out_dir;
}

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) cfg.sampler.seed = *c.seed;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

ModelData prepare(const RunConfig& cfg, const std::string& out) {
  if (cfg.data.longitudinal.empty() || cfg.data.metabolites.empty() || cfg.data.covariates.empty()) {
    throw ConfigError("[data] must set longitudinal, metabolites and covariates");
  }
  Dataset data = preprocess(load_dataset(cfg.data, cfg.preprocess), cfg.preprocess);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
  fs::create_directories(out);
  write_text(fs::path(out) / "transforms.json", transforms_json(data));
  return ModelData::from_dataset(data);
}

std::vector<std::string> data_files(const RunConfig& cfg) {
  return {cfg.data.longitudinal, cfg.data.metabolites, cfg.data.covariates};
}

/// Runs `chains` independent chains (seeds seed + k), each into its own
/// directory when there is more than one.
std::vector<std::string> run_chains(const RunConfig& cfg, const ModelData& data, const std::string& out, int chains) {
  std::vector<std::string> dirs;
  for (int k = 0; k < chains; ++k) dirs.push_back(chains == 1 ? out : (fs::path(out) / ("chain_" + std::to_string(k))).string());
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  auto one = [&](int k) {
    try {
      SamplerConfig sc = cfg.sampler;
      sc.seed = cfg.sampler.seed + static_cast<std::uint64_t>(k);
      sc.snapshot_path = (fs::path(dirs[static_cast<std::size_t>(k)]) / "snapshot.json").string();
      DiskSink sink(dirs[static_cast<std::size_t>(k)]);
      run_chain(sc, data, sink);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  };
  if (chains == 1) {
    one(0);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < chains; ++k) pool.emplace_back(one, k);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return dirs;
}

int cmd_simulate(const Common& c) {
  RunConfig cfg = load(c);
  const std::string out = output_dir(c, cfg);
  RunManifest man = make_manifest("simulate", c.config, {}, cfg.sampler.seed);
  const SimulatedData sim = simulate_dataset(cfg.simulation, cfg.sampler.seed);
  write_simulation(sim, out);

  // Config template for fitting the simulated data.
  RunConfig fit = cfg;
  fit.data = {"longitudinal.csv", "metabolites.csv", "covariates.csv"};
  fit.preprocess.metabolite_transform = MetaboliteTransform::None;
  fit.out_dir = "fit";
  if (c.config.empty()) {
    fit.sampler.n_iter = 20000;
    fit.sampler.n_burnin = 16000;
    fit.sampler.thin = 2;
  }
  write_text(fs::path(out) / "config.ini", render_config(fit));
  man.outputs = {"longitudinal.csv", "metabolites.csv", "covariates.csv", "truth.json", "config.ini"};
  man.finished = utc_timestamp();
  write_manifest(man, out);
  std::cout << "simulated " << cfg.simulation.N << " subjects into " << out << '\n';
  return 0;
}

int cmd_fit(const Common& c, int chains, const std::string& partition_file) {
  if (c.config.empty()) throw ConfigError("--config is required");
  if (chains < 1) throw ConfigError("--chains must be at least 1");
  RunConfig cfg = load(c);
  const std::string out = output_dir(c, cfg);
  std::vector<std::string> inputs = data_files(cfg);
  if (!partition_file.empty()) inputs.push_back(partition_file);
  RunManifest man = make_manifest(partition_file.empty() ? "fit" : "refit-fixed-partition", c.config, inputs, cfg.sampler.seed);
  const ModelData data = prepare(cfg, out);

  if (!partition_file.empty()) {
    const CsvTable tab = read_csv(partition_file);
    if (static_cast<int>(tab.rows.size()) != data.N()) {
      throw ConfigError("partition file " + partition_file + " has " + std::to_string(tab.rows.size()) +
                        " rows but the data have " + std::to_string(data.N()) + " subjects");
    }
    const std::size_t id_col = tab.column("subject_id"), cl_col = tab.column("cluster");
    std::map<std::string, int> by_id;
    for (const auto& row : tab.rows) {
      const double v = parse_cell(row.cells.at(cl_col), tab.path, row.line);
      if (!(v >= 0.0) || v != std::floor(v)) throw ParseError(tab.path, row.line, "cluster must be a non-negative integer");
      if (!by_id.emplace(row.cells.at(id_col), static_cast<int>(v)).second) {
        throw ParseError(tab.path, row.line, "duplicate subject '" + row.cells.at(id_col) + "'");
      }
    }
    std::vector<int> labels;
    for (const auto& id : data.subject_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ConfigError("partition file " + partition_file + " has no row for subject '" + id + "'");
      labels.push_back(it->second);
    }
    cfg.sampler.fixed_partition = labels;
    validate_fixed_partition(labels, data.N());
  }

  const auto dirs = run_chains(cfg, data, out, chains);
  man.outputs = store_files();
  man.outputs.push_back("transforms.json");
  man.finished = utc_timestamp();
  write_manifest(man, out);
  for (const auto& d : dirs) std::cout << "wrote sample store " << d << '\n';
  return 0;
}

int cmd_summarize(const std::string& store_dir, std::string out, const std::vector<int>& diffnet, double threshold) {
  if (out.empty()) out = store_dir;
  if (diffnet.size() % 2 != 0) throw ConfigError("--diffnet expects pairs of cluster indices");
  SummaryOptions opts;
  opts.diffnet_threshold = threshold;
  for (std::size_t i = 0; i < diffnet.size(); i += 2) opts.diffnet_pairs.emplace_back(diffnet[i], diffnet[i + 1]);
  RunManifest man = make_manifest("summarize", "", {}, 0);
  const SampleStore store = read_sample_store(store_dir);
  if (!store.meta.fixed_partition) {
    std::cerr << "note: cluster-specific summaries need a fixed-partition store (run refit-fixed-partition)\n";
  }
  man.outputs = write_summary(store, out, opts);
  man.finished = utc_timestamp();
  // The fit manifest stays with the store; summaries get their own name.
  write_text(fs::path(out) / "summary_manifest.json", manifest_json(man));
  for (const auto& f : man.outputs) std::cout << (fs::path(out) / f).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajnet: Bayesian clustering of longitudinal trajectories and metabolite networks"};
  app.set_version_flag("--version", TRAJNET_VERSION);
  app.require_subcommand(1);

  Common common;
  int chains = 1;
  std::string partition_file;
  std::string store_dir;
  std::string summary_out;
  std::vector<int> diffnet;
  double threshold = 0.9;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", common.config, "INI configuration file")->check(CLI::ExistingFile);
    if (need_config) opt->required();
    sub->add_option("--out", common.out, "output directory (overrides TRAJNET_OUT and [output] dir)");
    sub->add_option("--seed", seed_value, "random seed (overrides [mcmc] seed)");
  };

  auto* sim = app.add_subcommand("simulate", "simulate a dataset with known clusters and networks");
  add_common(sim, false);
  auto* fit = app.add_subcommand("fit", "run the MCMC sampler");
  add_common(fit, true);
  fit->add_option("--chains", chains, "independent chains (seeds seed, seed+1, ...)")->check(CLI::PositiveNumber);
  auto* refit = app.add_subcommand("refit-fixed-partition", "rerun the sampler with the partition held fixed");
  add_common(refit, true);
  refit->add_option("--partition", partition_file, "CSV with subject_id,cluster")->required()->check(CLI::ExistingFile);
  refit->add_option("--chains", chains, "independent chains")->check(CLI::PositiveNumber);
  auto* summ = app.add_subcommand("summarize", "posterior summaries of a sample store");
  summ->add_option("store", store_dir, "sample store directory")->required();
  summ->add_option("--out", summary_out, "output directory (default: the store)");
  summ->add_option("--diffnet", diffnet, "cluster pairs k1 k2 for differential networks")->expected(2, -1);
  summ->add_option("--threshold", threshold, "differential network threshold")->check(CLI::Range(0.0, 1.0));
  auto* dn = app.add_subcommand("diffnet", "differential networks between clusters (summarize --diffnet)");
  dn->add_option("store", store_dir, "sample store directory")->required();
  dn->add_option("k1_k2", diffnet, "cluster pair(s)")->expected(2, -1)->required();
  dn->add_option("--out", summary_out, "output directory (default: the store)");
  dn->add_option("--threshold", threshold, "differential network threshold")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    for (auto* sub : {sim, fit, refit})
      if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed_value;
    if (sim->parsed()) return cmd_simulate(common);
    if (fit->parsed()) return cmd_fit(common, chains, "");
    if (refit->parsed()) return cmd_fit(common, chains, partition_file);
    if (summ->parsed() || dn->parsed()) return cmd_summarize(store_dir, summary_out, diffnet, threshold);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
