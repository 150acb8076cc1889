#include "trajnet/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "trajnet/csv.hpp"
#include "trajnet/errors.hpp"

namespace trajnet {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

struct Field {
  std::string key;
  std::string value;
};

double to_double(const Field& f) {
  const std::string v = trim(f.value);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(x)) throw ConfigError(f.key + ": expected a number, got '" + v + "'");
  return x;
}

long to_long(const Field& f) {
  const std::string v = trim(f.value);
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (v.empty() || pos != v.size()) throw ConfigError(f.key + ": expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const Field& f) {
  const std::string v = trim(f.value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(f.key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> to_list(const Field& f) {
  std::vector<std::string> out;
  std::stringstream ss(f.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const Field&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"data",
       {
           {"longitudinal", [](RunConfig& c, const Field& f) { c.data.longitudinal = trim(f.value); }},
           {"metabolites", [](RunConfig& c, const Field& f) { c.data.metabolites = trim(f.value); }},
           {"covariates", [](RunConfig& c, const Field& f) { c.data.covariates = trim(f.value); }},
           {"processes", [](RunConfig& c, const Field& f) { c.preprocess.processes = to_list(f); }},
           {"logit_processes", [](RunConfig& c, const Field& f) { c.preprocess.logit_processes = to_list(f); }},
           {"categorical_covariates",
            [](RunConfig& c, const Field& f) { c.preprocess.categorical_covariates = to_list(f); }},
           {"standardize_longitudinal",
            [](RunConfig& c, const Field& f) { c.preprocess.standardize_longitudinal = to_bool(f); }},
           {"metabolite_transform",
            [](RunConfig& c, const Field& f) {
              const std::string v = trim(f.value);
              if (v == "boxcox") {
                c.preprocess.metabolite_transform = MetaboliteTransform::BoxCox;
              } else if (v == "none") {
                c.preprocess.metabolite_transform = MetaboliteTransform::None;
              } else {
                throw ConfigError(f.key + ": expected boxcox or none, got '" + v + "'");
              }
            }},
       }},
      {"model",
       {
           {"alpha", [](RunConfig& c, const Field& f) { c.sampler.dp.alpha = to_double(f); }},
           {"m_aux", [](RunConfig& c, const Field& f) { c.sampler.dp.m_aux = static_cast<int>(to_long(f)); }},
           {"nu", [](RunConfig& c, const Field& f) { c.sampler.nu = to_double(f); }},
           {"psi_scale", [](RunConfig& c, const Field& f) { c.sampler.psi_scale = to_double(f); }},
           {"edge_prob", [](RunConfig& c, const Field& f) { c.sampler.d = to_double(f); }},
           {"n_mc", [](RunConfig& c, const Field& f) { c.sampler.n_mc = static_cast<int>(to_long(f)); }},
           {"tau2_a", [](RunConfig& c, const Field& f) { c.sampler.hyper.tau2_a = to_double(f); }},
           {"tau2_b", [](RunConfig& c, const Field& f) { c.sampler.hyper.tau2_b = to_double(f); }},
           {"sigma2_a", [](RunConfig& c, const Field& f) { c.sampler.hyper.sigma2_a = to_double(f); }},
           {"sigma2_b", [](RunConfig& c, const Field& f) { c.sampler.hyper.sigma2_b = to_double(f); }},
           {"phi2_a", [](RunConfig& c, const Field& f) { c.sampler.hyper.phi2_a = to_double(f); }},
           {"phi2_b", [](RunConfig& c, const Field& f) { c.sampler.hyper.phi2_b = to_double(f); }},
           {"eta2_a", [](RunConfig& c, const Field& f) { c.sampler.hyper.eta2_a = to_double(f); }},
           {"eta2_b", [](RunConfig& c, const Field& f) { c.sampler.hyper.eta2_b = to_double(f); }},
           {"xi_a", [](RunConfig& c, const Field& f) { c.sampler.hyper.xi_a = to_double(f); }},
           {"xi_b", [](RunConfig& c, const Field& f) { c.sampler.hyper.xi_b = to_double(f); }},
           {"mu_theta_mean", [](RunConfig& c, const Field& f) { c.sampler.hyper.mu_theta_mean = to_double(f); }},
           {"mu_theta_sd", [](RunConfig& c, const Field& f) { c.sampler.hyper.mu_theta_sd = to_double(f); }},
           {"longitudinal", [](RunConfig& c, const Field& f) { c.sampler.model.longitudinal = to_bool(f); }},
           {"metabolites", [](RunConfig& c, const Field& f) { c.sampler.model.metabolites = to_bool(f); }},
           {"regression", [](RunConfig& c, const Field& f) { c.sampler.model.regression = to_bool(f); }},
       }},
      {"mcmc",
       {
           {"n_iter", [](RunConfig& c, const Field& f) { c.sampler.n_iter = to_long(f); }},
           {"n_burnin", [](RunConfig& c, const Field& f) { c.sampler.n_burnin = to_long(f); }},
           {"thin", [](RunConfig& c, const Field& f) { c.sampler.thin = to_long(f); }},
           {"adapt_init", [](RunConfig& c, const Field& f) { c.sampler.adapt_init = to_long(f); }},
           {"seed",
            [](RunConfig& c, const Field& f) {
              const long s = to_long(f);
              if (s < 0) throw ConfigError(f.key + ": seed must be non-negative");
              c.sampler.seed = static_cast<std::uint64_t>(s);
            }},
           {"init_clusters", [](RunConfig& c, const Field& f) { c.sampler.init_clusters = static_cast<int>(to_long(f)); }},
           {"snapshot_every", [](RunConfig& c, const Field& f) { c.sampler.snapshot_every = to_long(f); }},
       }},
      {"output",
       {
           {"dir", [](RunConfig& c, const Field& f) { c.out_dir = trim(f.value); }},
       }},
      {"simulate",
       {
           {"N", [](RunConfig& c, const Field& f) { c.simulation.N = static_cast<int>(to_long(f)); }},
           {"K", [](RunConfig& c, const Field& f) { c.simulation.K = static_cast<int>(to_long(f)); }},
           {"S", [](RunConfig& c, const Field& f) { c.simulation.S = static_cast<int>(to_long(f)); }},
           {"n_s", [](RunConfig& c, const Field& f) { c.simulation.n_s = static_cast<int>(to_long(f)); }},
           {"time_step", [](RunConfig& c, const Field& f) { c.simulation.time_step = to_double(f); }},
           {"p_M", [](RunConfig& c, const Field& f) { c.simulation.p_M = static_cast<int>(to_long(f)); }},
           {"q", [](RunConfig& c, const Field& f) { c.simulation.q = static_cast<int>(to_long(f)); }},
           {"missing_rate", [](RunConfig& c, const Field& f) { c.simulation.missing_rate = to_double(f); }},
           {"theta_shift", [](RunConfig& c, const Field& f) { c.simulation.theta_shift = to_double(f); }},
           {"partial_corr", [](RunConfig& c, const Field& f) { c.simulation.partial_corr = to_double(f); }},
           {"tau2", [](RunConfig& c, const Field& f) { c.simulation.tau2 = to_double(f); }},
           {"beta_sd", [](RunConfig& c, const Field& f) { c.simulation.beta_sd = to_double(f); }},
           {"sigma2", [](RunConfig& c, const Field& f) { c.simulation.kernel.sigma2 = to_double(f); }},
           {"phi2", [](RunConfig& c, const Field& f) { c.simulation.kernel.phi2 = to_double(f); }},
           {"eta2", [](RunConfig& c, const Field& f) { c.simulation.kernel.eta2 = to_double(f); }},
       }},
  };
  return s;
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source, static_cast<long>(e.line()), e.message());
  }
  RunConfig cfg;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    auto sit = sch.find(section);
    if (sit == sch.end()) {
      if (!body.data().empty()) throw ConfigError(source + ": key '" + section + "' outside any section");
      throw ConfigError(source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw ConfigError(source + ": unknown key '" + section + "." + key + "'");
      kit->second(cfg, Field{section + "." + key, node.data()});
    }
  }
  cfg.data.longitudinal = resolve(cfg.data.longitudinal, base_dir);
  cfg.data.metabolites = resolve(cfg.data.metabolites, base_dir);
  cfg.data.covariates = resolve(cfg.data.covariates, base_dir);
  cfg.out_dir = resolve(cfg.out_dir, base_dir);
  cfg.sampler.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, std::filesystem::path(path).parent_path().string());
}

std::string render_config(const RunConfig& c) {
  std::ostringstream o;
  auto list = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s;
  };
  const auto& h = c.sampler.hyper;
  o << "[data]\n"
    << "longitudinal = " << c.data.longitudinal << "\n"
    << "metabolites = " << c.data.metabolites << "\n"
    << "covariates = " << c.data.covariates << "\n";
  if (!c.preprocess.processes.empty()) o << "processes = " << list(c.preprocess.processes) << "\n";
  if (!c.preprocess.logit_processes.empty()) o << "logit_processes = " << list(c.preprocess.logit_processes) << "\n";
  if (!c.preprocess.categorical_covariates.empty())
    o << "categorical_covariates = " << list(c.preprocess.categorical_covariates) << "\n";
  o << "standardize_longitudinal = " << (c.preprocess.standardize_longitudinal ? "true" : "false") << "\n"
    << "metabolite_transform = " << (c.preprocess.metabolite_transform == MetaboliteTransform::BoxCox ? "boxcox" : "none")
    << "\n\n[model]\n"
    << "alpha = " << format_double(c.sampler.dp.alpha) << "\n"
    << "m_aux = " << c.sampler.dp.m_aux << "\n";
  if (c.sampler.nu) o << "nu = " << format_double(*c.sampler.nu) << "\n";
  o << "psi_scale = " << format_double(c.sampler.psi_scale) << "\n";
  if (c.sampler.d) o << "edge_prob = " << format_double(*c.sampler.d) << "\n";
  o << "n_mc = " << c.sampler.n_mc << "\n"
    << "tau2_a = " << format_double(h.tau2_a) << "\ntau2_b = " << format_double(h.tau2_b) << "\n"
    << "sigma2_a = " << format_double(h.sigma2_a) << "\nsigma2_b = " << format_double(h.sigma2_b) << "\n"
    << "phi2_a = " << format_double(h.phi2_a) << "\nphi2_b = " << format_double(h.phi2_b) << "\n"
    << "eta2_a = " << format_double(h.eta2_a) << "\neta2_b = " << format_double(h.eta2_b) << "\n"
    << "xi_a = " << format_double(h.xi_a) << "\nxi_b = " << format_double(h.xi_b) << "\n"
    << "mu_theta_mean = " << format_double(h.mu_theta_mean) << "\nmu_theta_sd = " << format_double(h.mu_theta_sd) << "\n"
    << "longitudinal = " << (c.sampler.model.longitudinal ? "true" : "false") << "\n"
    << "metabolites = " << (c.sampler.model.metabolites ? "true" : "false") << "\n"
    << "regression = " << (c.sampler.model.regression ? "true" : "false") << "\n\n[mcmc]\n"
    << "n_iter = " << c.sampler.n_iter << "\nn_burnin = " << c.sampler.n_burnin << "\nthin = " << c.sampler.thin << "\n"
    << "adapt_init = " << c.sampler.adapt_init << "\nseed = " << c.sampler.seed << "\n"
    << "init_clusters = " << c.sampler.init_clusters << "\nsnapshot_every = " << c.sampler.snapshot_every << "\n\n"
    << "[output]\ndir = " << c.out_dir << "\n";
  return o.str();
}

}  // namespace trajnet
