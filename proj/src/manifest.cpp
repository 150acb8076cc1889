#include "trajnet/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "trajnet/errors.hpp"

namespace trajnet {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest make_manifest(const std::string& command, const std::string& config_path,
                          const std::vector<std::string>& data_files, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config_path = config_path;
  if (!config_path.empty()) m.config_sha256 = sha256_file(config_path);
  for (const auto& f : data_files) m.data_files.emplace_back(f, sha256_file(f));
  m.seed = seed;
  m.version = TRAJNET_VERSION;
  m.started = utc_timestamp();
  return m;
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["config"] = {{"path", m.config_path}, {"sha256", m.config_sha256}};
  j["data"] = nlohmann::ordered_json::array();
  for (const auto& [p, h] : m.data_files) j["data"].push_back({{"path", p}, {"sha256", h}});
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
  if (!out) throw ConfigError("cannot write manifest in " + dir);
  out << manifest_json(m);
}

}  // namespace trajnet
