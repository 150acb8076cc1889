#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trajnet {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_sha256;
  std::vector<std::pair<std::string, std::string>> data_files;  // (path, sha256)
  std::uint64_t seed = 0;
  std::string version;
  std::string started;   // UTC, ISO 8601
  std::string finished;
  std::vector<std::string> outputs;
};

std::string utc_timestamp();

/// Fills in hashes for `config_path` and every data file.
RunManifest make_manifest(const std::string& command, const std::string& config_path,
                          const std::vector<std::string>& data_files, std::uint64_t seed);

std::string manifest_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::string& dir);

}  // namespace trajnet
