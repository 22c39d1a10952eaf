#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace drivepred::pipeline {

std::string sha256_hex(std::string_view bytes);
// Throws LookupError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct FileHash {
  std::string path;  // relative to the artifact dir
  std::string sha256;
};

struct Manifest {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<FileHash> inputs;
  std::vector<FileHash> outputs;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);  // throws SchemaError
};

// Holds <dir>/.lock for its lifetime. Throws LockError when another run holds it.
class ArtifactLock {
 public:
  explicit ArtifactLock(const std::filesystem::path& dir);
  ~ArtifactLock();
  ArtifactLock(const ArtifactLock&) = delete;
  ArtifactLock& operator=(const ArtifactLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace drivepred::pipeline
