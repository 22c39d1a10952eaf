#include "drivepred/pipeline/manifest.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <memory>

#include "drivepred/common/errors.hpp"

namespace drivepred::pipeline {

using nlohmann::json;

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

std::string hex(const unsigned char* d, unsigned int n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(digits[d[i] >> 4]);
    out.push_back(digits[d[i] & 0xf]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  void update(const void* p, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), p, n) != 1) throw Error("sha256 update failed");
  }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &n) != 1) throw Error("sha256 final failed");
    return hex(md, n);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

std::vector<FileHash> hashes_from_json(const json& j) {
  std::vector<FileHash> out;
  for (const auto& e : j) out.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>()});
  return out;
}

json hashes_to_json(const std::vector<FileHash>& hs) {
  json out = json::array();
  for (const auto& h : hs) out.push_back({{"path", h.path}, {"sha256", h.sha256}});
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot read '" + path.string() + "'");
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

json Manifest::to_json() const {
  return {{"format", "drivepred-manifest"},
          {"version", 1},
          {"stage", stage},
          {"config_hash", config_hash},
          {"seed", seed},
          {"inputs", hashes_to_json(inputs)},
          {"outputs", hashes_to_json(outputs)}};
}

Manifest Manifest::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "drivepred-manifest" || j.at("version").get<int>() != 1) {
      throw SchemaError("not a version 1 manifest");
    }
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = hashes_from_json(j.at("inputs"));
    m.outputs = hashes_from_json(j.at("outputs"));
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  }
}

ArtifactLock::ArtifactLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
  std::filesystem::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw LockError("artifact directory '" + dir.string() + "' is locked by another run (remove " +
                      path_.string() + " if no run is active)");
    }
    throw LockError("cannot create lock file " + path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

ArtifactLock::~ArtifactLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace drivepred::pipeline
