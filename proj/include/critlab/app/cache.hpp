#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <openssl/evp.h>
#include <unistd.h>

#include <json.hpp>

#include "critlab/error.hpp"

namespace critlab::app {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

/// Hash of a JSON value in its canonical (sorted-key, compact) form.
inline std::string hash_of(const json& j) { return sha256_hex(j.dump()); }

/// Write through a unique temporary in the same directory, then rename, so
/// readers never see a partial file.
inline void atomic_write(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream tag;
  tag << ".tmp." << ::getpid() << "." << std::this_thread::get_id() << "." << counter++;
  fs::path tmp = path;
  tmp += tag.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

inline std::string default_cache_dir() {
  if (const char* env = std::getenv("CRITLAB_CACHE_DIR"); env && *env) return env;
  return ".critlab-cache";
}

/// Content-addressed store of JSON payloads.  Each entry carries a checksum
/// of its payload; a mismatch or parse failure drops the entry so that it is
/// recomputed.
class Cache {
 public:
  struct Entry {
    json payload;
    json meta;
  };

  Cache(bool enabled, fs::path dir) : enabled_(enabled), dir_(std::move(dir)) {}

  bool enabled() const { return enabled_; }
  const fs::path& dir() const { return dir_; }
  int hits() const { return hits_; }
  int misses() const { return misses_; }
  int corrupt() const { return corrupt_; }

  fs::path path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  std::optional<Entry> load(const std::string& key) {
    if (!enabled_) return std::nullopt;
    const auto p = path_for(key);
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      ++misses_;
      return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      auto doc = json::parse(buf.str());
      auto payload = doc.at("payload");
      if (doc.at("checksum").get<std::string>() != sha256_hex(payload.dump()))
        throw Error("checksum mismatch");
      ++hits_;
      return Entry{std::move(payload), doc.value("meta", json::object())};
    } catch (const std::exception&) {
      std::error_code ec;
      fs::remove(p, ec);
      ++corrupt_;
      ++misses_;
      return std::nullopt;
    }
  }

  void store(const std::string& key, const json& payload, const json& meta = json::object()) {
    if (!enabled_) return;
    json doc{{"checksum", sha256_hex(payload.dump())}, {"meta", meta}, {"payload", payload}};
    atomic_write(path_for(key), doc.dump());
  }

  /// Load or compute; compute time is recorded in the entry's metadata.
  template <class F>
  Entry get_or_compute(const std::string& key, F&& compute) {
    if (auto e = load(key)) return *e;
    const auto t0 = std::chrono::steady_clock::now();
    // Round-trip through text so fresh and cached payloads compare equal.
    json payload = json::parse(json(compute()).dump());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json meta{{"compute_seconds", secs}};
    store(key, payload, meta);
    return {std::move(payload), std::move(meta)};
  }

 private:
  bool enabled_;
  fs::path dir_;
  std::atomic<int> hits_{0}, misses_{0}, corrupt_{0};
};

}  // namespace critlab::app
