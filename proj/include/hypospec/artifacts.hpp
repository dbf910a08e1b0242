#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hypospec::harness {

using Logger = std::function<void(const std::string&)>;

struct ArtifactRecord {
  std::string name;
  std::uint64_t hash = 0;
  std::size_t bytes = 0;
};

/// Writes files into one output directory and keeps a record of them.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string dir);

  const std::string& dir() const noexcept { return dir_; }
  /// Writes atomically (temporary file, then rename).
  void write(const std::string& name, const std::string& content);
  const std::vector<ArtifactRecord>& records() const noexcept { return records_; }

 private:
  std::string dir_;
  std::vector<ArtifactRecord> records_;
};

/// Content-addressed store of computed results under <dir>/cache.
class ResultCache {
 public:
  ResultCache(std::string dir, bool enabled, Logger log);

  /// Returns the cached text for `key`, computing and storing it on a miss.
  std::string get_or_compute(const std::string& label, std::uint64_t key, const std::function<std::string()>& compute);

  struct Entry {
    std::string label;
    std::string key;
    bool hit = false;
  };
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::string dir_;
  bool enabled_;
  Logger log_;
  std::vector<Entry> entries_;
};

std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace hypospec::harness
