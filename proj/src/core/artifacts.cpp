#include "hypospec/artifacts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypospec/config.hpp"
#include "hypospec/error.hpp"

namespace hypospec::harness {

namespace fs = std::filesystem;

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + path.parent_path().string());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move " + tmp.string() + " into place");
}

}  // namespace

ArtifactWriter::ArtifactWriter(std::string dir) : dir_(std::move(dir)) {}

void ArtifactWriter::write(const std::string& name, const std::string& content) {
  write_atomic(fs::path(dir_) / name, content);
  for (auto& r : records_) {
    if (r.name == name) {
      r.hash = fnv1a64(content);
      r.bytes = content.size();
      return;
    }
  }
  records_.push_back({name, fnv1a64(content), content.size()});
}

ResultCache::ResultCache(std::string dir, bool enabled, Logger log)
    : dir_(std::move(dir)), enabled_(enabled), log_(std::move(log)) {}

std::string ResultCache::get_or_compute(const std::string& label, std::uint64_t key,
                                        const std::function<std::string()>& compute) {
  const std::string hex = hex64(key);
  const fs::path path = fs::path(dir_) / "cache" / (hex + ".json");
  if (enabled_ && fs::exists(path)) {
    if (log_) log_("cache hit: " + label + " [" + hex + "]");
    entries_.push_back({label, hex, true});
    return read_file(path.string());
  }
  std::string text = compute();
  if (enabled_) write_atomic(path, text);
  entries_.push_back({label, hex, false});
  return text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) { return fs::exists(path); }

}  // namespace hypospec::harness
