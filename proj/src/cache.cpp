#include "njr/cache.hpp"

#include <filesystem>
#include <fstream>

#include "njr/digest.hpp"

namespace njr {

std::string cache_key(const std::string& agent_digest, const std::string& block_text,
                      const std::string& eager_context_canonical,
                      const std::vector<TraceEntry>& entries) {
  std::string material = agent_digest;
  material += '\0';
  material += block_text;
  material += '\0';
  material += eager_context_canonical;
  for (const auto& entry : entries) {
    material += '\x1e';
    material += entry.canonical();
  }
  return sha256_hex(material);
}

TraceCache::TraceCache(std::string path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw StoreIoError("cannot open cache store: " + path_);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      njson j = njson::parse(line);
      index_[j.at("key").get<std::string>()] = j.at("step").dump();
    } catch (const std::exception& e) {
      throw StoreIoError("cache line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::optional<Effect> TraceCache::lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return Effect::from_json(njson::parse(it->second));
}

void TraceCache::put(const std::string& key, const Effect& step) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = index_.emplace(key, step.canonical());
  if (!inserted) return;  // entries are immutable once written
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw StoreIoError("cannot append to cache store: " + path_);
  njson j;
  j["key"] = key;
  j["step"] = step.to_json();
  out << j.dump() << "\n";
}

std::size_t TraceCache::size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

}  // namespace njr
