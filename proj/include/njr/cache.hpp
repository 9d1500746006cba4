#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "njr/agent.hpp"
#include "njr/effect.hpp"
#include "njr/trace.hpp"

namespace njr {

// Keys an agent step by everything that determined it: the agent's identity,
// the block text, the eager context, and every prior trace entry.
std::string cache_key(const std::string& agent_digest, const std::string& block_text,
                      const std::string& eager_context_canonical,
                      const std::vector<TraceEntry>& entries);

// Append-only file of {"key": digest, "step": effect} lines with an in-memory
// index. Concurrent readers are fine; appends are serialized.
class TraceCache {
 public:
  explicit TraceCache(std::string path);  // throws StoreIoError on unreadable store

  std::optional<Effect> lookup(const std::string& key) const;
  void put(const std::string& key, const Effect& step);

  std::size_t size() const;
  const std::string& path() const { return path_; }

 private:
  mutable std::mutex mu_;
  std::string path_;
  std::unordered_map<std::string, std::string> index_;  // key -> canonical effect
};

}  // namespace njr
