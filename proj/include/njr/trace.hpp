#pragma once

#include <string>
#include <vector>

#include "njr/effect.hpp"

namespace njr {

struct StoreIoError : std::runtime_error {
  explicit StoreIoError(std::string message) : std::runtime_error(std::move(message)) {}
};

// Trace of one natural block session: a header identifying the program,
// block, mode and config, plus the ordered (effect, response) entries. The
// context digest covers the eager context so replay can detect input
// divergence even when the trace contains no Lookup.
struct SessionTrace {
  std::string program_hash;
  std::string block_id;
  std::string mode;
  std::string config_digest;
  std::string context_digest;
  std::vector<TraceEntry> entries;

  njson header_json() const;
  static SessionTrace header_from_json(const njson& j);
};

// Trace files are JSON Lines: each session is one header line followed by its
// entry lines. Line 1 of the file is the first session's header.
void write_trace_file(const std::string& path, const std::vector<SessionTrace>& sessions);
std::vector<SessionTrace> read_trace_file(const std::string& path);  // throws StoreIoError

std::string trace_to_text(const std::vector<SessionTrace>& sessions);
std::vector<SessionTrace> trace_from_text(const std::string& text);

}  // namespace njr
