#include "njr/trace.hpp"

#include <fstream>
#include <sstream>

namespace njr {

njson SessionTrace::header_json() const {
  njson j;
  j["program"] = program_hash;
  j["block"] = block_id;
  j["mode"] = mode;
  j["config"] = config_digest;
  j["context"] = context_digest;
  return j;
}

SessionTrace SessionTrace::header_from_json(const njson& j) {
  SessionTrace t;
  t.program_hash = j.at("program").get<std::string>();
  t.block_id = j.at("block").get<std::string>();
  t.mode = j.at("mode").get<std::string>();
  t.config_digest = j.at("config").get<std::string>();
  t.context_digest = j.at("context").get<std::string>();
  return t;
}

std::string trace_to_text(const std::vector<SessionTrace>& sessions) {
  std::string out;
  for (const auto& s : sessions) {
    out += s.header_json().dump();
    out += "\n";
    for (const auto& entry : s.entries) {
      out += entry.canonical();
      out += "\n";
    }
  }
  return out;
}

std::vector<SessionTrace> trace_from_text(const std::string& text) {
  std::vector<SessionTrace> sessions;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    njson j;
    try {
      j = njson::parse(line);
    } catch (const std::exception& e) {
      throw StoreIoError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (j.is_object() && j.contains("program")) {
        sessions.push_back(SessionTrace::header_from_json(j));
      } else if (j.is_object() && j.contains("effect")) {
        if (sessions.empty()) {
          throw StoreIoError("trace line " + std::to_string(lineno) + ": entry before header");
        }
        sessions.back().entries.push_back(TraceEntry::from_json(j));
      } else {
        throw StoreIoError("trace line " + std::to_string(lineno) + ": unrecognized object");
      }
    } catch (const StoreIoError&) {
      throw;
    } catch (const std::exception& e) {
      throw StoreIoError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return sessions;
}

void write_trace_file(const std::string& path, const std::vector<SessionTrace>& sessions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreIoError("cannot open trace file for writing: " + path);
  out << trace_to_text(sessions);
}

std::vector<SessionTrace> read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreIoError("cannot open trace file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return trace_from_text(buf.str());
}

}  // namespace njr
