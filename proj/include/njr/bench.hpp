#pragma once

#include <optional>
#include <string>
#include <vector>

#include "njr/interp.hpp"

namespace njr {

// One assertion checked against a finished run.
struct AssertSpec {
  enum class Kind { StdoutContains, FinalVarEquals, HeapPathEquals };
  Kind kind;
  std::string text;  // StdoutContains
  std::string var;   // FinalVarEquals / HeapPathEquals
  njson path;        // HeapPathEquals: array of string keys / integer indices
  njson value;       // expected value as plain JSON

  static AssertSpec from_json(const njson& j);
};

bool check_assert(const AssertSpec& a, const RunResult& result);

// Host value rendered as plain JSON (lists as arrays, records as objects),
// used by value assertions.
njson host_value_to_plain_json(const Value& v, const Heap& heap);

struct BenchRun {
  double pass_rate = 0.0;
  double time_s = 0.0;
  int effects = 0;
  std::string error;  // empty on success
};

struct BenchProgramRow {
  std::string name;
  std::vector<BenchRun> runs;
  double pass_rate_mean = 0.0;
  double pass_rate_std = 0.0;
  double time_mean = 0.0;
  double time_min = 0.0;
  double time_max = 0.0;
  double effects_mean = 0.0;
};

struct BenchReport {
  std::string suite;
  int repeats = 0;
  std::string granularity = "per-assertion";
  std::vector<BenchProgramRow> programs;
  double pass_rate_mean = 0.0;
  double pass_rate_std = 0.0;
  double time_mean = 0.0;
  double time_min = 0.0;
  double time_max = 0.0;
  double effects_mean = 0.0;

  njson to_json() const;
  static BenchReport from_json(const njson& j);
  std::string table() const;
};

struct BenchOptions {
  RunConfig config;
  int repeats = 5;
  int parallel = 1;
  bool use_cache = false;
  std::string cache_path = ".njrcache";
};

// Runs every *.njr program in the suite directory against its agent script or
// trace and its assertion file. Per-program failures become 0-pass rows.
BenchReport run_bench(const std::string& suite_dir, const BenchOptions& options);

}  // namespace njr
