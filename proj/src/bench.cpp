#include "njr/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "njr/agents.hpp"
#include "njr/parser.hpp"

namespace fs = std::filesystem;

namespace njr {

AssertSpec AssertSpec::from_json(const njson& j) {
  AssertSpec a;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "stdout-contains") {
    a.kind = Kind::StdoutContains;
    a.text = j.at("text").get<std::string>();
  } else if (kind == "final-var-equals") {
    a.kind = Kind::FinalVarEquals;
    a.var = j.at("var").get<std::string>();
    a.value = j.at("value");
  } else if (kind == "heap-path-equals") {
    a.kind = Kind::HeapPathEquals;
    a.var = j.at("var").get<std::string>();
    a.path = j.at("path");
    a.value = j.at("value");
  } else {
    throw RuntimeFailure("unknown assert kind: " + kind);
  }
  return a;
}

namespace {

njson value_to_plain(const Value& v, const Heap& heap, std::unordered_set<std::uint64_t>& seen) {
  if (v.is_unit()) return nullptr;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int();
  if (v.is_float()) return v.as_float();
  if (v.is_str()) return v.as_str();
  if (v.is_label()) return njson{{"$label", v.as_label().name}};
  const Address a = v.as_addr();
  if (seen.contains(a.id)) return "<cycle>";
  const HeapCell* cell = heap.get(a);
  if (!cell) return njson{{"$ref", a.id}};
  seen.insert(a.id);
  njson out;
  if (const auto* val = std::get_if<Value>(cell)) {
    // alias chains read through to the target, plain cells keep a marker
    if (val->is_addr()) {
      out = value_to_plain(*val, heap, seen);
    } else {
      out = njson{{"ref", value_to_plain(*val, heap, seen)}};
    }
  } else if (const auto* list = std::get_if<ListVal>(cell)) {
    out = njson::array();
    for (const auto& item : *list) out.push_back(value_to_plain(item, heap, seen));
  } else {
    out = njson::object();
    for (const auto& [k, field] : std::get<RecordVal>(*cell).fields) {
      out[k] = value_to_plain(field, heap, seen);
    }
  }
  seen.erase(a.id);
  return out;
}

const Value* find_global(const RunResult& result, const std::string& name) {
  for (const auto& [k, v] : result.globals.slots) {
    if (k == name) return &v;
  }
  return nullptr;
}

}  // namespace

njson host_value_to_plain_json(const Value& v, const Heap& heap) {
  std::unordered_set<std::uint64_t> seen;
  return value_to_plain(v, heap, seen);
}

bool check_assert(const AssertSpec& a, const RunResult& result) {
  switch (a.kind) {
    case AssertSpec::Kind::StdoutContains:
      return result.stdout_text.find(a.text) != std::string::npos;
    case AssertSpec::Kind::FinalVarEquals: {
      const Value* v = find_global(result, a.var);
      if (!v) return false;
      return host_value_to_plain_json(*v, result.heap) == a.value;
    }
    case AssertSpec::Kind::HeapPathEquals: {
      const Value* v = find_global(result, a.var);
      if (!v) return false;
      Value cur = *v;
      for (const auto& step : a.path) {
        if (!cur.is_addr()) return false;
        const HeapCell* cell = result.heap.get(cur.as_addr());
        if (!cell) return false;
        // Step through plain reference cells transparently.
        while (const auto* inner = std::get_if<Value>(cell)) {
          if (!inner->is_addr()) return false;
          cell = result.heap.get(inner->as_addr());
          if (!cell) return false;
        }
        if (step.is_string()) {
          const auto* rec = std::get_if<RecordVal>(cell);
          if (!rec) return false;
          const Value* field = rec->find(step.get<std::string>());
          if (!field) return false;
          cur = *field;
        } else if (step.is_number_integer()) {
          const auto* list = std::get_if<ListVal>(cell);
          if (!list) return false;
          auto i = step.get<std::int64_t>();
          if (i < 0 || i >= static_cast<std::int64_t>(list->size())) return false;
          cur = (*list)[static_cast<std::size_t>(i)];
        } else {
          return false;
        }
      }
      return host_value_to_plain_json(cur, result.heap) == a.value;
    }
  }
  return false;
}

namespace {

struct SuiteProgram {
  std::string name;
  fs::path program_path;
  fs::path asserts_path;
  fs::path script_path;  // empty when absent
  fs::path trace_path;   // empty when absent
  fs::path stdin_path;   // empty when absent
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

BenchRun run_one(const SuiteProgram& sp, const BenchOptions& options, TraceCache* cache) {
  BenchRun run;
  try {
    std::ifstream asserts_in(sp.asserts_path);
    if (!asserts_in) throw RuntimeFailure("missing asserts file: " + sp.asserts_path.string());
    njson asserts_json;
    asserts_in >> asserts_json;
    std::vector<AssertSpec> asserts;
    for (const auto& a : asserts_json) asserts.push_back(AssertSpec::from_json(a));
    if (asserts.empty()) throw RuntimeFailure("empty asserts file: " + sp.asserts_path.string());

    std::ifstream src_in(sp.program_path);
    std::ostringstream src;
    src << src_in.rdbuf();
    Program program = parse_program(src.str());

    std::unique_ptr<Agent> agent;
    if (!sp.script_path.empty()) {
      agent = std::make_unique<ScriptedAgent>(ScriptedAgent::from_file(sp.script_path.string()));
    } else if (!sp.trace_path.empty()) {
      agent = std::make_unique<ReplayAgent>(
          ReplayAgent::from_file(sp.trace_path.string(), program_hash(program)));
    } else {
      // Programs without natural blocks need no agent steps.
      struct NoAgent : Agent {
        AgentStep next(const AgentContext&) override {
          throw AgentFailure("no agent configured for this program");
        }
        std::string identity_digest() const override { return "none"; }
      };
      agent = std::make_unique<NoAgent>();
    }

    Io io;
    if (!sp.stdin_path.empty()) {
      io = Io::from_lines(read_lines(sp.stdin_path));
    }
    Interpreter interp(program, *agent, io, options.config, nullptr, cache);
    RunResult result = interp.run();
    run.time_s = result.wall_time_s;
    run.effects = result.effect_count;
    if (!result.ok()) {
      run.error = fmt::format("{}: {}", run_error_class_name(result.error->cls),
                              result.error->message);
      run.pass_rate = 0.0;
      return run;
    }
    int passed = 0;
    for (const auto& a : asserts) {
      if (check_assert(a, result)) ++passed;
    }
    run.pass_rate = static_cast<double>(passed) / static_cast<double>(asserts.size());
  } catch (const std::exception& e) {
    run.error = e.what();
    run.pass_rate = 0.0;
  }
  return run;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

void summarize(BenchProgramRow& row) {
  std::vector<double> rates, times, effects;
  for (const auto& r : row.runs) {
    rates.push_back(r.pass_rate);
    times.push_back(r.time_s);
    effects.push_back(static_cast<double>(r.effects));
  }
  row.pass_rate_mean = mean_of(rates);
  row.pass_rate_std = std_of(rates);
  row.time_mean = mean_of(times);
  row.time_min = times.empty() ? 0.0 : *std::min_element(times.begin(), times.end());
  row.time_max = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  row.effects_mean = mean_of(effects);
}

}  // namespace

BenchReport run_bench(const std::string& suite_dir, const BenchOptions& options) {
  std::vector<SuiteProgram> programs;
  for (const auto& entry : fs::directory_iterator(suite_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".njr") continue;
    SuiteProgram sp;
    sp.program_path = entry.path();
    sp.name = entry.path().stem().string();
    fs::path base = entry.path().parent_path() / sp.name;
    sp.asserts_path = base.string() + ".asserts.json";
    if (fs::exists(base.string() + ".agent.json")) sp.script_path = base.string() + ".agent.json";
    if (fs::exists(base.string() + ".trace.jsonl")) sp.trace_path = base.string() + ".trace.jsonl";
    if (fs::exists(base.string() + ".stdin.txt")) sp.stdin_path = base.string() + ".stdin.txt";
    programs.push_back(std::move(sp));
  }
  std::sort(programs.begin(), programs.end(),
            [](const SuiteProgram& a, const SuiteProgram& b) { return a.name < b.name; });

  std::unique_ptr<TraceCache> cache;
  if (options.use_cache) cache = std::make_unique<TraceCache>(options.cache_path);

  BenchReport report;
  report.suite = suite_dir;
  report.repeats = options.repeats;
  report.programs.resize(programs.size());

  const int workers = std::max(1, std::min<int>(options.parallel,
                                                static_cast<int>(programs.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= programs.size()) return;
      BenchProgramRow row;
      row.name = programs[i].name;
      for (int r = 0; r < options.repeats; ++r) {
        row.runs.push_back(run_one(programs[i], options, cache.get()));
      }
      summarize(row);
      report.programs[i] = std::move(row);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Aggregate over runs: run r's suite pass rate is the mean across programs.
  std::vector<double> run_rates, times, effects;
  for (int r = 0; r < options.repeats; ++r) {
    std::vector<double> rates;
    for (const auto& row : report.programs) {
      if (r < static_cast<int>(row.runs.size())) rates.push_back(row.runs[r].pass_rate);
    }
    if (!rates.empty()) run_rates.push_back(mean_of(rates));
  }
  for (const auto& row : report.programs) {
    for (const auto& r : row.runs) {
      times.push_back(r.time_s);
      effects.push_back(static_cast<double>(r.effects));
    }
  }
  report.pass_rate_mean = mean_of(run_rates);
  report.pass_rate_std = std_of(run_rates);
  report.time_mean = mean_of(times);
  report.time_min = times.empty() ? 0.0 : *std::min_element(times.begin(), times.end());
  report.time_max = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  report.effects_mean = mean_of(effects);
  return report;
}

njson BenchReport::to_json() const {
  njson j;
  njson header;
  header["suite"] = suite;
  header["repeats"] = repeats;
  header["granularity"] = granularity;
  j["header"] = header;
  njson rows = njson::array();
  for (const auto& row : programs) {
    njson r;
    r["name"] = row.name;
    njson runs = njson::array();
    for (const auto& run : row.runs) {
      njson rr;
      rr["pass_rate"] = run.pass_rate;
      rr["time_s"] = run.time_s;
      rr["effects"] = run.effects;
      if (!run.error.empty()) rr["error"] = run.error;
      runs.push_back(std::move(rr));
    }
    r["runs"] = std::move(runs);
    r["pass_rate_mean"] = row.pass_rate_mean;
    r["pass_rate_std"] = row.pass_rate_std;
    r["time_mean"] = row.time_mean;
    r["time_min"] = row.time_min;
    r["time_max"] = row.time_max;
    r["effects_mean"] = row.effects_mean;
    rows.push_back(std::move(r));
  }
  j["programs"] = std::move(rows);
  njson agg;
  agg["pass_rate_mean"] = pass_rate_mean;
  agg["pass_rate_std"] = pass_rate_std;
  agg["time_mean"] = time_mean;
  agg["time_min"] = time_min;
  agg["time_max"] = time_max;
  agg["effects_mean"] = effects_mean;
  j["aggregate"] = std::move(agg);
  return j;
}

BenchReport BenchReport::from_json(const njson& j) {
  BenchReport report;
  report.suite = j.at("header").at("suite").get<std::string>();
  report.repeats = j.at("header").at("repeats").get<int>();
  report.granularity = j.at("header").at("granularity").get<std::string>();
  for (const auto& r : j.at("programs")) {
    BenchProgramRow row;
    row.name = r.at("name").get<std::string>();
    for (const auto& rr : r.at("runs")) {
      BenchRun run;
      run.pass_rate = rr.at("pass_rate").get<double>();
      run.time_s = rr.at("time_s").get<double>();
      run.effects = rr.at("effects").get<int>();
      if (rr.contains("error")) run.error = rr.at("error").get<std::string>();
      row.runs.push_back(std::move(run));
    }
    row.pass_rate_mean = r.at("pass_rate_mean").get<double>();
    row.pass_rate_std = r.at("pass_rate_std").get<double>();
    row.time_mean = r.at("time_mean").get<double>();
    row.time_min = r.at("time_min").get<double>();
    row.time_max = r.at("time_max").get<double>();
    row.effects_mean = r.at("effects_mean").get<double>();
    report.programs.push_back(std::move(row));
  }
  const auto& agg = j.at("aggregate");
  report.pass_rate_mean = agg.at("pass_rate_mean").get<double>();
  report.pass_rate_std = agg.at("pass_rate_std").get<double>();
  report.time_mean = agg.at("time_mean").get<double>();
  report.time_min = agg.at("time_min").get<double>();
  report.time_max = agg.at("time_max").get<double>();
  report.effects_mean = agg.at("effects_mean").get<double>();
  return report;
}

std::string BenchReport::table() const {
  std::string out;
  out += fmt::format("# suite: {}  repeats: {}  pass-rate granularity: {}\n", suite, repeats,
                     granularity);
  out += fmt::format("{:<24} {:>10} {:>8} {:>10} {:>10} {:>10} {:>9}\n", "program", "pass",
                     "std", "time(s)", "min", "max", "effects");
  for (const auto& row : programs) {
    out += fmt::format("{:<24} {:>10.3f} {:>8.3f} {:>10.3f} {:>10.3f} {:>10.3f} {:>9.1f}\n",
                       row.name, row.pass_rate_mean, row.pass_rate_std, row.time_mean,
                       row.time_min, row.time_max, row.effects_mean);
  }
  out += fmt::format("{:<24} {:>10.3f} {:>8.3f} {:>10.3f} {:>10.3f} {:>10.3f} {:>9.1f}\n",
                     "aggregate", pass_rate_mean, pass_rate_std, time_mean, time_min, time_max,
                     effects_mean);
  return out;
}

}  // namespace njr
