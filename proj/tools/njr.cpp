#include <CLI11.hpp>

#include <unistd.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "njr/agents.hpp"
#include "njr/bench.hpp"
#include "njr/interp.hpp"
#include "njr/llm_agent.hpp"
#include "njr/parser.hpp"

namespace {

struct CommonOpts {
  std::string mode = "shared";
  int max_effects = 300;
  double timeout_s = 1000.0;
  bool eager = true;
  bool shared_eval = true;
  bool cache = false;
  std::string cache_path = ".njrcache";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--mode", opts.mode, "handler mode: shared|tools|isolated")
      ->check(CLI::IsMember({"shared", "tools", "isolated"}));
  cmd->add_option("--max-effects", opts.max_effects, "effect budget per natural block");
  cmd->add_option("--timeout", opts.timeout_s, "wall clock timeout in seconds");
  cmd->add_flag("--eager,!--no-eager", opts.eager, "eager variable loading (default on)");
  cmd->add_flag("!--no-shared-eval", opts.shared_eval, "disable the eval effect");
  cmd->add_flag("--cache", opts.cache, "cache agent steps keyed on trace prefixes");
  cmd->add_option("--cache-path", opts.cache_path, "cache store path");
}

njr::RunConfig to_config(const CommonOpts& opts) {
  njr::RunConfig cfg;
  cfg.mode = *njr::handler_mode_from_name(opts.mode);
  cfg.max_effects = opts.max_effects;
  cfg.timeout_s = opts.timeout_s;
  cfg.eager = opts.eager;
  cfg.shared_eval = opts.shared_eval;
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw njr::RuntimeFailure("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// In tool mode the program's unary top-level fns are the registry.
void register_program_tools(njr::ToolRegistry& registry, const njr::Program& program) {
  for (const auto& fn : program.functions) {
    if (fn.params.size() != 1) continue;
    const std::string name = fn.name;
    registry.register_tool(name, "host function " + name,
                           [name](const njr::WireValue& w, njr::Interpreter& in) {
                             njr::Value arg = njr::reify(w, in.heap());
                             try {
                               njr::Value out = in.call_program_function(name, {std::move(arg)});
                               return njr::serialize_value(out, in.heap());
                             } catch (const njr::RuntimeFailure& e) {
                               throw njr::EffectFailure(njr::ErrCode::TypeError, e.what());
                             }
                           });
  }
}

int cmd_run(const std::string& program_path, const CommonOpts& common, const std::string& agent_kind,
            const std::string& script_path, const std::string& trace_in,
            const std::string& trace_out, const std::string& stdin_path,
            const std::string& model) {
  njr::Program program;
  try {
    program = njr::parse_program(read_file(program_path));
  } catch (const njr::ParseError& e) {
    std::cerr << "parse error at " << e.line << ":" << e.col << ": " << e.what() << "\n";
    return njr::exit_code_for(njr::RunErrorClass::Parse);
  } catch (const std::exception& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return njr::exit_code_for(njr::RunErrorClass::Parse);
  }

  std::unique_ptr<njr::Agent> agent;
  try {
    if (agent_kind == "scripted") {
      if (script_path.empty()) throw njr::AgentFailure("--agent scripted needs --script");
      agent = std::make_unique<njr::ScriptedAgent>(njr::ScriptedAgent::from_file(script_path));
    } else if (agent_kind == "replay") {
      if (trace_in.empty()) throw njr::AgentFailure("--agent replay needs --trace");
      agent = std::make_unique<njr::ReplayAgent>(
          njr::ReplayAgent::from_file(trace_in, njr::program_hash(program)));
    } else if (agent_kind == "llm") {
      njr::LlmConfig cfg = njr::LlmConfig::from_env();
      if (!model.empty()) cfg.model = model;
      agent = std::make_unique<njr::LlmAgent>(std::move(cfg));
    } else {
      struct NoAgent : njr::Agent {
        njr::AgentStep next(const njr::AgentContext&) override {
          throw njr::AgentFailure("program has natural blocks but no agent was configured");
        }
        std::string identity_digest() const override { return "none"; }
      };
      agent = std::make_unique<NoAgent>();
    }
  } catch (const std::exception& e) {
    std::cerr << "agent error: " << e.what() << "\n";
    return njr::exit_code_for(njr::RunErrorClass::Agent);
  }

  njr::Io io;
  if (!stdin_path.empty()) {
    std::vector<std::string> lines;
    std::istringstream in(read_file(stdin_path));
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    io = njr::Io::from_lines(std::move(lines));
    io.echo_input = true;
  } else {
    io.read_line = []() -> std::optional<std::string> {
      std::string line;
      if (!std::getline(std::cin, line)) return std::nullopt;
      return line;
    };
    io.echo_input = isatty(0) == 0;
  }
  io.live = &std::cout;

  njr::RunConfig cfg = to_config(common);
  njr::ToolRegistry registry;
  register_program_tools(registry, program);
  std::unique_ptr<njr::TraceCache> cache;
  if (common.cache) cache = std::make_unique<njr::TraceCache>(common.cache_path);

  njr::Interpreter interp(program, *agent, io, cfg, &registry, cache.get());
  njr::RunResult result = interp.run();

  if (!trace_out.empty()) {
    njr::write_trace_file(trace_out, result.sessions);
  }
  if (result.ok()) {
    if (!result.value.is_unit()) {
      std::cout << njr::render_deep(result.value, result.heap) << "\n";
    }
    std::cerr << "effects: " << result.effect_count
              << "  agent invocations: " << result.agent_invocations << "  wall: " << std::fixed
              << result.wall_time_s << " s\n";
    return 0;
  }
  std::cerr << njr::run_error_class_name(result.error->cls) << " error: "
            << result.error->message << "\n";
  return njr::exit_code_for(result.error->cls);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"njr: host language with embedded natural code blocks"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a program");
  std::string program_path;
  run->add_option("program", program_path, "program file (.njr)")->required();
  CommonOpts run_common;
  add_common(run, run_common);
  std::string agent_kind = "none";
  run->add_option("--agent", agent_kind, "agent: scripted|replay|llm")
      ->check(CLI::IsMember({"scripted", "replay", "llm", "none"}));
  std::string script_path, trace_in, trace_out, stdin_path, model;
  run->add_option("--script", script_path, "scripted agent rules (.agent.json)");
  run->add_option("--trace", trace_in, "trace to replay (.trace.jsonl)");
  run->add_option("--trace-out", trace_out, "write the run's trace here");
  run->add_option("--stdin", stdin_path, "read program input lines from this file");
  run->add_option("--model", model, "llm model name");

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark suite");
  std::string suite_dir;
  bench->add_option("suite", suite_dir, "suite directory")->required();
  CommonOpts bench_common;
  add_common(bench, bench_common);
  int repeats = 5;
  int parallel = 1;
  std::string report_out;
  bench->add_option("--repeats", repeats, "runs per program (default 5)");
  bench->add_option("--parallel", parallel, "concurrent interpreter instances");
  bench->add_option("--report-out", report_out, "write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(program_path, run_common, agent_kind, script_path, trace_in, trace_out,
                     stdin_path, model);
    }
    if (bench->parsed()) {
      njr::BenchOptions options;
      options.config = to_config(bench_common);
      options.repeats = repeats;
      options.parallel = parallel;
      options.use_cache = bench_common.cache;
      options.cache_path = bench_common.cache_path;
      njr::BenchReport report = njr::run_bench(suite_dir, options);
      std::cout << report.table();
      if (!report_out.empty()) {
        std::ofstream out(report_out, std::ios::binary);
        out << report.to_json().dump(2) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
