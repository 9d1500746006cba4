#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "njr/ast.hpp"
#include "njr/errors.hpp"
#include "njr/value.hpp"

namespace njr::testing {

// Independent big-step evaluator used as the oracle for the production
// interpreter on natural-block-free programs. Deliberately a different
// implementation strategy: explicit outcome propagation instead of
// exceptions, map-backed heap, no control-frame machinery shared with the
// library.
struct RefResult {
  std::optional<RunErrorClass> error;
  Value value;
  std::string stdout_text;
  std::map<std::uint64_t, HeapCell> heap;
  std::map<std::string, Value> globals;

  bool ok() const { return !error.has_value(); }
};

RefResult reference_run(const Program& program, std::vector<std::string> stdin_lines);

}  // namespace njr::testing
