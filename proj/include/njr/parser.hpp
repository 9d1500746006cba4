#pragma once

#include <string_view>

#include "njr/ast.hpp"
#include "njr/errors.hpp"

namespace njr {

// Parses a whole program: top-level fn definitions and statements. Performs
// the static checks (goto targets, call names and arities, duplicate fns) and
// extracts natural block markers. Throws ParseError.
Program parse_program(std::string_view source);

// Parses a single expression (shared-eval surface): statement binds and
// natural blocks are rejected. Throws ParseError.
ExprPtr parse_expression(std::string_view source);

struct MarkerExtraction {
  std::string text;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

// Replaces <x> / <:x> markers with plain names and collects X_i / X_o in
// first-appearance order.
MarkerExtraction extract_markers(std::string_view raw);

}  // namespace njr
