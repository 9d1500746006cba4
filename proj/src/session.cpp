#include "njr/session.hpp"

#include <algorithm>

namespace njr {

const char* handler_mode_name(HandlerMode mode) {
  switch (mode) {
    case HandlerMode::SharedState: return "shared";
    case HandlerMode::ToolUse: return "tools";
    case HandlerMode::Isolated: return "isolated";
  }
  return "shared";
}

std::optional<HandlerMode> handler_mode_from_name(std::string_view name) {
  if (name == "shared") return HandlerMode::SharedState;
  if (name == "tools") return HandlerMode::ToolUse;
  if (name == "isolated") return HandlerMode::Isolated;
  return std::nullopt;
}

bool ToolRegistry::register_tool(std::string name, std::string description, Fn fn) {
  if (find(name) != nullptr) return false;
  tools_.push_back(Tool{std::move(name), std::move(description), std::move(fn)});
  return true;
}

const ToolRegistry::Tool* ToolRegistry::find(std::string_view name) const {
  for (const auto& t : tools_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<std::pair<std::string, std::string>> ToolRegistry::listing() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(tools_.size());
  for (const auto& t : tools_) out.emplace_back(t.name, t.description);
  return out;
}

}  // namespace njr
