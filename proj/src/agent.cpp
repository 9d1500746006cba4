#include "njr/agent.hpp"

namespace njr {

njson EagerVar::to_json() const {
  njson j;
  j["name"] = name;
  j["type"] = type;
  j["value"] = value.to_json();
  if (!preview.empty()) j["preview"] = preview;
  return j;
}

std::string eager_vars_canonical(const std::vector<EagerVar>& vars) {
  njson arr = njson::array();
  for (const auto& v : vars) arr.push_back(v.to_json());
  return arr.dump();
}

std::string AgentContext::haystack() const {
  std::string out = eager_vars_canonical(eager_vars);
  out += "\n";
  if (history) {
    for (const auto& entry : *history) {
      out += entry.response.canonical();
      out += "\n";
    }
  }
  return out;
}

}  // namespace njr
