#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "njr/value.hpp"

namespace njr {

// Stack of scope frames. Frame 0 is the global frame. A frame opened for a
// function call is a barrier: lookups from above it see only the frame stack
// down to the barrier, plus globals.
class Env {
 public:
  struct Frame {
    std::vector<std::pair<std::string, Value>> slots;
    bool barrier = false;
  };

  Env() { frames_.push_back(Frame{}); }

  void push_frame(bool barrier = false) { frames_.push_back(Frame{{}, barrier}); }

  void pop_frame() { frames_.pop_back(); }

  std::size_t depth() const { return frames_.size(); }

  void truncate(std::size_t depth) {
    while (frames_.size() > depth) frames_.pop_back();
  }

  const Value* lookup(std::string_view name) const {
    for (std::size_t i = frames_.size(); i-- > 0;) {
      for (const auto& [k, v] : frames_[i].slots) {
        if (k == name) return &v;
      }
      if (frames_[i].barrier && i > 0) {
        // Jump straight to globals.
        for (const auto& [k, v] : frames_[0].slots) {
          if (k == name) return &v;
        }
        return nullptr;
      }
    }
    return nullptr;
  }

  // Binds (or rebinds) in the current innermost frame.
  void bind(std::string name, Value v) {
    auto& slots = frames_.back().slots;
    for (auto& [k, existing] : slots) {
      if (k == name) {
        existing = std::move(v);
        return;
      }
    }
    slots.emplace_back(std::move(name), std::move(v));
  }

  // Binds in the frame below the current one (used to merge natural block
  // outputs into the enclosing scope).
  void bind_in_frame(std::size_t frame_index, std::string name, Value v) {
    auto& slots = frames_[frame_index].slots;
    for (auto& [k, existing] : slots) {
      if (k == name) {
        existing = std::move(v);
        return;
      }
    }
    slots.emplace_back(std::move(name), std::move(v));
  }

  const Value* lookup_in_frame(std::size_t frame_index, std::string_view name) const {
    for (const auto& [k, v] : frames_[frame_index].slots) {
      if (k == name) return &v;
    }
    return nullptr;
  }

  const std::vector<Frame>& frames() const { return frames_; }
  const Frame& globals() const { return frames_[0]; }

 private:
  std::vector<Frame> frames_;
};

}  // namespace njr
