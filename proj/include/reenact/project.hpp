#pragma once

#include <string>
#include <vector>

#include "reenact/error.hpp"
#include "reenact/scene.hpp"
#include "reenact/timeline.hpp"

namespace reenact {

/// Named frame range annotating the timeline (e.g. the inside-room action).
struct Marker {
  std::string name;
  Frame start = 0;
  Frame end = 0;
};

struct Project {
  Scene scene;
  Timeline timeline;
  std::vector<Marker> markers;

  const Marker* find_marker(const std::string& name) const;
};

struct Violation {
  ErrorCode code;
  std::string constraint;
  std::string message;
};

/// Every invariant of the scene, timeline and channel data that fails, in a
/// stable order. Empty when the project is valid.
std::vector<Violation> validate(const Project& project);

/// Throws ValidationFailed naming the first violation when any exist.
void require_valid(const Project& project);

std::string format_violation(const Violation& v);

}  // namespace reenact
