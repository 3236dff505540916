#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>

namespace reenact {

/// Opaque string identifier, distinct per domain tag.
template <class Tag>
struct Id {
  std::string value;

  Id() = default;
  explicit Id(std::string v) : value(std::move(v)) {}

  bool empty() const { return value.empty(); }
  auto operator<=>(const Id&) const = default;

  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value; }
};

using TrackId = Id<struct TrackTag>;
using SlotId = Id<struct SlotTag>;
using EffectId = Id<struct EffectTag>;

}  // namespace reenact

template <class Tag>
struct std::hash<reenact::Id<Tag>> {
  std::size_t operator()(const reenact::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
