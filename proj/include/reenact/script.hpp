#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "reenact/error.hpp"
#include "reenact/project.hpp"

namespace reenact::script {

/// 1-based source position. Locations never take part in AST equality, so a
/// printed and re-parsed script compares equal to the original.
struct Loc {
  int line = 0;
  int column = 0;
  friend bool operator==(const Loc&, const Loc&) { return true; }
};

/// Parse or semantic failure. `cause()` is SyntaxError for grammar errors and
/// the violated engine error (OverlapRejected, UnknownTarget, ...) otherwise.
class ScriptError : public Error {
 public:
  ScriptError(ErrorCode code, ErrorCode cause, Loc at, std::optional<Loc> related, const std::string& message,
              std::string constraint = {});

  ErrorCode cause() const noexcept { return cause_; }
  Loc location() const noexcept { return at_; }
  std::optional<Loc> related() const noexcept { return related_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode cause_;
  Loc at_;
  std::optional<Loc> related_;
  std::string detail_;
};

struct Ident {
  std::string name;
  bool operator==(const Ident&) const = default;
};

struct Tuple {
  std::vector<double> values;
  bool operator==(const Tuple&) const = default;
};

struct List {
  std::vector<std::string> items;
  bool operator==(const List&) const = default;
};

using Value = std::variant<bool, std::int64_t, double, std::string, Ident, Tuple, List>;

struct Property {
  Loc loc;
  std::string key;
  Value value;
  bool operator==(const Property&) const = default;
};

struct ProjectBlock {
  Loc loc;
  std::vector<Property> settings;
  bool operator==(const ProjectBlock&) const = default;
};

struct ObjectDecl {
  Loc loc;
  std::string id;
  std::string cls;
  bool triggerable = false;
  std::vector<Property> props;
  bool operator==(const ObjectDecl&) const = default;
};

using Point = std::array<double, 2>;

struct WallDecl {
  Loc loc;
  Point a{};
  Point b{};
  bool operator==(const WallDecl&) const = default;
};

struct RegionDecl {
  Loc loc;
  std::string name;
  std::vector<Point> points;
  bool operator==(const RegionDecl&) const = default;
};

struct SpawnDecl {
  Loc loc;
  std::string name;
  Point at{};
  bool operator==(const SpawnDecl&) const = default;
};

struct FloorplanBlock {
  Loc loc;
  std::vector<std::variant<WallDecl, RegionDecl, SpawnDecl>> items;
  bool operator==(const FloorplanBlock&) const = default;
};

struct AttachDecl {
  Loc loc;
  std::string child;
  std::string parent;
  std::string anchor;
  bool operator==(const AttachDecl&) const = default;
};

struct SceneBlock {
  Loc loc;
  std::vector<std::variant<ObjectDecl, FloorplanBlock, AttachDecl>> items;
  bool operator==(const SceneBlock&) const = default;
};

struct MarkerDecl {
  Loc loc;
  std::string name;
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool operator==(const MarkerDecl&) const = default;
};

enum class ChannelSpec { position, position_x, position_y, position_z, rotation, heading, scale, joint, pose };

/// Number of values a keyframe on `spec` carries.
std::size_t arity(ChannelSpec spec);

struct KeyframeEntry {
  Loc loc;
  bool delta = false;
  std::int64_t frame = 0;
  ChannelSpec channel = ChannelSpec::position;
  std::string joint;  // ChannelSpec::joint only
  std::vector<double> values;
  bool operator==(const KeyframeEntry&) const = default;
};

struct EventEntry {
  Loc loc;
  std::int64_t frame = 0;
  std::string state;
  bool operator==(const EventEntry&) const = default;
};

struct AttachEntry {
  Loc loc;
  std::int64_t frame = 0;
  std::string parent;
  std::string anchor;
  bool operator==(const AttachEntry&) const = default;
};

struct DetachEntry {
  Loc loc;
  std::int64_t frame = 0;
  bool operator==(const DetachEntry&) const = default;
};

using EffectItem = std::variant<Property, KeyframeEntry, EventEntry, AttachEntry, DetachEntry>;

struct EffectDecl {
  Loc loc;
  std::string type;
  std::string target;
  std::vector<EffectItem> items;
  bool operator==(const EffectDecl&) const = default;
};

struct SlotDecl {
  Loc loc;
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::vector<EffectDecl> effects;
  bool operator==(const SlotDecl&) const = default;
};

struct TrackDecl {
  Loc loc;
  std::string name;
  bool muted = false;
  bool locked = false;
  std::vector<SlotDecl> slots;
  bool operator==(const TrackDecl&) const = default;
};

using Item = std::variant<ProjectBlock, SceneBlock, MarkerDecl, TrackDecl>;

struct Script {
  std::vector<Item> items;
  bool operator==(const Script&) const = default;
};

/// Throws ScriptError(SyntaxError) with the offending line and column.
Script parse(std::string_view text);

/// Canonical text; parse(print(s)) == s.
std::string print(const Script& script);

/// Semantic analysis. Throws ScriptError(SemanticError) naming the violated
/// rule's error code and, where two declarations conflict, both locations.
Project build(const Script& script);

}  // namespace reenact::script

namespace reenact {

/// parse + build.
Project parse_scenario(std::string_view text);

}  // namespace reenact
