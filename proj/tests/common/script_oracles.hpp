#pragma once

// Golden-script runner and random AST generator shared by the script unit
// tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "reenact/error.hpp"
#include "reenact/playback.hpp"
#include "reenact/script.hpp"

namespace reenact::test {

using namespace reenact::script;

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace golden_detail {

inline std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::pair<int, int> line_col(const std::string& s) {
  const auto colon = s.find(':');
  return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
}

inline std::vector<double> numbers(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  for (std::string part; std::getline(in, part, ',');) out.push_back(std::stod(part));
  return out;
}

inline std::size_t count_effects(const Project& p) {
  std::size_t n = 0;
  for (const auto& t : p.timeline.tracks())
    for (const auto& s : t.slots) n += s.effects.size();
  return n;
}

inline std::size_t count_slots(const Project& p) {
  std::size_t n = 0;
  for (const auto& t : p.timeline.tracks()) n += t.slots.size();
  return n;
}

struct Failures {
  std::vector<std::string> list;
  void expect(bool ok, const std::string& what) {
    if (!ok) list.push_back(what);
  }
};

inline void check_count(const Project& p, const std::string& key, std::size_t expected, Failures& f) {
  std::optional<std::size_t> got;
  if (key == "objects") got = p.scene.objects().size();
  else if (key == "tracks") got = p.timeline.tracks().size();
  else if (key == "slots") got = count_slots(p);
  else if (key == "effects") got = count_effects(p);
  else if (key == "markers") got = p.markers.size();
  else if (key == "walls") got = p.scene.floor_plan().walls.size();
  else if (key == "regions") got = p.scene.floor_plan().regions.size();
  else if (key == "spawns") got = p.scene.floor_plan().spawns.size();
  else if (key == "frame_rate") got = static_cast<std::size_t>(p.timeline.frame_rate());
  if (!got) return f.expect(false, "unknown count " + key);
  f.expect(*got == expected, "count " + key + " is " + std::to_string(*got) + ", expected " + std::to_string(expected));
}

// `at FRAME OBJECT FIELD VALUE`
inline void check_at(const Project& p, const std::vector<std::string>& w, Failures& f) {
  const Frame frame = std::stoll(w[1]);
  const SceneState s = state_at(p, frame);
  const ObjectState& o = s.at(w[2]);
  const std::string& field = w[3];
  const std::string& value = w[4];
  const std::string what = w[2] + " " + field + " at " + w[1];
  if (field == "x" || field == "y" || field == "z") {
    const int axis = field == "x" ? 0 : field == "y" ? 1 : 2;
    f.expect(std::abs(o.world.position[axis] - std::stod(value)) < 1e-9, what);
  } else if (field == "heading") {
    f.expect(std::abs(angle_difference_deg(heading_deg(o.world.rotation), std::stod(value))) < 1e-9, what);
  } else if (field == "state") {
    f.expect(o.state.value_or("-") == value, what);
  } else if (field == "burning") {
    f.expect((o.fire && o.fire->burning) == (value == "1"), what);
  } else if (field == "attached") {
    f.expect((o.attachment ? o.attachment->parent + "." + o.attachment->anchor : std::string("-")) == value, what);
  } else if (field.starts_with("joint:")) {
    if (!o.pose) return f.expect(false, what + ": no pose");
    const Vec3 j = (*o.pose)[*joint_index(field.substr(6))];
    const auto v = numbers(value);
    f.expect((j - Vec3(v[0], v[1], v[2])).norm() < 1e-9, what);
  } else {
    f.expect(false, "unknown field " + field);
  }
}

}  // namespace golden_detail

/// Checks one golden script against its `#!` directives:
///   `#! ok key=count ...` then `#! at FRAME OBJECT FIELD VALUE` lines, or
///   `#! error CODE LINE:COL [cause=CODE] [related=LINE:COL]`.
/// Returns the mismatches; empty when the script behaves as declared.
inline std::vector<std::string> golden_failures(const std::filesystem::path& file) {
  using namespace golden_detail;
  Failures f;
  const std::string text = slurp(file);
  std::vector<std::vector<std::string>> directives;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.starts_with("#!")) directives.push_back(words(line.substr(2)));
  if (directives.empty()) return {"no directives"};
  const auto& head = directives.front();

  if (head[0] == "ok") {
    Project p;
    try {
      p = parse_scenario(text);
    } catch (const Error& e) {
      return {std::string("unexpected error: ") + e.what()};
    }
    for (std::size_t i = 1; i < head.size(); ++i) {
      const auto eq = head[i].find('=');
      check_count(p, head[i].substr(0, eq), std::stoul(head[i].substr(eq + 1)), f);
    }
    for (std::size_t i = 1; i < directives.size(); ++i) {
      if (directives[i][0] != "at") return {"bad directive " + directives[i][0]};
      check_at(p, directives[i], f);
    }
    const Script ast = parse(text);
    f.expect(parse(print(ast)) == ast, "parse(print(ast)) != ast");
    f.expect(print(parse(print(ast))) == print(ast), "print is not stable");
    return f.list;
  }

  if (head[0] != "error") return {"bad directive " + head[0]};
  const auto [line, col] = line_col(head[2]);
  std::string cause;
  std::optional<std::pair<int, int>> related;
  for (std::size_t i = 3; i < head.size(); ++i) {
    if (head[i].starts_with("cause=")) cause = head[i].substr(6);
    if (head[i].starts_with("related=")) related = line_col(head[i].substr(8));
  }
  try {
    parse_scenario(text);
    return {"expected an error"};
  } catch (const ScriptError& e) {
    const std::string msg = e.what();
    f.expect(to_string(e.code()) == head[1], "code " + std::string(to_string(e.code())) + ": " + msg);
    f.expect(e.location().line == line && e.location().column == col, "location: " + msg);
    if (!cause.empty()) f.expect(to_string(e.cause()) == cause, "cause: " + msg);
    if (e.code() == ErrorCode::SyntaxError) f.expect(e.cause() == ErrorCode::SyntaxError, "syntax cause: " + msg);
    f.expect(e.related().has_value() == related.has_value(), "related presence: " + msg);
    if (related && e.related())
      f.expect(e.related()->line == related->first && e.related()->column == related->second, "related: " + msg);
    f.expect(msg.starts_with(head[2] + ":"), "message prefix: " + msg);
  }
  return f.list;
}

inline std::vector<std::filesystem::path> golden_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".crimescn") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Random syntactically valid scripts for the printer/parser inverse.
class AstGen {
 public:
  explicit AstGen(std::uint64_t seed) : rng_(seed) {}

  Script make() {
    Script s;
    const int n = range(0, 6);
    for (int i = 0; i < n; ++i) {
      switch (range(0, 3)) {
        case 0: s.items.emplace_back(project()); break;
        case 1: s.items.emplace_back(scene()); break;
        case 2: s.items.emplace_back(MarkerDecl{{}, text(), integer(), integer()}); break;
        default: s.items.emplace_back(track()); break;
      }
    }
    return s;
  }

 private:
  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return range(0, 1) == 1; }
  std::int64_t integer() { return range(-5000, 5000); }

  double real() {
    switch (range(0, 4)) {
      case 0: return range(-100, 100);
      case 1: return std::uniform_real_distribution<double>(-1e3, 1e3)(rng_);
      case 2: return std::uniform_real_distribution<double>(-1, 1)(rng_) * 1e-7;
      case 3: return std::uniform_real_distribution<double>(0, 1)(rng_) * 1e21;
      default: return std::uniform_real_distribution<double>(-10, 10)(rng_);
    }
  }

  std::string name(const char* prefix) { return prefix + std::to_string(range(0, 99)); }

  std::string text() {
    static const std::string alphabet = "abcXYZ 019_-\"\\\n\t#{};=>().,'";
    std::string s;
    const int n = range(0, 12);
    for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(range(0, static_cast<int>(alphabet.size()) - 1))];
    return s;
  }

  std::vector<double> reals(std::size_t n) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(real());
    return v;
  }

  Point point() { return {real(), real()}; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(range(0, static_cast<int>(v.size()) - 1))];
  }

  ProjectBlock project() {
    ProjectBlock b;
    const int n = range(0, 2);
    for (int i = 0; i < n; ++i) b.settings.push_back({{}, "frame_rate", Value(std::int64_t(range(1, 120)))});
    return b;
  }

  SceneBlock scene() {
    static const std::vector<std::string> classes = {"character", "prop",          "marker",     "note",
                                                     "photo",     "camera_preset", "environment"};
    SceneBlock b;
    const int n = range(0, 5);
    for (int i = 0; i < n; ++i) {
      const int kind = range(0, 2);
      if (kind == 0) {
        ObjectDecl o{{}, name("obj"), pick(classes), coin(), {}};
        const int props = range(0, 4);
        for (int k = 0; k < props; ++k) o.props.push_back(object_prop());
        b.items.emplace_back(o);
      } else if (kind == 1) {
        FloorplanBlock f;
        const int items = range(0, 4);
        for (int k = 0; k < items; ++k) {
          const int which = range(0, 2);
          if (which == 0) {
            f.items.emplace_back(WallDecl{{}, point(), point()});
          } else if (which == 1) {
            RegionDecl r{{}, text(), {}};
            const int pts = range(1, 5);
            for (int q = 0; q < pts; ++q) r.points.push_back(point());
            f.items.emplace_back(r);
          } else {
            f.items.emplace_back(SpawnDecl{{}, text(), point()});
          }
        }
        b.items.emplace_back(f);
      } else {
        b.items.emplace_back(AttachDecl{{}, name("obj"), name("obj"), pick<std::string>({"root", "left_hand"})});
      }
    }
    return b;
  }

  Property object_prop() {
    switch (range(0, 7)) {
      case 0: return {{}, "name", Value(text())};
      case 1: return {{}, "payload", Value(text())};
      case 2: return {{}, "position", Value(Tuple{reals(3)})};
      case 3: return {{}, "scale", Value(Tuple{reals(3)})};
      case 4: return {{}, "rotation", Value(Tuple{reals(4)})};
      case 5: return {{}, "heading", Value(real())};
      case 6: {
        List l;
        const int n = range(0, 3);
        for (int i = 0; i < n; ++i) l.items.push_back(coin() ? name("s") : text());
        return {{}, "states", Value(l)};
      }
      default: return {{}, "initial", Value(coin() ? name("s") : text())};
    }
  }

  TrackDecl track() {
    TrackDecl t{{}, text(), coin(), coin(), {}};
    const int n = range(0, 3);
    for (int i = 0; i < n; ++i) {
      SlotDecl s{{}, integer(), integer(), {}};
      const int e = range(0, 3);
      for (int k = 0; k < e; ++k) s.effects.push_back(effect());
      t.slots.push_back(s);
    }
    return t;
  }

  EffectDecl effect() {
    static const std::vector<std::string> types = {"RigidTransform", "PoseTrack", "InteractiveState", "FloatingArrows",
                                                   "Fire"};
    EffectDecl e{{}, pick(types), name("obj"), {}};
    const int n = range(0, 6);
    for (int i = 0; i < n; ++i) e.items.push_back(item());
    return e;
  }

  EffectItem item() {
    switch (range(0, 4)) {
      case 0: {
        Value v;
        switch (range(0, 4)) {
          case 0: v = coin(); break;
          case 1: v = integer(); break;
          case 2: v = real(); break;
          case 3: v = text(); break;
          default: v = Ident{name("id")}; break;
        }
        return Property{{}, name("param"), v};
      }
      case 1: {
        KeyframeEntry k;
        k.delta = coin();
        k.frame = integer();
        k.channel = static_cast<ChannelSpec>(range(0, 8));
        if (k.channel == ChannelSpec::joint) k.joint = std::string(joint_name(static_cast<std::size_t>(range(0, 15))));
        k.values = reals(arity(k.channel));
        return k;
      }
      case 2: return EventEntry{{}, integer(), coin() ? name("s") : pick<std::string>({"true", "false", text()})};
      case 3: return AttachEntry{{}, integer(), name("obj"), pick<std::string>({"left_hand", "right_hand", "root"})};
      default: return DetachEntry{{}, integer()};
    }
  }

  std::mt19937_64 rng_;
};

}  // namespace reenact::test
