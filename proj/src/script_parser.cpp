#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "reenact/script.hpp"

namespace reenact::script {

ScriptError::ScriptError(ErrorCode code, ErrorCode cause, Loc at, std::optional<Loc> related,
                         const std::string& message, std::string constraint)
    : Error(code,
            related ? fmt::format("{}:{}: {} (see {}:{})", at.line, at.column, message, related->line, related->column)
                    : fmt::format("{}:{}: {}", at.line, at.column, message),
            std::move(constraint)),
      cause_(cause),
      at_(at),
      related_(related),
      detail_(message) {}

std::size_t arity(ChannelSpec spec) {
  switch (spec) {
    case ChannelSpec::position:
    case ChannelSpec::scale:
    case ChannelSpec::joint: return 3;
    case ChannelSpec::rotation: return 4;
    case ChannelSpec::pose: return 3 * kJointCount;
    default: return 1;
  }
}

namespace {

enum class Tok { ident, integer, real, string, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  Loc loc;
};

[[noreturn]] void syntax(Loc at, const std::string& message) {
  throw ScriptError(ErrorCode::SyntaxError, ErrorCode::SyntaxError, at, std::nullopt, message);
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::ident;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += take();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        number(t);
      } else if (c == '"') {
        string(t);
      } else if ((c == '=' || c == '-') && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        t.kind = Tok::symbol;
        t.text += take();
        t.text += take();
      } else if (std::string_view("{}[](),;=.").find(c) != std::string_view::npos) {
        t.kind = Tok::symbol;
        t.text += take();
      } else {
        syntax(t.loc, fmt::format("unexpected character '{}'", c));
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char take() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else {
        return;
      }
    }
  }

  void digits(Token& t) {
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text += take();
  }

  void number(Token& t) {
    t.kind = Tok::integer;
    if (src_[pos_] == '-') t.text += take();
    digits(t);
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      t.kind = Tok::real;
      t.text += take();
      digits(t);
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      t.kind = Tok::real;
      t.text += take();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) t.text += take();
      const std::size_t before = t.text.size();
      digits(t);
      if (t.text.size() == before) syntax({line_, col_}, "expected exponent digits");
    }
  }

  void string(Token& t) {
    t.kind = Tok::string;
    take();
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') syntax(t.loc, "unterminated string");
      const char c = take();
      if (c == '"') return;
      if (c == '\\') {
        if (pos_ >= src_.size()) syntax(t.loc, "unterminated string");
        const Loc at{line_, col_};
        const char e = take();
        switch (e) {
          case '"': t.text += '"'; break;
          case '\\': t.text += '\\'; break;
          case 'n': t.text += '\n'; break;
          case 't': t.text += '\t'; break;
          default: syntax(at, fmt::format("unknown escape '\\{}'", e));
        }
      } else {
        t.text += c;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::end: return "end of input";
    case Tok::string: return fmt::format("string \"{}\"", t.text);
    default: return fmt::format("'{}'", t.text);
  }
}

const std::vector<std::string_view> kEffectTypes = {"RigidTransform", "PoseTrack", "InteractiveState",
                                                    "FloatingArrows", "Fire"};
const std::vector<std::string_view> kClasses = {"character", "prop",          "marker",     "note",
                                                "photo",     "camera_preset", "environment"};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Script script() {
    Script s;
    while (peek().kind != Tok::end) {
      const Token& t = peek();
      if (is_word("project"))
        s.items.emplace_back(project_block());
      else if (is_word("scene"))
        s.items.emplace_back(scene_block());
      else if (is_word("marker"))
        s.items.emplace_back(marker());
      else if (is_word("track"))
        s.items.emplace_back(track());
      else
        syntax(t.loc, fmt::format("expected 'project', 'scene', 'marker' or 'track', found {}", describe(t)));
    }
    return s;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool is_word(std::string_view w) const { return peek().kind == Tok::ident && peek().text == w; }
  bool is_symbol(std::string_view s) const { return peek().kind == Tok::symbol && peek().text == s; }

  Token expect_symbol(std::string_view s) {
    if (!is_symbol(s)) syntax(peek().loc, fmt::format("expected '{}', found {}", s, describe(peek())));
    return next();
  }

  Token expect_word(std::string_view w) {
    if (!is_word(w)) syntax(peek().loc, fmt::format("expected '{}', found {}", w, describe(peek())));
    return next();
  }

  Token ident(std::string_view what) {
    if (peek().kind != Tok::ident) syntax(peek().loc, fmt::format("expected {}, found {}", what, describe(peek())));
    return next();
  }

  std::string string_literal(std::string_view what) {
    if (peek().kind != Tok::string) syntax(peek().loc, fmt::format("expected {}, found {}", what, describe(peek())));
    return next().text;
  }

  std::string name_or_string(std::string_view what) {
    if (peek().kind == Tok::string || peek().kind == Tok::ident) return next().text;
    syntax(peek().loc, fmt::format("expected {}, found {}", what, describe(peek())));
  }

  std::int64_t integer(std::string_view what) {
    if (peek().kind != Tok::integer) syntax(peek().loc, fmt::format("expected {}, found {}", what, describe(peek())));
    const Token t = next();
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{}) syntax(t.loc, fmt::format("integer {} out of range", t.text));
    return v;
  }

  double number() {
    if (peek().kind != Tok::integer && peek().kind != Tok::real)
      syntax(peek().loc, fmt::format("expected a number, found {}", describe(peek())));
    const Token t = next();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || !std::isfinite(v)) syntax(t.loc, fmt::format("number {} out of range", t.text));
    return v;
  }

  std::vector<double> tuple(std::size_t n) {
    expect_symbol("(");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) expect_symbol(",");
      out.push_back(number());
    }
    expect_symbol(")");
    return out;
  }

  Point point() {
    const auto v = tuple(2);
    return {v[0], v[1]};
  }

  ProjectBlock project_block() {
    ProjectBlock b;
    b.loc = expect_word("project").loc;
    expect_symbol("{");
    while (!is_symbol("}")) {
      Property p;
      p.loc = peek().loc;
      p.key = expect_word("frame_rate").text;
      expect_symbol("=");
      p.value = integer("an integer frame rate");
      expect_symbol(";");
      b.settings.push_back(std::move(p));
    }
    expect_symbol("}");
    return b;
  }

  SceneBlock scene_block() {
    SceneBlock b;
    b.loc = expect_word("scene").loc;
    expect_symbol("{");
    while (!is_symbol("}")) {
      if (is_word("object"))
        b.items.emplace_back(object());
      else if (is_word("floorplan"))
        b.items.emplace_back(floorplan());
      else if (is_word("attach"))
        b.items.emplace_back(attach_decl());
      else
        syntax(peek().loc, fmt::format("expected 'object', 'floorplan', 'attach' or '}}', found {}", describe(peek())));
    }
    expect_symbol("}");
    return b;
  }

  ObjectDecl object() {
    ObjectDecl o;
    o.loc = expect_word("object").loc;
    o.id = ident("an object id").text;
    const Token cls = ident("an object class");
    if (std::find(kClasses.begin(), kClasses.end(), cls.text) == kClasses.end())
      syntax(cls.loc, fmt::format("unknown object class '{}'", cls.text));
    o.cls = cls.text;
    if (is_word("triggerable")) {
      next();
      o.triggerable = true;
    }
    expect_symbol("{");
    while (!is_symbol("}")) o.props.push_back(object_prop());
    expect_symbol("}");
    return o;
  }

  Property object_prop() {
    Property p;
    p.loc = peek().loc;
    const Token key = ident("an object property");
    p.key = key.text;
    expect_symbol("=");
    if (p.key == "name" || p.key == "payload") {
      p.value = string_literal("a string");
    } else if (p.key == "position" || p.key == "scale") {
      p.value = Tuple{tuple(3)};
    } else if (p.key == "rotation") {
      p.value = Tuple{tuple(4)};
    } else if (p.key == "heading") {
      p.value = number();
    } else if (p.key == "initial") {
      p.value = name_or_string("a state name");
    } else if (p.key == "states") {
      List l;
      expect_symbol("[");
      if (!is_symbol("]")) {
        l.items.push_back(name_or_string("a state name"));
        while (is_symbol(",")) {
          next();
          l.items.push_back(name_or_string("a state name"));
        }
      }
      expect_symbol("]");
      p.value = std::move(l);
    } else {
      syntax(key.loc, fmt::format("unknown object property '{}' (expected name, position, rotation, heading, scale, "
                                  "states, initial or payload)",
                                  p.key));
    }
    expect_symbol(";");
    return p;
  }

  FloorplanBlock floorplan() {
    FloorplanBlock f;
    f.loc = expect_word("floorplan").loc;
    expect_symbol("{");
    while (!is_symbol("}")) {
      if (is_word("wall")) {
        WallDecl w;
        w.loc = next().loc;
        w.a = point();
        expect_symbol("->");
        w.b = point();
        expect_symbol(";");
        f.items.emplace_back(w);
      } else if (is_word("region")) {
        RegionDecl r;
        r.loc = next().loc;
        r.name = string_literal("a region name");
        expect_symbol("[");
        r.points.push_back(point());
        while (is_symbol(",")) {
          next();
          r.points.push_back(point());
        }
        expect_symbol("]");
        expect_symbol(";");
        f.items.emplace_back(std::move(r));
      } else if (is_word("spawn")) {
        SpawnDecl s;
        s.loc = next().loc;
        s.name = string_literal("a spawn name");
        s.at = point();
        expect_symbol(";");
        f.items.emplace_back(std::move(s));
      } else {
        syntax(peek().loc, fmt::format("expected 'wall', 'region', 'spawn' or '}}', found {}", describe(peek())));
      }
    }
    expect_symbol("}");
    return f;
  }

  AttachDecl attach_decl() {
    AttachDecl a;
    a.loc = expect_word("attach").loc;
    a.child = ident("an object id").text;
    expect_symbol("->");
    a.parent = ident("a parent object id").text;
    expect_symbol(".");
    a.anchor = ident("an anchor name").text;
    expect_symbol(";");
    return a;
  }

  MarkerDecl marker() {
    MarkerDecl m;
    m.loc = expect_word("marker").loc;
    m.name = string_literal("a marker name");
    expect_symbol("[");
    m.start = integer("a start frame");
    expect_symbol(",");
    m.end = integer("an end frame");
    expect_symbol("]");
    expect_symbol(";");
    return m;
  }

  TrackDecl track() {
    TrackDecl t;
    t.loc = expect_word("track").loc;
    t.name = string_literal("a track name");
    if (is_word("muted")) {
      next();
      t.muted = true;
    }
    if (is_word("locked")) {
      next();
      t.locked = true;
    }
    expect_symbol("{");
    while (!is_symbol("}")) t.slots.push_back(slot());
    expect_symbol("}");
    return t;
  }

  SlotDecl slot() {
    SlotDecl s;
    s.loc = expect_word("slot").loc;
    expect_symbol("[");
    s.start = integer("a start frame");
    expect_symbol(",");
    s.end = integer("an end frame");
    expect_symbol("]");
    expect_symbol("{");
    while (!is_symbol("}")) s.effects.push_back(effect());
    expect_symbol("}");
    return s;
  }

  EffectDecl effect() {
    EffectDecl e;
    e.loc = expect_word("effect").loc;
    const Token type = ident("an effect type");
    if (std::find(kEffectTypes.begin(), kEffectTypes.end(), type.text) == kEffectTypes.end())
      syntax(type.loc, fmt::format("unknown effect type '{}'", type.text));
    e.type = type.text;
    expect_word("target");
    expect_symbol("=");
    e.target = ident("a target object id").text;
    expect_symbol("{");
    while (!is_symbol("}")) e.items.push_back(effect_item());
    expect_symbol("}");
    return e;
  }

  ChannelSpec channel(std::string& joint) {
    const Token t = ident("a channel (position, rotation, heading, scale, joint or pose)");
    if (t.text == "position") {
      if (!is_symbol(".")) return ChannelSpec::position;
      next();
      const Token axis = ident("an axis x, y or z");
      if (axis.text == "x") return ChannelSpec::position_x;
      if (axis.text == "y") return ChannelSpec::position_y;
      if (axis.text == "z") return ChannelSpec::position_z;
      syntax(axis.loc, fmt::format("expected an axis x, y or z, found '{}'", axis.text));
    }
    if (t.text == "rotation") return ChannelSpec::rotation;
    if (t.text == "heading") return ChannelSpec::heading;
    if (t.text == "scale") return ChannelSpec::scale;
    if (t.text == "pose") return ChannelSpec::pose;
    if (t.text == "joint") {
      const Token j = ident("a joint name");
      if (!joint_index(j.text)) syntax(j.loc, fmt::format("unknown joint '{}'", j.text));
      joint = j.text;
      return ChannelSpec::joint;
    }
    syntax(t.loc, fmt::format("unknown channel '{}'", t.text));
  }

  EffectItem effect_item() {
    const Loc loc = peek().loc;
    if (is_word("keyframe") || is_word("delta")) {
      KeyframeEntry k;
      k.loc = loc;
      k.delta = next().text == "delta";
      k.frame = integer("a frame");
      k.channel = channel(k.joint);
      expect_symbol("=>");
      if (k.channel == ChannelSpec::pose) {
        expect_symbol("[");
        for (std::size_t i = 0; i < kJointCount; ++i) {
          if (i > 0) expect_symbol(",");
          for (double v : tuple(3)) k.values.push_back(v);
        }
        expect_symbol("]");
      } else if (arity(k.channel) == 1) {
        k.values.push_back(number());
      } else {
        k.values = tuple(arity(k.channel));
      }
      expect_symbol(";");
      return k;
    }
    if (is_word("event")) {
      EventEntry ev;
      ev.loc = next().loc;
      ev.frame = integer("a frame");
      expect_symbol("=>");
      ev.state = name_or_string("a state name");
      expect_symbol(";");
      return ev;
    }
    if (is_word("attach")) {
      AttachEntry a;
      a.loc = next().loc;
      a.frame = integer("a frame");
      expect_symbol("=>");
      a.parent = ident("a parent object id").text;
      expect_symbol(".");
      a.anchor = ident("an anchor name").text;
      expect_symbol(";");
      return a;
    }
    if (is_word("detach")) {
      DetachEntry d;
      d.loc = next().loc;
      d.frame = integer("a frame");
      expect_symbol(";");
      return d;
    }
    Property p;
    p.loc = loc;
    p.key = ident("a parameter, 'keyframe', 'delta', 'event', 'attach', 'detach' or '}'").text;
    expect_symbol("=");
    const Token& v = peek();
    switch (v.kind) {
      case Tok::ident:
        if (v.text == "true" || v.text == "false")
          p.value = next().text == "true";
        else
          p.value = Ident{next().text};
        break;
      case Tok::integer: p.value = integer("an integer"); break;
      case Tok::real: p.value = number(); break;
      case Tok::string: p.value = next().text; break;
      default: syntax(v.loc, fmt::format("expected a parameter value, found {}", describe(v)));
    }
    expect_symbol(";");
    return p;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// -- printer ------------------------------------------------------------------

std::string real(double v) {
  std::string s = fmt::format("{}", v);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

bool bare_word(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::string tuple_text(const std::vector<double>& v) {
  std::string out = "(";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out + ")";
}

std::string point_text(const Point& p) { return fmt::format("({}, {})", num(p[0]), num(p[1])); }

std::string value_text(const Value& v) {
  struct V {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return fmt::format("{}", i); }
    std::string operator()(double d) const { return real(d); }
    std::string operator()(const std::string& s) const { return quoted(s); }
    std::string operator()(const Ident& i) const { return i.name; }
    std::string operator()(const Tuple& t) const { return tuple_text(t.values); }
    std::string operator()(const List& l) const {
      std::string out = "[";
      for (std::size_t i = 0; i < l.items.size(); ++i) out += (i ? ", " : "") + quoted(l.items[i]);
      return out + "]";
    }
  };
  return std::visit(V{}, v);
}

std::string channel_text(const KeyframeEntry& k) {
  switch (k.channel) {
    case ChannelSpec::position: return "position";
    case ChannelSpec::position_x: return "position.x";
    case ChannelSpec::position_y: return "position.y";
    case ChannelSpec::position_z: return "position.z";
    case ChannelSpec::rotation: return "rotation";
    case ChannelSpec::heading: return "heading";
    case ChannelSpec::scale: return "scale";
    case ChannelSpec::joint: return "joint " + k.joint;
    case ChannelSpec::pose: return "pose";
  }
  return "position";
}

class Printer {
 public:
  std::string run(const Script& s) {
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (i > 0) out_ += "\n";
      std::visit([this](const auto& item) { print(item); }, s.items[i]);
    }
    return out_;
  }

 private:
  void line(int depth, const std::string& text) {
    out_.append(static_cast<std::size_t>(depth) * 2, ' ');
    out_ += text;
    out_ += '\n';
  }

  void print(const ProjectBlock& b) {
    line(0, "project {");
    for (const auto& p : b.settings) line(1, fmt::format("{} = {};", p.key, value_text(p.value)));
    line(0, "}");
  }

  void print(const SceneBlock& b) {
    line(0, "scene {");
    for (const auto& item : b.items) {
      if (const auto* o = std::get_if<ObjectDecl>(&item)) {
        line(1, fmt::format("object {} {}{} {{", o->id, o->cls, o->triggerable ? " triggerable" : ""));
        for (const auto& p : o->props) line(2, fmt::format("{} = {};", p.key, value_text(p.value)));
        line(1, "}");
      } else if (const auto* f = std::get_if<FloorplanBlock>(&item)) {
        line(1, "floorplan {");
        for (const auto& fi : f->items) {
          if (const auto* w = std::get_if<WallDecl>(&fi)) {
            line(2, fmt::format("wall {} -> {};", point_text(w->a), point_text(w->b)));
          } else if (const auto* r = std::get_if<RegionDecl>(&fi)) {
            std::string pts;
            for (std::size_t i = 0; i < r->points.size(); ++i) pts += (i ? ", " : "") + point_text(r->points[i]);
            line(2, fmt::format("region {} [{}];", quoted(r->name), pts));
          } else if (const auto* sp = std::get_if<SpawnDecl>(&fi)) {
            line(2, fmt::format("spawn {} {};", quoted(sp->name), point_text(sp->at)));
          }
        }
        line(1, "}");
      } else if (const auto* a = std::get_if<AttachDecl>(&item)) {
        line(1, fmt::format("attach {} -> {}.{};", a->child, a->parent, a->anchor));
      }
    }
    line(0, "}");
  }

  void print(const MarkerDecl& m) { line(0, fmt::format("marker {} [{}, {}];", quoted(m.name), m.start, m.end)); }

  void print(const TrackDecl& t) {
    line(0, fmt::format("track {}{}{} {{", quoted(t.name), t.muted ? " muted" : "", t.locked ? " locked" : ""));
    for (const auto& s : t.slots) {
      line(1, fmt::format("slot [{}, {}] {{", s.start, s.end));
      for (const auto& e : s.effects) {
        line(2, fmt::format("effect {} target = {} {{", e.type, e.target));
        for (const auto& item : e.items) line(3, item_text(item));
        line(2, "}");
      }
      line(1, "}");
    }
    line(0, "}");
  }

  static std::string item_text(const EffectItem& item) {
    if (const auto* p = std::get_if<Property>(&item)) return fmt::format("{} = {};", p->key, value_text(p->value));
    if (const auto* k = std::get_if<KeyframeEntry>(&item)) {
      std::string value;
      if (k->channel == ChannelSpec::pose) {
        value = "[";
        for (std::size_t j = 0; j < kJointCount; ++j) {
          const std::vector<double> v(k->values.begin() + static_cast<std::ptrdiff_t>(3 * j),
                                      k->values.begin() + static_cast<std::ptrdiff_t>(3 * j + 3));
          value += (j ? ", " : "") + tuple_text(v);
        }
        value += "]";
      } else if (k->values.size() == 1) {
        value = num(k->values[0]);
      } else {
        value = tuple_text(k->values);
      }
      return fmt::format("{} {} {} => {};", k->delta ? "delta" : "keyframe", k->frame, channel_text(*k), value);
    }
    if (const auto* ev = std::get_if<EventEntry>(&item)) {
      const bool plain = bare_word(ev->state) && ev->state != "true" && ev->state != "false";
      return fmt::format("event {} => {};", ev->frame, plain ? ev->state : quoted(ev->state));
    }
    if (const auto* a = std::get_if<AttachEntry>(&item))
      return fmt::format("attach {} => {}.{};", a->frame, a->parent, a->anchor);
    const auto& d = std::get<DetachEntry>(item);
    return fmt::format("detach {};", d.frame);
  }

  std::string out_;
};

}  // namespace

Script parse(std::string_view text) { return Parser(Lexer(text).run()).script(); }

std::string print(const Script& script) { return Printer().run(script); }

}  // namespace reenact::script
