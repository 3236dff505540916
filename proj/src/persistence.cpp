#include "reenact/persistence.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "reenact/error.hpp"

namespace reenact {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& pointer, std::string_view what) {
  throw Error(ErrorCode::MalformedFile, fmt::format("{}: {}", pointer.empty() ? "/" : pointer, what));
}

const json& field(const json& obj, const char* key, const std::string& ptr) {
  if (!obj.is_object()) malformed(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) malformed(ptr, fmt::format("missing key '{}'", key));
  return *it;
}

void only_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& ptr) {
  if (!obj.is_object()) malformed(ptr, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) malformed(ptr, fmt::format("unknown key '{}'", k));
}

double number(const json& j, const std::string& ptr) {
  if (!j.is_number()) malformed(ptr, "expected a number");
  return j.get<double>();
}

std::int64_t integer(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) malformed(ptr, "expected an integer");
  return j.get<std::int64_t>();
}

std::string text(const json& j, const std::string& ptr) {
  if (!j.is_string()) malformed(ptr, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) malformed(ptr, "expected a boolean");
  return j.get<bool>();
}

const json& array(const json& j, const std::string& ptr, std::optional<std::size_t> size = {}) {
  if (!j.is_array()) malformed(ptr, "expected an array");
  if (size && j.size() != *size) malformed(ptr, fmt::format("expected {} elements", *size));
  return j;
}

std::string at(const std::string& ptr, std::string_view key) { return fmt::format("{}/{}", ptr, key); }
std::string at(const std::string& ptr, std::size_t index) { return fmt::format("{}/{}", ptr, index); }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec3 vec3_from(const json& j, const std::string& ptr) {
  array(j, ptr, 3);
  return {number(j[0], at(ptr, 0)), number(j[1], at(ptr, 1)), number(j[2], at(ptr, 2))};
}

Vec2 vec2_from(const json& j, const std::string& ptr) {
  array(j, ptr, 2);
  return {number(j[0], at(ptr, 0)), number(j[1], at(ptr, 1))};
}

Transform transform_at(const json& j, const std::string& ptr) {
  only_keys(j, {"position", "rotation", "scale"}, ptr);
  Transform t;
  t.position = vec3_from(field(j, "position", ptr), at(ptr, "position"));
  const json& r = array(field(j, "rotation", ptr), at(ptr, "rotation"), 4);
  const std::string rp = at(ptr, "rotation");
  t.rotation = Quat(number(r[0], at(rp, 0)), number(r[1], at(rp, 1)), number(r[2], at(rp, 2)), number(r[3], at(rp, 3)));
  t.scale = vec3_from(field(j, "scale", ptr), at(ptr, "scale"));
  return t;
}

json pose_json(const PoseFrame& pose) {
  json out = json::array();
  for (const auto& joint : pose) out.push_back(vec_json(joint));
  return out;
}

PoseFrame pose_from(const json& j, const std::string& ptr) {
  array(j, ptr, kJointCount);
  PoseFrame pose;
  for (std::size_t i = 0; i < kJointCount; ++i) pose[i] = vec3_from(j[i], at(ptr, i));
  return pose;
}

json attachment_json(const AttachmentRef& a) {
  return {{"parent", a.parent}, {"anchor", a.anchor}, {"offset", transform_to_json(a.offset)}};
}

AttachmentRef attachment_from(const json& j, const std::string& ptr) {
  only_keys(j, {"parent", "anchor", "offset"}, ptr);
  return {text(field(j, "parent", ptr), at(ptr, "parent")), text(field(j, "anchor", ptr), at(ptr, "anchor")),
          transform_at(field(j, "offset", ptr), at(ptr, "offset"))};
}

json param_json(const ParamValue& v) {
  return std::visit([](const auto& x) -> json { return x; }, v);
}

ParamValue param_from(const json& j, const std::string& ptr) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  malformed(ptr, "parameter must be a boolean, number or string");
}

// -- binary channel layout ---------------------------------------------------

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    if (s.size() > 0xffff) throw Error(ErrorCode::InvalidArgument, "string too long for channel data");
    u16(static_cast<std::uint16_t>(s.size()));
    bytes_ += s;
  }
  std::string take() { return std::move(bytes_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string bytes_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string ptr) : bytes_(bytes), ptr_(std::move(ptr)) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::size_t n = u16();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) malformed(ptr_, fmt::format("channel data truncated at byte {}", pos_));
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view bytes_;
  std::string ptr_;
  std::size_t pos_ = 0;
};

std::string base64_encode(std::string_view raw) {
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::optional<std::string> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) return std::nullopt;
  if (text.empty()) return std::string{};
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) return std::nullopt;
  std::size_t pad = 0;
  if (text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

// -- manifest ------------------------------------------------------------------

json object_json(const SceneObject& o) {
  json j = {{"id", o.id},
            {"name", o.name},
            {"class", std::string(to_string(o.cls))},
            {"triggerable", o.triggerable},
            {"states", o.states},
            {"initial_state", o.initial_state},
            {"transform", transform_to_json(o.initial)},
            {"payload", o.payload}};
  if (o.initial_pose) j["pose"] = pose_json(*o.initial_pose);
  if (o.attachment) j["attachment"] = attachment_json(*o.attachment);
  return j;
}

json effect_json(const EffectInstance& e) {
  json params = json::object();
  for (const auto& [k, v] : e.params) params[k] = param_json(v);
  json captured = {{"transform", transform_to_json(e.captured_initial.transform)}};
  if (e.captured_initial.state) captured["state"] = *e.captured_initial.state;
  if (e.captured_initial.pose) captured["pose"] = pose_json(*e.captured_initial.pose);
  json channels = json::object();
  for (const auto& [key, channel] : e.channels)
    channels[to_string(key)] = {{"encoding", std::string(to_string(channel.encoding))},
                                {"data", encode_channel(channel, value_kind(key.attribute))}};
  return {{"id", e.id.value},        {"type", std::string(to_string(e.type))}, {"target", e.target},
          {"params", params},        {"captured_initial", captured},          {"channels", channels}};
}

SceneObject object_from(const json& j, const std::string& ptr) {
  only_keys(j, {"id", "name", "class", "triggerable", "states", "initial_state", "transform", "payload", "pose",
                "attachment"},
            ptr);
  SceneObject o;
  o.id = text(field(j, "id", ptr), at(ptr, "id"));
  o.name = text(field(j, "name", ptr), at(ptr, "name"));
  const std::string cls = text(field(j, "class", ptr), at(ptr, "class"));
  auto parsed = parse_object_class(cls);
  if (!parsed) malformed(at(ptr, "class"), fmt::format("unknown object class '{}'", cls));
  o.cls = *parsed;
  o.triggerable = boolean(field(j, "triggerable", ptr), at(ptr, "triggerable"));
  const json& states = array(field(j, "states", ptr), at(ptr, "states"));
  for (std::size_t i = 0; i < states.size(); ++i) o.states.push_back(text(states[i], at(at(ptr, "states"), i)));
  o.initial_state = text(field(j, "initial_state", ptr), at(ptr, "initial_state"));
  o.initial = transform_at(field(j, "transform", ptr), at(ptr, "transform"));
  o.payload = text(field(j, "payload", ptr), at(ptr, "payload"));
  if (j.contains("pose")) o.initial_pose = pose_from(j["pose"], at(ptr, "pose"));
  if (j.contains("attachment")) o.attachment = attachment_from(j["attachment"], at(ptr, "attachment"));
  return o;
}

EffectInstance effect_from(const json& j, const std::string& ptr) {
  only_keys(j, {"id", "type", "target", "params", "captured_initial", "channels"}, ptr);
  EffectInstance e;
  e.id = EffectId(text(field(j, "id", ptr), at(ptr, "id")));
  const std::string type = text(field(j, "type", ptr), at(ptr, "type"));
  auto parsed = parse_effect_type(type);
  if (!parsed) malformed(at(ptr, "type"), fmt::format("unknown effect type '{}'", type));
  e.type = *parsed;
  e.target = text(field(j, "target", ptr), at(ptr, "target"));
  const json& params = field(j, "params", ptr);
  if (!params.is_object()) malformed(at(ptr, "params"), "expected an object");
  for (const auto& [k, v] : params.items()) e.params[k] = param_from(v, at(at(ptr, "params"), k));
  const std::string cp = at(ptr, "captured_initial");
  const json& captured = field(j, "captured_initial", ptr);
  only_keys(captured, {"transform", "state", "pose"}, cp);
  e.captured_initial.transform = transform_at(field(captured, "transform", cp), at(cp, "transform"));
  if (captured.contains("state")) e.captured_initial.state = text(captured["state"], at(cp, "state"));
  if (captured.contains("pose")) e.captured_initial.pose = pose_from(captured["pose"], at(cp, "pose"));
  const json& channels = field(j, "channels", ptr);
  if (!channels.is_object()) malformed(at(ptr, "channels"), "expected an object");
  for (const auto& [name, c] : channels.items()) {
    const std::string chp = at(at(ptr, "channels"), name);
    auto key = parse_channel_key(name);
    if (!key) malformed(chp, fmt::format("unknown channel '{}'", name));
    only_keys(c, {"encoding", "data"}, chp);
    const std::string enc = text(field(c, "encoding", chp), at(chp, "encoding"));
    auto encoding = parse_encoding(enc);
    if (!encoding) malformed(at(chp, "encoding"), fmt::format("unknown encoding '{}'", enc));
    e.channels[*key] =
        decode_channel(text(field(c, "data", chp), at(chp, "data")), value_kind(key->attribute), *encoding);
  }
  return e;
}

}  // namespace

json transform_to_json(const Transform& t) {
  return {{"position", vec_json(t.position)},
          {"rotation", json::array({t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()})},
          {"scale", vec_json(t.scale)}};
}

Transform transform_from_json(const json& j) { return transform_at(j, ""); }

json object_to_json(const SceneObject& object) { return object_json(object); }
SceneObject object_from_json(const json& j) { return object_from(j, ""); }
json effect_to_json(const EffectInstance& effect) { return effect_json(effect); }

Params params_from_json(const json& j) {
  if (!j.is_object()) malformed("", "parameters must be an object");
  Params out;
  for (const auto& [k, v] : j.items()) out[k] = param_from(v, "/" + k);
  return out;
}

std::string encode_channel(const Channel& channel, ValueKind kind) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(static_cast<std::uint32_t>(channel.samples.size()));
  for (const auto& s : channel.samples) {
    w.i64(s.frame);
    switch (kind) {
      case ValueKind::scalar: w.f64(std::get<double>(s.value)); break;
      case ValueKind::vec3: {
        const Vec3& v = std::get<Vec3>(s.value);
        w.f64(v.x());
        w.f64(v.y());
        w.f64(v.z());
        break;
      }
      case ValueKind::quat: {
        const Quat& q = std::get<Quat>(s.value);
        w.f64(q.w());
        w.f64(q.x());
        w.f64(q.y());
        w.f64(q.z());
        break;
      }
      case ValueKind::state: w.str(std::get<std::string>(s.value)); break;
      case ValueKind::attachment: {
        const auto& ref = std::get<std::optional<AttachmentRef>>(s.value);
        w.u8(ref ? 1 : 0);
        if (ref) {
          w.str(ref->parent);
          w.str(ref->anchor);
          const Transform& o = ref->offset;
          for (double v : {o.position.x(), o.position.y(), o.position.z(), o.rotation.w(), o.rotation.x(),
                           o.rotation.y(), o.rotation.z(), o.scale.x(), o.scale.y(), o.scale.z()})
            w.f64(v);
        }
        break;
      }
    }
  }
  return base64_encode(w.take());
}

Channel decode_channel(std::string_view base64, ValueKind kind, Encoding encoding) {
  const std::string ptr = "channel data";
  auto raw = base64_decode(base64);
  if (!raw) malformed(ptr, "invalid base64");
  ByteReader r(*raw, ptr);
  const std::uint8_t stored = r.u8();
  if (stored != static_cast<std::uint8_t>(kind))
    malformed(ptr, fmt::format("value kind {} does not match channel (expected {})", stored, static_cast<int>(kind)));
  const std::uint32_t count = r.u32();
  Channel c;
  c.encoding = encoding;
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample s;
    s.frame = r.i64();
    switch (kind) {
      case ValueKind::scalar: s.value = r.f64(); break;
      case ValueKind::vec3: {
        const double x = r.f64(), y = r.f64(), z = r.f64();
        s.value = Vec3(x, y, z);
        break;
      }
      case ValueKind::quat: {
        const double w = r.f64(), x = r.f64(), y = r.f64(), z = r.f64();
        s.value = Quat(w, x, y, z);
        break;
      }
      case ValueKind::state: s.value = r.str(); break;
      case ValueKind::attachment: {
        const std::uint8_t flag = r.u8();
        if (flag > 1) malformed(ptr, fmt::format("bad attachment flag at byte {}", r.pos() - 1));
        if (flag == 0) {
          s.value = std::optional<AttachmentRef>{};
          break;
        }
        AttachmentRef ref;
        ref.parent = r.str();
        ref.anchor = r.str();
        double v[10];
        for (double& x : v) x = r.f64();
        ref.offset.position = Vec3(v[0], v[1], v[2]);
        ref.offset.rotation = Quat(v[3], v[4], v[5], v[6]);
        ref.offset.scale = Vec3(v[7], v[8], v[9]);
        s.value = std::optional<AttachmentRef>(std::move(ref));
        break;
      }
    }
    c.samples.push_back(std::move(s));
  }
  if (!r.done()) malformed(ptr, fmt::format("{} trailing bytes", raw->size() - r.pos()));
  return c;
}

json project_to_json(const Project& p) {
  json objects = json::array();
  for (const auto& o : p.scene.objects()) objects.push_back(object_json(o));
  const FloorPlan& plan = p.scene.floor_plan();
  json walls = json::array();
  for (const auto& w : plan.walls) walls.push_back({{"a", vec_json(w.a)}, {"b", vec_json(w.b)}});
  json regions = json::array();
  for (const auto& r : plan.regions) {
    json poly = json::array();
    for (const auto& v : r.polygon) poly.push_back(vec_json(v));
    regions.push_back({{"name", r.name}, {"polygon", poly}});
  }
  json spawns = json::array();
  for (const auto& s : plan.spawns) spawns.push_back({{"name", s.name}, {"position", vec_json(s.position)}});

  json tracks = json::array();
  for (const auto& t : p.timeline.tracks()) {
    json slots = json::array();
    for (const auto& s : t.slots) {
      json effects = json::array();
      for (const auto& e : s.effects) effects.push_back(effect_json(e));
      slots.push_back({{"id", s.id.value}, {"start", s.start}, {"end", s.end}, {"effects", effects}});
    }
    tracks.push_back(
        {{"id", t.id.value}, {"name", t.name}, {"muted", t.muted}, {"locked", t.locked}, {"slots", slots}});
  }
  json markers = json::array();
  for (const auto& m : p.markers) markers.push_back({{"name", m.name}, {"start", m.start}, {"end", m.end}});

  return {{"format", std::string(kProjectFormat)},
          {"version", kProjectVersion},
          {"frame_rate", p.timeline.frame_rate()},
          {"duration", p.timeline.duration()},
          {"scene", {{"objects", objects}, {"floor_plan", {{"walls", walls}, {"regions", regions}, {"spawns", spawns}}}}},
          {"timeline", {{"next_id", p.timeline.next_id()}, {"tracks", tracks}}},
          {"markers", markers}};
}

DecodedProject decode_project_json(const json& doc) {
  const std::string root;
  if (!doc.is_object()) malformed(root, "expected an object");
  const std::string format = text(field(doc, "format", root), "/format");
  if (format != kProjectFormat) malformed("/format", fmt::format("unknown format '{}'", format));
  const std::int64_t version = integer(field(doc, "version", root), "/version");
  if (version != kProjectVersion)
    throw Error(ErrorCode::UnsupportedVersion,
                fmt::format("project version {} is not supported (expected {})", version, kProjectVersion));
  only_keys(doc, {"format", "version", "frame_rate", "duration", "scene", "timeline", "markers"}, root);

  Project p;
  const std::int64_t rate = integer(field(doc, "frame_rate", root), "/frame_rate");
  if (rate <= 0 || rate > 100000) malformed("/frame_rate", "frame rate must be a positive integer");
  p.timeline.set_frame_rate(static_cast<int>(rate));
  const std::int64_t duration = integer(field(doc, "duration", root), "/duration");

  const json& scene = field(doc, "scene", root);
  only_keys(scene, {"objects", "floor_plan"}, "/scene");
  const json& objects = array(field(scene, "objects", "/scene"), "/scene/objects");
  std::vector<SceneObject> parsed;
  for (std::size_t i = 0; i < objects.size(); ++i) parsed.push_back(object_from(objects[i], at("/scene/objects", i)));

  try {
    for (auto o : parsed) {
      o.attachment.reset();
      p.scene.register_object(std::move(o));
    }
    for (const auto& o : parsed)
      if (o.attachment) p.scene.attach_object(o.id, o.attachment->parent, o.attachment->anchor, o.attachment->offset);
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationFailed, fmt::format("{}: {}", to_string(e.code()), e.what()), e.constraint());
  }

  const json& plan = field(scene, "floor_plan", "/scene");
  only_keys(plan, {"walls", "regions", "spawns"}, "/scene/floor_plan");
  FloorPlan& fp = p.scene.floor_plan();
  const json& walls = array(field(plan, "walls", "/scene/floor_plan"), "/scene/floor_plan/walls");
  for (std::size_t i = 0; i < walls.size(); ++i) {
    const std::string wp = at("/scene/floor_plan/walls", i);
    only_keys(walls[i], {"a", "b"}, wp);
    fp.walls.push_back({vec2_from(field(walls[i], "a", wp), at(wp, "a")), vec2_from(field(walls[i], "b", wp), at(wp, "b"))});
  }
  const json& regions = array(field(plan, "regions", "/scene/floor_plan"), "/scene/floor_plan/regions");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string rp = at("/scene/floor_plan/regions", i);
    only_keys(regions[i], {"name", "polygon"}, rp);
    Region r;
    r.name = text(field(regions[i], "name", rp), at(rp, "name"));
    const json& poly = array(field(regions[i], "polygon", rp), at(rp, "polygon"));
    for (std::size_t k = 0; k < poly.size(); ++k) r.polygon.push_back(vec2_from(poly[k], at(at(rp, "polygon"), k)));
    fp.regions.push_back(std::move(r));
  }
  const json& spawns = array(field(plan, "spawns", "/scene/floor_plan"), "/scene/floor_plan/spawns");
  for (std::size_t i = 0; i < spawns.size(); ++i) {
    const std::string sp = at("/scene/floor_plan/spawns", i);
    only_keys(spawns[i], {"name", "position"}, sp);
    fp.spawns.push_back(
        {text(field(spawns[i], "name", sp), at(sp, "name")), vec2_from(field(spawns[i], "position", sp), at(sp, "position"))});
  }

  const json& timeline = field(doc, "timeline", root);
  only_keys(timeline, {"next_id", "tracks"}, "/timeline");
  const std::int64_t next_id = integer(field(timeline, "next_id", "/timeline"), "/timeline/next_id");
  if (next_id < 1) malformed("/timeline/next_id", "must be positive");
  const json& tracks = array(field(timeline, "tracks", "/timeline"), "/timeline/tracks");
  std::vector<Track> out;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const std::string tp = at("/timeline/tracks", i);
    only_keys(tracks[i], {"id", "name", "muted", "locked", "slots"}, tp);
    Track t;
    t.id = TrackId(text(field(tracks[i], "id", tp), at(tp, "id")));
    t.name = text(field(tracks[i], "name", tp), at(tp, "name"));
    t.muted = boolean(field(tracks[i], "muted", tp), at(tp, "muted"));
    t.locked = boolean(field(tracks[i], "locked", tp), at(tp, "locked"));
    const json& slots = array(field(tracks[i], "slots", tp), at(tp, "slots"));
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const std::string sp = at(at(tp, "slots"), k);
      only_keys(slots[k], {"id", "start", "end", "effects"}, sp);
      Slot s;
      s.id = SlotId(text(field(slots[k], "id", sp), at(sp, "id")));
      s.start = integer(field(slots[k], "start", sp), at(sp, "start"));
      s.end = integer(field(slots[k], "end", sp), at(sp, "end"));
      const json& effects = array(field(slots[k], "effects", sp), at(sp, "effects"));
      for (std::size_t m = 0; m < effects.size(); ++m) {
        const std::string ep = at(at(sp, "effects"), m);
        try {
          s.effects.push_back(effect_from(effects[m], ep));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::MalformedFile && std::string_view(e.what()).starts_with("channel data"))
            malformed(ep, e.what());
          throw;
        }
      }
      t.slots.push_back(std::move(s));
    }
    out.push_back(std::move(t));
  }
  p.timeline.assemble(std::move(out), static_cast<std::uint64_t>(next_id));

  if (doc.contains("markers")) {
    const json& markers = array(doc["markers"], "/markers");
    for (std::size_t i = 0; i < markers.size(); ++i) {
      const std::string mp = at("/markers", i);
      only_keys(markers[i], {"name", "start", "end"}, mp);
      p.markers.push_back({text(field(markers[i], "name", mp), at(mp, "name")),
                           integer(field(markers[i], "start", mp), at(mp, "start")),
                           integer(field(markers[i], "end", mp), at(mp, "end"))});
    }
  }

  return {std::move(p), duration};
}

Project project_from_json(const json& doc) {
  DecodedProject d = decode_project_json(doc);
  require_valid(d.project);
  if (d.declared_duration != d.project.timeline.duration())
    throw Error(ErrorCode::ValidationFailed,
                fmt::format("declared duration {} differs from slot extent {}", d.declared_duration,
                            d.project.timeline.duration()),
                "duration-cached");
  return std::move(d.project);
}

std::string save_project(const Project& project) {
  require_valid(project);
  return project_to_json(project).dump(2) + "\n";
}

namespace {

json parse_manifest(std::string_view bytes) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedFile, fmt::format("byte {}: {}", e.byte, e.what()));
  }
}

}  // namespace

Project load_project(std::string_view bytes) { return project_from_json(parse_manifest(bytes)); }

DecodedProject decode_project(std::string_view bytes) { return decode_project_json(parse_manifest(bytes)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, fmt::format("cannot read '{}'", path.string()));
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
}

void save_project_file(const Project& project, const std::filesystem::path& path) {
  write_file(path, save_project(project));
}

Project load_project_file(const std::filesystem::path& path) { return load_project(read_file(path)); }

// ---------------------------------------------------------------------------

std::string format_real(double value) {
  if (value == 0.0) value = 0.0;  // drops the sign of -0
  std::string s = fmt::format("{:.9g}", value);
  if (s == "-0") s = "0";
  return s;
}

namespace {

double round9(double value) {
  const std::string s = format_real(value);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

std::string decorations(const ObjectState& o) {
  std::vector<std::string> parts;
  if (o.fire)
    parts.push_back(fmt::format("fire:{}:{}:{}", o.fire->burning ? 1 : 0, o.fire->explosion_type, o.fire->firewall_type));
  for (const auto& a : o.arrows) parts.push_back(fmt::format("arrow:{}:{}", a.destination, format_real(a.phase)));
  return fmt::format("{}", fmt::join(parts, "|"));
}

json rounded(const Vec3& v) { return json::array({round9(v.x()), round9(v.y()), round9(v.z())}); }

}  // namespace

json state_to_json(const SceneState& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    const Quat& q = o.world.rotation;
    json j = {{"id", o.id},
              {"position", rounded(o.world.position)},
              {"rotation", json::array({round9(q.w()), round9(q.x()), round9(q.y()), round9(q.z())})},
              {"scale", rounded(o.world.scale)},
              {"state", o.state ? json(*o.state) : json(nullptr)},
              {"attached_to", o.attachment ? json(o.attachment->parent + "." + o.attachment->anchor) : json(nullptr)}};
    if (o.pose) {
      json pose = json::object();
      for (std::size_t i = 0; i < kJointCount; ++i) pose[std::string(joint_name(i))] = rounded((*o.pose)[i]);
      j["pose"] = pose;
    }
    if (o.fire)
      j["fire"] = {{"burning", o.fire->burning},
                   {"explosion_type", o.fire->explosion_type},
                   {"firewall_type", o.fire->firewall_type}};
    if (!o.arrows.empty()) {
      json arrows = json::array();
      for (const auto& a : o.arrows)
        arrows.push_back({{"destination", a.destination},
                          {"from", rounded(a.from)},
                          {"to", rounded(a.to)},
                          {"phase", round9(a.phase)}});
      j["arrows"] = arrows;
    }
    objects.push_back(j);
  }
  return {{"frame", s.frame}, {"objects", objects}};
}

std::string write_trace(const std::vector<SceneState>& states, TraceFormat format) {
  if (format == TraceFormat::rows) {
    std::string out = "frame,object,x,y,z,qw,qx,qy,qz,state,decorations\n";
    for (const auto& s : states)
      for (const auto& o : s.objects) {
        const Vec3& p = o.world.position;
        const Quat& q = o.world.rotation;
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", s.frame, o.id, format_real(p.x()), format_real(p.y()),
                           format_real(p.z()), format_real(q.w()), format_real(q.x()), format_real(q.y()),
                           format_real(q.z()), o.state.value_or(""), decorations(o));
      }
    return out;
  }
  json frames = json::array();
  for (const auto& s : states) frames.push_back(state_to_json(s));
  json doc = {{"format", "reenact-trace"}, {"version", 1}, {"frames", frames}};
  return doc.dump(2) + "\n";
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<double> parse_real(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    f(line_no, line);
    start = end + 1;
  }
}

}  // namespace

std::map<std::string, TimedPath> read_trace_paths(std::string_view csv) {
  std::map<std::string, TimedPath> out;
  bool header = false;
  for_each_line(csv, [&](std::size_t n, std::string_view line) {
    if (line.empty()) return;
    if (!header) {
      if (!line.starts_with("frame,object,x,y,z"))
        throw Error(ErrorCode::MalformedFile, fmt::format("line {}: not a rows trace header", n));
      header = true;
      return;
    }
    const auto f = split(line, ',');
    if (f.size() != 11) throw Error(ErrorCode::MalformedFile, fmt::format("line {}: expected 11 fields", n));
    Frame frame = 0;
    auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), frame);
    const auto x = parse_real(f[2]);
    const auto z = parse_real(f[4]);
    if (ec != std::errc{} || !x || !z) throw Error(ErrorCode::MalformedFile, fmt::format("line {}: bad number", n));
    out[std::string(f[1])].push_back({frame, Vec2(*x, *z)});
  });
  return out;
}

std::vector<TelemetryStream> read_telemetry(std::string_view csv) {
  std::vector<TelemetryStream> streams;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  bool header = false;
  bool has_pitch = false;
  for_each_line(csv, [&](std::size_t n, std::string_view line) {
    auto fail = [&](std::string_view why) {
      return Error(ErrorCode::MalformedTelemetry, fmt::format("line {}: {}", n, why));
    };
    if (line.empty() || line.front() == '#') return;
    if (!header) {
      if (line == "participant,task,t,x,y,height,yaw_deg,pitch_deg")
        has_pitch = true;
      else if (line != "participant,task,t,x,y,height,yaw_deg")
        throw fail("expected header participant,task,t,x,y,height,yaw_deg[,pitch_deg]");
      header = true;
      return;
    }
    const auto f = split(line, ',');
    if (f.size() != (has_pitch ? 8u : 7u)) throw fail(fmt::format("expected {} fields", has_pitch ? 8 : 7));
    if (f[0].empty()) throw fail("empty participant");
    TelemetrySample s;
    const auto t = parse_real(f[2]);
    const auto x = parse_real(f[3]);
    const auto y = parse_real(f[4]);
    const auto h = parse_real(f[5]);
    const auto yaw = parse_real(f[6]);
    if (!t || !x || !y || !h || !yaw) throw fail("bad number");
    s.t = *t;
    s.position = Vec2(*x, *y);
    s.height = *h;
    s.yaw_deg = wrap_degrees(*yaw);
    if (has_pitch && !f[7].empty()) {
      const auto pitch = parse_real(f[7]);
      if (!pitch || *pitch < -90.0 || *pitch > 90.0) throw fail("pitch outside [-90, 90]");
      s.pitch_deg = *pitch;
    }
    const auto key = std::make_pair(std::string(f[0]), std::string(f[1]));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, streams.size()).first;
      streams.push_back({key.first, key.second, {}});
    }
    auto& samples = streams[it->second].samples;
    if (!samples.empty() && s.t < samples.back().t) throw fail("time decreases");
    samples.push_back(s);
  });
  return streams;
}

}  // namespace reenact
