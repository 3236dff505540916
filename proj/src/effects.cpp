#include "reenact/effects.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "reenact/error.hpp"

namespace reenact {

namespace {

constexpr std::array<std::pair<EffectType, std::string_view>, 5> kEffectNames = {{
    {EffectType::rigid_transform, "RigidTransform"},
    {EffectType::pose_track, "PoseTrack"},
    {EffectType::interactive_state, "InteractiveState"},
    {EffectType::floating_arrows, "FloatingArrows"},
    {EffectType::fire, "Fire"},
}};

const std::vector<ParamSpec>& rigid_schema() {
  static const std::vector<ParamSpec> s = {{"physics", ParamKind::boolean, false, {}, false}};
  return s;
}

const std::vector<ParamSpec>& empty_schema() {
  static const std::vector<ParamSpec> s;
  return s;
}

const std::vector<ParamSpec>& arrows_schema() {
  static const std::vector<ParamSpec> s = {
      {"destination", ParamKind::object_ref, std::string{}, {}, true},
      {"cycle", ParamKind::integer, std::int64_t{30}, {}, false},
  };
  return s;
}

const std::vector<ParamSpec>& fire_schema() {
  static const std::vector<ParamSpec> s = {
      {"apply_fire", ParamKind::boolean, true, {}, false},
      {"explosion_type", ParamKind::choice, std::string{"none"}, {"none", "small", "large"}, false},
      {"firewall_type", ParamKind::choice, std::string{"none"}, {"none", "line", "ring"}, false},
  };
  return s;
}

// Index range [lo, hi) of samples inside the window.
std::pair<std::size_t, std::size_t> window_range(const std::vector<Sample>& samples, SlotWindow window) {
  auto by_frame = [](const Sample& s, Frame f) { return s.frame < f; };
  const auto lo = std::lower_bound(samples.begin(), samples.end(), window.start, by_frame);
  const auto hi = std::lower_bound(lo, samples.end(), window.end + 1, by_frame);
  return {static_cast<std::size_t>(lo - samples.begin()), static_cast<std::size_t>(hi - samples.begin())};
}

SampleValue interpolate(const SampleValue& a, const SampleValue& b, double w) {
  if (w == 0.0) return a;
  if (const auto* x = std::get_if<double>(&a)) return *x + w * (std::get<double>(b) - *x);
  if (const auto* v = std::get_if<Vec3>(&a)) return Vec3(*v + w * (std::get<Vec3>(b) - *v));
  if (const auto* q = std::get_if<Quat>(&a)) return q->slerp(w, std::get<Quat>(b));
  return a;  // discrete values step
}

SampleValue add(const SampleValue& a, const SampleValue& b) {
  if (const auto* x = std::get_if<double>(&a)) return *x + std::get<double>(b);
  return Vec3(std::get<Vec3>(a) + std::get<Vec3>(b));
}

SampleValue subtract(const SampleValue& a, const SampleValue& b) {
  if (const auto* x = std::get_if<double>(&a)) return *x - std::get<double>(b);
  return Vec3(std::get<Vec3>(a) - std::get<Vec3>(b));
}

bool is_zero(const SampleValue& v) {
  if (const auto* x = std::get_if<double>(&v)) return *x == 0.0;
  return std::get<Vec3>(v).isZero(0.0);
}

WriteValue to_write(const SampleValue& v) {
  return std::visit([](const auto& x) -> WriteValue { return x; }, v);
}

constexpr std::array<Attribute, 3> kPositionAxes = {Attribute::position_x, Attribute::position_y,
                                                    Attribute::position_z};

}  // namespace

std::string_view to_string(EffectType type) {
  for (const auto& [t, name] : kEffectNames)
    if (t == type) return name;
  return "RigidTransform";
}

std::optional<EffectType> parse_effect_type(std::string_view text) {
  for (const auto& [t, name] : kEffectNames)
    if (name == text) return t;
  return std::nullopt;
}

std::string to_string(const ChannelKey& key) {
  switch (key.attribute) {
    case Attribute::position_x: return "position.x";
    case Attribute::position_y: return "position.y";
    case Attribute::position_z: return "position.z";
    case Attribute::rotation: return "rotation";
    case Attribute::scale: return "scale";
    case Attribute::joint: return fmt::format("joint.{}", joint_name(static_cast<std::size_t>(key.joint)));
    case Attribute::state: return "state";
    case Attribute::attachment: return "attachment";
    case Attribute::fire: return "fire";
    case Attribute::arrow: return "arrow";
  }
  return "position.x";
}

std::optional<ChannelKey> parse_channel_key(std::string_view text) {
  static const std::array<std::pair<std::string_view, Attribute>, 9> plain = {{
      {"position.x", Attribute::position_x},
      {"position.y", Attribute::position_y},
      {"position.z", Attribute::position_z},
      {"rotation", Attribute::rotation},
      {"scale", Attribute::scale},
      {"state", Attribute::state},
      {"attachment", Attribute::attachment},
      {"fire", Attribute::fire},
      {"arrow", Attribute::arrow},
  }};
  for (const auto& [name, attr] : plain)
    if (name == text) return ChannelKey{attr, 0};
  if (text.starts_with("joint.")) {
    if (auto idx = joint_index(text.substr(6))) return ChannelKey{Attribute::joint, static_cast<int>(*idx)};
  }
  return std::nullopt;
}

std::string_view to_string(Encoding encoding) { return encoding == Encoding::delta ? "delta" : "absolute"; }

std::optional<Encoding> parse_encoding(std::string_view text) {
  if (text == "absolute") return Encoding::absolute;
  if (text == "delta") return Encoding::delta;
  return std::nullopt;
}

ValueKind value_kind(Attribute attribute) {
  switch (attribute) {
    case Attribute::position_x:
    case Attribute::position_y:
    case Attribute::position_z: return ValueKind::scalar;
    case Attribute::rotation: return ValueKind::quat;
    case Attribute::scale:
    case Attribute::joint: return ValueKind::vec3;
    case Attribute::state: return ValueKind::state;
    default: return ValueKind::attachment;
  }
}

bool bit_equal(const SampleValue& a, const SampleValue& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, std::optional<AttachmentRef>>)
          return x == y;
        else
          return bit_equal(x, y);
      },
      a);
}

void upsert_sample(Channel& channel, Frame frame, SampleValue value) {
  auto it = std::lower_bound(channel.samples.begin(), channel.samples.end(), frame,
                             [](const Sample& s, Frame f) { return s.frame < f; });
  if (it != channel.samples.end() && it->frame == frame)
    it->value = std::move(value);
  else
    channel.samples.insert(it, Sample{frame, std::move(value)});
}

void erase_samples(Channel& channel, Frame first, Frame last) {
  std::erase_if(channel.samples, [&](const Sample& s) { return s.frame >= first && s.frame <= last; });
}

std::span<const ParamSpec> param_schema(EffectType type) {
  switch (type) {
    case EffectType::rigid_transform: return rigid_schema();
    case EffectType::floating_arrows: return arrows_schema();
    case EffectType::fire: return fire_schema();
    default: return empty_schema();
  }
}

Params normalized_params(EffectType type, const Params& params) {
  const auto schema = param_schema(type);
  for (const auto& [name, value] : params) {
    const bool known = std::any_of(schema.begin(), schema.end(), [&](const ParamSpec& s) { return s.name == name; });
    if (!known)
      throw Error(ErrorCode::InvalidParam, fmt::format("{} has no parameter '{}'", to_string(type), name),
                  constraint::kParamSchema);
  }
  Params out;
  for (const auto& spec : schema) {
    auto it = params.find(std::string(spec.name));
    if (it == params.end()) {
      if (spec.required)
        throw Error(ErrorCode::InvalidParam, fmt::format("{} requires parameter '{}'", to_string(type), spec.name),
                    constraint::kParamSchema);
      out.emplace(spec.name, spec.fallback);
      continue;
    }
    const ParamValue& v = it->second;
    auto bad = [&](std::string_view why) {
      return Error(ErrorCode::InvalidParam, fmt::format("parameter '{}' of {}: {}", spec.name, to_string(type), why),
                   constraint::kParamSchema);
    };
    switch (spec.kind) {
      case ParamKind::boolean:
        if (!std::holds_alternative<bool>(v)) throw bad("expected a boolean");
        out.emplace(spec.name, v);
        break;
      case ParamKind::integer:
        if (!std::holds_alternative<std::int64_t>(v)) throw bad("expected an integer");
        if (std::get<std::int64_t>(v) <= 0) throw bad("must be positive");
        out.emplace(spec.name, v);
        break;
      case ParamKind::real:
        if (const auto* i = std::get_if<std::int64_t>(&v))
          out.emplace(spec.name, static_cast<double>(*i));
        else if (std::holds_alternative<double>(v))
          out.emplace(spec.name, v);
        else
          throw bad("expected a number");
        break;
      case ParamKind::choice: {
        const auto* s = std::get_if<std::string>(&v);
        if (!s || std::find(spec.choices.begin(), spec.choices.end(), *s) == spec.choices.end())
          throw bad(fmt::format("expected one of {}", fmt::join(spec.choices, ", ")));
        out.emplace(spec.name, v);
        break;
      }
      case ParamKind::object_ref: {
        const auto* s = std::get_if<std::string>(&v);
        if (!s || s->empty()) throw bad("expected an object id");
        out.emplace(spec.name, v);
        break;
      }
    }
  }
  return out;
}

bool param_bool(const Params& params, std::string_view name) {
  auto it = params.find(std::string(name));
  return it != params.end() && std::holds_alternative<bool>(it->second) && std::get<bool>(it->second);
}

std::int64_t param_int(const Params& params, std::string_view name) {
  auto it = params.find(std::string(name));
  if (it == params.end() || !std::holds_alternative<std::int64_t>(it->second))
    throw Error(ErrorCode::InvalidParam, fmt::format("missing integer parameter '{}'", name));
  return std::get<std::int64_t>(it->second);
}

const std::string& param_string(const Params& params, std::string_view name) {
  auto it = params.find(std::string(name));
  if (it == params.end() || !std::holds_alternative<std::string>(it->second))
    throw Error(ErrorCode::InvalidParam, fmt::format("missing text parameter '{}'", name));
  return std::get<std::string>(it->second);
}

bool writes_attribute(EffectType type, Attribute attribute) {
  switch (type) {
    case EffectType::rigid_transform:
      return attribute == Attribute::position_x || attribute == Attribute::position_y ||
             attribute == Attribute::position_z || attribute == Attribute::rotation || attribute == Attribute::scale ||
             attribute == Attribute::attachment;
    case EffectType::pose_track:
      return attribute == Attribute::position_x || attribute == Attribute::position_y ||
             attribute == Attribute::position_z || attribute == Attribute::rotation || attribute == Attribute::joint;
    case EffectType::interactive_state: return attribute == Attribute::state;
    case EffectType::floating_arrows: return attribute == Attribute::arrow;
    case EffectType::fire: return attribute == Attribute::fire;
  }
  return false;
}

void check_target(EffectType type, const SceneObject& target) {
  auto reject = [&](std::string_view need) {
    return Error(ErrorCode::IncompatibleTarget,
                 fmt::format("{} needs {}; '{}' is a {}{}", to_string(type), need, target.id, to_string(target.cls),
                             target.triggerable ? " (triggerable)" : ""),
                 constraint::kTargetClass);
  };
  switch (type) {
    case EffectType::rigid_transform:
      if (target.cls == ObjectClass::environment) throw reject("a movable object");
      break;
    case EffectType::pose_track:
      if (target.cls != ObjectClass::character) throw reject("a character");
      break;
    case EffectType::interactive_state:
      if (!target.triggerable) throw reject("a triggerable object");
      break;
    case EffectType::floating_arrows:
    case EffectType::fire: break;
  }
}

CapturedInitial capture(const SceneObject& object) {
  CapturedInitial c;
  c.transform = object.initial;
  if (object.triggerable) c.state = object.initial_state;
  if (object.cls == ObjectClass::character) c.pose = object.initial_pose.value_or(rest_pose());
  return c;
}

CapturedInitial capture(const ObjectState& state) {
  CapturedInitial c;
  c.transform = state.local;
  c.state = state.state;
  c.pose = state.pose;
  return c;
}

std::optional<SampleValue> initial_value(const CapturedInitial& initial, const ChannelKey& key) {
  switch (key.attribute) {
    case Attribute::position_x: return initial.transform.position.x();
    case Attribute::position_y: return initial.transform.position.y();
    case Attribute::position_z: return initial.transform.position.z();
    case Attribute::rotation: return initial.transform.rotation;
    case Attribute::scale: return initial.transform.scale;
    case Attribute::joint:
      return initial.pose ? (*initial.pose)[static_cast<std::size_t>(key.joint)]
                          : rest_pose()[static_cast<std::size_t>(key.joint)];
    case Attribute::state:
      if (initial.state) return *initial.state;
      return std::nullopt;
    default: return std::nullopt;
  }
}

std::optional<SampleValue> evaluate_channel(const Channel& channel, SlotWindow window, Frame frame,
                                            const std::optional<SampleValue>& initial) {
  const auto& s = channel.samples;
  const auto [lo, hi] = window_range(s, window);
  if (lo == hi) return std::nullopt;
  if (channel.encoding == Encoding::delta) {
    if (!initial) return std::nullopt;
    SampleValue sum = *initial;
    for (std::size_t i = lo; i < hi && s[i].frame <= frame; ++i) sum = add(sum, s[i].value);
    return sum;
  }
  if (frame < s[lo].frame) return initial;
  if (frame >= s[hi - 1].frame) return s[hi - 1].value;
  auto it = std::upper_bound(s.begin() + static_cast<std::ptrdiff_t>(lo), s.begin() + static_cast<std::ptrdiff_t>(hi),
                             frame, [](Frame f, const Sample& x) { return f < x.frame; });
  const Sample& b = *it;
  const Sample& a = *(it - 1);
  const double w = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
  return interpolate(a.value, b.value, w);
}

Channel to_absolute(const Channel& delta, const SampleValue& base) {
  Channel out;
  out.encoding = Encoding::absolute;
  SampleValue sum = base;
  for (std::size_t i = 0; i < delta.samples.size(); ++i) {
    sum = add(sum, delta.samples[i].value);
    out.samples.push_back({delta.samples[i].frame, sum});
    if (i + 1 < delta.samples.size() && delta.samples[i + 1].frame - 1 > delta.samples[i].frame)
      out.samples.push_back({delta.samples[i + 1].frame - 1, sum});
  }
  return out;
}

Channel to_delta(const Channel& absolute, const SampleValue& base, SlotWindow window) {
  Channel out;
  out.encoding = Encoding::delta;
  const auto [lo, hi] = window_range(absolute.samples, window);
  if (lo == hi) return out;
  SampleValue previous = base;
  const Frame last = absolute.samples[hi - 1].frame;
  for (Frame f = window.start; f <= last; ++f) {
    const SampleValue v = *evaluate_channel(absolute, window, f, base);
    SampleValue d = subtract(v, previous);
    if (f == window.start || !is_zero(d)) out.samples.push_back({f, std::move(d)});
    previous = v;
  }
  return out;
}

void record_state_event(EffectInstance& effect, const SceneObject& target, Frame frame, const std::string& state) {
  if (!target.triggerable || !target.has_state(state))
    throw Error(ErrorCode::InvalidState, fmt::format("'{}' is not a state of '{}'", state, target.id),
                constraint::kDeclaredState);
  upsert_sample(effect.channels[ChannelKey{Attribute::state, 0}], frame, state);
}

std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::start: return "START";
    case SignalKind::update: return "UPDATE";
    case SignalKind::pause: return "PAUSE";
  }
  return "START";
}

// ---------------------------------------------------------------------------

bool ballistic_step(Vec3& position, Vec3& velocity, double dt, const FloorPlan& plan) {
  const Vec3 accel(0.0, -kGravity, 0.0);
  const Vec3 next = position + velocity * dt + 0.5 * accel * dt * dt;
  double reach = 1.0;
  bool grounded = false;
  bool stopped = false;
  if (next.y() < 0.0) {
    reach = position.y() <= 0.0 ? 0.0 : position.y() / (position.y() - next.y());
    grounded = true;
    stopped = true;
  }
  const Segment2 path{ground(position), ground(next)};
  if ((path.b - path.a).squaredNorm() > 0.0) {
    for (const auto& wall : plan.walls) {
      if (auto t = segment_intersection(path, wall.segment()); t && *t < reach) {
        reach = *t;
        grounded = false;
        stopped = true;
      }
    }
  }
  if (!stopped) {
    position = next;
    velocity += accel * dt;
    return false;
  }
  position += reach * (next - position);
  if (grounded) position.y() = 0.0;
  velocity.setZero();
  return true;
}

void EffectRuntime::start(const EffectInstance& effect, SlotWindow window, Frame frame) {
  if (started_)
    throw Error(ErrorCode::InvalidTransportTransition, fmt::format("effect {} already started", effect.id.value));
  if (!window.contains(frame))
    throw Error(ErrorCode::FrameOutOfSlot,
                fmt::format("START({}) outside slot [{},{}]", frame, window.start, window.end));
  for (const auto& [key, channel] : effect.channels)
    if (channel.encoding == Encoding::delta) fold_deltas(effect, key, channel, window, frame - 1);
  started_ = true;
}

void EffectRuntime::pause(Frame frame) {
  if (!started_) throw Error(ErrorCode::NotStarted, fmt::format("PAUSE({}) before START", frame));
  started_ = false;
}

void EffectRuntime::fold_deltas(const EffectInstance& effect, const ChannelKey& key, const Channel& channel,
                                SlotWindow window, Frame through) {
  auto it = deltas_.find(key);
  if (it == deltas_.end()) {
    const auto base = initial_value(effect.captured_initial, key);
    if (!base) return;
    const auto [lo, hi] = window_range(channel.samples, window);
    it = deltas_.emplace(key, DeltaCursor{lo, *base}).first;
  }
  DeltaCursor& cursor = it->second;
  const Frame limit = std::min(through, window.end);
  while (cursor.next < channel.samples.size() && channel.samples[cursor.next].frame <= limit) {
    cursor.sum = add(cursor.sum, channel.samples[cursor.next].value);
    ++cursor.next;
  }
}

std::optional<SampleValue> EffectRuntime::channel_value(const EffectInstance& effect, const ChannelKey& key,
                                                        const Channel& channel, SlotWindow window, Frame frame) {
  if (channel.encoding == Encoding::absolute)
    return evaluate_channel(channel, window, frame, initial_value(effect.captured_initial, key));
  const auto [lo, hi] = window_range(channel.samples, window);
  if (lo == hi) return std::nullopt;
  fold_deltas(effect, key, channel, window, frame);
  auto it = deltas_.find(key);
  if (it == deltas_.end()) return std::nullopt;
  return it->second.sum;
}

void EffectRuntime::update(const EffectInstance& effect, SlotWindow window, Frame frame, const EvalContext& ctx,
                           std::vector<Write>& out) {
  if (!started_) throw Error(ErrorCode::NotStarted, fmt::format("UPDATE({}) before START", frame));
  if (!window.contains(frame))
    throw Error(ErrorCode::FrameOutOfSlot,
                fmt::format("UPDATE({}) outside slot [{},{}]", frame, window.start, window.end));
  const ObjectState& target = ctx.accumulator.at(effect.target);
  seen_prev_ = seen_last_;
  seen_last_ = {frame - 1, target.world.position};

  switch (effect.type) {
    case EffectType::rigid_transform: update_rigid(effect, window, frame, ctx, out); break;
    case EffectType::pose_track:
      for (const auto& [key, channel] : effect.channels) {
        if (!writes_attribute(effect.type, key.attribute)) continue;
        if (auto v = channel_value(effect, key, channel, window, frame))
          out.push_back({effect.target, key, to_write(*v)});
      }
      break;
    case EffectType::interactive_state: {
      const ChannelKey key{Attribute::state, 0};
      std::optional<SampleValue> v;
      if (auto it = effect.channels.find(key); it != effect.channels.end())
        v = channel_value(effect, key, it->second, window, frame);
      if (!v) v = initial_value(effect.captured_initial, key);
      if (v) out.push_back({effect.target, key, to_write(*v)});
      break;
    }
    case EffectType::floating_arrows: {
      const std::string& destination = param_string(effect.params, "destination");
      ctx.accumulator.at(destination);
      const std::int64_t cycle = param_int(effect.params, "cycle");
      ArrowDecoration arrow;
      arrow.source = effect.target;
      arrow.destination = destination;
      arrow.phase = static_cast<double>(frame % cycle) / static_cast<double>(cycle);
      out.push_back({effect.target, ChannelKey{Attribute::arrow, 0}, std::move(arrow)});
      break;
    }
    case EffectType::fire: {
      FireDecoration fire;
      fire.burning = param_bool(effect.params, "apply_fire");
      fire.explosion_type = param_string(effect.params, "explosion_type");
      fire.firewall_type = param_string(effect.params, "firewall_type");
      out.push_back({effect.target, ChannelKey{Attribute::fire, 0}, std::move(fire)});
      break;
    }
  }
}

void EffectRuntime::update_rigid(const EffectInstance& effect, SlotWindow window, Frame frame, const EvalContext& ctx,
                                 std::vector<Write>& out) {
  const bool simulated = param_bool(effect.params, "physics") && simulate(effect, window, frame, ctx, out);
  for (const auto& [key, channel] : effect.channels) {
    const bool is_position = key.attribute == Attribute::position_x || key.attribute == Attribute::position_y ||
                             key.attribute == Attribute::position_z;
    if (is_position && simulated) {
      // cursors still advance so a later re-keyed frame sees consistent sums
      if (channel.encoding == Encoding::delta) fold_deltas(effect, key, channel, window, frame);
      continue;
    }
    if (!writes_attribute(effect.type, key.attribute)) continue;
    if (auto v = channel_value(effect, key, channel, window, frame)) out.push_back({effect.target, key, to_write(*v)});
  }
}

bool EffectRuntime::simulate(const EffectInstance& effect, SlotWindow window, Frame frame, const EvalContext& ctx,
                             std::vector<Write>& out) {
  std::optional<Frame> last_key;
  for (Attribute axis : kPositionAxes) {
    auto it = effect.channels.find(ChannelKey{axis, 0});
    if (it == effect.channels.end()) continue;
    const auto [lo, hi] = window_range(it->second.samples, window);
    if (lo == hi) continue;
    const Frame f = it->second.samples[hi - 1].frame;
    if (!last_key || f > *last_key) last_key = f;
  }
  std::optional<Frame> detached_at;
  if (auto it = effect.channels.find(ChannelKey{Attribute::attachment, 0}); it != effect.channels.end()) {
    const auto& s = it->second.samples;
    const auto [lo, hi] = window_range(s, window);
    for (std::size_t i = hi; i > lo; --i) {
      if (s[i - 1].frame > frame) continue;
      const auto& ref = std::get<std::optional<AttachmentRef>>(s[i - 1].value);
      if (ref) return false;  // attached: the parent drives it
      detached_at = s[i - 1].frame;
      break;
    }
  }

  Frame handoff = 0;
  bool from_detach = false;
  if (detached_at && (!last_key || *detached_at >= *last_key)) {
    handoff = *detached_at;
    from_detach = true;
  } else if (last_key) {
    handoff = *last_key;
  } else {
    return false;
  }
  if (frame <= handoff) return false;

  const double fps = static_cast<double>(ctx.frame_rate);
  if (!ballistic_ || ballistic_->handoff != handoff || ballistic_->from_detach != from_detach ||
      ballistic_->at >= frame) {
    Ballistic b;
    b.handoff = handoff;
    b.from_detach = from_detach;
    b.at = frame - 1;
    const ObjectState& target = ctx.accumulator.at(effect.target);
    if (from_detach) {
      b.position = target.world.position;
      if (seen_last_ && seen_prev_ && seen_last_->first == frame - 1 && seen_prev_->first == frame - 2)
        b.velocity = (seen_last_->second - seen_prev_->second) * fps;
    } else {
      b.at = handoff;
      b.position = target.local.position;
      for (int axis = 0; axis < 3; ++axis) {
        const ChannelKey key{kPositionAxes[static_cast<std::size_t>(axis)], 0};
        auto it = effect.channels.find(key);
        if (it == effect.channels.end()) continue;
        const auto initial = initial_value(effect.captured_initial, key);
        if (auto v = evaluate_channel(it->second, window, handoff, initial)) b.position[axis] = std::get<double>(*v);
        const auto& s = it->second.samples;
        const auto [lo, hi] = window_range(s, window);
        if (hi - lo >= 2 && s[hi - 1].frame == handoff) {
          const double v1 = std::get<double>(*evaluate_channel(it->second, window, s[hi - 1].frame, initial));
          const double v0 = std::get<double>(*evaluate_channel(it->second, window, s[hi - 2].frame, initial));
          b.velocity[axis] = (v1 - v0) / static_cast<double>(s[hi - 1].frame - s[hi - 2].frame) * fps;
        }
      }
    }
    ballistic_ = b;
  }
  const double dt = 1.0 / fps;
  while (ballistic_->at < frame) {
    if (!ballistic_->resting)
      ballistic_->resting = ballistic_step(ballistic_->position, ballistic_->velocity, dt, ctx.floor_plan);
    ++ballistic_->at;
  }
  out.push_back({effect.target, ChannelKey{Attribute::position_x, 0}, ballistic_->position.x()});
  out.push_back({effect.target, ChannelKey{Attribute::position_y, 0}, ballistic_->position.y()});
  out.push_back({effect.target, ChannelKey{Attribute::position_z, 0}, ballistic_->position.z()});
  return true;
}

}  // namespace reenact
