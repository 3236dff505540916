#include "reenact/session.hpp"

#include <algorithm>
#include <utility>

#include <fmt/core.h>

#include "reenact/error.hpp"
#include "reenact/script.hpp"

namespace reenact::service {

using nlohmann::json;

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ack: return "ack";
    case EventKind::error: return "error";
    case EventKind::state_delta: return "state-delta";
    case EventKind::transport_tick: return "transport-tick";
    case EventKind::recording_ingest_ack: return "recording-ingest-ack";
  }
  return "?";
}

json Event::to_json() const { return {{"seq", seq}, {"kind", std::string(service::to_string(kind))}, {"payload", payload}}; }

json SessionInfo::to_json() const {
  return {{"id", id},
          {"clients", clients},
          {"revision", revision},
          {"mode", std::string(reenact::to_string(mode))},
          {"cursor", cursor},
          {"duration", duration},
          {"frame_rate", frame_rate},
          {"recording", recording}};
}

json error_json(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    json j = {{"code", std::string(to_string(err->code()))}, {"message", err->what()}};
    if (!err->constraint().empty()) j["constraint"] = err->constraint();
    if (const auto* se = dynamic_cast<const script::ScriptError*>(err)) {
      j["cause"] = std::string(to_string(se->cause()));
      j["line"] = se->location().line;
      j["column"] = se->location().column;
      if (se->related()) j["related"] = {{"line", se->related()->line}, {"column", se->related()->column}};
    }
    return j;
  }
  if (dynamic_cast<const json::exception*>(&e)) return {{"code", "InvalidArgument"}, {"message", e.what()}};
  return {{"code", "InternalError"}, {"message", e.what()}};
}

namespace {

[[noreturn]] void violation(const std::string& message) { throw Error(ErrorCode::ProtocolViolation, message); }

[[noreturn]] void bad_arg(const std::string& message) { throw Error(ErrorCode::InvalidArgument, message); }

const json& need(const json& args, const char* name) {
  auto it = args.find(name);
  if (it == args.end()) bad_arg(fmt::format("missing argument '{}'", name));
  return *it;
}

std::string str(const json& args, const char* name) {
  const json& v = need(args, name);
  if (!v.is_string()) bad_arg(fmt::format("argument '{}' must be a string", name));
  return v.get<std::string>();
}

std::int64_t integer(const json& v, const char* name) {
  if (!v.is_number_integer()) bad_arg(fmt::format("argument '{}' must be an integer", name));
  return v.get<std::int64_t>();
}

std::int64_t integer(const json& args, const char* name, int) { return integer(need(args, name), name); }

std::optional<std::int64_t> opt_integer(const json& args, const char* name) {
  auto it = args.find(name);
  if (it == args.end() || it->is_null()) return std::nullopt;
  return integer(*it, name);
}

std::optional<bool> opt_bool(const json& args, const char* name) {
  auto it = args.find(name);
  if (it == args.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) bad_arg(fmt::format("argument '{}' must be a boolean", name));
  return it->get<bool>();
}

double real(const json& v, const char* name) {
  if (!v.is_number()) bad_arg(fmt::format("argument '{}' must be a number", name));
  return v.get<double>();
}

Vec3 vec3(const json& v, const char* name) {
  if (!v.is_array() || v.size() != 3) bad_arg(fmt::format("argument '{}' must be [x, y, z]", name));
  return {real(v[0], name), real(v[1], name), real(v[2], name)};
}

json track_json(const Track& t) {
  json slots = json::array();
  for (const auto& s : t.slots) {
    json effects = json::array();
    for (const auto& e : s.effects) effects.push_back(e.id.value);
    slots.push_back({{"id", s.id.value}, {"start", s.start}, {"end", s.end}, {"effects", effects}});
  }
  return {{"id", t.id.value}, {"name", t.name}, {"muted", t.muted}, {"locked", t.locked}, {"slots", slots}};
}

json slot_json(const Slot& s) { return {{"id", s.id.value}, {"start", s.start}, {"end", s.end}}; }

/// Object descriptor from a partial manifest object: unspecified keys take
/// the defaults of a plain prop.
SceneObject object_from_args(const json& args) {
  const json& given = need(args, "object");
  if (!given.is_object()) bad_arg("argument 'object' must be an object");
  SceneObject base;
  if (given.contains("id") && given["id"].is_string()) base.id = given["id"].get<std::string>();
  json merged = object_to_json(base);
  merged.merge_patch(given);
  return object_from_json(merged);
}

Transform transform_arg(const json& v) {
  if (!v.is_object()) bad_arg("argument 'transform' must be an object");
  Transform t;
  if (v.contains("position")) t.position = vec3(v["position"], "position");
  if (v.contains("heading")) t.rotation = rotation_from_heading(real(v["heading"], "heading"));
  if (v.contains("rotation")) {
    const json& r = v["rotation"];
    if (!r.is_array() || r.size() != 4) bad_arg("argument 'rotation' must be [w, x, y, z]");
    t.rotation = Quat(real(r[0], "rotation"), real(r[1], "rotation"), real(r[2], "rotation"), real(r[3], "rotation"))
                     .normalized();
  }
  if (v.contains("scale")) t.scale = vec3(v["scale"], "scale");
  return t;
}

InputPayload input_payload(const json& args) {
  if (args.contains("transform")) return transform_arg(args["transform"]);
  if (args.contains("pose")) {
    const json& p = args["pose"];
    if (!p.is_array() || p.size() != kJointCount) bad_arg(fmt::format("argument 'pose' must list {} joints", kJointCount));
    PoseFrame pose;
    for (std::size_t i = 0; i < kJointCount; ++i) pose[i] = vec3(p[i], "pose");
    return pose;
  }
  if (args.contains("grab")) {
    const json& g = args["grab"];
    GrabEvent e{str(g, "prop")};
    if (g.contains("hand")) e.hand = str(g, "hand");
    return e;
  }
  if (args.contains("release")) {
    const json& r = args["release"];
    return ReleaseEvent{str(r, "prop"), opt_bool(r, "physics").value_or(false)};
  }
  if (args.contains("trigger")) {
    const json& t = args["trigger"];
    return TriggerEvent{str(t, "prop"), str(t, "state")};
  }
  bad_arg("ingest needs one of 'transform', 'pose', 'grab', 'release', 'trigger'");
}

bool is_transport(const std::string& op) {
  return op == "play" || op == "pause" || op == "stop" || op == "seek" || op == "step";
}

}  // namespace

// ---------------------------------------------------------------------------

Session::Session(std::string id, Project project)
    : id_(std::move(id)), project_(std::make_unique<Project>(std::move(project))) {
  reset_engine();
}

Session::~Session() = default;

void Session::reset_engine() {
  recorder_.reset();
  player_ = std::make_unique<Player>(*project_);
  recorder_ = std::make_unique<Recorder>(*project_, *player_);
  snapshot_ = std::make_shared<const Project>(*project_);
}

ClientId Session::connect(Deliver deliver) {
  std::lock_guard lock(mu_);
  const ClientId id = next_client_++;
  clients_[id] = Client{std::move(deliver)};
  return id;
}

void Session::disconnect(ClientId client) {
  std::lock_guard lock(mu_);
  clients_.erase(client);
}

void Session::send(ClientId client, Event event) {
  auto it = clients_.find(client);
  if (it != clients_.end() && it->second.deliver) it->second.deliver(event);
}

void Session::broadcast(EventKind kind, json payload) {
  const Event event{++broadcast_seq_, kind, std::move(payload)};
  for (auto& [id, c] : clients_)
    if (c.deliver) c.deliver(event);
}

json Session::transport_json() const {
  return {{"mode", std::string(to_string(player_->mode()))}, {"frame", player_->cursor()}};
}

void Session::tick_broadcast() {
  json payload = transport_json();
  payload["state"] = state_to_json(player_->state());
  broadcast(EventKind::transport_tick, std::move(payload));
}

void Session::edited(ClientId client, std::int64_t seq, const std::string& op, const json& result) {
  ++revision_;
  snapshot_ = std::make_shared<const Project>(*project_);
  if (player_->mode() != TransportMode::recording) player_->invalidate();
  broadcast(EventKind::state_delta, {{"revision", revision_},
                                     {"op", op},
                                     {"cause", {{"client", client}, {"seq", seq}}},
                                     {"result", result},
                                     {"project", project_to_json(*project_)}});
}

void Session::handle(ClientId client, const json& command) {
  std::lock_guard lock(mu_);
  auto cit = clients_.find(client);
  if (cit == clients_.end()) violation(fmt::format("client {} is not connected", client));
  if (!command.is_object()) violation("command must be an object");
  auto seq_it = command.find("seq");
  if (seq_it == command.end() || !seq_it->is_number_integer()) violation("command needs an integer 'seq'");
  const std::int64_t seq = seq_it->get<std::int64_t>();
  if (cit->second.any && seq <= cit->second.last_seq)
    violation(fmt::format("seq {} does not follow {}", seq, cit->second.last_seq));
  auto op_it = command.find("op");
  if (op_it == command.end() || !op_it->is_string()) violation("command needs a string 'op'");
  if (auto s = command.find("session"); s != command.end() && (!s->is_string() || s->get<std::string>() != id_))
    violation("command addressed to another session");
  json args = json::object();
  if (auto a = command.find("args"); a != command.end()) {
    if (!a->is_object()) violation("'args' must be an object");
    args = *a;
  }
  for (const auto& [key, value] : command.items())
    if (key != "seq" && key != "op" && key != "session" && key != "args") violation(fmt::format("unknown field '{}'", key));
  cit->second.last_seq = seq;
  cit->second.any = true;

  const std::string op = op_it->get<std::string>();
  bool mutated = false;
  pending_tick_ = false;
  json result;
  try {
    result = dispatch(client, seq, op, args, mutated);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ProtocolViolation) throw;
    send(client, {seq, EventKind::error, error_json(e)});
    if (pending_tick_) tick_broadcast();
    return;
  } catch (const json::exception& e) {
    send(client, {seq, EventKind::error, error_json(e)});
    return;
  }
  send(client, {seq, op == "ingest" ? EventKind::recording_ingest_ack : EventKind::ack, result});
  if (pending_tick_) tick_broadcast();
  if (mutated) edited(client, seq, op, result);
}

json Session::dispatch(ClientId client, std::int64_t seq, const std::string& op, const json& args, bool& mutated) {
  (void)client;
  (void)seq;
  Timeline& tl = project_->timeline;
  Scene& scene = project_->scene;

  // reads and transport
  if (op == "get_project") return {{"project", project_to_json(*project_)}, {"revision", revision_}};
  if (op == "validate") {
    json list = json::array();
    for (const auto& v : reenact::validate(*project_))
      list.push_back({{"code", std::string(to_string(v.code))}, {"constraint", v.constraint}, {"message", v.message}});
    return {{"valid", list.empty()}, {"violations", list}};
  }
  if (op == "state_at") {
    const Frame f = integer(args, "frame", 0);
    if (f < 0) throw Error(ErrorCode::InvalidRange, fmt::format("frame {} is negative", f));
    return state_to_json(reenact::state_at(*snapshot_, f));
  }
  if (is_transport(op)) {
    if (op == "play") player_->play();
    if (op == "pause") player_->pause();
    if (op == "stop") player_->stop();
    if (op == "seek") player_->seek(integer(args, "frame", 0));
    if (op == "step") player_->step();
    pending_tick_ = true;
    return transport_json();
  }
  if (op == "record_start") {
    RecordOptions options;
    if (args.contains("encoding")) {
      auto enc = parse_encoding(str(args, "encoding"));
      if (!enc) bad_arg("encoding must be 'absolute' or 'delta'");
      options.encoding = *enc;
    }
    recorder_->start(SlotId(str(args, "slot")), EffectId(str(args, "effect")), options);
    pending_tick_ = true;
    return transport_json();
  }
  if (op == "ingest") return ingest(args, mutated);
  if (op == "record_stop") {
    if (!recorder_->active()) throw Error(ErrorCode::InvalidTransportTransition, "not recording");
    const IngestResult r = recorder_->stop();
    mutated = true;
    json out = transport_json();
    out["committed"] = r.committed;
    return out;
  }

  // edits
  if (recorder_->active())
    throw Error(ErrorCode::InvalidTransportTransition, fmt::format("'{}' is not allowed while recording", op));
  mutated = true;
  if (op == "create_track") {
    std::optional<std::size_t> index;
    if (auto i = opt_integer(args, "index")) {
      if (*i < 0) throw Error(ErrorCode::IndexOutOfRange, "negative index", constraint::kIndexInRange);
      index = static_cast<std::size_t>(*i);
    }
    return track_json(tl.create_track(args.value("name", std::string{}), index));
  }
  if (op == "delete_track") {
    tl.delete_track(TrackId(str(args, "track")));
    return json::object();
  }
  if (op == "reorder_track") {
    const std::int64_t i = integer(args, "index", 0);
    if (i < 0) throw Error(ErrorCode::IndexOutOfRange, "negative index", constraint::kIndexInRange);
    tl.reorder_track(TrackId(str(args, "track")), static_cast<std::size_t>(i));
    return json::object();
  }
  if (op == "set_track_flags")
    return track_json(tl.set_track_flags(TrackId(str(args, "track")), opt_bool(args, "muted"), opt_bool(args, "locked")));
  if (op == "create_slot")
    return slot_json(tl.create_slot(TrackId(str(args, "track")), integer(args, "start", 0), integer(args, "end", 0)));
  if (op == "delete_slot") {
    tl.delete_slot(SlotId(str(args, "slot")));
    return json::object();
  }
  if (op == "move_slot") {
    const SlotId id(str(args, "slot"));
    const TrackId dest = args.contains("track") ? TrackId(str(args, "track"))
                                                : tl.tracks()[tl.locate(id).track].id;
    return slot_json(tl.move_slot(id, dest, integer(args, "start", 0)));
  }
  if (op == "trim_slot")
    return slot_json(tl.trim_slot(SlotId(str(args, "slot")), opt_integer(args, "start"), opt_integer(args, "end")));
  if (op == "attach_effect") {
    const std::string type_name = str(args, "type");
    auto type = parse_effect_type(type_name);
    if (!type) bad_arg(fmt::format("unknown effect type '{}'", type_name));
    const Params params = args.contains("params") ? params_from_json(args["params"]) : Params{};
    return effect_to_json(tl.attach_effect(SlotId(str(args, "slot")), *type, str(args, "target"), params, scene));
  }
  if (op == "detach_effect") {
    const EffectId id(str(args, "effect"));
    tl.detach_effect(tl.slot_of(id).id, id);
    return json::object();
  }
  if (op == "set_params")
    return effect_to_json(tl.set_effect_params(EffectId(str(args, "effect")), params_from_json(need(args, "params")), scene));
  if (op == "register_object") return object_to_json(scene.register_object(object_from_args(args)));
  if (op == "remove_object") {
    scene.remove_object(str(args, "id"));
    return json::object();
  }
  if (op == "attach_object") {
    const Transform offset = args.contains("offset") ? transform_arg(args["offset"]) : Transform{};
    scene.attach_object(str(args, "child"), str(args, "parent"), str(args, "anchor"), offset);
    return json::object();
  }
  if (op == "detach_object") {
    scene.detach_object(str(args, "child"));
    return json::object();
  }
  if (op == "add_marker") {
    Marker m{str(args, "name"), integer(args, "start", 0), integer(args, "end", 0)};
    if (m.start < 0 || m.end < m.start)
      throw Error(ErrorCode::InvalidInterval, fmt::format("marker [{}, {}] is not ordered", m.start, m.end),
                  constraint::kIntervalOrdered);
    if (project_->find_marker(m.name))
      throw Error(ErrorCode::DuplicateId, fmt::format("marker '{}' already exists", m.name), constraint::kUniqueId);
    project_->markers.push_back(m);
    return {{"name", m.name}, {"start", m.start}, {"end", m.end}};
  }
  if (op == "remove_marker") {
    const std::string name = str(args, "name");
    auto& ms = project_->markers;
    auto it = std::find_if(ms.begin(), ms.end(), [&](const Marker& m) { return m.name == name; });
    if (it == ms.end())
      throw Error(ErrorCode::UnknownTarget, fmt::format("no marker '{}'", name), constraint::kIdExists);
    ms.erase(it);
    return json::object();
  }
  mutated = false;
  bad_arg(fmt::format("unknown op '{}'", op));
}

json Session::ingest(const json& args, bool& mutated) {
  if (!recorder_->active()) throw Error(ErrorCode::InvalidTransportTransition, "not recording");
  const double time = real(need(args, "time"), "time");
  const Frame before = player_->cursor();
  const IngestResult r = recorder_->ingest({time, input_payload(args)});
  // one tick per committed frame
  if (player_->cursor() != before || r.finished) pending_tick_ = true;
  if (r.finished) mutated = true;
  return {{"committed", r.committed}, {"finished", r.finished}};
}

bool Session::advance() {
  std::lock_guard lock(mu_);
  if (player_->mode() != TransportMode::playing) return false;
  player_->tick();
  tick_broadcast();
  return player_->mode() == TransportMode::playing;
}

bool Session::playing() const {
  std::lock_guard lock(mu_);
  return player_->mode() == TransportMode::playing;
}

SessionInfo Session::info() const {
  std::lock_guard lock(mu_);
  SessionInfo i;
  i.id = id_;
  i.clients = clients_.size();
  i.revision = revision_;
  i.mode = player_->mode();
  i.cursor = player_->cursor();
  i.duration = project_->timeline.duration();
  i.frame_rate = project_->timeline.frame_rate();
  i.recording = recorder_->active();
  return i;
}

void Session::replace(Project project) {
  std::lock_guard lock(mu_);
  if (recorder_->active()) throw Error(ErrorCode::InvalidTransportTransition, "cannot load while recording");
  *project_ = std::move(project);
  reset_engine();
  ++revision_;
  broadcast(EventKind::state_delta, {{"revision", revision_},
                                     {"op", "load_project"},
                                     {"cause", nullptr},
                                     {"result", json::object()},
                                     {"project", project_to_json(*project_)}});
}

std::shared_ptr<const Project> Session::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::string Session::save() const { return save_project(*snapshot()); }

std::vector<Violation> Session::validate() const { return reenact::validate(*snapshot()); }

SceneState Session::state_at(Frame frame) const {
  if (frame < 0) throw Error(ErrorCode::InvalidRange, fmt::format("frame {} is negative", frame));
  return reenact::state_at(*snapshot(), frame);
}

std::vector<SceneState> Session::trace(Frame from, Frame to, Frame stride) const {
  return export_trace(*snapshot(), from, to, stride);
}

// ---------------------------------------------------------------------------

std::shared_ptr<Session> SessionManager::create(Project project) {
  std::lock_guard lock(mu_);
  const std::string id = fmt::format("s{}", next_++);
  auto s = std::make_shared<Session>(id, std::move(project));
  sessions_[id] = s;
  return s;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, fmt::format("no session '{}'", id), constraint::kIdExists);
  return it->second;
}

void SessionManager::remove(const std::string& id) {
  std::lock_guard lock(mu_);
  if (sessions_.erase(id) == 0)
    throw Error(ErrorCode::UnknownSession, fmt::format("no session '{}'", id), constraint::kIdExists);
}

std::vector<std::shared_ptr<Session>> SessionManager::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::shared_ptr<Session>> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::pair(a->id().size(), a->id()) < std::pair(b->id().size(), b->id());
  });
  return out;
}

}  // namespace reenact::service
