#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "reenact/persistence.hpp"
#include "reenact/playback.hpp"
#include "reenact/project.hpp"
#include "reenact/recorder.hpp"

namespace reenact::service {

enum class EventKind { ack, error, state_delta, transport_tick, recording_ingest_ack };

std::string_view to_string(EventKind kind);

/// Outbound envelope. Terminal responses (ack, error, recording-ingest-ack)
/// carry the command's seq; broadcasts carry the session's event counter.
struct Event {
  std::int64_t seq = 0;
  EventKind kind = EventKind::ack;
  nlohmann::json payload;

  nlohmann::json to_json() const;
};

using ClientId = std::uint64_t;
using Deliver = std::function<void(const Event&)>;

struct SessionInfo {
  std::string id;
  std::size_t clients = 0;
  std::uint64_t revision = 0;
  TransportMode mode = TransportMode::stopped;
  Frame cursor = 0;
  Frame duration = 0;
  int frame_rate = 30;
  bool recording = false;

  nlohmann::json to_json() const;
};

/// One authoritative project with its transport and recorder. Commands from
/// all clients run one at a time; every delivery happens inside that
/// critical section so each client observes events in a single order.
class Session {
 public:
  Session(std::string id, Project project);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }

  ClientId connect(Deliver deliver);
  void disconnect(ClientId client);

  /// Runs one command envelope `{seq, session?, op, args?}`. Engine failures
  /// become error events; malformed envelopes and non-increasing seq throw
  /// ProtocolViolation and deliver nothing.
  void handle(ClientId client, const nlohmann::json& command);

  /// One live frame while playing; broadcasts a transport-tick. Returns
  /// whether the transport is still playing.
  bool advance();
  bool playing() const;

  SessionInfo info() const;

  /// Replaces the project (file load); broadcasts a state-delta.
  void replace(Project project);

  // Reads work on an immutable snapshot taken after the last edit.
  std::shared_ptr<const Project> snapshot() const;
  std::string save() const;
  std::vector<Violation> validate() const;
  SceneState state_at(Frame frame) const;
  std::vector<SceneState> trace(Frame from, Frame to, Frame stride) const;

 private:
  struct Client {
    Deliver deliver;
    std::int64_t last_seq = 0;
    bool any = false;
  };

  nlohmann::json dispatch(ClientId client, std::int64_t seq, const std::string& op, const nlohmann::json& args,
                          bool& mutated);
  nlohmann::json ingest(const nlohmann::json& args, bool& mutated);
  nlohmann::json transport_json() const;
  void edited(ClientId client, std::int64_t seq, const std::string& op, const nlohmann::json& result);
  void tick_broadcast();
  void broadcast(EventKind kind, nlohmann::json payload);
  void send(ClientId client, Event event);
  void reset_engine();

  std::string id_;
  mutable std::mutex mu_;
  std::unique_ptr<Project> project_;
  std::unique_ptr<Player> player_;
  std::unique_ptr<Recorder> recorder_;
  std::shared_ptr<const Project> snapshot_;
  std::map<ClientId, Client> clients_;
  ClientId next_client_ = 1;
  std::int64_t broadcast_seq_ = 0;
  std::uint64_t revision_ = 0;
  bool pending_tick_ = false;
};

/// Registry of independent sessions, ids "s1", "s2", ...
class SessionManager {
 public:
  std::shared_ptr<Session> create(Project project = Project());
  std::shared_ptr<Session> get(const std::string& id) const;  // throws UnknownSession
  void remove(const std::string& id);                         // throws UnknownSession
  std::vector<std::shared_ptr<Session>> list() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_ = 1;
};

/// `{"code", "message", "constraint"?}` for error payloads and HTTP bodies.
nlohmann::json error_json(const std::exception& e);

}  // namespace reenact::service
