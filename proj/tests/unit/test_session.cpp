#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "reenact/error.hpp"
#include "reenact/session.hpp"
#include "support.hpp"

using namespace reenact;
using namespace reenact::service;
using nlohmann::json;
using reenact::test::character;
using reenact::test::prop;

namespace {

struct Inbox {
  std::vector<Event> events;
  Deliver deliver() {
    return [this](const Event& e) { events.push_back(e); };
  }
  std::vector<Event> of(EventKind kind) const {
    std::vector<Event> out;
    for (const auto& e : events)
      if (e.kind == kind) out.push_back(e);
    return out;
  }
  const Event& last() const { return events.back(); }
};

json cmd(std::int64_t seq, const std::string& op, json args = json::object()) {
  return {{"seq", seq}, {"op", op}, {"args", std::move(args)}};
}

Project stage() {
  Project p;
  p.scene.register_object(character("defender"));
  p.scene.register_object(prop("bat"));
  return p;
}

}  // namespace

TEST_CASE("create_track acks the sender and broadcasts the delta to everyone") {
  Session s("s1", stage());
  Inbox a, b;
  const ClientId ca = s.connect(a.deliver());
  s.connect(b.deliver());
  s.handle(ca, cmd(1, "create_track", {{"name", "defender"}}));

  REQUIRE(a.events.size() == 2);
  CHECK(a.events[0].kind == EventKind::ack);
  CHECK(a.events[0].seq == 1);
  CHECK(a.events[0].payload["name"] == "defender");
  CHECK(a.events[1].kind == EventKind::state_delta);
  REQUIRE(b.events.size() == 1);
  const Event& delta = b.events[0];
  CHECK(delta.kind == EventKind::state_delta);
  CHECK(delta.payload["op"] == "create_track");
  CHECK(delta.payload["revision"] == 1);
  CHECK(delta.payload["cause"]["seq"] == 1);
  const json& tracks = delta.payload["project"]["timeline"]["tracks"];
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0]["name"] == "defender");
  CHECK(delta.to_json()["kind"] == "state-delta");
}

TEST_CASE("conflicting edits are serialized and the loser gets OverlapRejected") {
  Session s("s1", stage());
  Inbox a, b;
  const ClientId ca = s.connect(a.deliver());
  const ClientId cb = s.connect(b.deliver());
  s.handle(ca, cmd(1, "create_track"));
  const std::string track = a.events[0].payload["id"];
  s.handle(ca, cmd(2, "create_slot", {{"track", track}, {"start", 0}, {"end", 10}}));
  s.handle(cb, cmd(1, "create_slot", {{"track", track}, {"start", 5}, {"end", 20}}));
  const Event& last = b.last();
  CHECK(last.kind == EventKind::error);
  CHECK(last.seq == 1);
  CHECK(last.payload["code"] == "OverlapRejected");
  CHECK(last.payload["constraint"] == "slots-disjoint");
  CHECK(s.snapshot()->timeline.tracks()[0].slots.size() == 1);
}

TEST_CASE("envelope violations throw and deliver nothing") {
  Session s("s1", stage());
  Inbox a;
  const ClientId ca = s.connect(a.deliver());
  s.handle(ca, cmd(5, "get_project"));
  const auto code = [&](const json& c) {
    try {
      s.handle(ca, c);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  const std::size_t before = a.events.size();
  CHECK(code(cmd(5, "get_project")) == ErrorCode::ProtocolViolation);
  CHECK(code(cmd(4, "get_project")) == ErrorCode::ProtocolViolation);
  CHECK(code(json::array()) == ErrorCode::ProtocolViolation);
  CHECK(code({{"seq", 9}}) == ErrorCode::ProtocolViolation);
  CHECK(code({{"seq", 9}, {"op", "get_project"}, {"session", "s2"}}) == ErrorCode::ProtocolViolation);
  CHECK(code({{"seq", 9}, {"op", "get_project"}, {"extra", 1}}) == ErrorCode::ProtocolViolation);
  CHECK(a.events.size() == before);

  s.handle(ca, {{"seq", 10}, {"session", "s1"}, {"op", "bogus"}});
  CHECK(a.last().kind == EventKind::error);
  CHECK(a.last().payload["code"] == "InvalidArgument");
  s.handle(ca, cmd(11, "create_slot", {{"track", "nope"}, {"start", 0}, {"end", 1}}));
  CHECK(a.last().payload["code"] == "UnknownTrack");
}

TEST_CASE("every command gets exactly one terminal response; broadcasts are strictly ordered") {
  Session s("s1", stage());
  std::vector<Inbox> boxes(3);
  std::vector<ClientId> ids;
  for (auto& b : boxes) ids.push_back(s.connect(b.deliver()));
  s.handle(ids[0], cmd(1, "create_track"));
  const std::string track = boxes[0].events[0].payload["id"];

  std::mt19937_64 rng(7);
  std::vector<std::int64_t> seq(3, 1);
  std::vector<int> sent(3, 0);
  sent[0] = 1;
  for (int i = 0; i < 300; ++i) {
    const std::size_t c = rng() % 3;
    const int start = static_cast<int>(rng() % 200);
    json command = (rng() % 4 == 0) ? cmd(++seq[c], "validate")
                                    : cmd(++seq[c], "create_slot", {{"track", track}, {"start", start}, {"end", start + 5}});
    s.handle(ids[c], command);
    ++sent[c];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    std::map<std::int64_t, int> terminal;
    std::int64_t last_broadcast = 0;
    for (const auto& e : boxes[c].events) {
      if (e.kind == EventKind::ack || e.kind == EventKind::error) {
        ++terminal[e.seq];
      } else {
        CHECK(e.seq > last_broadcast);
        last_broadcast = e.seq;
      }
    }
    CHECK(terminal.size() == static_cast<std::size_t>(sent[c]));
    for (const auto& [q, n] : terminal) CHECK(n == 1);
  }
}

TEST_CASE("interleaved clients equal the same commands from one client") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    Session multi("m", stage());
    std::vector<Inbox> boxes(3);
    std::vector<ClientId> ids;
    for (auto& b : boxes) ids.push_back(multi.connect(b.deliver()));
    multi.handle(ids[0], cmd(1, "create_track", {{"name", "A"}}));
    multi.handle(ids[0], cmd(2, "create_track", {{"name", "B"}}));
    const auto& tracks = multi.snapshot()->timeline.tracks();
    const std::vector<std::string> tids = {tracks[0].id.value, tracks[1].id.value};

    std::vector<json> applied = {cmd(1, "create_track", {{"name", "A"}}), cmd(2, "create_track", {{"name", "B"}})};
    std::vector<std::int64_t> seq = {2, 0, 0};
    for (int i = 0; i < 60; ++i) {
      const std::size_t c = rng() % 3;
      const int start = static_cast<int>(rng() % 120);
      json args = {{"track", tids[rng() % 2]}, {"start", start}, {"end", start + static_cast<int>(rng() % 30)}};
      json one = cmd(++seq[c], "create_slot", args);
      multi.handle(ids[c], one);
      applied.push_back(cmd(static_cast<std::int64_t>(applied.size() + 1), "create_slot", args));
    }
    Session single("x", stage());
    Inbox box;
    const ClientId only = single.connect(box.deliver());
    for (const auto& c : applied) single.handle(only, c);
    CHECK(single.save() == multi.save());
  }
}

TEST_CASE("transport ticks follow the cursor") {
  Project p = stage();
  const TrackId t = p.timeline.create_track("T").id;
  reenact::test::rigid(p, t, 0, 10, "bat");
  Session s("s1", std::move(p));
  Inbox a;
  const ClientId ca = s.connect(a.deliver());
  s.handle(ca, cmd(1, "play"));
  CHECK(a.events[0].kind == EventKind::ack);
  CHECK(a.events[0].payload["mode"] == "playing");
  Frame expected = 0;
  CHECK(a.events[1].payload["frame"] == expected);
  while (s.advance()) {
    ++expected;
    CHECK(a.last().kind == EventKind::transport_tick);
    CHECK(a.last().payload["frame"] == expected);
  }
  CHECK(a.last().payload["frame"] == 10);
  CHECK(a.last().payload["mode"] == "stopped");
  CHECK_FALSE(s.playing());

  s.handle(ca, cmd(2, "seek", {{"frame", 4}}));
  CHECK(a.events[a.events.size() - 2].payload["frame"] == 4);
  s.handle(ca, cmd(3, "pause"));
  CHECK(a.last().kind == EventKind::error);
  CHECK(a.last().payload["code"] == "InvalidTransportTransition");
  s.handle(ca, cmd(4, "state_at", {{"frame", 3}}));
  CHECK(a.last().payload["frame"] == 3);
}

TEST_CASE("60 Hz ingest yields one ack per sample and ticks at frame rate") {
  Project p = stage();
  const TrackId t = p.timeline.create_track("T").id;
  const SlotId slot = p.timeline.create_slot(t, 0, 60).id;
  const EffectId effect = p.timeline.attach_effect(slot, EffectType::rigid_transform, "defender", {}, p.scene).id;
  Session s("s1", std::move(p));
  Inbox a, watcher;
  const ClientId ca = s.connect(a.deliver());
  s.connect(watcher.deliver());
  s.handle(ca, cmd(1, "record_start", {{"slot", slot.value}, {"effect", effect.value}}));
  CHECK(a.events[0].kind == EventKind::ack);
  CHECK(a.events[0].payload["mode"] == "recording");

  s.handle(ca, cmd(2, "create_track"));
  CHECK(a.last().payload["code"] == "InvalidTransportTransition");

  const std::size_t ticks_before = watcher.of(EventKind::transport_tick).size();
  std::int64_t seq = 2;
  for (int k = 0; k < 60; ++k) {
    s.handle(ca, cmd(++seq, "ingest", {{"time", k / 60.0}, {"transform", {{"position", {k * 0.05, 0.0, 0.0}}}}}));
    const auto acks = a.of(EventKind::recording_ingest_ack);
    CHECK(acks.back().seq == seq);
  }
  const auto acks = a.of(EventKind::recording_ingest_ack);
  CHECK(acks.size() == 60);
  const auto ticks = watcher.of(EventKind::transport_tick);
  // one second at 30 f/s
  const std::size_t live = ticks.size() - ticks_before;
  CHECK(live >= 29);
  CHECK(live <= 31);
  for (std::size_t i = ticks_before + 1; i < ticks.size(); ++i)
    CHECK(ticks[i].payload["frame"].get<Frame>() == ticks[i - 1].payload["frame"].get<Frame>() + 1);

  s.handle(ca, cmd(++seq, "record_stop"));
  CHECK(a.events[a.events.size() - 2].kind == EventKind::ack);
  CHECK(a.last().kind == EventKind::state_delta);
  CHECK(a.last().payload["op"] == "record_stop");
  const auto& channels = s.snapshot()->timeline.effect(effect).channels;
  CHECK_FALSE(channels.empty());
}

TEST_CASE("scene edits, markers and params over the wire") {
  Session s("s1", stage());
  Inbox a;
  const ClientId ca = s.connect(a.deliver());
  s.handle(ca, cmd(1, "register_object",
                   {{"object", {{"id", "bin"}, {"class", "prop"}, {"transform", {{"position", {1, 0, 2}}}}}}}));
  CHECK(a.events[0].kind == EventKind::ack);
  CHECK(s.snapshot()->scene.at("bin").initial.position == Vec3(1, 0, 2));
  s.handle(ca, cmd(2, "register_object", {{"object", {{"id", "bin"}}}}));
  CHECK(a.last().payload["code"] == "DuplicateId");
  s.handle(ca, cmd(3, "create_track"));
  const std::string track = s.snapshot()->timeline.tracks()[0].id.value;
  s.handle(ca, cmd(4, "create_slot", {{"track", track}, {"start", 0}, {"end", 30}}));
  const std::string slot = s.snapshot()->timeline.tracks()[0].slots[0].id.value;
  s.handle(ca, cmd(5, "attach_effect",
                   {{"slot", slot}, {"type", "Fire"}, {"target", "bin"}, {"params", {{"explosion_type", "large"}}}}));
  const std::string effect = a.events[a.events.size() - 2].payload["id"];
  s.handle(ca, cmd(6, "set_params", {{"effect", effect}, {"params", {{"explosion_type", "huge"}}}}));
  CHECK(a.last().payload["code"] == "InvalidParam");
  s.handle(ca, cmd(7, "attach_effect", {{"slot", slot}, {"type", "Fire"}, {"target", "bin"}}));
  CHECK(a.last().payload["code"] == "DuplicateEffectTarget");
  CHECK(a.last().payload["constraint"] == "unique-effect-target");
  s.handle(ca, cmd(8, "add_marker", {{"name", "inside-room"}, {"start", 3}, {"end", 9}}));
  CHECK(s.snapshot()->markers.size() == 1);
  s.handle(ca, cmd(9, "attach_object", {{"child", "bat"}, {"parent", "defender"}, {"anchor", "tail"}}));
  CHECK(a.last().payload["code"] == "UnknownAnchor");
  s.handle(ca, cmd(10, "trim_slot", {{"slot", slot}, {"end", 20}}));
  CHECK(s.snapshot()->timeline.duration() == 20);
  s.handle(ca, cmd(11, "validate"));
  CHECK(a.last().payload["valid"] == true);
  CHECK(s.info().revision == 6);
}

TEST_CASE("session manager") {
  SessionManager m;
  auto a = m.create();
  auto b = m.create(stage());
  CHECK(a->id() == "s1");
  CHECK(b->id() == "s2");
  CHECK(m.get("s2") == b);
  CHECK(m.list().size() == 2);
  m.remove("s1");
  try {
    m.get("s1");
    FAIL("expected UnknownSession");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSession);
  }
}
