#include "doctest.h"

#include "reenact/error.hpp"
#include "reenact/recorder.hpp"
#include "support.hpp"

using namespace reenact;
using reenact::test::character;
using reenact::test::key;
using reenact::test::prop;
using reenact::test::rigid;
using reenact::test::switchable;

namespace {

struct Stage {
  Project p;
  TrackId witness_track;
  EffectId witness;
  SlotId slot;
  EffectId defender;

  Stage() {
    p.scene.register_object(character("witness", {-3, 0, 0}));
    p.scene.register_object(character("defender", {0, 0, 0}));
    p.scene.register_object(prop("bat", {1, 0, 1}));
    p.scene.register_object(switchable("gun", {"idle", "fired"}));
    p.scene.register_object(prop("table"));
    p.scene.register_object(SceneObject{"room", "room", ObjectClass::environment});
    witness_track = p.timeline.create_track("witness").id;
    witness = rigid(p, witness_track, 0, 300, "witness");
    key(p, witness, Attribute::position_x, 0, -3.0);
    key(p, witness, Attribute::position_x, 300, 3.0);
    const TrackId t = p.timeline.create_track("defender").id;
    slot = p.timeline.create_slot(t, 100, 200).id;
    defender = p.timeline.attach_effect(slot, EffectType::pose_track, "defender", {}, p.scene).id;
  }
};

Transform at_x(double x) {
  Transform t;
  t.position = Vec3(x, 0, 0);
  return t;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("60 Hz input resamples to the latest sample per frame") {
  Stage s;
  Player player(s.p);
  Recorder rec(s.p, player);
  rec.start(s.slot, s.defender);
  CHECK(player.mode() == TransportMode::recording);
  CHECK(player.cursor() == 100);
  for (int k = 0; k < 120; ++k) rec.ingest({k / 60.0, at_x(k * 0.01)});
  const IngestResult r = rec.stop();
  CHECK(r.committed == 160);
  CHECK(player.mode() == TransportMode::paused);
  const auto& ch = s.p.timeline.effect(s.defender).channels.at({Attribute::position_x, 0});
  CHECK(ch.encoding == Encoding::delta);
  for (Frame f = 100; f <= 159; ++f) {
    const double expected = static_cast<double>(2 * (f - 100)) * 0.01;
    CHECK(std::abs(state_at(s.p, f).at("defender").local.position.x() - expected) < 1e-9);
  }
  CHECK(std::abs(state_at(s.p, 160).at("defender").local.position.x() - 1.19) < 1e-9);
  CHECK(std::abs(state_at(s.p, 190).at("defender").local.position.x() - 1.19) < 1e-9);
}

TEST_CASE("recording leaves other effects untouched") {
  Stage s;
  const Channel before = s.p.timeline.effect(s.witness).channels.at({Attribute::position_x, 0});
  Player player(s.p);
  Recorder rec(s.p, player);
  rec.start(s.slot, s.defender);
  for (int k = 0; k < 220 && rec.active(); ++k) rec.ingest({k / 60.0, at_x(k * 0.02)});
  const Channel& after = s.p.timeline.effect(s.witness).channels.at({Attribute::position_x, 0});
  REQUIRE(after.samples.size() == before.samples.size());
  for (std::size_t i = 0; i < before.samples.size(); ++i) {
    CHECK(after.samples[i].frame == before.samples[i].frame);
    CHECK(bit_equal(after.samples[i].value, before.samples[i].value));
  }
  CHECK(!rec.active());
}

TEST_CASE("absolute recording option") {
  Stage s;
  Player player(s.p);
  Recorder rec(s.p, player);
  rec.start(s.slot, s.defender, {Encoding::absolute});
  for (int k = 0; k <= 30; ++k) rec.ingest({k / 30.0, at_x(k * 0.5)});
  rec.stop();
  const auto& ch = s.p.timeline.effect(s.defender).channels.at({Attribute::position_x, 0});
  CHECK(ch.encoding == Encoding::absolute);
  CHECK(state_at(s.p, 110).at("defender").local.position.x() == 5.0);
}

TEST_CASE("the recording reaches the slot end and finishes") {
  Stage s;
  Player player(s.p);
  Recorder rec(s.p, player);
  rec.start(s.slot, s.defender);
  IngestResult last;
  for (int k = 0; k < 400 && !last.finished; ++k) last = rec.ingest({k / 30.0, at_x(k)});
  CHECK(last.finished);
  CHECK(last.committed == 200);
  CHECK(!rec.active());
  CHECK(player.mode() == TransportMode::paused);
}

TEST_CASE("grab appends a rigid transform following the hand") {
  Stage s;
  Player player(s.p);
  Recorder rec(s.p, player);
  rec.start(s.slot, s.defender);
  for (int k = 0; k <= 40; ++k) {
    if (k == 20) rec.ingest({k / 30.0, GrabEvent{"bat", "right_hand"}});
    rec.ingest({k / 30.0, at_x(k * 0.05)});
  }
  rec.stop();
  REQUIRE(rec.companions().size() == 1);
  const EffectInstance& bat = s.p.timeline.effect(rec.companions()[0]);
  CHECK(bat.type == EffectType::rigid_transform);
  CHECK(bat.target == "bat");
  CHECK(s.p.timeline.slot_of(bat.id).id == s.slot);
  const SceneState at121 = state_at(s.p, 121);
  const Vec3 hand = anchor_transform(at121.at("defender"), "right_hand").position;
  CHECK((at121.at("bat").world.position - hand).norm() < 1e-12);
  const SceneState at119 = state_at(s.p, 119);
  CHECK(at119.at("bat").world.position == Vec3(1, 0, 1));
}

TEST_CASE("trigger appends an interactive state event") {
  Stage s;
  const TrackId t = s.p.timeline.create_track("later").id;
  const SlotId slot = s.p.timeline.create_slot(t, 150, 250).id;
  const EffectId defender = s.p.timeline.attach_effect(slot, EffectType::pose_track, "defender", {}, s.p.scene).id;
  Player player(s.p);
  Recorder rec(s.p, player);
  rec.start(slot, defender);
  for (int k = 0; k <= 60; ++k) {
    if (k == 50) rec.ingest({k / 30.0, TriggerEvent{"gun", "fired"}});
    rec.ingest({k / 30.0, at_x(0)});
  }
  rec.stop();
  REQUIRE(rec.companions().size() == 1);
  const EffectInstance& gun = s.p.timeline.effect(rec.companions()[0]);
  CHECK(gun.type == EffectType::interactive_state);
  const auto& samples = gun.channels.at({Attribute::state, 0}).samples;
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].frame == 200);
  CHECK(std::get<std::string>(samples[0].value) == "fired");
  CHECK(state_at(s.p, 199).at("gun").state == std::optional<std::string>("idle"));
  CHECK(state_at(s.p, 200).at("gun").state == std::optional<std::string>("fired"));
}

TEST_CASE("release with physics free-falls from the hand") {
  Stage s;
  Player player(s.p);
  Recorder rec(s.p, player);
  rec.start(s.slot, s.defender);
  for (int k = 0; k <= 101; ++k) {
    if (k == 20) rec.ingest({k / 30.0, GrabEvent{"bat", "right_hand"}});
    if (k == 50) rec.ingest({k / 30.0, ReleaseEvent{"bat", true}});
    rec.ingest({k / 30.0, at_x(0)});
  }
  REQUIRE(!rec.active());
  const auto trace = export_trace(s.p, 0, 200);
  const Vec3 release = trace[150].at("bat").world.position;
  const Vec3 hand = anchor_transform(trace[150].at("defender"), "right_hand").position;
  CHECK((release - hand).norm() < 1e-12);
  REQUIRE(release.y() > 0.0);
  for (Frame f = 151; f <= 200; ++f) {
    const double t = static_cast<double>(f - 150) / 30.0;
    const double y = std::max(0.0, release.y() - 0.5 * kGravity * t * t);
    CHECK(std::abs(trace[static_cast<std::size_t>(f)].at("bat").world.position.y() - y) < 1e-9);
  }
}

TEST_CASE("recorder rejections") {
  Stage s;
  Player player(s.p);
  Recorder rec(s.p, player);
  CHECK(code_of([&] { rec.start(s.slot, EffectId("fx-99")); }) == ErrorCode::UnknownEffect);
  const TrackId t = s.p.timeline.create_track("fx").id;
  const SlotId fire = s.p.timeline.create_slot(t, 0, 10).id;
  const EffectId flame = s.p.timeline.attach_effect(fire, EffectType::fire, "table", {}, s.p.scene).id;
  CHECK(code_of([&] { rec.start(fire, flame); }) == ErrorCode::NotRecordable);
  s.p.timeline.set_track_flags(s.p.timeline.tracks()[1].id, std::nullopt, true);
  CHECK(code_of([&] { rec.start(s.slot, s.defender); }) == ErrorCode::LockedTrack);
  s.p.timeline.set_track_flags(s.p.timeline.tracks()[1].id, std::nullopt, false);

  rec.start(s.slot, s.defender);
  CHECK(code_of([&] { rec.ingest({0.1, GrabEvent{"ghost"}}); }) == ErrorCode::UnknownProp);
  CHECK(code_of([&] { rec.ingest({0.1, GrabEvent{"room"}}); }) == ErrorCode::UnknownProp);
  CHECK(code_of([&] { rec.ingest({0.1, GrabEvent{"bat", "tail"}}); }) == ErrorCode::UnknownAnchor);
  CHECK(code_of([&] { rec.ingest({0.1, TriggerEvent{"gun", "exploded"}}); }) == ErrorCode::InvalidState);
  CHECK(code_of([&] { rec.ingest({0.1, TriggerEvent{"table", "on"}}); }) == ErrorCode::IncompatibleTarget);
  rec.ingest({0.5, at_x(1)});
  CHECK(code_of([&] { rec.ingest({0.2, at_x(1)}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { rec.start(s.slot, s.defender); }) == ErrorCode::InvalidTransportTransition);
  rec.stop();
  CHECK(code_of([&] { rec.stop(); }) == ErrorCode::InvalidTransportTransition);
}

TEST_CASE("punch-in keeps values after the take") {
  Stage s;
  {
    Player player(s.p);
    Recorder rec(s.p, player);
    rec.start(s.slot, s.defender);
    for (int k = 0; k <= 100; ++k) rec.ingest({k / 30.0, at_x(k * 0.1)});
  }
  const double at190 = state_at(s.p, 190).at("defender").local.position.x();
  {
    s.p.timeline.trim_slot(s.slot, 100, 200);
    Player player(s.p);
    Recorder rec(s.p, player);
    rec.start(s.slot, s.defender);
    for (int k = 0; k <= 10; ++k) rec.ingest({k / 30.0, at_x(-1)});
    rec.stop();
  }
  CHECK(state_at(s.p, 105).at("defender").local.position.x() == doctest::Approx(-1));
  CHECK(std::abs(state_at(s.p, 190).at("defender").local.position.x() - at190) < 1e-9);
}
