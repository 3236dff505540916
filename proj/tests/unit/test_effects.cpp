#include <cmath>
#include <random>

#include "doctest.h"

#include "reenact/error.hpp"
#include "reenact/playback.hpp"
#include "support.hpp"

using namespace reenact;
using reenact::test::key;
using reenact::test::prop;
using reenact::test::rigid;
using reenact::test::switchable;

namespace {

SceneState single(const std::string& id) {
  SceneState s;
  ObjectState o;
  o.id = id;
  s.objects.push_back(o);
  return s;
}

}  // namespace

TEST_CASE("linear interpolation of position") {
  Channel c;
  upsert_sample(c, 0, 0.0);
  upsert_sample(c, 10, 10.0);
  const SlotWindow w{0, 20};
  CHECK(std::get<double>(*evaluate_channel(c, w, 5, 3.0)) == 5.0);
  CHECK(std::get<double>(*evaluate_channel(c, w, 10, 3.0)) == 10.0);
  CHECK(std::get<double>(*evaluate_channel(c, w, 15, 3.0)) == 10.0);
}

TEST_CASE("before the first sample the initial value applies") {
  Channel c;
  upsert_sample(c, 5, 1.0);
  upsert_sample(c, 9, 2.0);
  CHECK(std::get<double>(*evaluate_channel(c, {0, 20}, 4, -7.0)) == -7.0);
  CHECK(!evaluate_channel(c, {10, 20}, 12, -7.0));
}

TEST_CASE("slerp of rotation keyframes") {
  Channel c;
  upsert_sample(c, 0, Quat::Identity());
  upsert_sample(c, 10, Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ())));
  const Quat mid = std::get<Quat>(*evaluate_channel(c, {0, 10}, 5, Quat::Identity()));
  const Quat expected(Eigen::AngleAxisd(std::numbers::pi / 4, Vec3::UnitZ()));
  CHECK(mid.angularDistance(expected) < 1e-12);
}

TEST_CASE("delta channel sums after a scan") {
  Project p;
  p.scene.register_object(prop("knife"));
  const TrackId t = p.timeline.create_track("A").id;
  const EffectId e = rigid(p, t, 0, 10, "knife");
  for (Frame f = 1; f <= 5; ++f) key(p, e, Attribute::position_x, f, 1.0, Encoding::delta);
  CHECK(state_at(p, 5).at("knife").local.position.x() == 5.0);
  CHECK(state_at(p, 8).at("knife").local.position.x() == 5.0);
}

TEST_CASE("encoding conversions replay identically") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> step(1, 6);
  std::uniform_int_distribution<int> value(-20, 20);
  for (int round = 0; round < 200; ++round) {
    Channel abs;
    Frame f = static_cast<Frame>(rng() % 5);
    for (int i = 0; i < 8; ++i) {
      upsert_sample(abs, f, static_cast<double>(value(rng)));
      f += step(rng);
    }
    const SlotWindow w{0, f + 5};
    const SampleValue base = static_cast<double>(value(rng));
    const Channel delta = to_delta(abs, base, w);
    const Channel back = to_absolute(delta, base);
    for (Frame g = 0; g <= w.end; ++g) {
      const double a = std::get<double>(*evaluate_channel(abs, w, g, base));
      CHECK(std::get<double>(*evaluate_channel(delta, w, g, base)) == a);
      CHECK(std::get<double>(*evaluate_channel(back, w, g, base)) == a);
    }
  }
}

TEST_CASE("signal discipline of a runtime") {
  Scene scene;
  scene.register_object(prop("knife"));
  EffectInstance e;
  e.id = EffectId("fx-1");
  e.target = "knife";
  e.params = normalized_params(EffectType::rigid_transform, {});
  e.captured_initial = capture(scene.at("knife"));
  EffectRuntime rt;
  const SlotWindow w{10, 20};
  CHECK_THROWS_AS(rt.pause(5), Error);
  try {
    rt.pause(5);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NotStarted);
  }
  try {
    rt.start(e, w, 25);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::FrameOutOfSlot);
  }
  rt.start(e, w, 15);
  CHECK(rt.started());
  rt.pause(17);
  CHECK(!rt.started());
  std::vector<Write> out;
  const SceneState acc = single("knife");
  try {
    rt.update(e, w, 18, {acc, FloorPlan{}, 30}, out);
    FAIL("update after pause");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NotStarted);
  }
}

TEST_CASE("free fall from rest matches closed form") {
  Project p;
  p.scene.register_object(prop("ball", {0, 10, 0}));
  const TrackId t = p.timeline.create_track("A").id;
  const EffectId e = rigid(p, t, 0, 100, "ball", {{"physics", true}});
  key(p, e, Attribute::position_y, 0, 10.0);
  const auto trace = export_trace(p, 0, 60);
  for (Frame f = 0; f <= 60; ++f) {
    const double s = static_cast<double>(f) / 30.0;
    const double expected = std::max(0.0, 10.0 - 0.5 * kGravity * s * s);
    CHECK(std::abs(trace[static_cast<std::size_t>(f)].at("ball").world.position.y() - expected) < 1e-9);
  }
  CHECK(std::abs(trace[30].at("ball").world.position.y() - 5.095) < 1e-9);
}

TEST_CASE("physics respects ground and holds without physics") {
  Project p;
  p.scene.register_object(prop("rock"));
  p.scene.register_object(prop("cup", {0, 1, 0}));
  const TrackId t = p.timeline.create_track("A").id;
  const EffectId rock = rigid(p, t, 0, 50, "rock", {{"physics", true}});
  key(p, rock, Attribute::position_y, 0, 0.0);
  const TrackId u = p.timeline.create_track("B").id;
  const EffectId cup = rigid(p, u, 0, 50, "cup");
  key(p, cup, Attribute::position_y, 0, 1.0);
  key(p, cup, Attribute::position_y, 10, 2.0);
  for (const auto& s : export_trace(p, 0, 50)) {
    CHECK(s.at("rock").world.position.y() == 0.0);
    if (s.frame >= 10) CHECK(s.at("cup").world.position.y() == 2.0);
  }
}

TEST_CASE("handoff velocity is the last keyframe difference") {
  Project p;
  p.scene.register_object(prop("ball", {0, 5, 0}));
  const TrackId t = p.timeline.create_track("A").id;
  const EffectId e = rigid(p, t, 0, 100, "ball", {{"physics", true}});
  key(p, e, Attribute::position_x, 0, 0.0);
  key(p, e, Attribute::position_x, 10, 1.0);
  key(p, e, Attribute::position_y, 10, 5.0);
  const auto trace = export_trace(p, 0, 20);
  // 0.1 m per frame = 3 m/s along x, zero vertical velocity at frame 10
  const double dt = 10.0 / 30.0;
  CHECK(std::abs(trace[20].at("ball").world.position.x() - (1.0 + 3.0 * dt)) < 1e-9);
  CHECK(std::abs(trace[20].at("ball").world.position.y() - (5.0 - 0.5 * kGravity * dt * dt)) < 1e-9);
  CHECK(std::abs(trace[10].at("ball").world.position.x() - 1.0) < 1e-9);
}

TEST_CASE("a wall stops a falling object") {
  Project p;
  p.scene.register_object(prop("ball", {0, 5, 0}));
  p.scene.floor_plan().walls.push_back({{1, -5}, {1, 5}});
  const TrackId t = p.timeline.create_track("A").id;
  const EffectId e = rigid(p, t, 0, 100, "ball", {{"physics", true}});
  key(p, e, Attribute::position_x, 0, 0.0);
  key(p, e, Attribute::position_x, 1, 0.2);
  const SceneState s = state_at(p, 100);
  CHECK(s.at("ball").world.position.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.at("ball").world.position.y() > 0.0);
}

TEST_CASE("interactive state replay") {
  Project p;
  p.scene.register_object(switchable("gun", {"idle", "fired"}));
  const TrackId t = p.timeline.create_track("A").id;
  const SlotId s = p.timeline.create_slot(t, 0, 300).id;
  const EffectId e = p.timeline.attach_effect(s, EffectType::interactive_state, "gun", {}, p.scene).id;
  record_state_event(p.timeline.mutable_effect(e), p.scene.at("gun"), 120, "fired");
  CHECK(state_at(p, 119).at("gun").state == std::optional<std::string>("idle"));
  CHECK(state_at(p, 120).at("gun").state == std::optional<std::string>("fired"));
  try {
    record_state_event(p.timeline.mutable_effect(e), p.scene.at("gun"), 50, "exploded");
    FAIL("accepted an undeclared state");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::InvalidState);
  }
}

TEST_CASE("floating arrows") {
  Project p;
  p.scene.register_object(prop("knife", {1, 0, 0}));
  p.scene.register_object(test::character("defender", {4, 0, 0}));
  const TrackId t = p.timeline.create_track("A").id;
  const SlotId s = p.timeline.create_slot(t, 0, 60).id;
  p.timeline.attach_effect(s, EffectType::floating_arrows, "knife", {{"destination", std::string("defender")}},
                           p.scene);
  p.timeline.create_slot(t, 90, 100);
  const SceneState at15 = state_at(p, 15);
  REQUIRE(at15.at("knife").arrows.size() == 1);
  const ArrowDecoration& a = at15.at("knife").arrows[0];
  CHECK(a.phase == 0.5);
  CHECK(a.from == Vec3(1, 0, 0));
  CHECK(a.to == Vec3(4, 0, 0));
  CHECK(state_at(p, 61).at("knife").arrows.empty());

  Project q;
  q.scene.register_object(prop("knife"));
  const TrackId u = q.timeline.create_track("A").id;
  const SlotId v = q.timeline.create_slot(u, 0, 10).id;
  q.timeline.attach_effect(v, EffectType::floating_arrows, "knife", {{"destination", std::string("knife")}}, q.scene);
  const auto& self = state_at(q, 3).at("knife").arrows;
  REQUIRE(self.size() == 1);
  CHECK(self[0].from == self[0].to);

  q.scene.remove_object("knife");
  q.scene.register_object(prop("other"));
  try {
    state_at(q, 3);
    FAIL("resolved a deleted destination");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::UnknownTarget);
  }
}

TEST_CASE("fire is scoped to its slot") {
  Project p;
  p.scene.register_object(prop("bin"));
  const TrackId t = p.timeline.create_track("A").id;
  const SlotId s = p.timeline.create_slot(t, 100, 200).id;
  p.timeline.attach_effect(s, EffectType::fire, "bin", {{"explosion_type", std::string("small")}}, p.scene);
  p.timeline.create_slot(t, 300, 301);
  const auto fire = state_at(p, 150).at("bin").fire;
  REQUIRE(fire);
  CHECK(fire->burning);
  CHECK(fire->explosion_type == "small");
  CHECK(fire->firewall_type == "none");
  CHECK(!state_at(p, 99).at("bin").fire);
  CHECK(!state_at(p, 201).at("bin").fire);
}

TEST_CASE("param schemas are strict") {
  CHECK_THROWS_AS(normalized_params(EffectType::fire, {{"explosion_type", std::string("huge")}}), Error);
  CHECK_THROWS_AS(normalized_params(EffectType::floating_arrows, {}), Error);
  CHECK_THROWS_AS(normalized_params(EffectType::rigid_transform, {{"physics", std::int64_t{1}}}), Error);
  const Params fire = normalized_params(EffectType::fire, {});
  CHECK(param_bool(fire, "apply_fire"));
  CHECK(param_string(fire, "explosion_type") == "none");
}

TEST_CASE("pose track replays joints verbatim") {
  Project p;
  p.scene.register_object(test::character("defender"));
  const TrackId t = p.timeline.create_track("A").id;
  const SlotId s = p.timeline.create_slot(t, 0, 20).id;
  const EffectId e = p.timeline.attach_effect(s, EffectType::pose_track, "defender", {}, p.scene).id;
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::map<Frame, Vec3> wrist;
  for (Frame f : {0, 3, 7, 20}) {
    const Vec3 v(u(rng), u(rng), u(rng));
    wrist[f] = v;
    upsert_sample(p.timeline.mutable_effect(e).channels[{Attribute::joint, 9}], f, v);
  }
  for (const auto& [f, v] : wrist) CHECK(bit_equal((*state_at(p, f).at("defender").pose)[9], v));
}
