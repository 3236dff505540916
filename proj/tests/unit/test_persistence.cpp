#include <string>

#include "doctest.h"

#include "random_project.hpp"
#include "reenact/error.hpp"
#include "reenact/persistence.hpp"
#include "support.hpp"

using namespace reenact;
using reenact::test::character;
using reenact::test::key;
using reenact::test::prop;
using reenact::test::rigid;
using reenact::test::switchable;

namespace {

template <typename F>
Error caught(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error thrown");
  return Error(ErrorCode::InvalidArgument, "");
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("empty project round trip") {
  const Project empty;
  const std::string bytes = save_project(empty);
  const Project back = load_project(bytes);
  CHECK(back.scene.objects().empty());
  CHECK(back.timeline.tracks().empty());
  CHECK(back.timeline.frame_rate() == 30);
  CHECK(save_project(back) == bytes);
  const auto doc = nlohmann::json::parse(bytes);
  CHECK(doc["format"] == "reenact-project");
  CHECK(doc["version"] == 1);
  CHECK(doc["duration"] == 0);
}

TEST_CASE("random projects round trip byte-identically") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    test::ProjectGenerator gen(seed);
    const Project p = gen.make();
    const std::string a = save_project(p);
    const Project q = load_project(a);
    CHECK(save_project(q) == a);
    const Frame d = p.timeline.duration();
    CHECK(write_trace(export_trace(p, 0, d), TraceFormat::rows) == write_trace(export_trace(q, 0, d), TraceFormat::rows));
  }
}

TEST_CASE("load rejects malformed input") {
  const std::string good = save_project(Project());
  const Error truncated = caught([&] { load_project(good.substr(0, good.size() / 2)); });
  CHECK(truncated.code() == ErrorCode::MalformedFile);
  CHECK(std::string(truncated.what()).starts_with("byte "));

  auto doc = nlohmann::json::parse(good);
  doc["version"] = 99;
  CHECK(caught([&] { load_project(doc.dump()); }).code() == ErrorCode::UnsupportedVersion);

  doc = nlohmann::json::parse(good);
  doc["extra"] = 1;
  CHECK(caught([&] { load_project(doc.dump()); }).code() == ErrorCode::MalformedFile);

  doc = nlohmann::json::parse(good);
  doc["duration"] = 12;
  CHECK(caught([&] { load_project(doc.dump()); }).code() == ErrorCode::ValidationFailed);
}

TEST_CASE("dangling target fails validation on save and load") {
  Project p;
  p.scene.register_object(prop("knife"));
  const TrackId t = p.timeline.create_track("A").id;
  rigid(p, t, 0, 10, "knife");
  auto doc = nlohmann::json::parse(save_project(p));
  doc["scene"]["objects"] = nlohmann::json::array();
  const Error e = caught([&] { load_project(doc.dump()); });
  CHECK(e.code() == ErrorCode::ValidationFailed);
  CHECK(std::string(e.what()).find("UnknownTarget") != std::string::npos);

  p.scene.remove_object("knife");
  CHECK(caught([&] { save_project(p); }).code() == ErrorCode::ValidationFailed);
}

TEST_CASE("unknown effect types and params are rejected") {
  Project p;
  p.scene.register_object(prop("knife"));
  const TrackId t = p.timeline.create_track("A").id;
  rigid(p, t, 0, 10, "knife");
  const auto good = nlohmann::json::parse(save_project(p));
  auto doc = good;
  doc["timeline"]["tracks"][0]["slots"][0]["effects"][0]["type"] = "Teleport";
  CHECK(caught([&] { load_project(doc.dump()); }).code() == ErrorCode::MalformedFile);
  doc = good;
  doc["timeline"]["tracks"][0]["slots"][0]["effects"][0]["params"]["bounce"] = true;
  const ErrorCode c = caught([&] { load_project(doc.dump()); }).code();
  CHECK((c == ErrorCode::ValidationFailed || c == ErrorCode::MalformedFile));
}

TEST_CASE("channel blobs round trip every value kind") {
  Project p;
  p.scene.register_object(character("defender"));
  p.scene.register_object(switchable("gun", {"idle", "fired"}));
  p.scene.register_object(prop("bat"));
  const TrackId t = p.timeline.create_track("A").id;
  const EffectId move = rigid(p, t, 0, 30, "bat");
  key(p, move, Attribute::position_x, 0, 0.1, Encoding::delta);
  key(p, move, Attribute::position_x, 7, -2.5, Encoding::delta);
  key(p, move, Attribute::rotation, 3, Quat(Eigen::AngleAxisd(0.3, Vec3::UnitY())));
  key(p, move, Attribute::scale, 4, Vec3(1, 2, 3));
  Channel& c = p.timeline.mutable_effect(move).channels[{Attribute::attachment, 0}];
  upsert_sample(c, 5, std::optional<AttachmentRef>(AttachmentRef{"defender", "left_hand", {}}));
  upsert_sample(c, 9, std::optional<AttachmentRef>{});
  const SlotId s = p.timeline.tracks()[0].slots[0].id;
  const EffectId gun = p.timeline.attach_effect(s, EffectType::interactive_state, "gun", {}, p.scene).id;
  key(p, gun, Attribute::state, 12, std::string("fired"));
  const std::string a = save_project(p);
  const Project q = load_project(a);
  CHECK(save_project(q) == a);
  for (const auto& [k, ch] : p.timeline.effect(move).channels) {
    const Channel& other = q.timeline.effect(move).channels.at(k);
    CHECK(other.encoding == ch.encoding);
    REQUIRE(other.samples.size() == ch.samples.size());
    for (std::size_t i = 0; i < ch.samples.size(); ++i) {
      CHECK(other.samples[i].frame == ch.samples[i].frame);
      CHECK(bit_equal(other.samples[i].value, ch.samples[i].value));
    }
  }
}

TEST_CASE("rows trace layout") {
  Project p;
  p.scene.register_object(prop("a"));
  p.scene.register_object(prop("b", {1.5, 0, -2}));
  p.scene.register_object(switchable("gun", {"idle", "fired"}));
  const TrackId t = p.timeline.create_track("A").id;
  rigid(p, t, 0, 1, "a");
  const std::string rows = write_trace(export_trace(p, 0, 1), TraceFormat::rows);
  CHECK(count_lines(rows) == 7);
  CHECK(rows.starts_with("frame,object,x,y,z,qw,qx,qy,qz,state,decorations\n"));
  CHECK(rows.find("0,b,1.5,0,-2,1,0,0,0,,\n") != std::string::npos);
  CHECK(rows.find("1,gun,0,0,0,1,0,0,0,idle,\n") != std::string::npos);
  CHECK(rows == write_trace(export_trace(p, 0, 1), TraceFormat::rows));

  const auto doc = nlohmann::json::parse(write_trace(export_trace(p, 0, 1), TraceFormat::structured));
  CHECK(doc["frames"].size() == 2);
  CHECK(doc["frames"][1]["objects"][2]["state"] == "idle");

  const auto paths = read_trace_paths(rows);
  REQUIRE(paths.count("b") == 1);
  CHECK(paths.at("b").size() == 2);
  CHECK(paths.at("b")[1].position == Vec2(1.5, -2));
}

TEST_CASE("format_real") {
  CHECK(format_real(-0.0) == "0");
  CHECK(format_real(1.0) == "1");
  CHECK(format_real(1.0 / 3.0) == "0.333333333");
  CHECK(format_real(123456789012.0) == "1.23456789e+11");
}

TEST_CASE("read_telemetry") {
  const std::string ok =
      "participant,task,t,x,y,height,yaw_deg\n"
      "p1,t1,0,0,0,1.6,90\n"
      "p1,t1,0.5,1,0,1.6,-90\n"
      "p1,t1,1,2,0,1.6,360\n";
  const auto streams = read_telemetry(ok);
  REQUIRE(streams.size() == 1);
  CHECK(streams[0].participant == "p1");
  REQUIRE(streams[0].samples.size() == 3);
  CHECK(streams[0].samples[1].yaw_deg == 270.0);
  CHECK(streams[0].samples[2].yaw_deg == 0.0);

  const std::string decreasing =
      "participant,task,t,x,y,height,yaw_deg\n"
      "p1,t1,0,0,0,1.6,0\n"
      "p1,t1,1,0,0,1.6,0\n"
      "p1,t1,2,0,0,1.6,0\n"
      "p1,t1,1.5,0,0,1.6,0\n";
  const Error e = caught([&] { read_telemetry(decreasing); });
  CHECK(e.code() == ErrorCode::MalformedTelemetry);
  CHECK(std::string(e.what()).starts_with("line 5"));

  CHECK(read_telemetry("").empty());
  CHECK(caught([&] { read_telemetry("a,b\n"); }).code() == ErrorCode::MalformedTelemetry);

  const std::string two =
      "participant,task,t,x,y,height,yaw_deg,pitch_deg\n"
      "p1,t1,0,0,0,20,0,-90\n"
      "p2,t1,0,0,0,20,0,-45\n"
      "p1,t1,1,0,0,20,0,\n";
  const auto split = read_telemetry(two);
  REQUIRE(split.size() == 2);
  CHECK(split[0].samples.size() == 2);
  CHECK(split[1].samples[0].pitch_deg == -45.0);
}
