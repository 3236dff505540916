#include "cli.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <optional>

#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"

#include "reenact/analytics.hpp"
#include "reenact/error.hpp"
#include "reenact/persistence.hpp"
#include "reenact/playback.hpp"
#include "reenact/script.hpp"
#include "reenact/server.hpp"

namespace reenact::cli {

namespace fs = std::filesystem;

namespace {

/// Usage errors detected after option parsing.
struct UsageError {
  std::string message;
};

bool is_script(const fs::path& path) { return path.extension() == ".crimescn"; }

Project load_any(const fs::path& path) {
  const std::string bytes = read_file(path);
  return is_script(path) ? parse_scenario(bytes) : load_project(bytes);
}

void print(std::ostream& os, std::string_view text) { os << text << '\n'; }

// -- validate ----------------------------------------------------------------

int cmd_validate(const fs::path& path, std::ostream& out) {
  const std::string bytes = read_file(path);
  Project project;
  std::vector<std::string> problems;
  if (is_script(path)) {
    project = parse_scenario(bytes);
  } else {
    DecodedProject d = decode_project(bytes);
    for (const auto& v : validate(d.project)) problems.push_back(format_violation(v));
    if (d.declared_duration != d.project.timeline.duration())
      problems.push_back(fmt::format("ValidationFailed [duration-cached]: declared duration {} differs from slot extent {}",
                                     d.declared_duration, d.project.timeline.duration()));
    project = std::move(d.project);
  }
  if (!problems.empty()) {
    print(out, fmt::format("{}: invalid, {} violation(s)", path.string(), problems.size()));
    for (const auto& p : problems) print(out, "  " + p);
    return kExitData;
  }
  std::size_t slots = 0;
  std::size_t effects = 0;
  for (const auto& t : project.timeline.tracks())
    for (const auto& s : t.slots) {
      ++slots;
      effects += s.effects.size();
    }
  print(out, fmt::format("{}: ok, {} objects, {} tracks, {} slots, {} effects, {} frames @ {} f/s", path.string(),
                         project.scene.objects().size(), project.timeline.tracks().size(), slots, effects,
                         project.timeline.duration(), project.timeline.frame_rate()));
  return kExitOk;
}

// -- play --------------------------------------------------------------------

struct PlayOptions {
  fs::path project;
  std::optional<Frame> from;
  std::optional<Frame> to;
  Frame stride = 1;
  std::string out;
  std::string format = "rows";
};

int cmd_play(const PlayOptions& o, std::ostream& out, std::ostream& err) {
  if (o.stride < 1) throw UsageError{"--stride must be at least 1"};
  if (o.from && *o.from < 0) throw UsageError{"--from must not be negative"};
  if (o.from && o.to && *o.from > *o.to) throw UsageError{fmt::format("--from {} is after --to {}", *o.from, *o.to)};
  const Project project = load_any(o.project);
  const Frame duration = project.timeline.duration();
  const Frame from = o.from.value_or(0);
  const Frame to = o.to.value_or(duration);
  if (from > to) throw UsageError{fmt::format("--from {} is after the end frame {}", from, to)};
  const auto states = export_trace(project, from, to, o.stride);
  const std::string text = write_trace(states, o.format == "structured" ? TraceFormat::structured : TraceFormat::rows);
  const std::string summary = fmt::format("duration {} frames @ {} f/s, {} states", duration,
                                          project.timeline.frame_rate(), states.size());
  if (o.out.empty() || o.out == "-") {
    out << text;
    print(err, summary);
  } else {
    write_file(o.out, text);
    print(out, fmt::format("{} -> {}", summary, o.out));
  }
  return kExitOk;
}

// -- parse -------------------------------------------------------------------

int cmd_parse(const fs::path& path, const std::string& dest, bool canonical, std::ostream& out) {
  const std::string text = read_file(path);
  if (canonical) {
    out << script::print(script::parse(text));
    return kExitOk;
  }
  const std::string bytes = save_project(parse_scenario(text));
  if (dest.empty() || dest == "-") {
    out << bytes;
  } else {
    write_file(dest, bytes);
    print(out, fmt::format("{} -> {}", path.string(), dest));
  }
  return kExitOk;
}

// -- analyze -----------------------------------------------------------------

struct AnalyzeOptions {
  std::vector<std::string> inputs;
  std::string task;
  bool map = false;
  bool arcs = false;
  bool paths = false;
  bool gaze_hits = false;
  std::size_t samples = 200;
  std::size_t clusters = 3;
  double radius = 0.5;
  double separation = 1.0;
  double peak_fraction = 0.2;
  double cell = 0.1;
  std::string reference;
  std::string object = "defender";
  std::string plan;
  std::string out = ".";
};

std::vector<fs::path> telemetry_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", in));
    }
  }
  return files;
}

std::string density_csv(const DensityGrid& g) {
  std::string s = "col,row,x,y,density\n";
  for (std::size_t r = 0; r < g.spec.height; ++r)
    for (std::size_t c = 0; c < g.spec.width; ++c) {
      const double v = g.at(c, r);
      if (v <= 0.0) continue;
      const Vec2 p = g.cell_center(c, r);
      s += fmt::format("{},{},{},{},{}\n", c, r, format_real(p.x()), format_real(p.y()), format_real(v));
    }
  return s;
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out) {
  if (o.paths && o.reference.empty()) throw UsageError{"--paths needs --reference TRACE"};
  if (o.gaze_hits && o.plan.empty()) throw UsageError{"--gaze-hits needs --plan PROJECT"};
  if (o.samples < 2) throw UsageError{"--samples must be at least 2"};

  std::vector<TelemetryStream> streams;
  for (const auto& file : telemetry_files(o.inputs)) {
    auto more = read_telemetry(read_file(file));
    for (auto& s : more)
      if (o.task.empty() || s.task == o.task) streams.push_back(std::move(s));
  }
  if (streams.empty()) throw Error(ErrorCode::EmptyInput, "no telemetry found");

  std::vector<TelemetryStream> normalized;
  for (const auto& s : streams) normalized.push_back(normalize_duration(s, o.samples));

  const fs::path dir(o.out);
  fs::create_directories(dir);
  const bool map = o.map || (!o.arcs && !o.paths && !o.gaze_hits);
  DensityOptions dopt;
  dopt.cell = o.cell;

  print(out, fmt::format("{} stream(s){}", streams.size(), o.task.empty() ? "" : fmt::format(" for task {}", o.task)));
  std::optional<DensityGrid> density;
  if (map || o.arcs) density = density_map(normalized, dopt);

  if (map) {
    SvgStyle style;
    style.title = "Position density";
    write_file(dir / "density.svg", render_density_svg(*density, style));
    write_file(dir / "density.csv", density_csv(*density));
    print(out, fmt::format("density: {}x{} cells, bandwidth {} m, integral {} -> {}", density->spec.width,
                           density->spec.height, format_real(density->bandwidth), format_real(density->integral()),
                           (dir / "density.svg").string()));
  }

  if (o.arcs) {
    std::vector<Vec2> centers = find_clusters(*density, o.clusters, o.separation);
    if (!centers.empty()) {
      double top = 0.0;
      std::vector<double> values;
      for (const auto& c : centers) {
        const auto col = static_cast<std::size_t>((c.x() - density->spec.origin.x()) / density->spec.cell);
        const auto row = static_cast<std::size_t>((c.y() - density->spec.origin.y()) / density->spec.cell);
        values.push_back(density->at(std::min(col, density->spec.width - 1), std::min(row, density->spec.height - 1)));
        top = std::max(top, values.back());
      }
      std::vector<Vec2> kept;
      for (std::size_t i = 0; i < centers.size(); ++i)
        if (values[i] >= o.peak_fraction * top) kept.push_back(centers[i]);
      centers = kept;
    }
    std::vector<GazeArc> arcs;
    std::string csv = "cluster,x,y,count,outliers,outside,median_deg";
    for (std::size_t b = 0; b < kArcBins; ++b) csv += fmt::format(",bin{}", b * 10);
    csv += "\n";
    for (std::size_t i = 0; i < centers.size(); ++i) {
      GazeArc arc;
      try {
        arc = gaze_arc(normalized, centers[i], o.radius);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoSamplesInRadius) throw;
        continue;
      }
      csv += fmt::format("{},{},{},{},{},{},{}", i + 1, format_real(arc.center.x()), format_real(arc.center.y()),
                         arc.count, arc.outliers, arc.outside, format_real(arc.median_deg));
      for (std::size_t b = 0; b < kArcBins; ++b) csv += fmt::format(",{}", arc.histogram[b]);
      csv += "\n";
      arcs.push_back(arc);
    }
    SvgStyle style;
    style.title = "Gaze arcs";
    write_file(dir / "arcs.svg", render_arcs_svg(arcs, &*density, style));
    write_file(dir / "arcs.csv", csv);
    print(out, fmt::format("arcs: {} cluster(s) -> {}", arcs.size(), (dir / "arcs.svg").string()));
  }

  if (o.gaze_hits) {
    const Project plan = load_any(o.plan);
    GazeHitMap hits = gaze_hit_map(normalized, plan.scene.floor_plan(), dopt);
    SvgStyle style;
    style.title = "Gaze hits";
    write_file(dir / "gaze_hits.svg", render_density_svg(hits.grid, style));
    write_file(dir / "gaze_hits.csv", density_csv(hits.grid));
    print(out, fmt::format("gaze hits: {} hit(s), {} miss(es) -> {}", hits.hits.size(), hits.misses,
                           (dir / "gaze_hits.svg").string()));
  }

  if (o.paths) {
    const auto traced = read_trace_paths(read_file(o.reference));
    auto it = traced.find(o.object);
    if (it == traced.end())
      throw Error(ErrorCode::UnknownTarget, fmt::format("reference trace has no object '{}'", o.object));
    const std::vector<Vec2> reference = ground_path(it->second);
    std::string csv = "participant,task,mean,max,frechet\n";
    std::vector<NamedPath> drawn;
    for (const auto& s : streams) {
      const std::vector<Vec2> candidate = ground_path(s);
      const PathComparison c = path_compare(candidate, reference);
      csv += fmt::format("{},{},{},{},{}\n", s.participant, s.task, format_real(c.mean), format_real(c.max),
                         format_real(c.frechet));
      drawn.push_back({s.participant, candidate, {}});
    }
    const Project* plan_ptr = nullptr;
    std::optional<Project> plan;
    if (!o.plan.empty()) {
      plan = load_any(o.plan);
      plan_ptr = &*plan;
    }
    SvgStyle style;
    style.title = "Paths";
    write_file(dir / "paths.svg", render_paths_svg(drawn, NamedPath{o.object, reference, "#000000"},
                                                   plan_ptr ? &plan_ptr->scene.floor_plan() : nullptr, style));
    write_file(dir / "paths.csv", csv);
    print(out, fmt::format("paths: {} compared against '{}' -> {}", streams.size(), o.object, (dir / "paths.csv").string()));
  }
  return kExitOk;
}

// -- serve -------------------------------------------------------------------

struct ServeOptions {
  unsigned short port = 0;
  std::string address = "127.0.0.1";
  std::string project;
  int threads = 2;
};

int cmd_serve(const ServeOptions& o, std::ostream& out) {
  service::SessionManager sessions;
  std::string first;
  if (!o.project.empty()) first = sessions.create(load_any(o.project))->id();
  service::ServerOptions options;
  options.address = o.address;
  options.port = o.port;
  options.threads = o.threads;
  service::Server server(sessions, options);
  server.start();
  print(out, fmt::format("listening on http://{}:{}{}", o.address, server.port(),
                         first.empty() ? "" : fmt::format(" (session {})", first)));
  out.flush();
  boost::asio::io_context signals_ctx;
  boost::asio::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) { server.stop(); });
  signals_ctx.run();
  return kExitOk;
}

int exit_code(const Error& e) { return e.code() == ErrorCode::IoError || e.code() == ErrorCode::PortInUse ? kExitIo : kExitData; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic animation sequencing for crime-scene reconstruction.", "reenact"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "reenact 1.0.0");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Load and validate a project or scenario script; list every violation");
  validate->add_option("project", validate_path, "Project (.crimeproj) or scenario script (.crimescn)")->required();

  PlayOptions play_opt;
  auto* play = app.add_subcommand("play", "Export a state trace by headless playback");
  play->add_option("project", play_opt.project, "Project or scenario script")->required();
  play->add_option("--from", play_opt.from, "First frame (default 0)");
  play->add_option("--to", play_opt.to, "Last frame (default: duration)");
  play->add_option("--stride", play_opt.stride, "Frame step")->capture_default_str();
  play->add_option("--out", play_opt.out, "Trace path (default: stdout)");
  play->add_option("--format", play_opt.format, "Trace format")
      ->check(CLI::IsMember({"rows", "structured"}))
      ->capture_default_str();

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Density maps, gaze arcs, gaze hits and path comparison from telemetry");
  analyze->add_option("telemetry", an.inputs, "Telemetry CSV files or directories of them")->required();
  analyze->add_option("--task", an.task, "Only streams of this task");
  analyze->add_flag("--map", an.map, "Position density map (default when no other output is chosen)");
  analyze->add_flag("--arcs", an.arcs, "Gaze-direction arcs around the densest clusters");
  analyze->add_flag("--gaze-hits", an.gaze_hits, "Density of gaze hits on the floor plan (needs --plan)");
  analyze->add_flag("--paths", an.paths, "Compare each stream's path with a reference (needs --reference)");
  analyze->add_option("--samples", an.samples, "Samples per stream after duration normalization")->capture_default_str();
  analyze->add_option("--clusters", an.clusters, "Maximum number of clusters")->capture_default_str();
  analyze->add_option("--radius", an.radius, "Arc radius in metres")->capture_default_str();
  analyze->add_option("--separation", an.separation, "Minimum cluster separation in metres")->capture_default_str();
  analyze->add_option("--peak-fraction", an.peak_fraction, "Drop clusters below this fraction of the densest")
      ->capture_default_str();
  analyze->add_option("--cell", an.cell, "Grid cell size in metres")->capture_default_str();
  analyze->add_option("--reference", an.reference, "Rows trace holding the reference path");
  analyze->add_option("--object", an.object, "Reference object in the trace")->capture_default_str();
  analyze->add_option("--plan", an.plan, "Project or script whose floor plan is used");
  analyze->add_option("--out", an.out, "Output directory")->capture_default_str();

  std::string parse_path;
  std::string parse_out;
  bool parse_canonical = false;
  auto* parse = app.add_subcommand("parse", "Compile a scenario script to a project file");
  parse->add_option("script", parse_path, "Scenario script (.crimescn)")->required();
  parse->add_option("--out", parse_out, "Project path (default: stdout)");
  parse->add_flag("--canonical", parse_canonical, "Print the script in canonical form instead");

  ServeOptions serve_opt;
  serve_opt.port = service::default_port();
  auto* serve = app.add_subcommand("serve", "Run the session service (HTTP + WebSocket on one port)");
  serve->add_option("--port", serve_opt.port, "Port (default: REENACT_PORT or 8765)")->capture_default_str();
  serve->add_option("--address", serve_opt.address, "Bind address")->capture_default_str();
  serve->add_option("--project", serve_opt.project, "Project or script to open as the first session");
  serve->add_option("--threads", serve_opt.threads, "Worker threads")->check(CLI::Range(1, 64))->capture_default_str();

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(validate_path, out);
    if (play->parsed()) return cmd_play(play_opt, out, err);
    if (parse->parsed()) return cmd_parse(parse_path, parse_out, parse_canonical, out);
    if (analyze->parsed()) return cmd_analyze(an, out);
    if (serve->parsed()) return cmd_serve(serve_opt, out);
  } catch (const UsageError& e) {
    print(err, "error: " + e.message);
    return kExitUsage;
  } catch (const Error& e) {
    print(err, fmt::format("error: {}: {}", to_string(e.code()), e.what()));
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    print(err, fmt::format("error: IoError: {}", e.what()));
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace reenact::cli
