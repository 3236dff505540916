#include "reenact/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "reenact/error.hpp"

namespace reenact {

// ---------------------------------------------------------------------------
// Resampling

TelemetryStream normalize_duration(const TelemetryStream& stream, std::size_t n_samples) {
  const auto& in = stream.samples;
  if (in.size() < 2) throw Error(ErrorCode::TooFewSamples, fmt::format("stream has {} sample(s), need 2", in.size()));
  if (n_samples < 2) throw Error(ErrorCode::TooFewSamples, "cannot resample to fewer than 2 samples");
  const double t0 = in.front().t;
  const double span = in.back().t - t0;
  if (!(span > 0.0)) throw Error(ErrorCode::TooFewSamples, "stream spans zero time");

  std::vector<double> u_in(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) u_in[i] = (in[i].t - t0) / span;

  TelemetryStream out{stream.participant, stream.task, {}};
  out.samples.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double u = k + 1 == n_samples ? 1.0 : static_cast<double>(k) / static_cast<double>(n_samples - 1);
    std::size_t i = static_cast<std::size_t>(std::upper_bound(u_in.begin(), u_in.end(), u) - u_in.begin());
    i = std::clamp<std::size_t>(i, 1, in.size() - 1) - 1;
    const TelemetrySample& a = in[i];
    const TelemetrySample& b = in[i + 1];
    const double gap = u_in[i + 1] - u_in[i];
    const double f = gap > 0.0 ? (u - u_in[i]) / gap : 1.0;
    TelemetrySample s;
    if (f <= 0.0) {
      s = a;
    } else if (f >= 1.0) {
      s = b;
    } else {
      s.position = a.position + f * (b.position - a.position);
      s.height = a.height + f * (b.height - a.height);
      s.pitch_deg = a.pitch_deg + f * (b.pitch_deg - a.pitch_deg);
      s.yaw_deg = wrap_degrees(a.yaw_deg + f * angle_difference_deg(b.yaw_deg, a.yaw_deg));
    }
    s.t = u;
    out.samples.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Density

Vec2 DensityGrid::cell_center(std::size_t col, std::size_t row) const {
  return spec.origin + Vec2((static_cast<double>(col) + 0.5) * spec.cell, (static_cast<double>(row) + 0.5) * spec.cell);
}

double DensityGrid::integral() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * spec.cell * spec.cell;
}

double scott_bandwidth(const std::vector<Vec2>& points) {
  const std::size_t n = points.size();
  if (n < 2) return 0.0;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(n);
  Vec2 var = Vec2::Zero();
  for (const auto& p : points) var += (p - mean).cwiseAbs2();
  var /= static_cast<double>(n - 1);
  const double sigma = (std::sqrt(var.x()) + std::sqrt(var.y())) / 2.0;
  return std::pow(static_cast<double>(n), -1.0 / 6.0) * sigma;
}

namespace {

// Standard normal mass on [a, b], computed on the tail side for precision.
double normal_mass(double a, double b) {
  constexpr double r = std::numbers::sqrt2;
  if (a >= 0.0) return 0.5 * (std::erfc(a / r) - std::erfc(b / r));
  if (b <= 0.0) return 0.5 * (std::erfc(-b / r) - std::erfc(-a / r));
  return 1.0 - 0.5 * (std::erfc(-a / r) + std::erfc(b / r));
}

constexpr std::size_t kMaxCells = 16'000'000;

GridSpec auto_grid(const std::vector<Vec2>& points, double h, double cell) {
  Vec2 lo = points.front();
  Vec2 hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  GridSpec g;
  g.cell = cell;
  g.origin = Vec2(std::floor((lo.x() - 5 * h) / cell) * cell, std::floor((lo.y() - 5 * h) / cell) * cell);
  g.width = static_cast<std::size_t>(std::ceil((hi.x() + 5 * h - g.origin.x()) / cell));
  g.height = static_cast<std::size_t>(std::ceil((hi.y() + 5 * h - g.origin.y()) / cell));
  return g;
}

// Kernel mass per column (or row) for one coordinate, restricted to ±8h.
void axis_mass(double p, double h, double origin, double cell, std::size_t n, std::vector<double>& mass,
               std::size_t& first, std::size_t& last) {
  const double lo = (p - 8 * h - origin) / cell;
  const double hi = (p + 8 * h - origin) / cell;
  first = lo <= 0 ? 0 : static_cast<std::size_t>(std::min(std::floor(lo), static_cast<double>(n)));
  last = hi < 0 ? 0 : static_cast<std::size_t>(std::min(std::ceil(hi) + 1, static_cast<double>(n)));
  mass.assign(n, 0.0);
  for (std::size_t i = first; i < last; ++i) {
    const double a = origin + static_cast<double>(i) * cell;
    mass[i] = normal_mass((a - p) / h, (a + cell - p) / h);
  }
}

}  // namespace

DensityGrid density_map(const std::vector<Vec2>& points, const DensityOptions& options,
                        const std::vector<double>& weights) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "density map needs at least one sample");
  if (!weights.empty() && weights.size() != points.size())
    throw Error(ErrorCode::InvalidArgument, "weights and points differ in length");
  if (!(options.cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be non-negative");
    if (!points[i].allFinite()) throw Error(ErrorCode::InvalidArgument, "sample position is not finite");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyInput, "all sample weights are zero");

  double h = 0.0;
  if (options.bandwidth) {
    h = *options.bandwidth;
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  } else {
    h = scott_bandwidth(points);
    if (!(h > 0.0)) h = options.cell;  // a single location has no spread to measure
  }

  DensityGrid grid;
  grid.spec = options.grid ? *options.grid : auto_grid(points, h, options.cell);
  if (!(grid.spec.cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  if (grid.spec.width * grid.spec.height > kMaxCells)
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("grid of {}x{} cells is too large; use a coarser cell", grid.spec.width, grid.spec.height));
  grid.bandwidth = h;
  grid.samples = points.size();
  grid.values.assign(grid.spec.width * grid.spec.height, 0.0);
  if (grid.values.empty()) return grid;

  const double area = grid.spec.cell * grid.spec.cell;
  std::vector<double> mx;
  std::vector<double> my;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = (weights.empty() ? 1.0 : weights[i]) / total;
    if (w == 0.0) continue;
    std::size_t c0 = 0, c1 = 0, r0 = 0, r1 = 0;
    axis_mass(points[i].x(), h, grid.spec.origin.x(), grid.spec.cell, grid.spec.width, mx, c0, c1);
    axis_mass(points[i].y(), h, grid.spec.origin.y(), grid.spec.cell, grid.spec.height, my, r0, r1);
    for (std::size_t r = r0; r < r1; ++r) {
      const double wy = w * my[r] / area;
      if (wy == 0.0) continue;
      double* row = grid.values.data() + r * grid.spec.width;
      for (std::size_t c = c0; c < c1; ++c) row[c] += wy * mx[c];
    }
  }
  return grid;
}

DensityGrid density_map(const std::vector<TelemetryStream>& streams, const DensityOptions& options) {
  std::vector<Vec2> points;
  std::vector<double> weights;
  for (const auto& s : streams) {
    for (const auto& sample : s.samples) {
      points.push_back(sample.position);
      weights.push_back(1.0 / static_cast<double>(s.samples.size()));
    }
  }
  return density_map(points, options, weights);
}

// ---------------------------------------------------------------------------
// Clusters

std::vector<Vec2> find_clusters(const DensityGrid& grid, std::size_t k, double min_separation) {
  struct Peak {
    double value;
    std::size_t col;
    std::size_t row;
  };
  std::vector<Peak> peaks;
  const std::size_t w = grid.spec.width;
  const std::size_t h = grid.spec.height;
  if (grid.values.size() != w * h) throw Error(ErrorCode::InvalidArgument, "grid values do not match its shape");
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double v = grid.at(c, r);
      if (!(v > 0.0)) continue;
      bool peak = true;
      for (int dr = -1; dr <= 1 && peak; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
          const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(h) || cc >= static_cast<std::ptrdiff_t>(w)) continue;
          if (grid.at(static_cast<std::size_t>(cc), static_cast<std::size_t>(rr)) > v) {
            peak = false;
            break;
          }
        }
      if (peak) peaks.push_back({v, c, r});
    }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.col != b.col) return a.col < b.col;
    return a.row < b.row;
  });
  std::vector<Vec2> out;
  for (const auto& p : peaks) {
    if (out.size() >= k) break;
    const Vec2 at = grid.cell_center(p.col, p.row);
    const bool clear =
        std::all_of(out.begin(), out.end(), [&](const Vec2& q) { return (q - at).norm() >= min_separation; });
    if (clear) out.push_back(at);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaze

double circular_median_deg(const std::vector<double>& degrees) {
  if (degrees.empty()) return 0.0;
  std::vector<double> sorted;
  sorted.reserve(degrees.size());
  for (double d : degrees) sorted.push_back(wrap_degrees(d));
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  double best = sorted.front();
  double best_sum = std::numeric_limits<double>::infinity();
  for (double candidate : sorted) {
    double sum = 0.0;
    for (double d : degrees) sum += std::abs(angle_difference_deg(d, candidate));
    if (sum < best_sum - 1e-9) {
      best_sum = sum;
      best = candidate;
    }
  }
  return best;
}

double quantile7(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

GazeArc gaze_arc(const std::vector<TelemetryStream>& streams, const Vec2& center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  GazeArc arc;
  arc.center = center;
  arc.radius = radius;
  std::vector<double> yaws;
  for (const auto& s : streams)
    for (const auto& sample : s.samples) {
      if ((sample.position - center).norm() <= radius)
        yaws.push_back(wrap_degrees(sample.yaw_deg));
      else
        ++arc.outside;
    }
  if (yaws.empty())
    throw Error(ErrorCode::NoSamplesInRadius,
                fmt::format("no samples within {} m of ({}, {})", radius, center.x(), center.y()));

  arc.median_deg = circular_median_deg(yaws);
  std::vector<double> dev;
  dev.reserve(yaws.size());
  for (double y : yaws) dev.push_back(angle_difference_deg(y, arc.median_deg));
  const double q1 = quantile7(dev, 0.25);
  const double q3 = quantile7(dev, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr;
  const double hi = q3 + 1.5 * iqr;
  for (std::size_t i = 0; i < yaws.size(); ++i) {
    if (dev[i] < lo || dev[i] > hi) {
      ++arc.outliers;
      continue;
    }
    const auto bin = std::min<std::size_t>(kArcBins - 1, static_cast<std::size_t>(yaws[i] / 10.0));
    ++arc.histogram[bin];
    ++arc.count;
  }
  return arc;
}

std::optional<Vec2> gaze_hit(const TelemetrySample& sample, const FloorPlan& plan) {
  const auto [cp, sp] = cos_sin_deg(sample.pitch_deg);
  const auto [cy, sy] = cos_sin_deg(sample.yaw_deg);
  const Vec2 dir(cy, sy);
  double reach = std::numeric_limits<double>::infinity();  // ground distance to the floor hit
  if (sp < 0.0 && sample.height >= 0.0) reach = sample.height * cp / -sp;
  if (cp > 0.0 && !plan.walls.empty()) {
    const double len = std::isfinite(reach) ? reach : 1e6;
    const Segment2 ray{sample.position, sample.position + len * dir};
    std::optional<double> first;
    for (const auto& w : plan.walls) {
      const auto t = segment_intersection(ray, w.segment());
      if (t && (!first || *t < *first)) first = t;
    }
    if (first) return sample.position + (*first * len) * dir;
  }
  if (std::isfinite(reach)) return sample.position + reach * dir;
  return std::nullopt;
}

GazeHitMap gaze_hit_map(const std::vector<TelemetryStream>& streams, const FloorPlan& plan,
                        const DensityOptions& options) {
  GazeHitMap out;
  for (const auto& s : streams)
    for (const auto& sample : s.samples) {
      if (auto hit = gaze_hit(sample, plan))
        out.hits.push_back(*hit);
      else
        ++out.misses;
    }
  if (out.hits.empty()) throw Error(ErrorCode::EmptyInput, "no gaze ray meets the ground or a wall");
  out.grid = density_map(out.hits, options);
  return out;
}

// ---------------------------------------------------------------------------
// Paths

double discrete_frechet(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyPath, "Fréchet distance of an empty path");
  std::vector<double> prev(b.size());
  std::vector<double> cur(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = (a[i] - b[j]).norm();
      double reach = 0.0;
      if (i == 0 && j == 0)
        reach = d;
      else if (i == 0)
        reach = std::max(cur[j - 1], d);
      else if (j == 0)
        reach = std::max(prev[0], d);
      else
        reach = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
      cur[j] = reach;
    }
    std::swap(prev, cur);
  }
  return prev.back();
}

PathComparison path_compare(const std::vector<Vec2>& candidate, const std::vector<Vec2>& reference) {
  if (candidate.empty() || reference.empty()) throw Error(ErrorCode::EmptyPath, "path comparison needs two paths");
  PathComparison out;
  double sum = 0.0;
  for (const auto& p : candidate) {
    double d = std::numeric_limits<double>::infinity();
    if (reference.size() == 1) d = (p - reference.front()).norm();
    for (std::size_t i = 0; i + 1 < reference.size(); ++i)
      d = std::min(d, point_segment_distance(p, {reference[i], reference[i + 1]}));
    sum += d;
    out.max = std::max(out.max, d);
  }
  out.mean = sum / static_cast<double>(candidate.size());
  out.frechet = discrete_frechet(candidate, reference);
  return out;
}

std::vector<Vec2> ground_path(const TimedPath& path) {
  std::vector<Vec2> out;
  out.reserve(path.size());
  for (const auto& p : path) out.push_back(p.position);
  return out;
}

std::vector<Vec2> ground_path(const TelemetryStream& stream) {
  std::vector<Vec2> out;
  out.reserve(stream.samples.size());
  for (const auto& s : stream.samples) out.push_back(s.position);
  return out;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

const std::vector<std::string> kPalette = {"#e67e22", "#8e44ad", "#27ae60", "#2980b9", "#c0392b", "#16a085"};

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::string s = fmt::format("{:.2f}", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

double tick_step(double extent) {
  double step = 1.0;
  for (double base = 1.0;; base *= 10.0)
    for (double m : {1.0, 2.0, 5.0}) {
      step = base * m;
      if (extent / step <= 10.0) return step;
    }
}

// Metre-space bounds mapped onto a y-down pixel canvas.
class Canvas {
 public:
  Canvas(Vec2 lo, Vec2 hi, const SvgStyle& style) : lo_(lo), hi_(hi), style_(style) {
    if (hi_.x() <= lo_.x()) hi_.x() = lo_.x() + 1.0;
    if (hi_.y() <= lo_.y()) hi_.y() = lo_.y() + 1.0;
    width_ = (hi_.x() - lo_.x()) * style_.pixels_per_metre + 2 * style_.margin;
    height_ = (hi_.y() - lo_.y()) * style_.pixels_per_metre + 2 * style_.margin;
    out_ = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
        num(width_), num(height_), num(width_), num(height_), num(width_), num(height_));
    if (!style_.title.empty())
      out_ += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
                          num(style_.margin), num(style_.margin / 2), escape(style_.title));
  }

  double px(double x) const { return style_.margin + (x - lo_.x()) * style_.pixels_per_metre; }
  double py(double y) const { return style_.margin + (hi_.y() - y) * style_.pixels_per_metre; }
  double scale() const { return style_.pixels_per_metre; }
  double width() const { return width_; }

  void add(const std::string& element) { out_ += element + "\n"; }

  void axes() {
    const double x0 = px(lo_.x());
    const double x1 = px(hi_.x());
    const double y0 = py(lo_.y());
    const double y1 = py(hi_.y());
    add(fmt::format("<g stroke=\"#333333\" stroke-width=\"1\" fill=\"none\"><line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" "
                    "y2=\"{2}\"/><line x1=\"{0}\" y1=\"{2}\" x2=\"{0}\" y2=\"{3}\"/></g>",
                    num(x0), num(x1), num(y0), num(y1)));
    std::string labels = "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#333333\">";
    const double sx = tick_step(hi_.x() - lo_.x());
    for (double t = std::ceil(lo_.x() / sx) * sx; t <= hi_.x() + 1e-9; t += sx)
      labels += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", num(px(t)), num(y0 + 14),
                            fmt::format("{:g}", t == 0.0 ? 0.0 : t));
    const double sy = tick_step(hi_.y() - lo_.y());
    for (double t = std::ceil(lo_.y() / sy) * sy; t <= hi_.y() + 1e-9; t += sy)
      labels += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", num(x0 - 4), num(py(t) + 3),
                            fmt::format("{:g}", t == 0.0 ? 0.0 : t));
    labels += fmt::format("<text x=\"{}\" y=\"{}\">x (m)</text>", num(x1 - 30), num(y0 + 28));
    labels += fmt::format("<text x=\"{}\" y=\"{}\">y (m)</text>", num(x0 - 30), num(y1 - 8));
    add(labels + "</g>");
  }

  std::string finish() { return out_ + "</svg>\n"; }

 private:
  Vec2 lo_;
  Vec2 hi_;
  SvgStyle style_;
  double width_ = 0.0;
  double height_ = 0.0;
  std::string out_;
};

void grid_bounds(const DensityGrid& g, Vec2& lo, Vec2& hi) {
  lo = g.spec.origin;
  hi = g.spec.origin + Vec2(static_cast<double>(g.spec.width), static_cast<double>(g.spec.height)) * g.spec.cell;
}

void draw_cells(Canvas& canvas, const DensityGrid& grid, const std::string& colour, double strength) {
  double peak = 0.0;
  for (double v : grid.values) peak = std::max(peak, v);
  if (!(peak > 0.0)) return;
  const double side = grid.spec.cell * canvas.scale();
  std::string g = fmt::format("<g fill=\"{}\" stroke=\"none\">", colour);
  for (std::size_t r = 0; r < grid.spec.height; ++r)
    for (std::size_t c = 0; c < grid.spec.width; ++c) {
      const double opacity = strength * grid.at(c, r) / peak;
      if (opacity < 0.01) continue;
      const double x = grid.spec.origin.x() + static_cast<double>(c) * grid.spec.cell;
      const double y = grid.spec.origin.y() + static_cast<double>(r + 1) * grid.spec.cell;
      g += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill-opacity=\"{:.3f}\"/>",
                       num(canvas.px(x)), num(canvas.py(y)), num(side), num(side), opacity);
    }
  canvas.add(g + "</g>");
}

}  // namespace

std::string render_density_svg(const DensityGrid& grid, const SvgStyle& style) {
  Vec2 lo(0, 0);
  Vec2 hi(10, 10);
  if (grid.spec.width > 0 && grid.spec.height > 0) grid_bounds(grid, lo, hi);
  Canvas canvas(lo, hi, style);
  draw_cells(canvas, grid, style.density_colour, 1.0);
  canvas.axes();
  return canvas.finish();
}

std::string render_arcs_svg(const std::vector<GazeArc>& arcs, const DensityGrid* backdrop, const SvgStyle& style) {
  Vec2 lo(0, 0);
  Vec2 hi(10, 10);
  if (backdrop && backdrop->spec.width > 0 && backdrop->spec.height > 0) {
    grid_bounds(*backdrop, lo, hi);
  } else if (!arcs.empty()) {
    lo = hi = arcs.front().center;
    for (const auto& a : arcs) {
      lo = lo.cwiseMin(a.center - Vec2::Constant(a.radius + 1.0));
      hi = hi.cwiseMax(a.center + Vec2::Constant(a.radius + 1.0));
    }
  }
  Canvas canvas(lo, hi, style);
  if (backdrop) draw_cells(canvas, *backdrop, style.density_colour, 0.6);
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const GazeArc& a = arcs[i];
    std::size_t peak = 0;
    for (auto n : a.histogram) peak = std::max(peak, n);
    const double cx = canvas.px(a.center.x());
    const double cy = canvas.py(a.center.y());
    const double r = a.radius * canvas.scale();
    std::string g = fmt::format("<g fill=\"#2c3e50\" stroke=\"none\">");
    g += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#2c3e50\" stroke-width=\"0.5\"/>",
                     num(cx), num(cy), num(r));
    for (std::size_t b = 0; b < kArcBins && peak > 0; ++b) {
      if (a.histogram[b] == 0) continue;
      const double opacity = static_cast<double>(a.histogram[b]) / static_cast<double>(peak);
      const auto [c0, s0] = cos_sin_deg(10.0 * static_cast<double>(b));
      const auto [c1, s1] = cos_sin_deg(10.0 * static_cast<double>(b + 1));
      g += fmt::format(
          "<path d=\"M {} {} L {} {} A {} {} 0 0 0 {} {} Z\" fill-opacity=\"{:.3f}\"/>", num(cx), num(cy),
          num(cx + r * c0), num(cy - r * s0), num(r), num(r), num(cx + r * c1), num(cy - r * s1), opacity);
    }
    g += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>", num(cx + r + 2),
                     num(cy - r - 2), i + 1);
    canvas.add(g + "</g>");
  }
  canvas.axes();
  return canvas.finish();
}

std::string render_paths_svg(const std::vector<NamedPath>& paths, const std::optional<NamedPath>& reference,
                             const FloorPlan* plan, const SvgStyle& style) {
  bool any = false;
  Vec2 lo(0, 0);
  Vec2 hi(10, 10);
  auto grow = [&](const Vec2& p) {
    if (!any) {
      lo = hi = p;
      any = true;
    }
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& p : paths)
    for (const auto& v : p.points) grow(v);
  if (reference)
    for (const auto& v : reference->points) grow(v);
  if (plan)
    for (const auto& w : plan->walls) {
      grow(w.a);
      grow(w.b);
    }
  if (any) {
    lo -= Vec2::Ones();
    hi += Vec2::Ones();
  }
  Canvas canvas(lo, hi, style);
  if (plan && !plan->walls.empty()) {
    std::string g = "<g stroke=\"#7f8c8d\" stroke-width=\"3\" stroke-linecap=\"round\">";
    for (const auto& w : plan->walls)
      g += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", num(canvas.px(w.a.x())),
                       num(canvas.py(w.a.y())), num(canvas.px(w.b.x())), num(canvas.py(w.b.y())));
    canvas.add(g + "</g>");
  }
  auto polyline = [&](const NamedPath& p, const std::string& colour, bool dashed) {
    std::string pts;
    for (std::size_t i = 0; i < p.points.size(); ++i)
      pts += fmt::format("{}{},{}", i ? " " : "", num(canvas.px(p.points[i].x())), num(canvas.py(p.points[i].y())));
    canvas.add(fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"{}/>", pts, colour,
                           dashed ? " stroke-dasharray=\"6 4\"" : ""));
  };
  std::vector<std::pair<std::string, std::string>> legend;
  if (reference) {
    polyline(*reference, "#000000", true);
    legend.emplace_back(reference->name, "#000000");
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string colour = paths[i].colour.empty() ? kPalette[i % kPalette.size()] : paths[i].colour;
    polyline(paths[i], colour, false);
    legend.emplace_back(paths[i].name, colour);
  }
  canvas.axes();
  if (!legend.empty()) {
    std::string g = "<g font-family=\"sans-serif\" font-size=\"11\">";
    const double x = canvas.width() - style.margin - 110;
    for (std::size_t i = 0; i < legend.size(); ++i) {
      const double y = style.margin + 4 + 16.0 * static_cast<double>(i);
      g += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>", num(x), num(y),
                       legend[i].second);
      g += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>", num(x + 18), num(y + 10), escape(legend[i].first));
    }
    canvas.add(g + "</g>");
  }
  return canvas.finish();
}

}  // namespace reenact
