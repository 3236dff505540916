#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "reenact/geometry.hpp"
#include "reenact/persistence.hpp"
#include "reenact/scene.hpp"

namespace reenact {

// ---------------------------------------------------------------------------
// Resampling

/// Resamples to `n_samples` points at equally spaced normalized times in
/// [0, 1]; the output's `t` is the normalized time. Yaw is interpolated along
/// the shorter arc. Throws TooFewSamples (fewer than 2 samples, n < 2 or a
/// stream spanning zero time).
TelemetryStream normalize_duration(const TelemetryStream& stream, std::size_t n_samples);

// ---------------------------------------------------------------------------
// Density

struct GridSpec {
  Vec2 origin = Vec2::Zero();  // lower-left corner
  double cell = 0.1;           // metres
  std::size_t width = 0;       // columns along x
  std::size_t height = 0;      // rows along y
};

/// Cell values are densities (per m²); the grid integral is
/// sum(values) * cell².
struct DensityGrid {
  GridSpec spec;
  std::vector<double> values;  // row-major, row 0 at origin.y
  double bandwidth = 0.0;
  std::size_t samples = 0;

  double at(std::size_t col, std::size_t row) const { return values[row * spec.width + col]; }
  Vec2 cell_center(std::size_t col, std::size_t row) const;
  double integral() const;
  bool empty() const { return values.empty(); }
};

struct DensityOptions {
  std::optional<double> bandwidth;  // default: Scott's rule
  std::optional<GridSpec> grid;     // default: bounding box + 5 bandwidths
  double cell = 0.1;                // cell size of the default grid
};

/// Scott's rule n^(-1/6)·σ per axis, averaged. Returns 0 when the points do
/// not spread.
double scott_bandwidth(const std::vector<Vec2>& points);

/// Isotropic Gaussian kernel density. Each cell receives the kernel mass that
/// falls inside it (exact via erf), so the integral is 1 up to the mass
/// outside the grid. Weights default to 1 and are normalized. Throws
/// EmptyInput.
DensityGrid density_map(const std::vector<Vec2>& points, const DensityOptions& options = {},
                        const std::vector<double>& weights = {});

/// Positions of every sample. Each stream carries equal total weight.
DensityGrid density_map(const std::vector<TelemetryStream>& streams, const DensityOptions& options = {});

// ---------------------------------------------------------------------------
// Clusters

/// Top-k local maxima in descending density, pairwise at least
/// `min_separation` apart; ties go to the lower (x, y).
std::vector<Vec2> find_clusters(const DensityGrid& grid, std::size_t k, double min_separation = 1.0);

// ---------------------------------------------------------------------------
// Gaze

inline constexpr std::size_t kArcBins = 36;

struct GazeArc {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
  std::array<std::size_t, kArcBins> histogram{};  // bin i covers [10i, 10i+10) degrees
  std::size_t count = 0;                          // samples kept (histogram total)
  std::size_t outliers = 0;
  std::size_t outside = 0;  // samples beyond radius
  double median_deg = 0.0;
};

/// Angle minimizing the summed absolute angular deviation, chosen among the
/// inputs (ties to the smaller angle). Empty input returns 0.
double circular_median_deg(const std::vector<double>& degrees);

/// Quantile with linear interpolation between order statistics (type 7).
double quantile7(std::vector<double> values, double q);

/// Yaw histogram of samples within `radius` of `center` after dropping
/// deviations from the circular median outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR].
/// Throws NoSamplesInRadius.
GazeArc gaze_arc(const std::vector<TelemetryStream>& streams, const Vec2& center, double radius = 0.5);

/// Ground or first-wall hit of one sample's gaze ray (walls are infinitely
/// tall). nullopt when the ray never meets either.
std::optional<Vec2> gaze_hit(const TelemetrySample& sample, const FloorPlan& plan);

struct GazeHitMap {
  DensityGrid grid;
  std::vector<Vec2> hits;
  std::size_t misses = 0;
};

/// Throws EmptyInput when no sample hits anything.
GazeHitMap gaze_hit_map(const std::vector<TelemetryStream>& streams, const FloorPlan& plan,
                        const DensityOptions& options = {});

// ---------------------------------------------------------------------------
// Paths

struct PathComparison {
  double mean = 0.0;     // mean candidate-vertex distance to the reference polyline
  double max = 0.0;      // largest of those distances
  double frechet = 0.0;  // discrete Fréchet over vertex sequences
};

double discrete_frechet(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

/// Throws EmptyPath.
PathComparison path_compare(const std::vector<Vec2>& candidate, const std::vector<Vec2>& reference);

std::vector<Vec2> ground_path(const TimedPath& path);
std::vector<Vec2> ground_path(const TelemetryStream& stream);

// ---------------------------------------------------------------------------
// SVG

struct SvgStyle {
  double pixels_per_metre = 20.0;
  double margin = 40.0;  // pixels
  std::string title;
  std::string density_colour = "#c0392b";
};

struct NamedPath {
  std::string name;
  std::vector<Vec2> points;
  std::string colour;  // empty picks from the palette
};

/// Density cells as opacity-mapped squares over axes.
std::string render_density_svg(const DensityGrid& grid, const SvgStyle& style = {});
/// Angular-density wedges of radius `arc.radius` around each center.
std::string render_arcs_svg(const std::vector<GazeArc>& arcs, const DensityGrid* backdrop = nullptr,
                            const SvgStyle& style = {});
/// Polylines with a legend; the reference, if any, is drawn black and dashed.
std::string render_paths_svg(const std::vector<NamedPath>& paths, const std::optional<NamedPath>& reference = {},
                             const FloorPlan* plan = nullptr, const SvgStyle& style = {});

}  // namespace reenact
