#pragma once

// Synthetic ground truth: a parametric object library, robotic press events,
// ball bounces and the interpolated raster-scan baseline.

#include "spts/core.hpp"
#include "spts/frontend.hpp"
#include "spts/perception.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spts {

class Rng;

enum class ShapeKind {
  Disk, Square, Rect, T, L, Cross, Ring, Triangle, BarH, BarV,
  SmallDisk, LargeDisk, U, H, PlusSmall, Corner, Dot
};

std::string to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

/// A flat-bottomed indenter. The footprint lives in a height x width box whose
/// top-left pixel center is (row, col); fractional anchors give partial edge
/// coverage. `thickness` sets stroke width for T, L, cross, U, H and the hole of a ring.
struct ShapeSpec {
  std::string label;
  ShapeKind kind = ShapeKind::Square;
  double row = 0.0;
  double col = 0.0;
  double height = 1.0;
  double width = 1.0;
  double thickness = 2.0;
  double peak_pressure = 3e4;
};

/// The 17 default indenters, each centered on the grid.
std::vector<ShapeSpec> default_shape_specs(const GridGeometry& geometry, double peak_pressure = 3e4);

/// Pressure pattern of a shape at its peak; each pixel gets peak * covered area fraction.
PressureMap render_shape(const ShapeSpec& spec, const GridGeometry& geometry);

/// Per-trial variation: anchor shifted by up to +/-0.5 px (kept inside the grid),
/// peak scaled by up to +/-10%.
ShapeSpec jitter_shape(const ShapeSpec& spec, const GridGeometry& geometry, Rng& rng,
                       double shift = 0.5, double peak_fraction = 0.1);

ObjectLibrary shape_library(const GridGeometry& geometry, const std::vector<ShapeSpec>& specs,
                            const CircuitParams& circuit);

/// A pressure map that changes over time.
class TimedScene {
public:
  virtual ~TimedScene() = default;
  virtual PressureMap pressure(double t) const = 0;

  TactileFrame frame(double t, const CircuitParams& circuit) const { return transduce(pressure(t), circuit, t); }
};

/// Capture a scene by shared ownership into an acquisition-ready callable.
Scene as_scene(std::shared_ptr<const TimedScene> scene, const CircuitParams& circuit);

/// Shape pressed with a trapezoidal envelope starting at `start`.
class PressEvent : public TimedScene {
public:
  PressEvent(const ShapeSpec& shape, const GridGeometry& geometry, double rise, double hold, double release,
             double start = 0.0);

  PressureMap pressure(double t) const override;
  double envelope(double t) const;
  double hold_begin() const { return start_ + rise_; }
  double hold_end() const { return start_ + rise_ + hold_; }
  double end() const { return start_ + rise_ + hold_ + release_; }
  const PressureMap& peak_map() const { return peak_; }

private:
  PressureMap peak_;
  double rise_, hold_, release_, start_;
};

PressEvent press_event(const ShapeSpec& shape, const GridGeometry& geometry, double rise, double hold,
                       double release, double start = 0.0);

struct BounceSpec {
  double contact_start = 0.0;
  double contact_duration = 0.008;
  double peak_pressure = 5e4;
  double center_row = 4.5;
  double center_col = 4.5;
  double max_radius = 3.0;  // pixels
  double sigma = 1.5;       // pixels

  void validate(const GridGeometry& geometry) const;
};

/// Half-sine force envelope; Gaussian pressure profile truncated at a contact
/// radius that grows as envelope^(1/3).
class BounceEvent : public TimedScene {
public:
  BounceEvent(BounceSpec spec, GridGeometry geometry);

  PressureMap pressure(double t) const override;
  double envelope(double t) const;
  const BounceSpec& spec() const { return spec_; }

private:
  BounceSpec spec_;
  GridGeometry geometry_;
};

BounceEvent bounce_event(const BounceSpec& spec, const GridGeometry& geometry);

struct RasterEstimate {
  TactileFrame frame;
  double acquisition_time = 0.0;  // seconds
  std::size_t pixels_sampled = 0;
};

/// Down-sampled raster scan: reads a stratified lattice of at most m pixels
/// and bilinearly interpolates back to the full grid. Time is m / f_clk.
RasterEstimate raster_baseline(const TactileFrame& truth, std::size_t m, const AcquisitionConfig& cfg);

}  // namespace spts
