#include "spts/scenarios.hpp"

#include "spts/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace spts {

namespace {

struct KindName {
  ShapeKind kind;
  const char* name;
};

constexpr std::array<KindName, 17> kKindNames{{
    {ShapeKind::Disk, "disk"},         {ShapeKind::Square, "square"},
    {ShapeKind::Rect, "rect"},         {ShapeKind::T, "T"},
    {ShapeKind::L, "L"},               {ShapeKind::Cross, "cross"},
    {ShapeKind::Ring, "ring"},         {ShapeKind::Triangle, "triangle"},
    {ShapeKind::BarH, "bar-h"},        {ShapeKind::BarV, "bar-v"},
    {ShapeKind::SmallDisk, "small-disk"}, {ShapeKind::LargeDisk, "large-disk"},
    {ShapeKind::U, "U"},               {ShapeKind::H, "H"},
    {ShapeKind::PlusSmall, "plus-small"}, {ShapeKind::Corner, "corner"},
    {ShapeKind::Dot, "dot"},
}};

// Membership of a local point (u down, v right) in the footprint box [0,h) x [0,w).
bool inside(const ShapeSpec& s, double u, double v) {
  const double h = s.height, w = s.width, th = s.thickness;
  if (u < 0.0 || v < 0.0 || u >= h || v >= w) return false;
  const double cu = h / 2.0, cv = w / 2.0;
  const double r2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
  switch (s.kind) {
    case ShapeKind::Disk:
    case ShapeKind::SmallDisk:
    case ShapeKind::LargeDisk:
      return r2 <= cu * cu;
    case ShapeKind::Ring: {
      const double inner = cu - th;
      return r2 <= cu * cu && r2 >= inner * inner;
    }
    case ShapeKind::Square:
    case ShapeKind::Rect:
    case ShapeKind::BarH:
    case ShapeKind::BarV:
    case ShapeKind::Corner:
    case ShapeKind::Dot:
      return true;
    case ShapeKind::T:
      return u < th || std::abs(v - cv) < th / 2.0;
    case ShapeKind::L:
      return v < th || u >= h - th;
    case ShapeKind::Cross:
    case ShapeKind::PlusSmall:
      return std::abs(u - cu) < th / 2.0 || std::abs(v - cv) < th / 2.0;
    case ShapeKind::Triangle:
      // Apex at the top, base along the bottom edge.
      return std::abs(v - cv) <= cv * (u + 0.5) / h;
    case ShapeKind::U:
      return v < th || v >= w - th || u >= h - th;
    case ShapeKind::H:
      return v < th || v >= w - th || std::abs(u - cu) < th / 2.0;
  }
  return false;
}

ShapeSpec centered(std::string label, ShapeKind kind, double h, double w, double th, const GridGeometry& g,
                   double peak) {
  ShapeSpec s;
  s.label = std::move(label);
  s.kind = kind;
  s.height = h;
  s.width = w;
  s.thickness = th;
  s.row = std::floor((static_cast<double>(g.rows) - h) / 2.0);
  s.col = std::floor((static_cast<double>(g.cols) - w) / 2.0);
  s.peak_pressure = peak;
  return s;
}

void check_fits(const ShapeSpec& s, const GridGeometry& g) {
  if (!(s.height > 0.0 && s.width > 0.0)) throw DomainError("shape " + s.label + " has an empty footprint");
  if (s.row < 0.0 || s.col < 0.0 || s.row + s.height > static_cast<double>(g.rows) + 1e-12 ||
      s.col + s.width > static_cast<double>(g.cols) + 1e-12) {
    throw DomainError("shape " + s.label + " does not fit inside the grid");
  }
  if (!(s.peak_pressure >= 0.0)) throw DomainError("shape peak pressure must be non-negative");
}

}  // namespace

std::string to_string(ShapeKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames)
    if (name == kn.name) return kn.kind;
  throw DomainError("unknown shape kind '" + name + "'");
}

std::vector<ShapeSpec> default_shape_specs(const GridGeometry& g, double peak) {
  std::vector<ShapeSpec> specs{
      centered("disk", ShapeKind::Disk, 5, 5, 0, g, peak),
      centered("square", ShapeKind::Square, 7, 7, 0, g, peak),
      centered("rect", ShapeKind::Rect, 5, 8, 0, g, peak),
      centered("T", ShapeKind::T, 6, 6, 2, g, peak),
      centered("L", ShapeKind::L, 6, 4, 2, g, peak),
      centered("cross", ShapeKind::Cross, 6, 6, 2, g, peak),
      centered("ring", ShapeKind::Ring, 9, 9, 2, g, peak),
      centered("triangle", ShapeKind::Triangle, 6, 7, 0, g, peak),
      centered("bar-h", ShapeKind::BarH, 2, 8, 0, g, peak),
      centered("bar-v", ShapeKind::BarV, 8, 2, 0, g, peak),
      centered("small-disk", ShapeKind::SmallDisk, 4, 4, 0, g, peak),
      centered("large-disk", ShapeKind::LargeDisk, 8, 8, 0, g, peak),
      centered("U", ShapeKind::U, 6, 6, 2, g, peak),
      centered("H", ShapeKind::H, 6, 6, 2, g, peak),
      centered("plus-small", ShapeKind::PlusSmall, 3, 3, 1, g, peak),
      centered("corner", ShapeKind::Corner, 3, 3, 0, g, peak),
      centered("dot", ShapeKind::Dot, 1, 1, 0, g, peak),
  };
  // The corner indenter sits against the top-left edge.
  specs[15].row = 0.0;
  specs[15].col = 0.0;
  for (const auto& s : specs) check_fits(s, g);
  return specs;
}

PressureMap render_shape(const ShapeSpec& spec, const GridGeometry& g) {
  check_fits(spec, g);
  constexpr int kSub = 8;  // sub-samples per pixel side
  Vector p = Vector::Zero(static_cast<Eigen::Index>(g.size()));
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      int hits = 0;
      for (int a = 0; a < kSub; ++a) {
        for (int b = 0; b < kSub; ++b) {
          const double u = static_cast<double>(r) - spec.row + (a + 0.5) / kSub;
          const double v = static_cast<double>(c) - spec.col + (b + 0.5) / kSub;
          hits += inside(spec, u, v) ? 1 : 0;
        }
      }
      p[static_cast<Eigen::Index>(linear_index(r, c, g))] = spec.peak_pressure * hits / double(kSub * kSub);
    }
  }
  return PressureMap(g, std::move(p));
}

ShapeSpec jitter_shape(const ShapeSpec& spec, const GridGeometry& g, Rng& rng, double shift, double peak_fraction) {
  ShapeSpec out = spec;
  const double max_row = static_cast<double>(g.rows) - spec.height;
  const double max_col = static_cast<double>(g.cols) - spec.width;
  out.row = std::clamp(spec.row + rng.uniform(-shift, shift), 0.0, std::max(0.0, max_row));
  out.col = std::clamp(spec.col + rng.uniform(-shift, shift), 0.0, std::max(0.0, max_col));
  out.peak_pressure = spec.peak_pressure * (1.0 + rng.uniform(-peak_fraction, peak_fraction));
  return out;
}

ObjectLibrary shape_library(const GridGeometry& g, const std::vector<ShapeSpec>& specs, const CircuitParams& circuit) {
  ObjectLibrary lib;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (specs[i].label == specs[j].label) throw DomainError("duplicate shape label " + specs[i].label);
    lib.add(specs[i].label, transduce(render_shape(specs[i], g), circuit));
  }
  return lib;
}

Scene as_scene(std::shared_ptr<const TimedScene> scene, const CircuitParams& circuit) {
  return [scene = std::move(scene), circuit](double t) { return scene->frame(t, circuit); };
}

PressEvent::PressEvent(const ShapeSpec& shape, const GridGeometry& g, double rise, double hold, double release,
                       double start)
    : peak_(render_shape(shape, g)), rise_(rise), hold_(hold), release_(release), start_(start) {
  if (rise < 0.0 || hold < 0.0 || release < 0.0) throw DomainError("press phases must be non-negative");
  if (!(rise + hold + release > 0.0)) throw DomainError("press event must last some time");
}

double PressEvent::envelope(double t) const {
  const double s = t - start_;
  if (s < 0.0) return 0.0;
  if (s < rise_) return s / rise_;
  if (s <= rise_ + hold_) return 1.0;
  const double r = s - rise_ - hold_;
  if (r < release_) return 1.0 - r / release_;
  return 0.0;
}

PressureMap PressEvent::pressure(double t) const {
  const double e = envelope(t);
  if (e == 1.0) return peak_;
  return PressureMap(peak_.geometry(), peak_.pressure() * e);
}

PressEvent press_event(const ShapeSpec& shape, const GridGeometry& g, double rise, double hold, double release,
                       double start) {
  return PressEvent(shape, g, rise, hold, release, start);
}

void BounceSpec::validate(const GridGeometry& g) const {
  if (!(contact_duration > 0.0)) throw DomainError("contact duration must be positive");
  if (!(peak_pressure >= 0.0)) throw DomainError("bounce peak pressure must be non-negative");
  if (!(max_radius > 0.0) || !(sigma > 0.0)) throw DomainError("bounce radius and sigma must be positive");
  if (center_row < 0.0 || center_col < 0.0 || center_row > static_cast<double>(g.rows - 1) ||
      center_col > static_cast<double>(g.cols - 1)) {
    throw DomainError("bounce center outside the grid");
  }
}

BounceEvent::BounceEvent(BounceSpec spec, GridGeometry geometry) : spec_(spec), geometry_(geometry) {
  spec_.validate(geometry_);
}

double BounceEvent::envelope(double t) const {
  const double s = (t - spec_.contact_start) / spec_.contact_duration;
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::sin(std::numbers::pi * s);
}

PressureMap BounceEvent::pressure(double t) const {
  const double e = envelope(t);
  Vector p = Vector::Zero(static_cast<Eigen::Index>(geometry_.size()));
  if (e > 0.0) {
    const double radius = spec_.max_radius * std::cbrt(e);
    for (std::size_t r = 0; r < geometry_.rows; ++r) {
      for (std::size_t c = 0; c < geometry_.cols; ++c) {
        const double dr = static_cast<double>(r) - spec_.center_row;
        const double dc = static_cast<double>(c) - spec_.center_col;
        const double d2 = dr * dr + dc * dc;
        if (d2 > radius * radius) continue;
        p[static_cast<Eigen::Index>(linear_index(r, c, geometry_))] =
            spec_.peak_pressure * e * std::exp(-d2 / (2.0 * spec_.sigma * spec_.sigma));
      }
    }
  }
  return PressureMap(geometry_, std::move(p));
}

BounceEvent bounce_event(const BounceSpec& spec, const GridGeometry& g) { return BounceEvent(spec, g); }

namespace {

// `count` lattice positions spread evenly over [0, extent - 1].
std::vector<std::size_t> lattice(std::size_t count, std::size_t extent) {
  std::vector<std::size_t> out;
  if (count == 1) {
    out.push_back((extent - 1) / 2);
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(extent - 1) / static_cast<double>(count - 1);
    out.push_back(static_cast<std::size_t>(std::lround(pos)));
  }
  return out;
}

// Bracketing lattice entries and weight of the upper one for coordinate x.
struct Bracket {
  std::size_t lo, hi;
  double w;
};

Bracket bracket(const std::vector<std::size_t>& axis, std::size_t x) {
  if (x <= axis.front()) return {0, 0, 0.0};
  if (x >= axis.back()) return {axis.size() - 1, axis.size() - 1, 0.0};
  std::size_t hi = 1;
  while (axis[hi] < x) ++hi;
  const std::size_t lo = hi - 1;
  const double w = static_cast<double>(x - axis[lo]) / static_cast<double>(axis[hi] - axis[lo]);
  return {lo, hi, w};
}

}  // namespace

RasterEstimate raster_baseline(const TactileFrame& truth, std::size_t m, const AcquisitionConfig& cfg) {
  const GridGeometry& g = truth.geometry();
  if (m < 1 || m > g.size()) throw DomainError("raster sample count must be in [1, N]");
  cfg.validate();

  // Near-square lattice with at most m points, proportioned to the grid.
  auto lattice_rows = static_cast<std::size_t>(
      std::lround(std::sqrt(static_cast<double>(m) * static_cast<double>(g.rows) / static_cast<double>(g.cols))));
  lattice_rows = std::clamp<std::size_t>(lattice_rows, 1, std::min(g.rows, m));
  std::size_t lattice_cols = std::clamp<std::size_t>(m / lattice_rows, 1, g.cols);
  while (lattice_rows * lattice_cols > m) --lattice_rows;
  const auto rows = lattice(lattice_rows, g.rows);
  const auto cols = lattice(lattice_cols, g.cols);

  Vector c(static_cast<Eigen::Index>(g.size()));
  for (std::size_t r = 0; r < g.rows; ++r) {
    const Bracket br = bracket(rows, r);
    for (std::size_t q = 0; q < g.cols; ++q) {
      const Bracket bc = bracket(cols, q);
      auto sample = [&](std::size_t i, std::size_t j) { return truth.at(rows[i], cols[j]); };
      const double top = (1.0 - bc.w) * sample(br.lo, bc.lo) + bc.w * sample(br.lo, bc.hi);
      const double bottom = (1.0 - bc.w) * sample(br.hi, bc.lo) + bc.w * sample(br.hi, bc.hi);
      c[static_cast<Eigen::Index>(linear_index(r, q, g))] = (1.0 - br.w) * top + br.w * bottom;
    }
  }
  return RasterEstimate{TactileFrame(g, std::move(c), truth.timestamp()),
                        static_cast<double>(m) / cfg.clock_hz, lattice_rows * lattice_cols};
}

}  // namespace spts
