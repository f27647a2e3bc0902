#pragma once

// Downstream use of reconstructed frames: nearest-exemplar classification with
// majority voting, support scoring, contact localization and dynamics metrics.
//
// "Intensity" below is conductance above the unloaded level (1 / R_off),
// clamped at zero, so untouched taxels contribute nothing.

#include "spts/core.hpp"

#include <string>
#include <utility>
#include <vector>

namespace spts {

struct LibraryEntry {
  std::string label;
  TactileFrame exemplar;
};

class ObjectLibrary {
public:
  ObjectLibrary() = default;
  explicit ObjectLibrary(std::vector<LibraryEntry> entries);

  void add(std::string label, TactileFrame exemplar);
  const std::vector<LibraryEntry>& entries() const { return entries_; }
  /// Distinct labels in first-seen order.
  std::vector<std::string> labels() const;
  bool empty() const { return entries_.empty(); }

private:
  std::vector<LibraryEntry> entries_;
};

class NoContactError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Label of the exemplar nearest in Euclidean distance after scaling both
/// intensity maps to unit norm (zero maps are left as is). Ties go to the earlier entry.
std::string classify(const TactileFrame& frame, const ObjectLibrary& library, double rest_conductance = 0.0);

/// Most frequent label; ties go to the label that appears first in the window.
std::string vote(const std::vector<std::string>& window);

struct SupportMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
  double threshold_used = 0.0;  // absolute cut applied to the truth frame's intensity
  std::size_t true_positive = 0, false_positive = 0, false_negative = 0, true_negative = 0;
};

/// Binarizes each frame at threshold * (its own maximum intensity) and compares
/// pixel-wise. Precision, recall and IoU of an empty denominator are 1.
SupportMetrics support_accuracy(const TactileFrame& recon, const TactileFrame& truth, double threshold = 0.3,
                                double rest_conductance = 0.0);

struct GridPoint {
  double row = 0.0;
  double col = 0.0;
};

/// Intensity-weighted mean pixel coordinate. Throws NoContactError when no
/// pixel rises above the rest level.
GridPoint center_of_mass(const TactileFrame& frame, double rest_conductance = 0.0);

double localization_error(const GridPoint& estimate, const GridPoint& truth);

/// Mean over consecutive frame pairs of the mean absolute per-pixel intensity change.
double delta_pressure(const std::vector<TactileFrame>& frames, double rest_conductance = 0.0);

struct TracePoint {
  double t = 0.0;
  double max_intensity = 0.0;
};

std::vector<TracePoint> max_pressure_trace(const std::vector<TactileFrame>& frames, double rest_conductance = 0.0);

/// Conductance above rest, clamped at zero.
Vector intensity(const TactileFrame& frame, double rest_conductance);

}  // namespace spts
