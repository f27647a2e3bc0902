#pragma once

// Summing amplifier and ADC model. One measurement is the inverting summer's
// output for one row of weights, V_out = -R_f * sum_k V_k * C_k, followed by
// optional Gaussian output noise, clipping and uniform quantization.

#include "spts/core.hpp"
#include "spts/firmware.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>

namespace spts {

struct AcquisitionConfig {
  double clock_hz = 70000.0;
  unsigned adc_bits = 12;
  double adc_range = 10.0;   // levels span [-adc_range, +adc_range]
  double noise_sigma = 0.0;  // volts at the amplifier output
  double saturation = 10.0;

  void validate() const;
  double lsb() const;
};

/// Samples of the amplifier output, one per clock tick.
struct MeasurementVector {
  Vector values;
  std::vector<double> timestamps;
  std::size_t first_row = 0;  // tick index of values[0] within the sensing sequence

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  /// Samples [begin, begin + count).
  MeasurementVector slice(std::size_t begin, std::size_t count) const;
  MeasurementVector prefix(std::size_t count) const { return slice(0, count); }
};

/// Time-varying tactile scene.
using Scene = std::function<TactileFrame(double t)>;

Scene static_scene(TactileFrame frame);

double measure_once(const Eigen::Ref<const Vector>& weights, const TactileFrame& frame, const CircuitParams& params);

double quantize(double volts, const AcquisitionConfig& cfg);

/// Acquires one sample per row of `phi`; sample i is taken at (phi.first_row() + i) / f_clk
/// from the scene at that instant.
MeasurementVector acquire(const Scene& scene, const SensingMatrix& phi, const CircuitParams& circuit,
                          const AcquisitionConfig& cfg, std::uint64_t noise_seed = 0);

double frame_rate(std::size_t m, const AcquisitionConfig& cfg);

// JSON-lines {"t":s,"v":volts,"row":i}.
void write_measurements_jsonl(std::ostream& out, const MeasurementVector& y);
MeasurementVector read_measurements_jsonl(std::istream& in);
// "SPTSMEA1", u32 M, u32 2, f64 f_clk, then M (t, v) pairs.
void write_measurements_binary(std::ostream& out, const MeasurementVector& y, const AcquisitionConfig& cfg);
MeasurementVector read_measurements_binary(std::istream& in);

}  // namespace spts
