#include "spts/frontend.hpp"

#include "spts/binary.hpp"
#include "spts/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace spts {

void AcquisitionConfig::validate() const {
  if (!(clock_hz > 0.0) || !std::isfinite(clock_hz)) throw DomainError("measurement clock must be positive");
  if (adc_bits < 1 || adc_bits > 24) throw DomainError("adc_bits must be in [1, 24]");
  if (!(adc_range > 0.0)) throw DomainError("adc_range must be positive");
  if (!(noise_sigma >= 0.0)) throw DomainError("noise_sigma must be non-negative");
  if (!(saturation > 0.0)) throw DomainError("saturation must be positive");
}

double AcquisitionConfig::lsb() const { return 2.0 * adc_range / std::ldexp(1.0, static_cast<int>(adc_bits)); }

MeasurementVector MeasurementVector::slice(std::size_t begin, std::size_t count) const {
  if (count < 1 || begin + count > size()) throw DomainError("measurement slice out of range");
  MeasurementVector out;
  out.values = values.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
  out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                        timestamps.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.first_row = first_row + begin;
  return out;
}

Scene static_scene(TactileFrame frame) {
  return [frame = std::move(frame)](double) { return frame; };
}

double measure_once(const Eigen::Ref<const Vector>& weights, const TactileFrame& frame, const CircuitParams& params) {
  if (static_cast<std::size_t>(weights.size()) != frame.size()) {
    throw DomainError("weight row length does not match frame size");
  }
  return -params.feedback_resistance * weights.dot(frame.conductance());
}

double quantize(double volts, const AcquisitionConfig& cfg) {
  const double v = std::clamp(volts, -cfg.saturation, cfg.saturation);
  if (v == 0.0) return 0.0;
  const double step = cfg.lsb();
  const double top = std::ldexp(1.0, static_cast<int>(cfg.adc_bits) - 1);  // levels per polarity
  // Mid-rise: level (k + 1/2) * step; boundary ties go away from zero.
  double k = v > 0.0 ? std::floor(v / step) : -std::floor(-v / step) - 1.0;
  k = std::clamp(k, -top, top - 1.0);
  return (k + 0.5) * step;
}

MeasurementVector acquire(const Scene& scene, const SensingMatrix& phi, const CircuitParams& circuit,
                          const AcquisitionConfig& cfg, std::uint64_t noise_seed) {
  cfg.validate();
  Rng rng(noise_seed);
  MeasurementVector y;
  y.first_row = phi.first_row();
  y.values.resize(static_cast<Eigen::Index>(phi.rows()));
  y.timestamps.resize(phi.rows());
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    const double t = static_cast<double>(phi.first_row() + i) / cfg.clock_hz;
    const TactileFrame frame = scene(t);
    if (frame.size() != phi.pixels()) throw DomainError("scene size does not match sensing matrix");
    double v = measure_once(phi.weights().row(static_cast<Eigen::Index>(i)).transpose(), frame, circuit);
    if (cfg.noise_sigma > 0.0) v += rng.normal(0.0, cfg.noise_sigma);
    y.values[static_cast<Eigen::Index>(i)] = quantize(v, cfg);
    y.timestamps[i] = t;
  }
  return y;
}

double frame_rate(std::size_t m, const AcquisitionConfig& cfg) {
  if (m < 1) throw DomainError("frame needs at least one measurement");
  return cfg.clock_hz / static_cast<double>(m);
}

void write_measurements_jsonl(std::ostream& out, const MeasurementVector& y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    nlohmann::json j;
    j["t"] = y.timestamps[i];
    j["v"] = y.values[static_cast<Eigen::Index>(i)];
    j["row"] = y.first_row + i;
    out << j.dump() << '\n';
  }
}

MeasurementVector read_measurements_jsonl(std::istream& in) {
  std::vector<double> values;
  MeasurementVector y;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (first) y.first_row = j.at("row").get<std::size_t>();
      first = false;
      y.timestamps.push_back(j.at("t").get<double>());
      values.push_back(j.at("v").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw DomainError(std::string("bad measurement record: ") + e.what());
    }
  }
  y.values = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return y;
}

namespace {
const binary::Magic kMeasurementMagic = binary::make_magic("SPTSMEA1");
}

void write_measurements_binary(std::ostream& out, const MeasurementVector& y, const AcquisitionConfig& cfg) {
  binary::write_magic(out, kMeasurementMagic);
  binary::write_u32(out, static_cast<std::uint32_t>(y.size()));
  binary::write_u32(out, 2);
  binary::write_f64(out, cfg.clock_hz);
  for (std::size_t i = 0; i < y.size(); ++i) {
    binary::write_f64(out, y.timestamps[i]);
    binary::write_f64(out, y.values[static_cast<Eigen::Index>(i)]);
  }
}

MeasurementVector read_measurements_binary(std::istream& in) {
  binary::expect_magic(in, kMeasurementMagic);
  const auto m = binary::read_u32(in);
  if (binary::read_u32(in) != 2) throw DomainError("measurement container must have two columns");
  const double clock = binary::read_f64(in);
  MeasurementVector y;
  y.values.resize(m);
  y.timestamps.resize(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    y.timestamps[i] = binary::read_f64(in);
    y.values[i] = binary::read_f64(in);
  }
  if (m > 0) y.first_row = static_cast<std::size_t>(std::llround(y.timestamps[0] * clock));
  return y;
}

}  // namespace spts
