#include "spts/core.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <ostream>

namespace spts {

using nlohmann::json;

GridGeometry::GridGeometry(std::size_t rows, std::size_t cols, double pitch)
    : rows(rows), cols(cols), pitch(pitch) {
  if (rows < 1 || cols < 1) throw DomainError("grid needs at least one row and one column");
  if (!(pitch > 0.0) || !std::isfinite(pitch)) throw DomainError("grid pitch must be positive");
}

std::size_t linear_index(std::size_t row, std::size_t col, const GridGeometry& geometry) {
  if (row >= geometry.rows || col >= geometry.cols) {
    throw DomainError("cell (" + std::to_string(row) + "," + std::to_string(col) + ") outside " +
                      std::to_string(geometry.rows) + "x" + std::to_string(geometry.cols) + " grid");
  }
  return row * geometry.cols + col;
}

Cell cell_of(std::size_t index, const GridGeometry& geometry) {
  if (index >= geometry.size()) throw DomainError("pixel index outside grid");
  return {index / geometry.cols, index % geometry.cols};
}

void CircuitParams::validate() const {
  for (double v : {feedback_resistance, supply, rest_resistance, min_resistance, pressure_scale}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("circuit parameters must be positive and finite");
  }
  if (!(min_resistance < rest_resistance)) throw DomainError("min_resistance must be below rest_resistance");
}

TactileFrame::TactileFrame(GridGeometry geometry, Vector conductance, double timestamp)
    : geometry_(geometry), conductance_(std::move(conductance)), timestamp_(timestamp) {
  if (static_cast<std::size_t>(conductance_.size()) != geometry_.size()) {
    throw DomainError("frame has " + std::to_string(conductance_.size()) + " values, grid needs " +
                      std::to_string(geometry_.size()));
  }
  for (double c : conductance_) {
    if (!std::isfinite(c) || c < 0.0) throw DomainError("conductance must be finite and non-negative");
  }
}

TactileFrame TactileFrame::uniform(const GridGeometry& geometry, double conductance, double timestamp) {
  return TactileFrame(geometry, Vector::Constant(static_cast<Eigen::Index>(geometry.size()), conductance),
                      timestamp);
}

PressureMap::PressureMap(GridGeometry geometry, Vector pressure)
    : geometry_(geometry), pressure_(std::move(pressure)) {
  if (static_cast<std::size_t>(pressure_.size()) != geometry_.size()) {
    throw DomainError("pressure map size does not match grid");
  }
  for (double p : pressure_) {
    if (!std::isfinite(p) || p < 0.0) throw DomainError("pressure must be finite and non-negative");
  }
}

PressureMap PressureMap::zeros(const GridGeometry& geometry) {
  return PressureMap(geometry, Vector::Zero(static_cast<Eigen::Index>(geometry.size())));
}

double to_conductance(double resistance) {
  if (!(resistance > 0.0) || !std::isfinite(resistance)) {
    throw DomainError("resistance must be positive and finite");
  }
  return 1.0 / resistance;
}

double taxel_resistance(double pressure, const CircuitParams& params) {
  return params.min_resistance +
         (params.rest_resistance - params.min_resistance) * std::exp(-pressure / params.pressure_scale);
}

TactileFrame transduce(const PressureMap& map, const CircuitParams& params, double timestamp) {
  params.validate();
  Vector c(map.pressure().size());
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = to_conductance(taxel_resistance(map.pressure()[i], params));
  return TactileFrame(map.geometry(), std::move(c), timestamp);
}

namespace {

json vector_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

GridGeometry geometry_from(const json& j) {
  return GridGeometry(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
}

Vector vector_from(const json& j) {
  auto values = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json parse_line(const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed frame line: ") + e.what());
  }
}

}  // namespace

std::string frame_to_json_line(const TactileFrame& frame) {
  json j;
  j["rows"] = frame.geometry().rows;
  j["cols"] = frame.geometry().cols;
  j["t"] = frame.timestamp();
  j["conductance"] = vector_json(frame.conductance());
  return j.dump();
}

TactileFrame frame_from_json_line(const std::string& line) {
  const json j = parse_line(line);
  try {
    return TactileFrame(geometry_from(j), vector_from(j.at("conductance")), j.value("t", 0.0));
  } catch (const json::exception& e) {
    throw DomainError(std::string("bad frame record: ") + e.what());
  }
}

std::string pressure_to_json_line(const PressureMap& map, double t) {
  json j;
  j["rows"] = map.geometry().rows;
  j["cols"] = map.geometry().cols;
  j["t"] = t;
  j["pressure"] = vector_json(map.pressure());
  return j.dump();
}

PressureMap pressure_from_json_line(const std::string& line) {
  const json j = parse_line(line);
  try {
    return PressureMap(geometry_from(j), vector_from(j.at("pressure")));
  } catch (const json::exception& e) {
    throw DomainError(std::string("bad pressure record: ") + e.what());
  }
}

void write_frames(std::ostream& out, const std::vector<TactileFrame>& frames) {
  for (const auto& f : frames) out << frame_to_json_line(f) << '\n';
}

std::vector<TactileFrame> read_frames(std::istream& in) {
  std::vector<TactileFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    frames.push_back(frame_from_json_line(line));
  }
  return frames;
}

}  // namespace spts
