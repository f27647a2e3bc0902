#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spts {

/// Raised for violated preconditions on domain values (bad sizes, ranges, signs).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Rectangular taxel grid. Pixels are ordered row-major everywhere in the
/// library, so sensing-matrix columns, dictionary rows and frame entries line up.
struct GridGeometry {
  std::size_t rows = 10;
  std::size_t cols = 10;
  double pitch = 0.015;  // meters between taxel centers

  GridGeometry() = default;
  GridGeometry(std::size_t rows, std::size_t cols, double pitch = 0.015);

  std::size_t size() const { return rows * cols; }
  bool operator==(const GridGeometry& other) const = default;
};

struct Cell {
  std::size_t row;
  std::size_t col;
  bool operator==(const Cell&) const = default;
};

std::size_t linear_index(std::size_t row, std::size_t col, const GridGeometry& geometry);
Cell cell_of(std::size_t index, const GridGeometry& geometry);

/// Parameters of the summing amplifier and of the piezoresistive transduction model.
struct CircuitParams {
  double feedback_resistance = 4700.0;  // R_f, ohms
  double supply = 3.3;                  // V_dd, volts
  double rest_resistance = 1e6;         // unloaded taxel, ohms
  double min_resistance = 1e3;          // fully compressed taxel, ohms
  double pressure_scale = 1e4;          // pascals

  void validate() const;
  double rest_conductance() const { return 1.0 / rest_resistance; }
};

/// Per-pixel conductances (siemens) of one tactile image.
class TactileFrame {
public:
  TactileFrame(GridGeometry geometry, Vector conductance, double timestamp = 0.0);

  /// All pixels at the given conductance.
  static TactileFrame uniform(const GridGeometry& geometry, double conductance, double timestamp = 0.0);

  const GridGeometry& geometry() const { return geometry_; }
  const Vector& conductance() const { return conductance_; }
  double timestamp() const { return timestamp_; }
  std::size_t size() const { return static_cast<std::size_t>(conductance_.size()); }
  double at(std::size_t row, std::size_t col) const {
    return conductance_[static_cast<Eigen::Index>(linear_index(row, col, geometry_))];
  }

private:
  GridGeometry geometry_;
  Vector conductance_;
  double timestamp_;
};

/// Ground-truth pressure (pascals) over the grid.
class PressureMap {
public:
  PressureMap(GridGeometry geometry, Vector pressure);
  static PressureMap zeros(const GridGeometry& geometry);

  const GridGeometry& geometry() const { return geometry_; }
  const Vector& pressure() const { return pressure_; }
  double at(std::size_t row, std::size_t col) const {
    return pressure_[static_cast<Eigen::Index>(linear_index(row, col, geometry_))];
  }

private:
  GridGeometry geometry_;
  Vector pressure_;
};

double to_conductance(double resistance);

/// Resistance of one taxel under pressure: R_min + (R_off - R_min) exp(-p / p0).
double taxel_resistance(double pressure, const CircuitParams& params);

TactileFrame transduce(const PressureMap& map, const CircuitParams& params, double timestamp = 0.0);

// Frame JSON-lines: {"rows":R,"cols":C,"t":s,"conductance":[...]}; pressure maps use "pressure".
std::string frame_to_json_line(const TactileFrame& frame);
TactileFrame frame_from_json_line(const std::string& line);
std::string pressure_to_json_line(const PressureMap& map, double t = 0.0);
PressureMap pressure_from_json_line(const std::string& line);

void write_frames(std::ostream& out, const std::vector<TactileFrame>& frames);
std::vector<TactileFrame> read_frames(std::istream& in);

}  // namespace spts
