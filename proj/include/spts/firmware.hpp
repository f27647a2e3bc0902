#pragma once

// Emulation of the per-taxel weight generator: every taxel runs the same
// 32-bit LCG from its own seed, feeds the low 24 bits to its DAC, and an op-amp
// stage maps the unipolar DAC voltage onto a bipolar weight.

#include "spts/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spts {

namespace lcg {
inline constexpr std::uint32_t kMultiplier = 1664525u;
inline constexpr std::uint32_t kIncrement = 1013904223u;
inline constexpr std::uint32_t kFractionDivisor = 16777216u;  // 2^24
}  // namespace lcg

/// One clock tick of a taxel's generator: (a * seed + c) mod 2^32.
constexpr std::uint32_t lcg_step(std::uint32_t seed) {
  return lcg::kMultiplier * seed + lcg::kIncrement;  // unsigned wraparound is the modulus
}

/// State after `steps` clock ticks, in O(log steps).
std::uint32_t lcg_advance(std::uint32_t seed, std::uint64_t steps);

/// DAC output for a generator state: V_dd * (state mod 2^24) / 2^24, in [0, V_dd).
double unipolar_voltage(std::uint32_t seed, double supply);

/// Op-amp shift/scale of the DAC output onto [-V_dd, +V_dd].
double bipolar_weight(double unipolar, double supply);

struct SeedTable {
  std::uint32_t master_seed = 0;
  std::vector<std::uint32_t> seeds;

  bool operator==(const SeedTable&) const = default;
};

/// Pixel k receives the (k+1)-th LCG iterate of the master seed.
SeedTable assign_seeds(std::uint32_t master_seed, std::size_t n);

std::string seed_table_to_json(const SeedTable& table);
SeedTable seed_table_from_json(const std::string& text);

/// M x N weighting voltages. Row i holds the weights driven on clock tick
/// first_row + i; every taxel steps its generator once before each tick.
class SensingMatrix {
public:
  SensingMatrix(Matrix weights, SeedTable seeds, double supply, std::size_t first_row = 0);

  std::size_t rows() const { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t pixels() const { return static_cast<std::size_t>(weights_.cols()); }
  std::size_t first_row() const { return first_row_; }
  double supply() const { return supply_; }
  const Matrix& weights() const { return weights_; }
  const SeedTable& seed_table() const { return seeds_; }

  /// Rows [begin, begin + count) as their own matrix (ticks keep their absolute index).
  SensingMatrix slice(std::size_t begin, std::size_t count) const;
  SensingMatrix prefix(std::size_t count) const { return slice(0, count); }

private:
  Matrix weights_;
  SeedTable seeds_;
  double supply_;
  std::size_t first_row_;
};

SensingMatrix generate_sensing_matrix(const SeedTable& table, std::size_t m, double supply,
                                      std::size_t first_row = 0);

// "SPTSPHI1", u32 M, u32 N, f64 V_dd, then M*N f64 row-major.
void write_sensing_matrix(std::ostream& out, const SensingMatrix& phi);
Matrix read_sensing_matrix(std::istream& in, double* supply = nullptr);

}  // namespace spts
