#include "spts/firmware.hpp"

#include "spts/binary.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <ostream>

namespace spts {

std::uint32_t lcg_advance(std::uint32_t seed, std::uint64_t steps) {
  // Compose x -> a x + c with itself by repeated squaring, all mod 2^32.
  std::uint32_t mul = 1u, add = 0u;
  std::uint32_t step_mul = lcg::kMultiplier, step_add = lcg::kIncrement;
  while (steps > 0) {
    if (steps & 1u) {
      mul = step_mul * mul;
      add = step_mul * add + step_add;
    }
    step_add = step_mul * step_add + step_add;
    step_mul = step_mul * step_mul;
    steps >>= 1;
  }
  return mul * seed + add;
}

double unipolar_voltage(std::uint32_t seed, double supply) {
  if (!(supply > 0.0)) throw DomainError("supply voltage must be positive");
  const std::uint32_t low = seed % lcg::kFractionDivisor;
  return supply * (static_cast<double>(low) / static_cast<double>(lcg::kFractionDivisor));
}

double bipolar_weight(double unipolar, double supply) {
  if (!(supply > 0.0)) throw DomainError("supply voltage must be positive");
  if (!(unipolar >= 0.0 && unipolar <= supply)) throw DomainError("unipolar voltage outside [0, V_dd]");
  return 2.0 * unipolar - supply;
}

SeedTable assign_seeds(std::uint32_t master_seed, std::size_t n) {
  if (n < 1) throw DomainError("seed table needs at least one pixel");
  SeedTable table;
  table.master_seed = master_seed;
  table.seeds.reserve(n);
  std::uint32_t state = master_seed;
  for (std::size_t k = 0; k < n; ++k) {
    state = lcg_step(state);
    table.seeds.push_back(state);
  }
  return table;
}

std::string seed_table_to_json(const SeedTable& table) {
  nlohmann::json j;
  j["master_seed"] = table.master_seed;
  j["seeds"] = table.seeds;
  return j.dump();
}

SeedTable seed_table_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SeedTable t;
    t.master_seed = j.at("master_seed").get<std::uint32_t>();
    t.seeds = j.at("seeds").get<std::vector<std::uint32_t>>();
    if (t.seeds.empty()) throw DomainError("seed table is empty");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("bad seed table: ") + e.what());
  }
}

SensingMatrix::SensingMatrix(Matrix weights, SeedTable seeds, double supply, std::size_t first_row)
    : weights_(std::move(weights)), seeds_(std::move(seeds)), supply_(supply), first_row_(first_row) {
  if (weights_.rows() < 1) throw DomainError("sensing matrix needs at least one measurement");
  if (static_cast<std::size_t>(weights_.cols()) != seeds_.seeds.size()) {
    throw DomainError("sensing matrix width does not match seed table");
  }
}

SensingMatrix SensingMatrix::slice(std::size_t begin, std::size_t count) const {
  if (count < 1 || begin + count > rows()) throw DomainError("row slice outside sensing matrix");
  return SensingMatrix(weights_.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)),
                       seeds_, supply_, first_row_ + begin);
}

SensingMatrix generate_sensing_matrix(const SeedTable& table, std::size_t m, double supply, std::size_t first_row) {
  if (m < 1) throw DomainError("sensing matrix needs at least one measurement");
  if (table.seeds.empty()) throw DomainError("seed table is empty");
  const auto n = static_cast<Eigen::Index>(table.seeds.size());
  Matrix w(static_cast<Eigen::Index>(m), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    std::uint32_t state = lcg_advance(table.seeds[static_cast<std::size_t>(k)], first_row);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      state = lcg_step(state);
      w(i, k) = bipolar_weight(unipolar_voltage(state, supply), supply);
    }
  }
  return SensingMatrix(std::move(w), table, supply, first_row);
}

namespace {
const binary::Magic kPhiMagic = binary::make_magic("SPTSPHI1");
}

void write_sensing_matrix(std::ostream& out, const SensingMatrix& phi) {
  binary::write_magic(out, kPhiMagic);
  binary::write_u32(out, static_cast<std::uint32_t>(phi.rows()));
  binary::write_u32(out, static_cast<std::uint32_t>(phi.pixels()));
  binary::write_f64(out, phi.supply());
  const Matrix& w = phi.weights();
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index k = 0; k < w.cols(); ++k) binary::write_f64(out, w(i, k));
}

Matrix read_sensing_matrix(std::istream& in, double* supply) {
  binary::expect_magic(in, kPhiMagic);
  const auto m = binary::read_u32(in);
  const auto n = binary::read_u32(in);
  const double vdd = binary::read_f64(in);
  if (supply) *supply = vdd;
  Matrix w(m, n);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index k = 0; k < w.cols(); ++k) w(i, k) = binary::read_f64(in);
  return w;
}

}  // namespace spts
