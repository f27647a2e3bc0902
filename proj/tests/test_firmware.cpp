#include "spts/firmware.hpp"

#include <doctest.h>

#include <cstdint>
#include <set>
#include <sstream>

#include "data/lcg_oracle.inc"

using namespace spts;

TEST_CASE("lcg_step examples") {
  CHECK(lcg_step(0u) == 1013904223u);
  CHECK(lcg_step(1u) == 1015568748u);
  CHECK(lcg_step(1013904223u) == 1196435762u);
  static_assert(lcg_step(0u) == 1013904223u);
}

TEST_CASE("lcg_step matches the big-integer oracle") {
  std::uint32_t a = 0, b = 1;
  for (int i = 0; i < 1000; ++i) {
    a = lcg_step(a);
    b = lcg_step(b);
    REQUIRE(a == kLcgFrom0[i]);
    REQUIRE(b == kLcgFrom1[i]);
  }
}

TEST_CASE("lcg_advance agrees with repeated stepping") {
  for (std::uint32_t seed : {0u, 1u, 0xDEADBEEFu, 4294967295u}) {
    std::uint32_t s = seed;
    for (std::uint64_t n = 0; n < 300; ++n) {
      REQUIRE(lcg_advance(seed, n) == s);
      s = lcg_step(s);
    }
  }
  CHECK(lcg_advance(0u, 1000) == kLcgFrom0[999]);
}

TEST_CASE("unipolar_voltage uses the low 24 bits") {
  CHECK(unipolar_voltage(0u, 3.3) == 0.0);
  CHECK(unipolar_voltage(1u << 23, 3.3) == doctest::Approx(1.65).epsilon(1e-15));
  CHECK(unipolar_voltage(1u << 24, 3.3) == 0.0);
  const double v = unipolar_voltage(0xFFFFFFFFu, 3.3);
  CHECK(v < 3.3);
  CHECK(v > 3.2999);
}

TEST_CASE("bipolar_weight maps [0, Vdd] onto [-Vdd, Vdd]") {
  CHECK(bipolar_weight(0.0, 3.3) == doctest::Approx(-3.3));
  CHECK(bipolar_weight(3.3, 3.3) == doctest::Approx(3.3));
  CHECK(bipolar_weight(1.65, 3.3) == doctest::Approx(0.0));
  CHECK_THROWS_AS(bipolar_weight(-0.01, 3.3), DomainError);
  CHECK_THROWS_AS(bipolar_weight(3.31, 3.3), DomainError);
}

TEST_CASE("assign_seeds walks the LCG orbit of the master seed") {
  const SeedTable t = assign_seeds(0u, 2);
  CHECK(t.master_seed == 0u);
  CHECK(t.seeds == std::vector<std::uint32_t>{1013904223u, 1196435762u});
  CHECK(assign_seeds(12345u, 1).seeds.front() == lcg_step(12345u));
  CHECK(assign_seeds(99u, 100) == assign_seeds(99u, 100));
  const SeedTable big = assign_seeds(7u, 100);
  CHECK(std::set<std::uint32_t>(big.seeds.begin(), big.seeds.end()).size() == 100);
  CHECK_THROWS_AS(assign_seeds(0u, 0), DomainError);
}

TEST_CASE("seed table JSON round trip") {
  const SeedTable t = assign_seeds(42u, 10);
  CHECK(seed_table_from_json(seed_table_to_json(t)) == t);
}

TEST_CASE("sensing matrix hand-traced entry") {
  const SeedTable t = assign_seeds(0u, 2);
  const SensingMatrix phi = generate_sensing_matrix(t, 1, 3.3);
  // pixel 0: seed 1013904223 -> state 1196435762 = 71 * 2^24 + 5253426
  CHECK(1196435762u % 16777216u == 5253426u);
  const double fraction = 5253426.0 / 16777216.0;
  CHECK(fraction == doctest::Approx(0.3131286).epsilon(1e-6));
  CHECK(unipolar_voltage(1196435762u, 3.3) == doctest::Approx(1.0333243).epsilon(1e-6));
  CHECK(phi.weights()(0, 0) == doctest::Approx(2.0 * 3.3 * fraction - 3.3).epsilon(1e-14));
  CHECK(phi.weights()(0, 0) == doctest::Approx(-1.2333513).epsilon(1e-7));
  CHECK_THROWS_AS(generate_sensing_matrix(t, 0, 3.3), DomainError);
}

TEST_CASE("sensing matrix statistics, bounds and decorrelation") {
  const SensingMatrix phi = generate_sensing_matrix(assign_seeds(1u, 100), 1000, 3.3);
  const Matrix& w = phi.weights();
  CHECK(w.allFinite());
  CHECK(w.maxCoeff() <= 3.3);
  CHECK(w.minCoeff() >= -3.3);
  CHECK(std::abs(w.mean()) < 0.165);
  for (Eigen::Index r = 0; r < 1000; r += 97) CHECK(std::abs(w.row(r).mean()) < 0.165 * 3.0);

  const Matrix x = generate_sensing_matrix(assign_seeds(1u, 100), 200, 3.3).weights();
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Vector norms = centered.colwise().norm();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 100; ++i)
    for (Eigen::Index j = i + 1; j < 100; ++j)
      worst = std::max(worst, std::abs(centered.col(i).dot(centered.col(j))) / (norms[i] * norms[j]));
  CHECK(worst < 0.5);
}

TEST_CASE("sensing matrix prefix, slice and offset rows agree") {
  const SeedTable t = assign_seeds(3u, 100);
  const SensingMatrix full = generate_sensing_matrix(t, 60, 3.3);
  CHECK(full.prefix(17).weights() == generate_sensing_matrix(t, 17, 3.3).weights());
  const SensingMatrix mid = full.slice(20, 15);
  CHECK(mid.first_row() == 20);
  CHECK(mid.weights() == generate_sensing_matrix(t, 15, 3.3, 20).weights());
  CHECK(generate_sensing_matrix(t, 60, 3.3).weights() == full.weights());
  CHECK_THROWS_AS(full.slice(50, 11), DomainError);
}

TEST_CASE("sensing matrix binary container round trip") {
  const SensingMatrix phi = generate_sensing_matrix(assign_seeds(5u, 12), 7, 3.3);
  std::stringstream ss;
  write_sensing_matrix(ss, phi);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 8) == "SPTSPHI1");
  CHECK(bytes.size() == 8 + 4 + 4 + 8 + 7 * 12 * 8);
  double supply = 0.0;
  CHECK(read_sensing_matrix(ss, &supply) == phi.weights());
  CHECK(supply == 3.3);

  std::stringstream bad("SPTSXXXX");
  CHECK_THROWS_AS(read_sensing_matrix(bad), DomainError);
}
