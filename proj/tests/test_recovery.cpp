#include "spts/recovery.hpp"
#include "spts/rng.hpp"

#include "oracle.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace spts;

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = rng.normal();
  return a;
}

// Unit-norm columns with all-nonnegative entries, so x = -Psi * (positive alpha)
// decodes to nonnegative conductances.
Matrix positive_dictionary(Eigen::Index n, Eigen::Index k, Rng& rng) {
  Matrix d(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) d(i, j) = rng.uniform() < 0.2 ? rng.uniform(0.1, 1.0) : 0.0;
    d(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))), j) += 0.5;
    d.col(j).normalize();
  }
  return d;
}

}  // namespace

TEST_CASE("sparsity_target rounding") {
  CHECK(sparsity_target(20) == 5);
  CHECK(sparsity_target(2) == 1);
  CHECK(sparsity_target(1) == 1);
  CHECK(sparsity_target(15) == 4);
  CHECK(sparsity_target(13) == 3);
  CHECK(sparsity_target(14) == 4);
  CHECK(sparsity_target(100) == 25);
  CHECK_THROWS_AS(sparsity_target(0), DomainError);
}

TEST_CASE("omp trivial cases") {
  const Matrix eye = Matrix::Identity(10, 10);
  const OmpResult zero = omp(eye, Vector::Zero(10), 3);
  CHECK(zero.code.indices.empty());
  CHECK(zero.code.dense(10).isZero(0.0));

  Vector y = Vector::Zero(10);
  y[5] = -2.75;
  const OmpResult one = omp(eye, y, 1);
  REQUIRE(one.code.indices.size() == 1);
  CHECK(one.code.indices[0] == 5);
  CHECK(one.code.coefficients[0] == doctest::Approx(-2.75));
  CHECK(one.residual.norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(omp(eye, y, 0), DomainError);
  CHECK_THROWS_AS(omp(eye, Vector::Zero(9), 1), DomainError);
}

TEST_CASE("omp stops early on exact fits and drops dependent columns") {
  Matrix a(4, 3);
  a << 1, 2, 0,
       0, 0, 1,
       0, 0, 0,
       0, 0, 0;
  Vector y(4);
  y << 3, 1, 0, 0;
  const OmpResult r = omp(a, y, 3);
  CHECK(r.code.indices.size() == 2);
  CHECK(r.residual.norm() < 1e-10);

  // the second column is the first plus a tiny tilt, so after one pick the
  // other is numerically in the span and gets rejected
  Matrix b(3, 2);
  b << 1, 1,
       0, 0,
       0, 1e-12;
  Vector y2(3);
  y2 << 1, 0, 1;
  const OmpResult r2 = omp(b, y2, 2);
  CHECK(r2.code.indices.size() == 1);
  CHECK(r2.dropped_columns == 1);
}

TEST_CASE("omp invariants on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = gaussian_matrix(20, 50, rng);
    const Vector y = gaussian_matrix(20, 1, rng).col(0);
    const std::size_t s = 1 + rng.below(10);
    const OmpResult r = omp(a, y, s);

    const std::set<std::size_t> unique(r.code.indices.begin(), r.code.indices.end());
    CHECK(unique.size() == r.code.indices.size());
    CHECK(r.code.indices.size() <= s);
    for (std::size_t i = 1; i < r.residual_history.size(); ++i)
      CHECK(r.residual_history[i] <= r.residual_history[i - 1] * (1 + 1e-12));

    Matrix sub(20, static_cast<Eigen::Index>(r.code.indices.size()));
    for (std::size_t j = 0; j < r.code.indices.size(); ++j)
      sub.col(static_cast<Eigen::Index>(j)) = a.col(static_cast<Eigen::Index>(r.code.indices[j]));
    CHECK((sub.transpose() * r.residual).norm() <= 1e-9 * sub.norm() * y.norm());
    CHECK((y - a * r.code.dense(50) - r.residual).norm() <= 1e-9 * y.norm());
  }
}

TEST_CASE("omp matches the exhaustive best support on small instances") {
  Rng rng(77);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = gaussian_matrix(8, 12, rng);
    Vector alpha = Vector::Zero(12);
    const auto i = static_cast<Eigen::Index>(rng.below(12));
    auto j = static_cast<Eigen::Index>(rng.below(11));
    if (j >= i) ++j;
    alpha[i] = rng.normal();
    alpha[j] = rng.normal();
    const Vector y = a * alpha;
    const double best = oracle::best_support_residual(a, y, 2);
    const OmpResult r = omp(a, y, 2);
    if (std::abs(r.residual.norm() - best) <= 1e-9) ++agree;
  }
  CHECK(agree >= 90);
}

TEST_CASE("reconstruct recovers frames built from a few atoms") {
  const GridGeometry g(10, 10);
  const CircuitParams circuit;
  AcquisitionConfig cfg;
  cfg.adc_bits = 24;
  Rng rng(31);
  const Matrix psi = positive_dictionary(100, 100, rng);
  const SensingMatrix phi = generate_sensing_matrix(assign_seeds(17u, 100), 40, 3.3);

  int good = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Vector alpha = Vector::Zero(100);
    for (int k = 0; k < 3; ++k) alpha[static_cast<Eigen::Index>(rng.below(100))] = rng.uniform(0.05, 0.2);
    const Vector x = -(psi * alpha);
    const TactileFrame truth(g, -x / circuit.feedback_resistance);
    const MeasurementVector y = acquire(static_scene(truth), phi, circuit, cfg);
    const Reconstruction r = reconstruct(phi, psi, y, circuit, g);
    CHECK(r.m_used == 40);
    CHECK(r.code.sparsity == 10);
    CHECK(r.frame.conductance().minCoeff() >= 0.0);
    const double err = (r.frame.conductance() - truth.conductance()).norm() / truth.conductance().norm();
    if (err < 1e-4) ++good;
  }
  CHECK(good >= 27);
}

TEST_CASE("reconstruct: zero measurements, linearity at fixed support, dimension checks") {
  const GridGeometry g(10, 10);
  const CircuitParams circuit;
  Rng rng(8);
  const Matrix psi = positive_dictionary(100, 60, rng);
  const SensingMatrix phi = generate_sensing_matrix(assign_seeds(5u, 100), 24, 3.3);

  MeasurementVector zero;
  zero.values = Vector::Zero(24);
  zero.timestamps.assign(24, 0.0);
  const Reconstruction r0 = reconstruct(phi, psi, zero, circuit, g);
  CHECK(r0.frame.conductance().isZero(0.0));
  CHECK(r0.code.indices.empty());

  const Vector x = -(psi.col(3) * 0.02 + psi.col(40) * 0.01);
  MeasurementVector y1 = zero, y2 = zero;
  y1.values = phi.weights() * x;
  y2.values = 2.0 * y1.values;
  const Reconstruction a = reconstruct(phi, psi, y1, circuit, g);
  const Reconstruction b = reconstruct(phi, psi, y2, circuit, g);
  CHECK(a.code.indices == b.code.indices);
  CHECK((b.frame.conductance() - 2.0 * a.frame.conductance()).norm() <= 1e-9 * b.frame.conductance().norm());
  CHECK(a.frame.conductance().isApprox(-x / circuit.feedback_resistance, 1e-8));

  MeasurementVector short_y = zero.prefix(10);
  CHECK_THROWS_AS(reconstruct(phi, psi, short_y, circuit, g), DomainError);
  CHECK_THROWS_AS(reconstruct(phi, Matrix::Identity(50, 50), zero, circuit, g), DomainError);
}

TEST_CASE("negative decoded conductances are clamped and counted") {
  const GridGeometry g(1, 2);
  const CircuitParams circuit;
  const Matrix psi = Matrix::Identity(2, 2);
  Matrix w(6, 2);
  w << 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1;
  const SensingMatrix phi(w, assign_seeds(1u, 2), 3.3);
  MeasurementVector y;
  y.values = Vector(6);
  y.values << -1.0, 1.0, -1.0, 1.0, -1.0, 1.0;
  y.timestamps.assign(6, 0.0);
  const Reconstruction r = reconstruct(phi, psi, y, circuit, g);
  CHECK(r.clamped_pixels == 1);
  CHECK(r.frame.conductance()[1] == 0.0);
  CHECK(r.frame.conductance()[0] == doctest::Approx(1.0 / circuit.feedback_resistance));
}

TEST_CASE("adaptive reconstruction over prefixes") {
  const GridGeometry g(10, 10);
  const CircuitParams circuit;
  AcquisitionConfig cfg;
  cfg.adc_bits = 24;
  Rng rng(99);
  const Matrix psi = positive_dictionary(100, 80, rng);
  const SeedTable seeds = assign_seeds(21u, 100);
  const SensingMatrix phi = generate_sensing_matrix(seeds, 60, 3.3);
  const TactileFrame truth(g, psi.col(11) * 1e-5);
  const MeasurementVector y = acquire(static_scene(truth), phi, circuit, cfg);

  const auto seq = adaptive_reconstruct(phi, psi, y, {2, 5, 15}, circuit, g);
  REQUIRE(seq.size() == 3);
  CHECK(seq[0].m_used == 2);
  CHECK(seq[1].m_used == 5);
  CHECK(seq[2].m_used == 15);

  const auto single = adaptive_reconstruct(phi, psi, y, {60}, circuit, g);
  const Reconstruction direct = reconstruct(phi, psi, y, circuit, g);
  CHECK(single[0].frame.conductance() == direct.frame.conductance());

  const Reconstruction prefix = reconstruct(generate_sensing_matrix(seeds, 15, 3.3), psi, y.prefix(15), circuit, g);
  CHECK(prefix.frame.conductance() == seq[2].frame.conductance());

  CHECK_THROWS_AS(adaptive_reconstruct(phi, psi, y, {5, 5}, circuit, g), DomainError);
  CHECK_THROWS_AS(adaptive_reconstruct(phi, psi, y, {5, 3}, circuit, g), DomainError);
  CHECK_THROWS_AS(adaptive_reconstruct(phi, psi, y, {61}, circuit, g), DomainError);
}

TEST_CASE("adaptive residual stays at the quantization floor from M = 4 on a single-atom scene") {
  const GridGeometry g(10, 10);
  const CircuitParams circuit;
  AcquisitionConfig cfg;
  cfg.adc_bits = 24;
  Rng rng(5150);
  const Matrix psi = positive_dictionary(100, 80, rng);
  for (std::uint32_t seed = 1; seed <= 10; ++seed) {
    const SensingMatrix phi = generate_sensing_matrix(assign_seeds(seed, 100), 40, 3.3);
    const TactileFrame truth(g, psi.col(static_cast<Eigen::Index>(seed * 7)) * 2e-5);
    const MeasurementVector y = acquire(static_scene(truth), phi, circuit, cfg);
    const auto seq = adaptive_reconstruct(phi, psi, y, {4, 8, 12, 20, 30, 40}, circuit, g);
    // a single-atom signal is fitted exactly once the atom is found
    for (const auto& r : seq) CHECK(r.residual_norm <= std::sqrt(static_cast<double>(r.m_used)) * cfg.lsb());
  }
}

TEST_CASE("reconstruction JSON line carries the extra fields") {
  const GridGeometry g(1, 2);
  Reconstruction r{TactileFrame(g, Vector::Constant(2, 1e-5)), SparseCode{{1}, {0.5}, 1}, 7, 0.25, 0};
  const std::string line = reconstruction_to_json_line(r);
  CHECK(line.find("\"m_used\":7") != std::string::npos);
  CHECK(line.find("\"residual\"") != std::string::npos);
  CHECK(line.find("\"support\":[1]") != std::string::npos);
}
