#include "spts/dictionary.hpp"
#include "spts/rng.hpp"

#include <doctest.h>

#include <sstream>

using namespace spts;

namespace {

TrainingCorpus random_corpus(std::size_t n, std::size_t count, Rng& rng) {
  TrainingCorpus c;
  for (std::size_t s = 0; s < count; ++s) {
    Vector x(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
    c.append(x);
  }
  return c;
}

double max_pairwise_cosine(const Matrix& m) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.cols(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m.col(i).dot(m.col(j))) / (m.col(i).norm() * m.col(j).norm()));
  return worst;
}

}  // namespace

TEST_CASE("preprocess drops duplicates, zero frames and keeps orthogonal frames") {
  TrainingCorpus dup;
  Vector a = Vector::Zero(5), b = Vector::Zero(5);
  a << 1, 2, 0, 0, 0;
  b << 0, 0, 3, 1, 0;
  for (int i = 0; i < 3; ++i) dup.append(a, "a");
  for (int i = 0; i < 4; ++i) dup.append(b, "b");
  dup.append(Vector::Zero(5), "zero");
  const TrainingCorpus kept = preprocess(dup, 0.1, 0.99);
  CHECK(kept.size() == 2);
  CHECK(kept.labels == std::vector<std::string>{"a", "b"});

  TrainingCorpus ortho;
  ortho.append(Vector::Unit(4, 0));
  ortho.append(Vector::Unit(4, 1) * 2.0);
  ortho.append(Vector::Unit(4, 3) * 0.5);
  CHECK(preprocess(ortho, 0.1, 0.9).size() == 3);

  TrainingCorpus zeros;
  zeros.append(Vector::Zero(4));
  CHECK_THROWS_AS(preprocess(zeros, 0.1, 0.9), DomainError);
}

TEST_CASE("preprocess output respects the coherence bound") {
  Rng rng(4);
  TrainingCorpus c;
  const Vector base = Vector::Constant(30, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vector x = base;
    for (Eigen::Index k = 0; k < 30; ++k) x[k] += 0.3 * rng.normal();
    c.append(x);
  }
  for (double thr : {0.9, 0.95, 0.99}) {
    const TrainingCorpus kept = preprocess(c, 0.1, thr);
    CHECK(kept.size() >= 1);
    CHECK(max_pairwise_cosine(kept.signals) <= thr + 1e-9);
  }
}

TEST_CASE("ksvd with zero iterations returns the normalized initialization") {
  Rng rng(3);
  const TrainingCorpus c = random_corpus(12, 20, rng);
  KsvdOptions opts;
  opts.atoms = 8;
  opts.sparsity = 2;
  opts.iterations = 0;
  opts.seed = 5;
  const Dictionary d = ksvd(c, opts);
  REQUIRE(d.size() == 8);
  for (Eigen::Index j = 0; j < 8; ++j) {
    CHECK(d.atoms.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    bool found = false;
    for (Eigen::Index s = 0; s < c.signals.cols(); ++s)
      found = found || (c.signals.col(s).normalized() - d.atoms.col(j)).norm() < 1e-12;
    CHECK(found);
  }
}

TEST_CASE("ksvd pads a small corpus with random unit atoms") {
  Rng rng(6);
  const TrainingCorpus c = random_corpus(10, 3, rng);
  KsvdOptions opts;
  opts.atoms = 7;
  opts.sparsity = 1;
  opts.iterations = 0;
  const Dictionary d = ksvd(c, opts);
  CHECK(d.size() == 7);
  CHECK((d.atoms.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("ksvd learns an orthonormal corpus exactly") {
  const Eigen::Index n = 16, k = 10;
  Rng rng(12);
  Matrix q = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) q(i, j) = rng.normal();
  const Matrix basis = Eigen::HouseholderQR<Matrix>(q).householderQ() * Matrix::Identity(n, k);
  TrainingCorpus c;
  for (Eigen::Index j = 0; j < k; ++j) c.append(basis.col(j));

  KsvdOptions opts;
  opts.atoms = static_cast<std::size_t>(k);
  opts.sparsity = 1;
  opts.iterations = 10;
  const Dictionary d = ksvd(c, opts);
  for (Eigen::Index j = 0; j < k; ++j) {
    const SparseCode code = sparse_code(d, basis.col(j), 1);
    CHECK((basis.col(j) - d.atoms * code.dense(static_cast<std::size_t>(k))).norm() < 1e-9);
  }
}

TEST_CASE("ksvd sweeps never increase the fixed-support error and keep atoms unit norm") {
  Rng rng(21);
  const TrainingCorpus c = random_corpus(25, 150, rng);
  KsvdOptions opts;
  opts.atoms = 30;
  opts.sparsity = 4;
  opts.iterations = 15;
  opts.min_relative_improvement = 0.0;
  opts.seed = 9;
  std::vector<KsvdSweep> log;
  const Dictionary d = ksvd(c, opts, &log);
  CHECK(!log.empty());
  for (const auto& s : log) CHECK(s.error_after_update <= s.error_after_coding * (1 + 1e-12));
  CHECK(d.atoms.allFinite());
  CHECK((d.atoms.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-9);
  CHECK(d.meta.sweep_errors.size() == log.size());
  CHECK(log.back().error_after_update < log.front().error_after_coding);

  const Dictionary again = ksvd(c, opts);
  CHECK(again.atoms == d.atoms);
}

TEST_CASE("ksvd argument checks") {
  Rng rng(1);
  const TrainingCorpus c = random_corpus(5, 5, rng);
  KsvdOptions opts;
  opts.atoms = 0;
  CHECK_THROWS_AS(ksvd(c, opts), DomainError);
  opts.atoms = 3;
  opts.sparsity = 0;
  CHECK_THROWS_AS(ksvd(c, opts), DomainError);
}

TEST_CASE("sparse_code examples") {
  Dictionary d;
  d.atoms = Matrix::Identity(6, 6);
  d.atoms.col(2) = (Vector::Unit(6, 2) + Vector::Unit(6, 4)).normalized();
  const SparseCode a = sparse_code(d, d.atoms.col(2), 1);
  REQUIRE(a.indices.size() == 1);
  CHECK(a.indices[0] == 2);
  CHECK(a.coefficients[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sparse_code(d, Vector::Zero(6), 3).indices.empty());
  const SparseCode b = sparse_code(d, 2.0 * d.atoms.col(3), 2);
  REQUIRE(b.indices.size() == 1);
  CHECK(b.indices[0] == 3);
  CHECK(b.coefficients[0] == doctest::Approx(2.0));
}

TEST_CASE("dictionary file round trip and atom CSV") {
  Rng rng(2);
  const TrainingCorpus c = random_corpus(9, 20, rng);
  KsvdOptions opts;
  opts.atoms = 5;
  opts.sparsity = 2;
  opts.iterations = 3;
  opts.corpus_id = "unit";
  const Dictionary d = ksvd(c, opts);
  std::stringstream ss;
  write_dictionary(ss, d);
  CHECK(ss.str().substr(0, 8) == "SPTSDIC1");
  const Dictionary back = read_dictionary(ss);
  CHECK(back.atoms == d.atoms);
  CHECK(back.train_sparsity == d.train_sparsity);
  CHECK(back.meta == d.meta);

  std::stringstream csv;
  write_atom_csv(csv, d, GridGeometry(3, 3));
  std::size_t lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 1 + 5 * 3);
}
