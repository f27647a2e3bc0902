#include "spts/dictionary.hpp"

#include "spts/binary.hpp"
#include "spts/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>

namespace spts {

void TrainingCorpus::append(const Vector& signal, std::string label) {
  if (signals.size() > 0 && signal.size() != signals.rows()) throw DomainError("corpus frames must share a length");
  if (!labels.empty() || !label.empty()) {
    labels.resize(size());
    labels.push_back(std::move(label));
  }
  signals.conservativeResize(signal.size(), signals.cols() + 1);
  signals.col(signals.cols() - 1) = signal;
}

TrainingCorpus preprocess(const TrainingCorpus& corpus, double amp_threshold, double coherence_threshold) {
  if (!(amp_threshold >= 0.0 && amp_threshold <= 1.0) || !(coherence_threshold >= 0.0 && coherence_threshold <= 1.0)) {
    throw DomainError("preprocess thresholds must lie in [0, 1]");
  }
  const Eigen::Index count = corpus.signals.cols();
  Vector amplitude(count);
  for (Eigen::Index l = 0; l < count; ++l) amplitude[l] = corpus.signals.col(l).cwiseAbs().maxCoeff();
  const double peak = count > 0 ? amplitude.maxCoeff() : 0.0;

  std::vector<Eigen::Index> kept;
  std::vector<Vector> kept_unit;
  for (Eigen::Index l = 0; l < count; ++l) {
    if (amplitude[l] < amp_threshold * peak || (amp_threshold > 0.0 && amplitude[l] == 0.0)) continue;
    const double norm = corpus.signals.col(l).norm();
    const Vector unit = norm > 0.0 ? Vector(corpus.signals.col(l) / norm) : Vector(corpus.signals.col(l));
    bool redundant = false;
    for (const auto& other : kept_unit) {
      const bool both_zero = norm == 0.0 && other.isZero(0.0);
      if (both_zero || std::abs(unit.dot(other)) > coherence_threshold) {
        redundant = true;
        break;
      }
    }
    if (redundant) continue;
    kept.push_back(l);
    kept_unit.push_back(unit);
  }
  if (kept.empty()) throw DomainError("preprocessing removed every training frame");

  TrainingCorpus out;
  out.signals.resize(corpus.signals.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.signals.col(static_cast<Eigen::Index>(i)) = corpus.signals.col(kept[i]);
    if (!corpus.labels.empty()) out.labels.push_back(corpus.labels[static_cast<std::size_t>(kept[i])]);
  }
  return out;
}

namespace {

bool duplicates_existing(const Matrix& atoms, Eigen::Index filled, const Vector& unit) {
  for (Eigen::Index j = 0; j < filled; ++j) {
    if (std::abs(atoms.col(j).dot(unit)) > 1.0 - 1e-12) return true;
  }
  return false;
}

Matrix initial_atoms(const TrainingCorpus& corpus, std::size_t k, Rng& rng) {
  const Eigen::Index n = corpus.signals.rows();
  std::vector<Eigen::Index> order(corpus.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  Matrix atoms(n, static_cast<Eigen::Index>(k));
  Eigen::Index filled = 0;
  for (Eigen::Index l : order) {
    if (filled == atoms.cols()) break;
    const double norm = corpus.signals.col(l).norm();
    if (!(norm > 0.0)) continue;
    const Vector unit = corpus.signals.col(l) / norm;
    if (duplicates_existing(atoms, filled, unit)) continue;
    atoms.col(filled++) = unit;
  }
  while (filled < atoms.cols()) {
    Vector v(n);
    for (auto& e : v) e = rng.normal();
    if (!(v.norm() > 0.0)) continue;
    atoms.col(filled++) = v.normalized();
  }
  return atoms;
}

Matrix code_all(const Matrix& atoms, const Matrix& signals, std::size_t sparsity) {
  Matrix codes = Matrix::Zero(atoms.cols(), signals.cols());
  for (Eigen::Index l = 0; l < signals.cols(); ++l) {
    const OmpResult fit = omp(atoms, signals.col(l), sparsity);
    for (std::size_t i = 0; i < fit.code.indices.size(); ++i) {
      codes(static_cast<Eigen::Index>(fit.code.indices[i]), l) = fit.code.coefficients[i];
    }
  }
  return codes;
}

}  // namespace

Dictionary ksvd(const TrainingCorpus& corpus, const KsvdOptions& options, std::vector<KsvdSweep>* log) {
  if (options.atoms == 0) throw DomainError("dictionary needs at least one atom");
  if (options.sparsity == 0) throw DomainError("training sparsity must be at least 1");
  if (corpus.size() == 0) throw DomainError("training corpus is empty");

  Rng rng(options.seed);
  Dictionary dict;
  dict.train_sparsity = options.sparsity;
  dict.meta.corpus_id = options.corpus_id;
  dict.meta.seed = options.seed;
  dict.atoms = initial_atoms(corpus, options.atoms, rng);

  const Matrix& y = corpus.signals;
  const Eigen::Index k = dict.atoms.cols();
  double previous = -1.0;

  for (std::size_t iter = 0; iter < options.iterations; ++iter) {
    Matrix codes = code_all(dict.atoms, y, options.sparsity);
    Matrix residual = y - dict.atoms * codes;
    KsvdSweep sweep;
    sweep.error_after_coding = residual.squaredNorm();

    std::vector<char> used_as_replacement(static_cast<std::size_t>(y.cols()), 0);
    for (Eigen::Index j = 0; j < k; ++j) {
      std::vector<Eigen::Index> users;
      for (Eigen::Index l = 0; l < y.cols(); ++l)
        if (codes(j, l) != 0.0) users.push_back(l);

      if (users.empty()) {
        // Unused atom: move it onto the worst-represented signal. No code uses it,
        // so the representation error is unchanged.
        const Vector err = residual.colwise().squaredNorm().transpose();
        Eigen::Index worst = -1;
        for (Eigen::Index l = 0; l < y.cols(); ++l) {
          if (used_as_replacement[static_cast<std::size_t>(l)] || !(y.col(l).norm() > 0.0)) continue;
          if (worst < 0 || err[l] > err[worst]) worst = l;
        }
        if (worst >= 0 && err[worst] > 0.0) {
          const Vector unit = y.col(worst).normalized();
          if (!duplicates_existing(dict.atoms, k, unit)) {
            dict.atoms.col(j) = unit;
            used_as_replacement[static_cast<std::size_t>(worst)] = 1;
            ++sweep.replaced_atoms;
          }
        }
        continue;
      }

      const auto n_users = static_cast<Eigen::Index>(users.size());
      Matrix restricted(y.rows(), n_users);
      for (Eigen::Index u = 0; u < n_users; ++u) {
        const Eigen::Index l = users[static_cast<std::size_t>(u)];
        restricted.col(u) = residual.col(l) + dict.atoms.col(j) * codes(j, l);
      }
      Eigen::BDCSVD<Matrix> svd(restricted, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector atom = svd.matrixU().col(0);
      const Vector coef = svd.singularValues()[0] * svd.matrixV().col(0);
      dict.atoms.col(j) = atom;
      for (Eigen::Index u = 0; u < n_users; ++u) {
        const Eigen::Index l = users[static_cast<std::size_t>(u)];
        codes(j, l) = coef[u];
        residual.col(l) = restricted.col(u) - atom * coef[u];
      }
    }

    sweep.error_after_update = (y - dict.atoms * codes).squaredNorm();
    const double slack = 1e-9 * std::max(1.0, sweep.error_after_coding);
    if (sweep.error_after_update > sweep.error_after_coding + slack) {
      throw KsvdInvariantError("K-SVD atom update increased the fixed-support error in sweep " +
                               std::to_string(iter));
    }
    dict.meta.sweep_errors.push_back(sweep.error_after_update);
    dict.meta.iterations = iter + 1;
    if (log) log->push_back(sweep);

    const double current = sweep.error_after_update;
    if (previous > 0.0 && (previous - current) < options.min_relative_improvement * previous) break;
    if (current == 0.0) break;
    previous = current;
  }

  for (Eigen::Index j = 0; j < k; ++j) dict.atoms.col(j).normalize();
  return dict;
}

SparseCode sparse_code(const Dictionary& psi, const Eigen::Ref<const Vector>& x, std::size_t sparsity) {
  return omp(psi.atoms, x, sparsity).code;
}

namespace {
const binary::Magic kDictionaryMagic = binary::make_magic("SPTSDIC1");
}

void write_dictionary(std::ostream& out, const Dictionary& dict) {
  binary::write_magic(out, kDictionaryMagic);
  binary::write_u32(out, static_cast<std::uint32_t>(dict.pixels()));
  binary::write_u32(out, static_cast<std::uint32_t>(dict.size()));
  for (Eigen::Index j = 0; j < dict.atoms.cols(); ++j)
    for (Eigen::Index i = 0; i < dict.atoms.rows(); ++i) binary::write_f64(out, dict.atoms(i, j));
  nlohmann::json meta;
  meta["corpus_id"] = dict.meta.corpus_id;
  meta["iterations"] = dict.meta.iterations;
  meta["seed"] = dict.meta.seed;
  meta["train_sparsity"] = dict.train_sparsity;
  meta["sweep_errors"] = dict.meta.sweep_errors;
  out << meta.dump();
}

Dictionary read_dictionary(std::istream& in) {
  binary::expect_magic(in, kDictionaryMagic);
  const auto n = binary::read_u32(in);
  const auto k = binary::read_u32(in);
  Dictionary dict;
  dict.atoms.resize(n, k);
  for (Eigen::Index j = 0; j < dict.atoms.cols(); ++j)
    for (Eigen::Index i = 0; i < dict.atoms.rows(); ++i) dict.atoms(i, j) = binary::read_f64(in);
  const std::string trailer{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    const auto meta = nlohmann::json::parse(trailer);
    dict.meta.corpus_id = meta.at("corpus_id").get<std::string>();
    dict.meta.iterations = meta.at("iterations").get<std::size_t>();
    dict.meta.seed = meta.at("seed").get<std::uint64_t>();
    dict.meta.sweep_errors = meta.at("sweep_errors").get<std::vector<double>>();
    dict.train_sparsity = meta.at("train_sparsity").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("bad dictionary metadata: ") + e.what());
  }
  return dict;
}

void write_atom_csv(std::ostream& out, const Dictionary& dict, const GridGeometry& geometry) {
  if (geometry.size() != dict.pixels()) throw DomainError("geometry does not match dictionary atoms");
  out << "atom,row";
  for (std::size_t c = 0; c < geometry.cols; ++c) out << ",c" << c;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (Eigen::Index j = 0; j < dict.atoms.cols(); ++j) {
    for (std::size_t r = 0; r < geometry.rows; ++r) {
      out << j << ',' << r;
      for (std::size_t c = 0; c < geometry.cols; ++c) {
        out << ',' << dict.atoms(static_cast<Eigen::Index>(linear_index(r, c, geometry)), j);
      }
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace spts
