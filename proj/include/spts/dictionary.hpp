#pragma once

// Training-set filtering and K-SVD dictionary learning for tactile frames.

#include "spts/core.hpp"
#include "spts/recovery.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spts {

struct DictionaryMeta {
  std::string corpus_id;
  std::size_t iterations = 0;  // sweeps actually run
  std::uint64_t seed = 0;
  std::vector<double> sweep_errors;  // squared Frobenius error after each atom-update sweep

  bool operator==(const DictionaryMeta&) const = default;
};

/// N x K matrix whose columns (atoms) have unit Euclidean norm.
struct Dictionary {
  Matrix atoms;
  std::size_t train_sparsity = 30;
  DictionaryMeta meta;

  std::size_t pixels() const { return static_cast<std::size_t>(atoms.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(atoms.cols()); }
};

/// Training vectors stored as columns.
struct TrainingCorpus {
  Matrix signals;
  std::vector<std::string> labels;  // empty, or one per column

  std::size_t size() const { return static_cast<std::size_t>(signals.cols()); }
  std::size_t pixels() const { return static_cast<std::size_t>(signals.rows()); }
  void append(const Vector& signal, std::string label = {});
};

/// Drops low-amplitude frames (max |x| below amp_threshold of the corpus max),
/// then greedily drops frames whose cosine with an already-kept frame exceeds
/// coherence_threshold. Throws DomainError if nothing survives.
TrainingCorpus preprocess(const TrainingCorpus& corpus, double amp_threshold = 0.1,
                          double coherence_threshold = 0.95);

struct KsvdOptions {
  std::size_t atoms = 100;
  std::size_t sparsity = 30;
  std::size_t iterations = 30;
  std::uint64_t seed = 0;
  double min_relative_improvement = 1e-4;
  std::string corpus_id;
};

/// Per-sweep diagnostics, filled when a log is supplied to ksvd.
struct KsvdSweep {
  double error_after_coding = 0.0;  // ||Y - D X||_F^2 with fresh OMP codes
  double error_after_update = 0.0;  // same supports, updated atoms and coefficients
  std::size_t replaced_atoms = 0;
};

/// Thrown when an atom-update sweep increases the fixed-support error.
class KsvdInvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

Dictionary ksvd(const TrainingCorpus& corpus, const KsvdOptions& options, std::vector<KsvdSweep>* log = nullptr);

SparseCode sparse_code(const Dictionary& psi, const Eigen::Ref<const Vector>& x, std::size_t sparsity);

inline Reconstruction reconstruct(const SensingMatrix& phi, const Dictionary& psi, const MeasurementVector& y,
                                  const CircuitParams& circuit, const GridGeometry& geometry) {
  return reconstruct(phi, psi.atoms, y, circuit, geometry);
}

// "SPTSDIC1", u32 N, u32 K, N*K f64 column-major, then a JSON metadata trailer.
void write_dictionary(std::ostream& out, const Dictionary& dict);
Dictionary read_dictionary(std::istream& in);

/// One CSV row per (atom, grid row) for visual inspection of atoms.
void write_atom_csv(std::ostream& out, const Dictionary& dict, const GridGeometry& geometry);

}  // namespace spts
