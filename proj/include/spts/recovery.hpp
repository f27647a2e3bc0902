#pragma once

// Orthogonal matching pursuit and tactile-frame reconstruction from compressive
// measurements y = Phi * x with x = Psi * alpha, x_i = -R_f * C_i.

#include "spts/core.hpp"
#include "spts/firmware.hpp"
#include "spts/frontend.hpp"

#include <cstddef>
#include <vector>

namespace spts {

struct SparseCode {
  std::vector<std::size_t> indices;  // selection order
  std::vector<double> coefficients;  // aligned with indices
  std::size_t sparsity = 0;          // target S

  /// Dense K-vector of coefficients.
  Vector dense(std::size_t k) const;
};

/// OMP output with the per-iteration diagnostics the invariants are stated on.
struct OmpResult {
  SparseCode code;
  Vector residual;
  std::vector<double> residual_history;  // norm after each accepted atom, starting with ||y||
  std::size_t dropped_columns = 0;       // rejected as linearly dependent on the support
};

struct OmpOptions {
  double residual_tolerance = 1e-10;
  /// Candidate is rejected when its component orthogonal to the support is below
  /// this fraction of its norm.
  double dependence_tolerance = 1e-10;
};

/// Greedy OMP: pick the column with largest |<a_j, r>| / ||a_j||, re-fit least
/// squares on the support, stop at S atoms or when ||r|| < tolerance.
OmpResult omp(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Vector>& y, std::size_t sparsity,
              const OmpOptions& options = {});

/// round(M / 4), halves up, never below 1.
std::size_t sparsity_target(std::size_t m);

struct Reconstruction {
  TactileFrame frame;
  SparseCode code;
  std::size_t m_used = 0;
  double residual_norm = 0.0;
  std::size_t clamped_pixels = 0;  // decoded conductances that came out negative
};

Reconstruction reconstruct(const SensingMatrix& phi, const Matrix& psi, const MeasurementVector& y,
                           const CircuitParams& circuit, const GridGeometry& geometry);

/// Same, with the effective sensing dictionary Phi * Psi already formed.
Reconstruction reconstruct_with_product(const Matrix& phi_psi, const Matrix& psi, const MeasurementVector& y,
                                        const CircuitParams& circuit, const GridGeometry& geometry);

/// Reconstructs from each prefix length in `schedule` (strictly increasing).
std::vector<Reconstruction> adaptive_reconstruct(const SensingMatrix& phi_full, const Matrix& psi,
                                                 const MeasurementVector& y_stream,
                                                 const std::vector<std::size_t>& schedule,
                                                 const CircuitParams& circuit, const GridGeometry& geometry);

/// Frame JSON line with "m_used", "residual" and "support" added.
std::string reconstruction_to_json_line(const Reconstruction& r);

}  // namespace spts
