#include "spts/recovery.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

namespace spts {

Vector SparseCode::dense(std::size_t k) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < indices.size(); ++i) out[static_cast<Eigen::Index>(indices[i])] = coefficients[i];
  return out;
}

OmpResult omp(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Vector>& y, std::size_t sparsity,
              const OmpOptions& options) {
  if (sparsity < 1) throw DomainError("OMP sparsity must be at least 1");
  if (a.rows() != y.size()) throw DomainError("OMP: matrix rows do not match measurement length");
  const Eigen::Index m = a.rows();
  const Eigen::Index k = a.cols();
  const Vector norms = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(norms[j] > 0.0)) throw DomainError("OMP: dictionary column " + std::to_string(j) + " is zero");
  }

  const auto cap = static_cast<Eigen::Index>(std::min<std::size_t>(sparsity, static_cast<std::size_t>(m)));
  Matrix q(m, cap);      // orthonormal basis of the selected columns
  Matrix r = Matrix::Zero(cap, cap);  // a_support = q * r
  std::vector<char> unavailable(static_cast<std::size_t>(k), 0);

  OmpResult out;
  out.code.sparsity = sparsity;
  out.residual = y;
  out.residual_history.push_back(y.norm());
  Eigen::Index chosen = 0;

  while (chosen < cap && out.residual.norm() >= options.residual_tolerance) {
    const Vector corr = (a.transpose() * out.residual).cwiseAbs().cwiseQuotient(norms);
    Eigen::Index best = -1;
    double best_value = -1.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!unavailable[static_cast<std::size_t>(j)] && corr[j] > best_value) {
        best = j;
        best_value = corr[j];
      }
    }
    if (best < 0 || !(best_value > 0.0)) break;

    // Two passes of Gram-Schmidt against the current basis.
    Vector v = a.col(best);
    Vector proj = Vector::Zero(cap);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector c = q.leftCols(chosen).transpose() * v;
      v -= q.leftCols(chosen) * c;
      proj.head(chosen) += c;
    }
    unavailable[static_cast<std::size_t>(best)] = 1;
    const double vn = v.norm();
    if (vn <= options.dependence_tolerance * norms[best]) {
      ++out.dropped_columns;
      continue;
    }
    q.col(chosen) = v / vn;
    r.col(chosen).head(chosen) = proj.head(chosen);
    r(chosen, chosen) = vn;
    out.code.indices.push_back(static_cast<std::size_t>(best));
    ++chosen;

    out.residual = y - q.leftCols(chosen) * (q.leftCols(chosen).transpose() * y);
    out.residual_history.push_back(out.residual.norm());
  }

  if (chosen > 0) {
    const Vector qty = q.leftCols(chosen).transpose() * y;
    const Vector coef = r.topLeftCorner(chosen, chosen).triangularView<Eigen::Upper>().solve(qty);
    out.code.coefficients.assign(coef.data(), coef.data() + coef.size());
  }
  return out;
}

std::size_t sparsity_target(std::size_t m) {
  if (m < 1) throw DomainError("sparsity target needs at least one measurement");
  return std::max<std::size_t>(1, (m + 2) / 4);
}

namespace {

void check_dimensions(std::size_t phi_rows, std::size_t phi_cols, const Matrix& psi, const MeasurementVector& y,
                      const GridGeometry& geometry) {
  if (phi_rows != y.size()) throw DomainError("sensing rows do not match measurement count");
  if (static_cast<std::size_t>(psi.rows()) != phi_cols) throw DomainError("dictionary atom length does not match pixels");
  if (geometry.size() != phi_cols) throw DomainError("geometry does not match pixel count");
  if (y.size() < 1) throw DomainError("no measurements to reconstruct from");
}

}  // namespace

Reconstruction reconstruct_with_product(const Matrix& phi_psi, const Matrix& psi, const MeasurementVector& y,
                                        const CircuitParams& circuit, const GridGeometry& geometry) {
  if (phi_psi.rows() != static_cast<Eigen::Index>(y.size()) || phi_psi.cols() != psi.cols()) {
    throw DomainError("effective dictionary has wrong shape");
  }
  check_dimensions(y.size(), static_cast<std::size_t>(psi.rows()), psi, y, geometry);

  const std::size_t m = y.size();
  OmpResult fit = omp(phi_psi, y.values, sparsity_target(m));
  const Vector alpha = fit.code.dense(static_cast<std::size_t>(psi.cols()));
  const Vector x = psi * alpha;

  Vector c = -x / circuit.feedback_resistance;
  std::size_t clamped = 0;
  for (auto& v : c) {
    if (v < 0.0) {
      v = 0.0;
      ++clamped;
    }
  }
  const double t = y.timestamps.empty() ? 0.0 : y.timestamps.back();
  return Reconstruction{TactileFrame(geometry, std::move(c), t), std::move(fit.code), m, fit.residual.norm(), clamped};
}

Reconstruction reconstruct(const SensingMatrix& phi, const Matrix& psi, const MeasurementVector& y,
                           const CircuitParams& circuit, const GridGeometry& geometry) {
  check_dimensions(phi.rows(), phi.pixels(), psi, y, geometry);
  return reconstruct_with_product(phi.weights() * psi, psi, y, circuit, geometry);
}

std::vector<Reconstruction> adaptive_reconstruct(const SensingMatrix& phi_full, const Matrix& psi,
                                                 const MeasurementVector& y_stream,
                                                 const std::vector<std::size_t>& schedule,
                                                 const CircuitParams& circuit, const GridGeometry& geometry) {
  if (schedule.empty()) throw DomainError("empty reconstruction schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1) throw DomainError("schedule entries must be at least 1");
    if (i > 0 && schedule[i] <= schedule[i - 1]) throw DomainError("schedule must be strictly increasing");
  }
  if (schedule.back() > y_stream.size() || schedule.back() > phi_full.rows()) {
    throw DomainError("schedule exceeds available measurements");
  }
  const Matrix full = phi_full.weights().topRows(static_cast<Eigen::Index>(schedule.back())) * psi;
  std::vector<Reconstruction> out;
  out.reserve(schedule.size());
  for (std::size_t m : schedule) {
    out.push_back(reconstruct_with_product(full.topRows(static_cast<Eigen::Index>(m)), psi, y_stream.prefix(m),
                                           circuit, geometry));
  }
  return out;
}

std::string reconstruction_to_json_line(const Reconstruction& r) {
  auto j = nlohmann::json::parse(frame_to_json_line(r.frame));
  j["m_used"] = r.m_used;
  j["residual"] = r.residual_norm;
  j["support"] = r.code.indices;
  return j.dump();
}

}  // namespace spts
