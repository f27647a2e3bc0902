#include "spts/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace spts {

ObjectLibrary::ObjectLibrary(std::vector<LibraryEntry> entries) {
  for (auto& e : entries) add(std::move(e.label), std::move(e.exemplar));
}

void ObjectLibrary::add(std::string label, TactileFrame exemplar) {
  if (!entries_.empty() && !(exemplar.geometry() == entries_.front().exemplar.geometry())) {
    throw DomainError("library exemplars must share one geometry");
  }
  entries_.push_back({std::move(label), std::move(exemplar)});
}

std::vector<std::string> ObjectLibrary::labels() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (std::find(out.begin(), out.end(), e.label) == out.end()) out.push_back(e.label);
  return out;
}

Vector intensity(const TactileFrame& frame, double rest_conductance) {
  return (frame.conductance().array() - rest_conductance).cwiseMax(0.0).matrix();
}

namespace {

Vector unit_or_raw(const Vector& v) {
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : v;
}

}  // namespace

std::string classify(const TactileFrame& frame, const ObjectLibrary& library, double rest_conductance) {
  if (library.empty()) throw DomainError("cannot classify against an empty library");
  const Vector query = unit_or_raw(intensity(frame, rest_conductance));
  double best = std::numeric_limits<double>::infinity();
  const LibraryEntry* winner = nullptr;
  for (const auto& entry : library.entries()) {
    if (!(entry.exemplar.geometry() == frame.geometry())) throw DomainError("frame geometry differs from library");
    const double d = (unit_or_raw(intensity(entry.exemplar, rest_conductance)) - query).norm();
    if (d < best) {
      best = d;
      winner = &entry;
    }
  }
  return winner->label;
}

std::string vote(const std::vector<std::string>& window) {
  if (window.empty()) throw DomainError("cannot vote on an empty window");
  std::vector<std::pair<std::string, std::size_t>> tally;  // first-seen order
  for (const auto& label : window) {
    auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& p) { return p.first == label; });
    if (it == tally.end())
      tally.emplace_back(label, 1);
    else
      ++it->second;
  }
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

SupportMetrics support_accuracy(const TactileFrame& recon, const TactileFrame& truth, double threshold,
                                double rest_conductance) {
  if (!(recon.geometry() == truth.geometry())) throw DomainError("support comparison needs matching geometry");
  const Vector a = intensity(recon, rest_conductance);
  const Vector b = intensity(truth, rest_conductance);
  const double cut_a = threshold * a.maxCoeff();
  const double cut_b = threshold * b.maxCoeff();

  SupportMetrics m;
  m.threshold_used = cut_b;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool pred = a[i] > cut_a;
    const bool real = b[i] > cut_b;
    if (pred && real) ++m.true_positive;
    else if (pred) ++m.false_positive;
    else if (real) ++m.false_negative;
    else ++m.true_negative;
  }
  auto ratio = [](std::size_t num, std::size_t den) { return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den); };
  m.accuracy = ratio(m.true_positive + m.true_negative, static_cast<std::size_t>(a.size()));
  m.precision = ratio(m.true_positive, m.true_positive + m.false_positive);
  m.recall = ratio(m.true_positive, m.true_positive + m.false_negative);
  m.iou = ratio(m.true_positive, m.true_positive + m.false_positive + m.false_negative);
  return m;
}

GridPoint center_of_mass(const TactileFrame& frame, double rest_conductance) {
  const Vector w = intensity(frame, rest_conductance);
  const double total = w.sum();
  if (!(total > 0.0)) throw NoContactError("no pixel above the rest level");
  GridPoint p;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    const Cell c = cell_of(static_cast<std::size_t>(i), frame.geometry());
    p.row += w[i] * static_cast<double>(c.row);
    p.col += w[i] * static_cast<double>(c.col);
  }
  p.row /= total;
  p.col /= total;
  return p;
}

double localization_error(const GridPoint& estimate, const GridPoint& truth) {
  return std::hypot(estimate.row - truth.row, estimate.col - truth.col);
}

double delta_pressure(const std::vector<TactileFrame>& frames, double rest_conductance) {
  if (frames.size() < 2) throw DomainError("delta pressure needs at least two frames");
  double sum = 0.0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].geometry() == frames[0].geometry())) throw DomainError("frames differ in geometry");
    sum += (intensity(frames[i], rest_conductance) - intensity(frames[i - 1], rest_conductance)).cwiseAbs().mean();
  }
  return sum / static_cast<double>(frames.size() - 1);
}

std::vector<TracePoint> max_pressure_trace(const std::vector<TactileFrame>& frames, double rest_conductance) {
  std::vector<TracePoint> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back({f.timestamp(), intensity(f, rest_conductance).maxCoeff()});
  return out;
}

}  // namespace spts
