#include "hhsketch/sketch.hpp"

#include <stdexcept>

namespace hhsketch {

SketchVector make_sketch(const SketchMatrix& mat) {
  SketchVector v;
  v.values.assign(mat.rows(), 0.0);
  v.matrix_hash = mat.descriptor_hash();
  return v;
}

void ingest(const SketchMatrix& mat, SketchVector& v, const Update& u) {
  if (v.matrix_hash != mat.descriptor_hash())
    throw std::invalid_argument("ingest: sketch vector belongs to a different matrix");
  if (v.values.size() != mat.rows())
    throw std::invalid_argument("ingest: sketch vector has wrong length");
  if (u.index >= mat.universe())
    throw std::invalid_argument("ingest: index out of universe");
  mat.add_scaled_column(u.index, u.delta, v.values);
}

SketchVector apply(const SketchMatrix& mat, const Signal& x) {
  if (x.size() != mat.universe())
    throw std::invalid_argument("apply: signal length != universe");
  SketchVector v = make_sketch(mat);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) mat.add_scaled_column(i, x[i], v.values);
  return v;
}

StackedMatrix::StackedMatrix(std::size_t universe, std::vector<const SketchMatrix*> parts)
    : SketchMatrix(universe, 0), parts_(std::move(parts)) {
  offsets_.reserve(parts_.size());
  std::size_t off = 0;
  for (const SketchMatrix* p : parts_) {
    if (p->universe() != universe)
      throw std::invalid_argument("StackedMatrix: universe mismatch");
    offsets_.push_back(off);
    off += p->rows();
  }
  m_ = off;
}

void StackedMatrix::add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const {
  for (std::size_t p = 0; p < parts_.size(); ++p)
    parts_[p]->add_scaled_column(i, delta, out.subspan(offsets_[p], parts_[p]->rows()));
}

nlohmann::json StackedMatrix::descriptor() const {
  nlohmann::json parts = nlohmann::json::array();
  for (const SketchMatrix* p : parts_) parts.push_back(p->descriptor());
  return {{"kind", "stacked"}, {"n", n_}, {"parts", parts}};
}

std::span<const double> StackedMatrix::segment(const SketchVector& v, std::size_t idx) const {
  if (v.values.size() != rows())
    throw std::invalid_argument("StackedMatrix::segment: wrong sketch length");
  return std::span<const double>(v.values).subspan(offsets_[idx], parts_[idx]->rows());
}

}  // namespace hhsketch
