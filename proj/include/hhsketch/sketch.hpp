#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hhsketch/signal.hpp"

namespace hhsketch {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Instrumentation shared by all decoders.
struct DecodeStats {
  std::uint64_t candidate_evaluations = 0;
  std::uint64_t clusters_formed = 0;
  std::uint64_t buckets_decoded = 0;
};

/// A linear measurement operator Phi : R^n -> R^m, defined column-wise so the
/// same code serves streaming ingest and the test-path apply(). Implementations
/// are immutable after construction and deterministic functions of their
/// descriptor, which makes concurrent reads safe and rebuilds reproducible.
class SketchMatrix {
 public:
  SketchMatrix(std::size_t universe, std::size_t rows) : n_(universe), m_(rows) {}
  virtual ~SketchMatrix() = default;

  std::size_t universe() const { return n_; }
  std::size_t rows() const { return m_; }

  /// out += delta * column(i). out.size() must equal rows().
  virtual void add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const = 0;

  /// Deterministic JSON descriptor sufficient to reconstruct the matrix.
  virtual nlohmann::json descriptor() const = 0;

  std::string descriptor_dump() const { return descriptor().dump(); }
  std::uint64_t descriptor_hash() const { return fnv1a64(descriptor_dump()); }

 protected:
  std::size_t n_;
  std::size_t m_;
};

/// Measurement vector v = Phi x, tagged with the hash of the matrix that
/// produced it so mismatched ingest/decode calls fail loudly.
struct SketchVector {
  std::vector<double> values;
  std::uint64_t matrix_hash = 0;
};

SketchVector make_sketch(const SketchMatrix& mat);
void ingest(const SketchMatrix& mat, SketchVector& v, const Update& u);
SketchVector apply(const SketchMatrix& mat, const Signal& x);

/// Vertical concatenation of member matrices over a common universe.
class StackedMatrix : public SketchMatrix {
 public:
  StackedMatrix(std::size_t universe, std::vector<const SketchMatrix*> parts);

  void add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const override;
  nlohmann::json descriptor() const override;

  std::size_t part_count() const { return parts_.size(); }
  std::size_t part_offset(std::size_t idx) const { return offsets_[idx]; }
  const SketchMatrix& part(std::size_t idx) const { return *parts_[idx]; }
  std::span<const double> segment(const SketchVector& v, std::size_t idx) const;

 private:
  std::vector<const SketchMatrix*> parts_;
  std::vector<std::size_t> offsets_;
};

}  // namespace hhsketch
