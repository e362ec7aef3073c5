#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hhsketch/weak.hpp"

namespace hhsketch {

/// One outer-loop layer: recover up to s items, spending eps of the residual
/// l1 growth budget.
struct L1Layer {
  std::size_t s = 0;
  double eps = 0.0;
};

/// Geometric layer plan: s_t = ceil(k / 8^t) while 8^t <= k, then one s = 1
/// cleanup layer; layer t gets eps_t = eps / 2^(t+2), so the budgets sum to
/// less than eps / 2.
std::vector<L1Layer> l1_layer_plan(std::size_t k, double eps);

/// Stacked l1/l1 recovery scheme: one weak matrix per layer, decoded
/// sequentially with residual sketch subtraction.
class L1Scheme {
 public:
  L1Scheme(std::uint64_t n, std::size_t k, double eps, std::uint64_t seed,
           const TwoLayerConstants& constants = {},
           Independence mode = Independence::full_table);

  L1Scheme(const L1Scheme&) = delete;
  L1Scheme& operator=(const L1Scheme&) = delete;
  L1Scheme(L1Scheme&&) = default;
  L1Scheme& operator=(L1Scheme&&) = default;

  std::uint64_t universe() const { return n_; }
  std::size_t k() const { return k_; }
  double eps() const { return eps_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t layer_count() const { return layers_.size(); }
  const WeakMatrix& layer(std::size_t t) const { return *layers_[t]; }
  const StackedMatrix& matrix() const { return *stacked_; }
  /// Sum of layer sparsities: the output support bound, <= (8/7)k + O(1).
  std::size_t support_bound() const { return support_bound_; }

 private:
  std::uint64_t n_;
  std::size_t k_;
  double eps_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<WeakMatrix>> layers_;
  std::unique_ptr<StackedMatrix> stacked_;
  std::size_t support_bound_;
};

struct L1DecodeResult {
  SparseVector xhat;
  DecodeStats stats;
};

/// Sequential decode: per layer, weak-decode the layer's sketch segment, then
/// subtract the new estimates' columns from every later layer's segment.
/// scale <= 0 lets each layer self-estimate its tail scale.
L1DecodeResult l1_decode(const L1Scheme& scheme, const SketchVector& v, double scale = 0.0);

}  // namespace hhsketch
