#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hhsketch/encoding.hpp"
#include "hhsketch/hashing.hpp"
#include "hhsketch/sketch.hpp"
#include "hhsketch/signal.hpp"

namespace hhsketch {

/// Tunable constants behind the two-layer dimension formulas. Defaults are
/// calibrated empirically at desk scale (n <= 2^14) against the planted
/// recovery suites; every value is recorded in the matrix descriptor.
struct TwoLayerConstants {
  double alpha = 1.25;          // first-layer bucket growth exponent
  double zeta = 0.5;            // per-item neighbor-loss budget
  double c_b1 = 2.0;            // first-layer bucket count multiplier
  double c_d1 = 1.0;            // first-layer repetition multiplier
  double c_b2 = 4.0;            // second-layer bucket count multiplier
  double c_d2 = 1.5;            // second-layer repetition floor multiplier
  std::uint64_t b1_cap_factor = 4;  // B1 is capped at this multiple of next_pow2(n)

  nlohmann::json to_json() const;
  static TwoLayerConstants from_json(const nlohmann::json& j);
};

enum class WeakFlavor { l1l1, linf };

/// What one weak recovery call promises. Both flavors recover up to s items;
/// they differ in how the accuracy target is expressed.
struct WeakGoal {
  WeakFlavor flavor = WeakFlavor::l1l1;
  std::size_t s = 0;  // items recovered (top-s of the candidate list)
  double eps = 0.0;   // l1l1: residual l1 growth budget
  double k = 0.0;     // linf: sparsity the call is sized against (fractional in outer loops)
  double w = 0.0;     // linf: allowed missed-heavy slack

  /// Recover s items, residual tail growth eps. Requires 0 < eps and s >= 1.
  static WeakGoal l1l1(std::size_t s, double eps);
  /// Recover s of ~k heavy items, missing at most ~sqrt(s*w). Requires
  /// 0 < w <= s <= max(4, k).
  static WeakGoal linf(double k, std::size_t s, double w);

  /// Sparsity the bucket dimensions are sized for (= s in both flavors).
  std::size_t k_eff() const { return s; }
  /// Accuracy parameter driving the dimensions: eps (l1l1), sqrt(s*w)/k (linf).
  double eps_eff() const;
  /// First-layer bucket filter threshold as a fraction of the tail scale:
  /// eps/(4s) for l1l1, 1/(4k) for linf.
  double filter_fraction() const;

  nlohmann::json to_json() const;
  static WeakGoal from_json(const nlohmann::json& j);
};

/// Two-layer dimensions derived from a goal: first-layer buckets b1 (power of
/// two), repetitions d1 (even), second-layer buckets b2, and the floor the
/// code layout must respect for d2.
struct WeakDimensions {
  std::uint64_t b1 = 0;
  std::size_t d1 = 0;
  std::uint64_t b2 = 0;
  std::size_t d2_min = 0;
};

WeakDimensions derive_weak_dimensions(std::uint64_t n, const WeakGoal& goal,
                                      const TwoLayerConstants& constants);

/// One-shot recovery operator. Row layout: repetition r, sub-repetition j,
/// second-layer bucket c and embedded-bit slot t occupy row
/// ((r*d2 + j)*b2 + c)*2 + t, so m = 2*b2*d1*d2.
class WeakMatrix : public SketchMatrix {
 public:
  WeakMatrix(std::uint64_t n, const WeakGoal& goal, std::uint64_t seed,
             const TwoLayerConstants& constants = {},
             Independence mode = Independence::full_table, unsigned t = 2);

  void add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const override;
  nlohmann::json descriptor() const override;

  const WeakGoal& goal() const { return goal_; }
  const TwoLayerConstants& constants() const { return constants_; }
  const TwoLayerHash& hash() const { return hash_; }
  const LinkGraph& link_graph() const { return links_; }
  const BlockCodec& codec() const { return codec_; }
  std::uint64_t seed() const { return seed_; }

  std::uint64_t b1() const { return hash_.shape().b1; }
  std::size_t d1() const { return hash_.shape().d1; }
  std::uint64_t b2() const { return hash_.shape().b2; }
  std::size_t d2() const { return hash_.shape().d2; }
  /// Smallest cluster the decoder will consider: (1 - delta1) * d1 / 2 nodes
  /// with delta1 = 1/4, never below 2.
  std::size_t min_cluster() const { return min_cluster_; }

  std::size_t pair_row(std::size_t r, std::size_t j, std::uint64_t c, int bit) const {
    return ((r * d2() + j) * b2() + c) * 2 + static_cast<std::size_t>(bit);
  }
  /// Un-embedded bucket measurement: the sum of both slots of a pair.
  double pair_sum(std::span<const double> v, std::size_t r, std::size_t j, std::uint64_t c) const {
    std::size_t row = pair_row(r, j, c, 0);
    return v[row] + v[row + 1];
  }
  /// |a| + |b| of a pair: the magnitude the bucket filter uses.
  double pair_mag(std::span<const double> v, std::size_t r, std::size_t j, std::uint64_t c) const {
    std::size_t row = pair_row(r, j, c, 0);
    return std::abs(v[row]) + std::abs(v[row + 1]);
  }

  /// The d2 protected message bits item i carries in repetition r.
  std::vector<std::uint8_t> block_bits(std::uint64_t i, std::size_t r) const;

  /// Median of the d1*d2 pair-sums of item i's buckets; the decoder's
  /// estimator, also used directly by tests.
  double median_estimate(std::span<const double> v, std::uint64_t i) const;

 private:
  static BlockCodec make_codec(std::uint64_t n, const WeakGoal& goal,
                               const TwoLayerConstants& constants);
  static TwoLayerHash::Shape make_shape(std::uint64_t n, const WeakGoal& goal,
                                        const TwoLayerConstants& constants,
                                        const BlockCodec& codec);

  WeakGoal goal_;
  TwoLayerConstants constants_;
  std::uint64_t seed_;
  Independence mode_;
  unsigned t_;
  BlockCodec codec_;  // built first: its d2 feeds the hash shape
  TwoLayerHash hash_;
  LinkGraph links_;
  std::size_t min_cluster_;
};

/// A first-layer bucket that survived the magnitude filter and whose message
/// decoded cleanly.
struct ChunkNode {
  std::size_t r = 0;       // repetition
  std::uint32_t b = 0;     // first-layer bucket
  DecodedBlock block;      // decoded chunk + claimed link buckets
};

/// Nodes plus the mutual-suggestion edges between them (indices into nodes).
struct ChunkGraph {
  std::vector<ChunkNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Groups chunk-graph nodes into clusters; the default is connected
/// components. Alternative strategies (e.g. spectral cuts) drop in here.
using Clusterer = std::function<std::vector<std::vector<std::size_t>>(const ChunkGraph&)>;

std::vector<std::vector<std::size_t>> connected_component_clusters(const ChunkGraph& g);

struct WeakResult {
  SparseVector xhat;
  /// Every decoded candidate with its median estimate, before top-s selection.
  std::vector<std::pair<std::uint64_t, double>> candidates;
  DecodeStats stats;
};

/// Median-of-bucket-sums proxy for the tail l1 norm: per repetition, the sum
/// of first-sub-repetition bucket magnitudes with the top k_eff removed;
/// median over repetitions.
double estimate_scale(const WeakMatrix& mat, const SketchVector& v);

/// One weak recovery pass. scale <= 0 means self-estimate via estimate_scale;
/// outer loops pass their shared scale down instead.
WeakResult weak_decode(const WeakMatrix& mat, const SketchVector& v, double scale = 0.0,
                       const Clusterer& clusterer = {});

}  // namespace hhsketch
