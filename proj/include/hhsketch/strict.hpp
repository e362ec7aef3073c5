#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hhsketch/sketch.hpp"
#include "hhsketch/signal.hpp"

namespace hhsketch {

/// Thrown when a sketch that must come from a nonnegative signal shows
/// impossible (negative) counters.
struct StrictModelViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Strongly explicit 0/1 matrix built from a Reed-Solomon code over F_q:
/// column i has ones at rows alpha*q + C_i(alpha) for alpha in [b], where C_i
/// evaluates the polynomial whose coefficients are i's base-q digits. Any two
/// distinct columns overlap in at most message_len - 1 rows, and any entry is
/// computable from (row, i) alone - there is no stored randomness.
class RsCodeMatrix : public SketchMatrix {
 public:
  /// code_k is the direct sizing parameter: q = smallest prime >=
  /// 4 * code_k * ceil(log2 n / max(1, log2 log2 n + log2 code_k)).
  RsCodeMatrix(std::uint64_t n, std::size_t code_k);

  std::uint64_t q() const { return q_; }
  std::uint64_t b() const { return q_; }
  std::size_t code_k() const { return code_k_; }
  std::size_t message_len() const { return ml_; }

  /// C_i(alpha): the code symbol selecting column i's one within block alpha.
  std::uint64_t code_symbol(std::uint64_t i, std::uint64_t alpha) const;

  void add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const override;
  nlohmann::json descriptor() const override;

 private:
  std::size_t code_k_;
  std::uint64_t q_;
  std::size_t ml_;
};

/// Median of the b counters covering coordinate i. Additive error at most
/// (1/(2 code_k)) * ||x - x_i e_i||_1 by the column-overlap bound.
double rs_point_query(const RsCodeMatrix& m, std::span<const double> v, std::uint64_t i,
                      DecodeStats* stats = nullptr);

/// One noise-reduction round: median-estimate every candidate in S against
/// the (residual) sketch u, keep the 5k largest by magnitude.
SparseVector reduce_noise(const RsCodeMatrix& m, std::span<const double> u,
                          std::span<const std::uint64_t> S, std::size_t k,
                          DecodeStats* stats = nullptr);

/// Iterated reduce_noise with residual sketch subtraction. Requires
/// H(x, k, 1) subset-of S; returns a 5k-sparse estimate with
/// ||x - xhat||_inf <= (1/k) ||x_{-k}||_1 when the matrix was built with
/// code_k = beta * k. The round count is ceil(log2 n / log2(1/gamma)) + 2
/// with gamma = 1/2 + 2/beta, a conservative bound on the per-round
/// contraction factor.
SparseVector tail_point_query(const RsCodeMatrix& m, std::span<const double> v,
                              std::span<const std::uint64_t> S, std::size_t k,
                              double beta = 100.0, DecodeStats* stats = nullptr);

/// The deterministic strict-turnstile scheme: a binary bit-splitting tree.
/// The universe is padded to 2^w; each node owns the bit field [lo, lo+width)
/// and an RsCodeMatrix over 2^width sketching the projected signal
/// v_j = sum over indices whose field equals j. Leaves are nodes small enough
/// (2^width <= 25 k^2) to enumerate outright. Entirely seedless.
class StrictScheme : public SketchMatrix {
 public:
  struct Node {
    std::size_t level = 0;
    std::size_t pos = 0;       // position within the level, in BFS order
    unsigned lo = 0;           // low bit of this node's field
    unsigned width = 0;        // field width; node universe is 2^width
    std::size_t offset = 0;    // first row of this node's sketch segment
    std::shared_ptr<const RsCodeMatrix> matrix;  // shared between equal widths
  };

  StrictScheme(std::uint64_t n, std::size_t k, std::size_t beta = 100);

  std::size_t k() const { return k_; }
  std::size_t beta() const { return beta_; }
  unsigned padded_bits() const { return bits_; }
  std::size_t levels() const { return levels_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  void add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const override;
  nlohmann::json descriptor() const override;

 private:
  std::size_t k_;
  std::size_t beta_;
  unsigned bits_;
  std::size_t levels_;
  std::vector<Node> nodes_;
};

struct StrictDecodeResult {
  SparseVector xhat;
  DecodeStats stats;
};

/// Recursive decode: each internal node takes the candidate product of its
/// children's supports through the bit-split bijection and runs
/// tail_point_query on its own segment; leaves enumerate their universe.
/// Throws StrictModelViolation when the sketch shows negative counters
/// (impossible for a nonnegative signal).
StrictDecodeResult recursive_decode(const StrictScheme& scheme, const SketchVector& v);

}  // namespace hhsketch
