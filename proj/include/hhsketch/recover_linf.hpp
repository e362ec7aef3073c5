#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "hhsketch/recover_l1.hpp"
#include "hhsketch/weak.hpp"

namespace hhsketch {

/// One weak-system call in the iterative l_inf schedule.
struct ScheduleStep {
  std::size_t round = 0;  // outer round, 0-based
  std::size_t i = 0;      // step index within the round
  double k_r = 0.0;       // the round's residual sparsity (fractional after round 0)
  double s_real = 0.0;    // sparsity target before integer rounding
  std::size_t s = 0;      // ceil(s_real): the matrix's sparsity parameter
  double w = 0.0;         // missed-heavy slack
};

/// The full call plan for one k. A pure function of k — never of the input —
/// so two runs with equal (n, k, seed) use byte-identical matrix stacks.
struct Schedule {
  std::size_t k = 0;
  std::size_t rounds = 0;
  std::vector<ScheduleStep> steps;  // all rounds, flattened in execution order
  double k_final = 0.0;             // residual sparsity when the round loop exits
  // The cleanup call appended after the rounds: s = 4, w = 1/5, sized against
  // the original k (it delivers the final estimate accuracy).
  static constexpr std::size_t kFinalS = 4;
  static constexpr double kFinalW = 0.2;

  nlohmann::json to_json() const;
};

Schedule build_schedule(std::size_t k);

/// Stacked matrices for the iterative scheme: one linf-flavor weak matrix per
/// schedule step plus the final cleanup matrix.
class LinfScheme {
 public:
  LinfScheme(std::uint64_t n, std::size_t k, std::uint64_t seed,
             const TwoLayerConstants& constants = {},
             Independence mode = Independence::full_table);

  LinfScheme(const LinfScheme&) = delete;
  LinfScheme& operator=(const LinfScheme&) = delete;
  LinfScheme(LinfScheme&&) = default;
  LinfScheme& operator=(LinfScheme&&) = default;

  std::uint64_t universe() const { return n_; }
  std::size_t k() const { return schedule_.k; }
  std::uint64_t seed() const { return seed_; }
  const Schedule& schedule() const { return schedule_; }

  /// Step matrices in schedule order; index schedule().steps.size() is the
  /// final cleanup matrix.
  std::size_t stage_count() const { return stages_.size(); }
  const WeakMatrix& stage(std::size_t idx) const { return *stages_[idx]; }
  const StackedMatrix& matrix() const { return *stacked_; }
  std::size_t support_bound() const { return support_bound_; }

 private:
  std::uint64_t n_;
  std::uint64_t seed_;
  Schedule schedule_;
  std::vector<std::unique_ptr<WeakMatrix>> stages_;
  std::unique_ptr<StackedMatrix> stacked_;
  std::size_t support_bound_;
};

struct LinfDecodeResult {
  SparseVector xhat;
  DecodeStats stats;
};

/// Runs the schedule: weak-decode each stage's segment of the residual sketch,
/// subtract the estimates from all later segments, accumulate. scale <= 0
/// estimates the tail scale once from the first stage and reuses it.
LinfDecodeResult linf_decode(const LinfScheme& scheme, const SketchVector& v, double scale = 0.0);

/// Seeded random-sign matrix with unit-norm columns and m = ceil(c5 k^2 ln n)
/// rows; pairwise column coherence <= 1/k is certified exhaustively by tests
/// at small n rather than proven. Supports additive-error point queries.
class IncoherentMatrix : public SketchMatrix {
 public:
  IncoherentMatrix(std::uint64_t n, std::size_t k, std::uint64_t seed, double c5 = 36.0);

  void add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const override;
  nlohmann::json descriptor() const override;

  std::size_t k() const { return k_; }
  std::uint64_t seed() const { return seed_; }

  /// 64 packed sign bits of column i, rows [64w, 64w + 63].
  std::uint64_t sign_word(std::uint64_t i, std::size_t w) const;
  /// Entry (row, i) as a real: +-1/sqrt(m).
  double entry(std::size_t row, std::uint64_t i) const;

  /// <column_i, y>: estimates x_i from y = Cx with additive error at most
  /// (1/k) * ||x_{[n] \ {i}}||_1 when the coherence certificate holds.
  double point_query(std::span<const double> y, std::uint64_t i) const;

 private:
  std::size_t k_;
  std::uint64_t seed_;
  double c5_;
  double inv_sqrt_m_;
};

/// The three-part general-turnstile construction: an l1/l1 stage A at
/// sparsity k^2, an l_inf stage B at sparsity 6k, and an incoherent
/// point-query stage C at sparsity 6k, stacked vertically.
class CombinedScheme {
 public:
  CombinedScheme(std::uint64_t n, std::size_t k, std::uint64_t seed,
                 const TwoLayerConstants& constants = {},
                 Independence mode = Independence::full_table);

  CombinedScheme(const CombinedScheme&) = delete;
  CombinedScheme& operator=(const CombinedScheme&) = delete;
  CombinedScheme(CombinedScheme&&) = default;
  CombinedScheme& operator=(CombinedScheme&&) = default;

  std::uint64_t universe() const { return n_; }
  std::size_t k() const { return k_; }
  std::uint64_t seed() const { return seed_; }

  const L1Scheme& stage_a() const { return *a_; }
  const LinfScheme& stage_b() const { return *b_; }
  const IncoherentMatrix& stage_c() const { return *c_; }
  const StackedMatrix& matrix() const { return *stacked_; }

 private:
  std::uint64_t n_;
  std::size_t k_;
  std::uint64_t seed_;
  std::unique_ptr<L1Scheme> a_;
  std::unique_ptr<LinfScheme> b_;
  std::unique_ptr<IncoherentMatrix> c_;
  std::unique_ptr<StackedMatrix> stacked_;
};

struct CombinedDecodeResult {
  SparseVector xhat;
  DecodeStats stats;
};

/// z <- A-decode; w <- B-decode of the z-subtracted segment; every index in
/// supp(z) U supp(w) gets a C point query against the residual with its own z
/// entry restored; the top 4k estimates win. Guarantee on good matrices:
/// ||x - xhat||_inf <= (1/k) * ||x_{-k^2}||_1.
CombinedDecodeResult combined_decode(const CombinedScheme& scheme, const SketchVector& v);

}  // namespace hhsketch
