#include "hhsketch/recover_linf.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hhsketch/prng.hpp"

namespace hhsketch {

namespace {

void accumulate(DecodeStats& into, const DecodeStats& from) {
  into.candidate_evaluations += from.candidate_evaluations;
  into.clusters_formed += from.clusters_formed;
  into.buckets_decoded += from.buckets_decoded;
}

}  // namespace

nlohmann::json Schedule::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const ScheduleStep& st : steps) {
    steps_json.push_back({{"round", st.round},
                          {"i", st.i},
                          {"k_r", st.k_r},
                          {"s_real", st.s_real},
                          {"s", st.s},
                          {"w", st.w}});
  }
  return nlohmann::json{{"k", k},
                        {"rounds", rounds},
                        {"k_final", k_final},
                        {"final", {{"s", kFinalS}, {"w", kFinalW}}},
                        {"steps", steps_json}};
}

Schedule build_schedule(std::size_t k) {
  if (k == 0) throw std::invalid_argument("schedule: k must be positive");
  Schedule sched;
  sched.k = k;
  double k_r = static_cast<double>(k);
  std::size_t round = 0;
  while (k_r > 4.0) {
    std::size_t i = 0;
    // Phase 1: widening steps while the root is large enough to pay for the
    // (i+1)^2 window. When the guard fails at i = 0 the phase is empty and
    // the decay below starts from k_r itself.
    double phase1_s = k_r;
    for (;; ++i) {
      double root = std::pow(k_r, std::pow(2.0, -static_cast<double>(i)));
      double ii = static_cast<double>(i) + 1.0;
      double guard = std::max(ii * ii, 4.0 * std::pow(1.0 + 1.0 / ii, 4.0));
      if (root < guard) break;
      double s_real = ii * ii * root;
      sched.steps.push_back(ScheduleStep{round, i, k_r, s_real,
                                         static_cast<std::size_t>(std::ceil(s_real)), ii * ii});
      phase1_s = s_real;
    }
    // Phase 2: square-root decay at unit slack until the sparsity target
    // drops below max(4, log log k_r); the first failing value seeds the next
    // round's (fractional) residual sparsity.
    double bar = std::max(4.0, std::log2(std::max(2.0, std::log2(std::max(2.0, k_r)))));
    double s_real = phase1_s;
    while (s_real >= bar) {
      sched.steps.push_back(ScheduleStep{round, i, k_r, s_real,
                                         static_cast<std::size_t>(std::ceil(s_real)), 1.0});
      ++i;
      s_real = std::sqrt(s_real);
    }
    k_r = s_real;
    ++round;
  }
  sched.rounds = round;
  sched.k_final = k_r;
  return sched;
}

LinfScheme::LinfScheme(std::uint64_t n, std::size_t k, std::uint64_t seed,
                       const TwoLayerConstants& constants, Independence mode)
    : n_(n), seed_(seed), schedule_(build_schedule(k)), support_bound_(0) {
  if (static_cast<double>(k) * static_cast<double>(k) > static_cast<double>(n) + 1e-9) {
    throw std::invalid_argument("linf scheme: k must be at most sqrt(n)");
  }
  std::vector<const SketchMatrix*> parts;
  for (std::size_t idx = 0; idx < schedule_.steps.size(); ++idx) {
    const ScheduleStep& st = schedule_.steps[idx];
    stages_.push_back(std::make_unique<WeakMatrix>(
        n, WeakGoal::linf(st.k_r, st.s, st.w), mix2(seed, 0x100 + idx), constants, mode));
    parts.push_back(stages_.back().get());
    support_bound_ += st.s;
  }
  stages_.push_back(std::make_unique<WeakMatrix>(
      n, WeakGoal::linf(static_cast<double>(k), Schedule::kFinalS, Schedule::kFinalW),
      mix2(seed, 0x1ff), constants, mode));
  parts.push_back(stages_.back().get());
  support_bound_ += Schedule::kFinalS;
  stacked_ = std::make_unique<StackedMatrix>(n, parts);
}

LinfDecodeResult linf_decode(const LinfScheme& scheme, const SketchVector& v, double scale) {
  const StackedMatrix& stacked = scheme.matrix();
  if (v.matrix_hash != stacked.descriptor_hash()) {
    throw std::invalid_argument("linf_decode: sketch was not produced by this scheme");
  }
  if (v.values.size() != stacked.rows()) {
    throw std::invalid_argument("linf_decode: sketch length mismatch");
  }

  LinfDecodeResult res;
  res.xhat = SparseVector(scheme.universe(), scheme.support_bound());
  std::vector<double> residual = v.values;

  if (scale <= 0.0) {
    const WeakMatrix& first = scheme.stage(0);
    const double* seg = residual.data() + stacked.part_offset(0);
    scale = estimate_scale(first,
                           SketchVector{std::vector<double>(seg, seg + first.rows()),
                                        first.descriptor_hash()});
  }

  for (std::size_t idx = 0; idx < scheme.stage_count(); ++idx) {
    const WeakMatrix& stage = scheme.stage(idx);
    const double* seg = residual.data() + stacked.part_offset(idx);
    SketchVector stage_view{std::vector<double>(seg, seg + stage.rows()),
                            stage.descriptor_hash()};
    WeakResult wres = weak_decode(stage, stage_view, scale);
    accumulate(res.stats, wres.stats);
    if (wres.xhat.support_size() == 0) continue;
    for (const auto& [i, val] : wres.xhat.entries()) {
      res.xhat.add(i, val);
      for (std::size_t u = idx + 1; u < scheme.stage_count(); ++u) {
        std::span<double> useg(residual.data() + stacked.part_offset(u),
                               scheme.stage(u).rows());
        scheme.stage(u).add_scaled_column(i, -val, useg);
      }
    }
  }
  return res;
}

namespace {

std::size_t incoherent_rows(std::uint64_t n, std::size_t k, double c5) {
  if (n < 2) throw std::invalid_argument("incoherent matrix: universe too small");
  if (k == 0) throw std::invalid_argument("incoherent matrix: k must be positive");
  if (!(c5 > 0.0)) throw std::invalid_argument("incoherent matrix: c5 must be positive");
  double m = std::ceil(c5 * static_cast<double>(k) * static_cast<double>(k) *
                       std::log(static_cast<double>(n)));
  return static_cast<std::size_t>(m);
}

}  // namespace

IncoherentMatrix::IncoherentMatrix(std::uint64_t n, std::size_t k, std::uint64_t seed, double c5)
    : SketchMatrix(n, incoherent_rows(n, k, c5)),
      k_(k),
      seed_(seed),
      c5_(c5),
      inv_sqrt_m_(1.0 / std::sqrt(static_cast<double>(rows()))) {}

std::uint64_t IncoherentMatrix::sign_word(std::uint64_t i, std::size_t w) const {
  return mix3(seed_, i, w);
}

double IncoherentMatrix::entry(std::size_t row, std::uint64_t i) const {
  return ((sign_word(i, row / 64) >> (row % 64)) & 1u) ? inv_sqrt_m_ : -inv_sqrt_m_;
}

void IncoherentMatrix::add_scaled_column(std::uint64_t i, double delta,
                                         std::span<double> out) const {
  const double dv = delta * inv_sqrt_m_;
  std::size_t row = 0;
  for (std::size_t w = 0; row < rows(); ++w) {
    std::uint64_t word = sign_word(i, w);
    std::size_t lim = std::min<std::size_t>(64, rows() - row);
    for (std::size_t b = 0; b < lim; ++b) {
      out[row + b] += ((word >> b) & 1u) ? dv : -dv;
    }
    row += lim;
  }
}

double IncoherentMatrix::point_query(std::span<const double> y, std::uint64_t i) const {
  if (i >= universe()) throw std::invalid_argument("point_query: index out of range");
  if (y.size() != rows()) throw std::invalid_argument("point_query: sketch length mismatch");
  double acc = 0.0;
  std::size_t row = 0;
  for (std::size_t w = 0; row < rows(); ++w) {
    std::uint64_t word = sign_word(i, w);
    std::size_t lim = std::min<std::size_t>(64, rows() - row);
    for (std::size_t b = 0; b < lim; ++b) {
      acc += ((word >> b) & 1u) ? y[row + b] : -y[row + b];
    }
    row += lim;
  }
  return acc * inv_sqrt_m_;
}

nlohmann::json IncoherentMatrix::descriptor() const {
  return nlohmann::json{{"kind", "incoherent"},
                        {"n", universe()},
                        {"k", k_},
                        {"seed", seed_},
                        {"c5", c5_},
                        {"m", rows()}};
}

CombinedScheme::CombinedScheme(std::uint64_t n, std::size_t k, std::uint64_t seed,
                               const TwoLayerConstants& constants, Independence mode)
    : n_(n), k_(k), seed_(seed) {
  if (k == 0) throw std::invalid_argument("combined scheme: k must be positive");
  a_ = std::make_unique<L1Scheme>(n, k * k, 1.0, mix2(seed, 0xA), constants, mode);
  b_ = std::make_unique<LinfScheme>(n, 6 * k, mix2(seed, 0xB), constants, mode);
  c_ = std::make_unique<IncoherentMatrix>(n, 6 * k, mix2(seed, 0xC));
  stacked_ = std::make_unique<StackedMatrix>(
      n, std::vector<const SketchMatrix*>{&a_->matrix(), &b_->matrix(), c_.get()});
}

CombinedDecodeResult combined_decode(const CombinedScheme& scheme, const SketchVector& v) {
  const StackedMatrix& stacked = scheme.matrix();
  if (v.matrix_hash != stacked.descriptor_hash()) {
    throw std::invalid_argument("combined_decode: sketch was not produced by this scheme");
  }
  if (v.values.size() != stacked.rows()) {
    throw std::invalid_argument("combined_decode: sketch length mismatch");
  }
  CombinedDecodeResult res;
  const std::size_t k = scheme.k();

  // Stage A: coarse l1 approximation z with ||x - z||_1 <= 2 ||x_{-k^2}||_1.
  const L1Scheme& a = scheme.stage_a();
  const double* seg_a = v.values.data() + stacked.part_offset(0);
  L1DecodeResult z = l1_decode(
      a, SketchVector{std::vector<double>(seg_a, seg_a + a.matrix().rows()),
                      a.matrix().descriptor_hash()});
  accumulate(res.stats, z.stats);

  // Stage B: sketch of x - z, decoded for the surviving heavy hitters. The
  // tail scale is estimated once from the subtracted sketch and shared.
  const LinfScheme& b = scheme.stage_b();
  const double* seg_b = v.values.data() + stacked.part_offset(1);
  std::vector<double> vb(seg_b, seg_b + b.matrix().rows());
  for (const auto& [i, zi] : z.xhat.entries()) {
    b.matrix().add_scaled_column(i, -zi, std::span<double>(vb));
  }
  const WeakMatrix& b0 = b.stage(0);
  double scale = estimate_scale(
      b0, SketchVector{std::vector<double>(vb.data(), vb.data() + b0.rows()),
                       b0.descriptor_hash()});
  LinfDecodeResult w =
      linf_decode(b, SketchVector{vb, b.matrix().descriptor_hash()}, scale);
  accumulate(res.stats, w.stats);

  // Stage C: point queries. With u = v_C - Cz and unit-norm columns, querying
  // x - z + z_i e_i costs one inner product plus adding z_i back.
  const IncoherentMatrix& c = scheme.stage_c();
  const double* seg_c = v.values.data() + stacked.part_offset(2);
  std::vector<double> u(seg_c, seg_c + c.rows());
  for (const auto& [i, zi] : z.xhat.entries()) {
    c.add_scaled_column(i, -zi, std::span<double>(u));
  }
  std::set<std::uint64_t> candidates;
  for (const auto& [i, zi] : z.xhat.entries()) candidates.insert(i);
  for (const auto& [i, wi] : w.xhat.entries()) candidates.insert(i);

  std::vector<std::pair<std::uint64_t, double>> ranked;
  for (std::uint64_t i : candidates) {
    double est = c.point_query(u, i) + z.xhat.at(i);
    ++res.stats.candidate_evaluations;
    ranked.emplace_back(i, est);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    double mx = std::abs(x.second), my = std::abs(y.second);
    if (mx != my) return mx > my;
    return x.first < y.first;
  });
  res.xhat = SparseVector(scheme.universe(), std::max<std::size_t>(4 * k, 1));
  for (std::size_t t = 0; t < ranked.size() && t < 4 * k; ++t) {
    res.xhat.set(ranked[t].first, ranked[t].second);
  }
  return res;
}

}  // namespace hhsketch
