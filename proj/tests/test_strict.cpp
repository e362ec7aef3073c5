// Tests for the deterministic strict-turnstile scheme: the Reed-Solomon code
// matrix, its point-query and noise-reduction estimators, and the recursive
// bit-splitting decoder.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hhsketch/prng.hpp"
#include "hhsketch/signal.hpp"
#include "hhsketch/sketch.hpp"
#include "hhsketch/strict.hpp"
#include "support/planted.hpp"

using hhsketch::RsCodeMatrix;
using hhsketch::Signal;
using hhsketch::SparseVector;
using hhsketch::StrictScheme;

namespace {

// Row indices of column i's ones, strictly increasing by construction.
std::vector<std::uint64_t> column_positions(const RsCodeMatrix& m, std::uint64_t i) {
  std::vector<std::uint64_t> pos;
  pos.reserve(static_cast<std::size_t>(m.b()));
  for (std::uint64_t alpha = 0; alpha < m.q(); ++alpha) {
    pos.push_back(alpha * m.q() + m.code_symbol(i, alpha));
  }
  return pos;
}

std::size_t sorted_overlap(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t hits = 0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] == b[ib]) {
      ++hits;
      ++ia;
      ++ib;
    } else if (a[ia] < b[ib]) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return hits;
}

// Independent re-derivation of the code-matrix sizing, kept deliberately
// separate from the library so the two can disagree.
std::uint64_t ref_prime_at_least(std::uint64_t v) {
  auto is_prime = [](std::uint64_t x) {
    if (x < 2) return false;
    if (x % 2 == 0) return x == 2;
    for (std::uint64_t d = 3; d * d <= x; d += 2) {
      if (x % d == 0) return false;
    }
    return true;
  };
  if (v <= 2) return 2;
  if (v % 2 == 0) ++v;
  while (!is_prime(v)) v += 2;
  return v;
}

std::uint64_t ref_node_rows(unsigned width, std::size_t code_k) {
  const double lg = static_cast<double>(width);
  const double denom =
      std::max(1.0, std::log2(std::max(1.0, lg)) + std::log2(static_cast<double>(code_k)));
  const auto ratio = static_cast<std::uint64_t>(std::ceil(lg / denom));
  const std::uint64_t q =
      ref_prime_at_least(4 * static_cast<std::uint64_t>(code_k) * std::max<std::uint64_t>(1, ratio));
  return q * q;
}

std::uint64_t ref_tree_rows(unsigned width, std::size_t k, std::size_t beta) {
  std::uint64_t total = ref_node_rows(width, beta * k);
  if ((std::uint64_t{1} << width) > 25ull * k * k) {
    total += ref_tree_rows((width + 1) / 2, k, beta);
    total += ref_tree_rows(width / 2, k, beta);
  }
  return total;
}

double l1_norm(const Signal& x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace

TEST_CASE("code matrix sizing has the pinned primes and message lengths") {
  {
    RsCodeMatrix m(4096, 200);
    CHECK(m.q() == 1601);
    CHECK(m.b() == 1601);
    CHECK(m.message_len() == 2);
    CHECK(m.rows() == 1601ull * 1601ull);
    CHECK(m.universe() == 4096);
    CHECK(m.code_k() == 200);
  }
  {
    RsCodeMatrix m(64, 200);
    CHECK(m.q() == 809);
    CHECK(m.message_len() == 1);  // q >= universe: one digit suffices
    CHECK(m.rows() == 809ull * 809ull);
  }
  {
    RsCodeMatrix m(1024, 200);
    CHECK(m.q() == 809);
    CHECK(m.message_len() == 2);
  }
  {
    RsCodeMatrix m(1024, 2);
    CHECK(m.q() == 29);
    CHECK(m.message_len() == 3);  // 29^2 = 841 < 1024
    CHECK(m.rows() == 841);
  }
  {
    RsCodeMatrix m(512, 2);
    CHECK(m.q() == 29);
    CHECK(m.message_len() == 2);
  }
  {
    RsCodeMatrix m(512, 4);
    CHECK(m.q() == 37);
    CHECK(m.message_len() == 2);
  }

  CHECK_THROWS_AS(RsCodeMatrix(1, 5), std::invalid_argument);
  CHECK_THROWS_AS(RsCodeMatrix(16, 0), std::invalid_argument);

  // Seedless: rebuilding yields byte-identical descriptors.
  CHECK(RsCodeMatrix(4096, 200).descriptor_dump() == RsCodeMatrix(4096, 200).descriptor_dump());
  const auto d = RsCodeMatrix(1024, 2).descriptor();
  CHECK(d.at("kind") == "rs_code");
  CHECK(d.at("n") == 1024);
  CHECK(d.at("code_k") == 2);
  CHECK(d.at("q") == 29);
  CHECK(d.at("message_len") == 3);
}

TEST_CASE("code symbols follow the base-q Horner evaluation") {
  RsCodeMatrix m(1024, 2);  // q = 29, three digits
  REQUIRE(m.q() == 29);
  // i = 960 = 3 + 4*29 + 1*841, so C_960(a) = (a^2 + 4a + 3) mod 29.
  const std::uint64_t i = 960;
  CHECK(m.code_symbol(i, 0) == 3);
  CHECK(m.code_symbol(i, 1) == 8);
  CHECK(m.code_symbol(i, 2) == 15);
  CHECK(m.code_symbol(i, 5) == 19);
  CHECK(m.code_symbol(i, 28) == 0);  // 28^2 + 4*28 + 3 = 899 = 31*29
  CHECK(m.code_symbol(0, 17) == 0);  // zero polynomial

  // Single-digit regime: the polynomial is the constant i.
  RsCodeMatrix flat(64, 200);
  REQUIRE(flat.message_len() == 1);
  for (std::uint64_t x : {0ull, 1ull, 13ull, 63ull}) {
    CHECK(flat.code_symbol(x, 0) == x);
    CHECK(flat.code_symbol(x, 401) == x);
    CHECK(flat.code_symbol(x, flat.q() - 1) == x);
  }
}

TEST_CASE("every column has exactly b ones, one per block (exhaustive)") {
  // Small universe: materialize every column densely and compare against the
  // closed-form positions.
  {
    RsCodeMatrix m(1024, 2);
    std::vector<double> col(m.rows());
    std::size_t bad_columns = 0;
    for (std::uint64_t i = 0; i < m.universe(); ++i) {
      std::fill(col.begin(), col.end(), 0.0);
      m.add_scaled_column(i, 1.0, col);
      const auto pos = column_positions(m, i);
      bool ok = pos.size() == m.b();
      std::size_t nonzeros = 0;
      for (std::size_t r = 0; r < col.size(); ++r) {
        if (col[r] != 0.0) {
          ++nonzeros;
          if (col[r] != 1.0) ok = false;
          if (!std::binary_search(pos.begin(), pos.end(), static_cast<std::uint64_t>(r))) ok = false;
        }
      }
      if (nonzeros != m.b()) ok = false;
      if (!ok) ++bad_columns;
    }
    CHECK(bad_columns == 0);
  }

  // Full acceptance-scale universe: check the closed-form positions land one
  // per block for every column without materializing the 2.5M-row vectors.
  {
    RsCodeMatrix m(4096, 200);
    std::size_t bad_columns = 0;
    for (std::uint64_t i = 0; i < m.universe(); ++i) {
      bool ok = true;
      for (std::uint64_t alpha = 0; alpha < m.q(); ++alpha) {
        const std::uint64_t sym = m.code_symbol(i, alpha);
        if (sym >= m.q()) {
          ok = false;
          break;
        }
      }
      if (!ok) ++bad_columns;
    }
    CHECK(bad_columns == 0);

    // Spot-tie the closed form to the column materialization at this size.
    std::vector<double> col(m.rows());
    for (std::uint64_t i : {0ull, 1ull, 977ull, 4095ull}) {
      std::fill(col.begin(), col.end(), 0.0);
      m.add_scaled_column(i, -2.5, col);
      const auto pos = column_positions(m, i);
      std::size_t hits = 0;
      for (std::uint64_t p : pos) {
        if (col[static_cast<std::size_t>(p)] == -2.5) ++hits;
      }
      CHECK(hits == m.b());
    }
  }

  RsCodeMatrix small(512, 2);
  std::vector<double> buf(small.rows());
  CHECK_THROWS_AS(small.add_scaled_column(512, 1.0, buf), std::out_of_range);
  std::vector<double> short_buf(small.rows() - 1);
  CHECK_THROWS_AS(small.add_scaled_column(0, 1.0, short_buf), std::invalid_argument);
}

TEST_CASE("distinct columns overlap in at most message_len - 1 rows (exhaustive)") {
  auto run = [](std::uint64_t n, std::size_t code_k) {
    RsCodeMatrix m(n, code_k);
    const std::size_t bound = m.message_len() - 1;
    std::vector<std::vector<std::uint64_t>> cols;
    cols.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i) cols.push_back(column_positions(m, i));
    std::size_t worst = 0;
    std::size_t violations = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      for (std::uint64_t j = i + 1; j < n; ++j) {
        const std::size_t ov = sorted_overlap(cols[static_cast<std::size_t>(i)],
                                              cols[static_cast<std::size_t>(j)]);
        worst = std::max(worst, ov);
        if (ov > bound) ++violations;
      }
    }
    CHECK(violations == 0);
    CHECK(worst <= bound);
  };
  run(1024, 2);  // message_len 3: at most 2 shared rows
  run(512, 2);   // message_len 2: at most 1 shared row
}

TEST_CASE("point query is exact on spikes and within 1/(2k) on pairs (exhaustive)") {
  // Single spike: all b counters agree, the median is the exact value.
  {
    RsCodeMatrix m(512, 2);
    Signal x(512, 0.0);
    x[313] = 7.25;
    const auto sk = hhsketch::apply(m, x);
    hhsketch::DecodeStats stats;
    CHECK(hhsketch::rs_point_query(m, sk.values, 313, &stats) == doctest::Approx(7.25).epsilon(1e-12));
    CHECK(stats.candidate_evaluations == 1);

    std::vector<double> zero(m.rows(), 0.0);
    CHECK(hhsketch::rs_point_query(m, zero, 77) == 0.0);

    std::vector<double> wrong(m.rows() - 1, 0.0);
    CHECK_THROWS_AS(hhsketch::rs_point_query(m, wrong, 0), std::invalid_argument);
  }

  // x = e_i + e_j for every pair: each estimate must be within
  // (1/(2 code_k)) * ||x - x_i e_i||_1 = 1/(2 code_k) of the truth. With at
  // most message_len - 1 = 1 shared row, the median is in fact exact.
  auto pair_sweep = [](std::size_t code_k) {
    RsCodeMatrix m(512, code_k);
    REQUIRE(m.message_len() == 2);
    const double bound = 1.0 / (2.0 * static_cast<double>(code_k));
    const std::uint64_t n = m.universe();
    std::vector<double> sk(m.rows());
    double worst = 0.0;
    std::size_t violations = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      std::fill(sk.begin(), sk.end(), 0.0);
      m.add_scaled_column(i, 1.0, sk);
      for (std::uint64_t j = i + 1; j < n; ++j) {
        m.add_scaled_column(j, 1.0, sk);
        const double ei = std::abs(hhsketch::rs_point_query(m, sk, i) - 1.0);
        const double ej = std::abs(hhsketch::rs_point_query(m, sk, j) - 1.0);
        worst = std::max({worst, ei, ej});
        if (ei > bound || ej > bound) ++violations;
        m.add_scaled_column(j, -1.0, sk);
      }
    }
    CHECK(violations == 0);
    CHECK(worst <= bound);
    CHECK(worst <= 1e-12);  // the overlap bound actually makes pairs exact
  };
  pair_sweep(2);
  pair_sweep(4);
}

TEST_CASE("noise reduction estimates candidates and keeps the 5k largest") {
  RsCodeMatrix m(512, 2);

  // Exact on sparse signals whose support is among the candidates.
  {
    Signal x(512, 0.0);
    x[3] = 4.0;
    x[160] = -2.0;
    x[400] = 0.5;
    const auto sk = hhsketch::apply(m, x);
    const std::vector<std::uint64_t> cand = {3, 77, 160, 255, 400, 509};
    hhsketch::DecodeStats stats;
    const SparseVector out = hhsketch::reduce_noise(m, sk.values, cand, 2, &stats);
    CHECK(stats.candidate_evaluations == cand.size());
    CHECK(out.support_size() == 3);
    CHECK(out.at(3) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(out.at(160) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(out.at(400) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.at(77) == 0.0);
  }

  // Truncation: 13 live candidates, k = 2 keeps only the 10 largest.
  {
    Signal x(512, 0.0);
    std::vector<std::uint64_t> cand;
    for (std::size_t t = 0; t < 13; ++t) {
      const auto idx = static_cast<std::uint64_t>(11 + 31 * t);
      x[idx] = (t % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(13 - t);
      cand.push_back(idx);
    }
    cand.push_back(500);  // dead candidate, estimates to zero
    const auto sk = hhsketch::apply(m, x);
    const SparseVector out = hhsketch::reduce_noise(m, sk.values, cand, 2, nullptr);
    CHECK(out.support_size() == 10);
    for (std::size_t t = 0; t < 13; ++t) {
      const auto idx = static_cast<std::uint64_t>(11 + 31 * t);
      if (t < 10) {
        CHECK(out.at(idx) == doctest::Approx(x[idx]).epsilon(1e-12));
      } else {
        CHECK(out.at(idx) == 0.0);  // magnitudes 3, 2, 1 fall off the cut
      }
    }
  }

  // Empty candidate set: empty output.
  {
    const auto sk = hhsketch::apply(m, Signal(512, 1.0));
    CHECK(hhsketch::reduce_noise(m, sk.values, {}, 2, nullptr).support_size() == 0);
  }

  std::vector<double> wrong(m.rows() + 1, 0.0);
  const std::vector<std::uint64_t> one = {0};
  CHECK_THROWS_AS(hhsketch::reduce_noise(m, wrong, one, 2, nullptr), std::invalid_argument);
}

TEST_CASE("one noise-reduction round contracts concentrated instances") {
  // Instances whose mass is concentrated on a known candidate set S:
  // ||z_S||_1 >= 3 ||z_offS||_1. A single round must shrink the unexplained
  // mass to strictly below 0.9 of the total.
  RsCodeMatrix m(1024, 100);
  REQUIRE(m.q() == 809);
  const std::size_t k = 4;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    hhsketch::SeedStream g(hhsketch::mix2(0x5eedf00d, inst));
    std::vector<std::uint64_t> pool(1024);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t t = pool.size(); t > 1; --t) std::swap(pool[t - 1], pool[g.next_below(t)]);

    Signal z(1024, 0.0);
    std::vector<std::uint64_t> S(pool.begin(), pool.begin() + 20);
    for (std::uint64_t i : S) z[i] = (g.next() & 1 ? 1.0 : -1.0) * (5.0 + 5.0 * g.next_unit());
    double off_mass = 0.0;
    for (std::size_t t = 20; t < 80; ++t) {
      const double mag = 0.1 + 0.15 * g.next_unit();
      z[pool[t]] = (g.next() & 1 ? 1.0 : -1.0) * mag;
      off_mass += mag;
    }
    double on_mass = 0.0;
    for (std::uint64_t i : S) on_mass += std::abs(z[i]);
    REQUIRE(on_mass >= 3.0 * off_mass);  // instance precondition

    const auto sk = hhsketch::apply(m, z);
    const SparseVector zhat = hhsketch::reduce_noise(m, sk.values, S, k, nullptr);
    double resid = 0.0;
    for (std::uint64_t i = 0; i < z.size(); ++i) resid += std::abs(z[i] - zhat.at(i));
    const double gamma = resid / l1_norm(z);
    CHECK(gamma < 0.9);
  }
}

TEST_CASE("iterated noise reduction recovers sparse signals exactly") {
  RsCodeMatrix m(512, 200);
  REQUIRE(m.message_len() == 1);  // disjoint columns: estimates are exact

  {
    Signal x(512, 0.0);
    x[5] = 7.0;
    x[400] = 2.0;
    const auto sk = hhsketch::apply(m, x);
    const std::vector<std::uint64_t> cand = {5, 17, 99, 290, 400};
    hhsketch::DecodeStats stats;
    const SparseVector out = hhsketch::tail_point_query(m, sk.values, cand, 2, 100.0, &stats);
    CHECK(out.support_size() == 2);
    CHECK(out.at(5) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(out.at(400) == doctest::Approx(2.0).epsilon(1e-12));
    // Round one recovers everything; round two sees an all-zero residual and
    // stops, so each candidate is estimated exactly twice.
    CHECK(stats.candidate_evaluations == 2 * cand.size());
  }

  // Output is capped at 5k entries, largest magnitudes first.
  {
    Signal x(512, 0.0);
    std::vector<std::uint64_t> cand;
    for (std::size_t t = 0; t < 7; ++t) {
      const auto idx = static_cast<std::uint64_t>(10 * t + 1);
      x[idx] = static_cast<double>(7 - t);
      cand.push_back(idx);
    }
    const auto sk = hhsketch::apply(m, x);
    const SparseVector out = hhsketch::tail_point_query(m, sk.values, cand, 1, 100.0, nullptr);
    CHECK(out.support_size() == 5);
    CHECK(out.at(1) == doctest::Approx(7.0));
    CHECK(out.at(41) == doctest::Approx(3.0));
    CHECK(out.at(51) == 0.0);
    CHECK(out.at(61) == 0.0);
  }

  // Zero sketch: empty result, and beta below 5 is rejected.
  {
    std::vector<double> zero(m.rows(), 0.0);
    const std::vector<std::uint64_t> cand = {1, 2, 3};
    CHECK(hhsketch::tail_point_query(m, zero, cand, 2, 100.0, nullptr).support_size() == 0);
    CHECK_THROWS_AS(hhsketch::tail_point_query(m, zero, cand, 2, 4.9, nullptr),
                    std::invalid_argument);
  }
}

TEST_CASE("split tree structure matches the sizing rules") {
  {
    StrictScheme s(4096, 2);
    CHECK(s.k() == 2);
    CHECK(s.beta() == 100);
    CHECK(s.padded_bits() == 12);
    CHECK(s.levels() == 2);
    REQUIRE(s.nodes().size() == 3);

    const auto& root = s.nodes()[0];
    CHECK(root.level == 0);
    CHECK(root.lo == 0);
    CHECK(root.width == 12);
    CHECK(root.offset == 0);
    CHECK(root.matrix->q() == 1601);

    const auto& hi = s.nodes()[1];  // high bit field
    CHECK(hi.level == 1);
    CHECK(hi.pos == 0);
    CHECK(hi.lo == 6);
    CHECK(hi.width == 6);
    CHECK(hi.offset == 1601ull * 1601ull);
    CHECK(hi.matrix->q() == 809);

    const auto& lo = s.nodes()[2];  // low bit field
    CHECK(lo.level == 1);
    CHECK(lo.pos == 1);
    CHECK(lo.lo == 0);
    CHECK(lo.width == 6);
    CHECK(lo.offset == 1601ull * 1601ull + 809ull * 809ull);
    CHECK(lo.matrix->q() == 809);

    // Equal-width nodes share one matrix instance.
    CHECK(hi.matrix.get() == lo.matrix.get());
    CHECK(s.rows() == 1601ull * 1601ull + 2ull * 809ull * 809ull);

    CHECK(StrictScheme(4096, 2).descriptor_dump() == s.descriptor_dump());
    CHECK(s.descriptor().at("kind") == "rs_split_tree");
  }

  // Universe already enumerable: a single leaf, no recursion.
  {
    StrictScheme s(64, 2);
    CHECK(s.levels() == 1);
    REQUIRE(s.nodes().size() == 1);
    CHECK(s.nodes()[0].width == 6);
    CHECK(s.nodes()[0].matrix->q() == 809);
    CHECK(s.rows() == 809ull * 809ull);
  }
  {
    StrictScheme s(1024, 16);  // 25 k^2 = 6400 >= 1024
    CHECK(s.levels() == 1);
    REQUIRE(s.nodes().size() == 1);
    CHECK(s.nodes()[0].matrix->q() == 6421);
    CHECK(s.rows() == 6421ull * 6421ull);
  }

  // Non-power-of-two universes are padded up.
  {
    StrictScheme s(4095, 2);
    CHECK(s.padded_bits() == 12);
    CHECK(s.universe() == 4095);
    CHECK(s.rows() == StrictScheme(4096, 2).rows());
  }

  CHECK_THROWS_AS(StrictScheme(1, 2), std::invalid_argument);
  CHECK_THROWS_AS(StrictScheme(64, 0), std::invalid_argument);
  CHECK_THROWS_AS(StrictScheme(64, 2, 4), std::invalid_argument);
}

TEST_CASE("row counts equal the independently recomputed level sums") {
  for (std::uint64_t n : {std::uint64_t{1} << 10, std::uint64_t{1} << 12}) {
    for (std::size_t k : {2, 4, 8, 16}) {
      StrictScheme s(n, k);
      CHECK(s.rows() == ref_tree_rows(s.padded_bits(), k, 100));
      // Every node's segment must sit flush against the previous one.
      std::size_t expect_offset = 0;
      for (const auto& node : s.nodes()) {
        CHECK(node.offset == expect_offset);
        expect_offset += node.matrix->rows();
      }
      CHECK(expect_offset == s.rows());
    }
  }
}

TEST_CASE("sketch segments are the node-projected signals") {
  StrictScheme s(1024, 2, 5);  // small beta keeps this scheme tiny
  REQUIRE(s.nodes().size() == 3);
  REQUIRE(s.rows() == 10251);  // 83^2 + 2 * 41^2

  const Signal x = testsupport::planted_nonneg(1024, 2, 2, 120, 0xabcde);
  const auto sk = hhsketch::apply(s, x);
  const double total = l1_norm(x);

  for (const auto& node : s.nodes()) {
    // Projected signal: coordinate j collects all i whose field equals j.
    const std::uint64_t uni = std::uint64_t{1} << node.width;
    Signal v(static_cast<std::size_t>(uni), 0.0);
    const std::uint64_t mask = uni - 1;
    for (std::uint64_t i = 0; i < x.size(); ++i) {
      v[static_cast<std::size_t>((i >> node.lo) & mask)] += x[i];
    }
    // Mass is conserved by every projection of a nonnegative signal.
    CHECK(l1_norm(v) == doctest::Approx(total).epsilon(1e-12));

    // The node's segment is exactly its matrix applied to the projection.
    const auto direct = hhsketch::apply(*node.matrix, v);
    double seg_sum = 0.0;
    double worst = 0.0;
    for (std::size_t r = 0; r < direct.values.size(); ++r) {
      const double got = sk.values[node.offset + r];
      seg_sum += got;
      worst = std::max(worst, std::abs(got - direct.values[r]));
    }
    CHECK(worst <= 1e-9 * std::max(1.0, total));
    // Each column has q ones, so the segment sums to q * ||v||_1.
    CHECK(seg_sum == doctest::Approx(static_cast<double>(node.matrix->q()) * total).epsilon(1e-9));
  }

  // Streaming ingest in shuffled order lands on the same sketch.
  auto sk2 = hhsketch::make_sketch(s);
  for (const auto& u : testsupport::as_stream(x, 99)) hhsketch::ingest(s, sk2, u);
  double worst = 0.0;
  for (std::size_t r = 0; r < sk.values.size(); ++r) {
    worst = std::max(worst, std::abs(sk.values[r] - sk2.values[r]));
  }
  CHECK(worst <= 1e-9 * std::max(1.0, total));
}

TEST_CASE("heavy coordinates survive both bit-field projections") {
  // If i is heavy in x, its high bits are heavy in the high projection and its
  // low bits in the low projection; the recursion's candidate products rely on
  // exactly this containment.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t k = 2;
    const Signal x = testsupport::planted_nonneg(1024, k, k, 150, hhsketch::mix2(seed, 0x11));
    Signal vhi(32, 0.0);
    Signal vlo(32, 0.0);
    for (std::uint64_t i = 0; i < x.size(); ++i) {
      vhi[static_cast<std::size_t>(i >> 5)] += x[i];
      vlo[static_cast<std::size_t>(i & 31)] += x[i];
    }
    const auto heads = hhsketch::head_set(x, k, 1.0);
    const auto hhi = hhsketch::head_set(vhi, k, 1.0);
    const auto hlo = hhsketch::head_set(vlo, k, 1.0);
    for (std::uint64_t i : heads) {
      const bool in_hi = std::find(hhi.begin(), hhi.end(), i >> 5) != hhi.end();
      const bool in_lo = std::find(hlo.begin(), hlo.end(), i & 31) != hlo.end();
      CHECK(in_hi);
      CHECK(in_lo);
    }
  }
}

TEST_CASE("recursive decode recovers spikes exactly and rejects foreign sketches") {
  StrictScheme s(4096, 2);
  {
    Signal x(4096, 0.0);
    x[1337] = 4.5;
    const auto sk = hhsketch::apply(s, x);
    const auto res = hhsketch::recursive_decode(s, sk);
    CHECK(res.xhat.support_size() == 1);
    CHECK(res.xhat.at(1337) == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(res.stats.candidate_evaluations > 0);
    CHECK(res.stats.candidate_evaluations < 4096);  // far below brute force
  }
  {
    const auto sk = hhsketch::apply(s, Signal(4096, 0.0));
    const auto res = hhsketch::recursive_decode(s, sk);
    CHECK(res.xhat.support_size() == 0);
  }
  {
    StrictScheme other(64, 2);
    const auto foreign = hhsketch::make_sketch(other);
    CHECK_THROWS_AS(hhsketch::recursive_decode(s, foreign), std::invalid_argument);
    auto truncated = hhsketch::make_sketch(s);
    truncated.values.pop_back();
    CHECK_THROWS_AS(hhsketch::recursive_decode(s, truncated), std::invalid_argument);
  }
}

TEST_CASE("recursive decode meets the point-query bound on planted signals") {
  auto run = [](std::size_t k, std::uint64_t seed) {
    StrictScheme s(4096, k);
    const Signal x = testsupport::planted_nonneg(4096, k, k, 300, hhsketch::mix2(seed, 0x77));
    const auto sk = hhsketch::apply(s, x);
    const auto res = hhsketch::recursive_decode(s, sk);
    CHECK(hhsketch::oracle_verify_linf(x, res.xhat, k, k));
    CHECK(res.xhat.support_size() <= 5 * k);
    const double lg = std::log2(4096.0);
    const auto budget = static_cast<std::uint64_t>(10.0 * std::pow(static_cast<double>(k), 3.0) *
                                                   std::pow(lg, 3.0));
    CHECK(res.stats.candidate_evaluations <= budget);

    // Decode twice: identical output, identical work.
    const auto res2 = hhsketch::recursive_decode(s, sk);
    CHECK(res2.stats.candidate_evaluations == res.stats.candidate_evaluations);
    CHECK(res2.xhat.entries() == res.xhat.entries());
  };
  run(2, 1);
  run(2, 2);
  run(2, 3);
  run(4, 4);
  run(4, 5);
}

TEST_CASE("negative sketch mass trips the strict-model check") {
  StrictScheme s(64, 2, 5);
  {
    Signal x(64, 0.0);
    x[9] = -3.0;
    const auto sk = hhsketch::apply(s, x);
    CHECK_THROWS_AS(hhsketch::recursive_decode(s, sk), hhsketch::StrictModelViolation);
  }
  {
    Signal x(64, 0.0);
    x[3] = 0.5;
    x[9] = -3.0;  // mixed signs still leave some counter negative
    const auto sk = hhsketch::apply(s, x);
    CHECK_THROWS_AS(hhsketch::recursive_decode(s, sk), hhsketch::StrictModelViolation);
  }
  {
    // Rounding-scale negatives are tolerated: the check is relative.
    Signal x(64, 0.0);
    x[9] = -1e-15;
    const auto sk = hhsketch::apply(s, x);
    CHECK_NOTHROW(hhsketch::recursive_decode(s, sk));
  }
}
