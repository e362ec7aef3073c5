#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "hhsketch/prng.hpp"

namespace hhsketch {

enum class Independence { full_table, k_wise };

/// Seeded hash function [0, domain) -> [0, range).
///
/// full_table realizes a fixed uniformly random table, evaluated through the
/// mixer on demand and cached as an explicit array for small domains (both
/// paths produce identical values, the cache is purely an optimization).
/// k_wise(t) is a degree-(t-1) polynomial over F_p, p = 2^31 - 1 > any desk
/// scale domain or range, reduced to the range.
class HashFn {
 public:
  static constexpr std::uint64_t kPrime = 2147483647ull;  // 2^31 - 1

  HashFn(Independence mode, std::uint64_t seed, std::uint64_t domain, std::uint64_t range,
         unsigned t = 2, bool allow_cache = true);

  std::uint32_t operator()(std::uint64_t x) const {
    if (!table_.empty()) return table_[x];
    return eval(x);
  }

  Independence mode() const { return mode_; }
  std::uint64_t domain() const { return domain_; }
  std::uint64_t range() const { return range_; }

 private:
  std::uint32_t eval(std::uint64_t x) const;

  Independence mode_;
  std::uint64_t seed_;
  std::uint64_t domain_;
  std::uint64_t range_;
  std::vector<std::uint64_t> coeffs_;  // k_wise only
  std::vector<std::uint32_t> table_;   // full_table cache, optional
};

/// d independent hash functions [N) -> [B). Repetition r uses seed mix2(seed, r).
class OneLayerHash {
 public:
  OneLayerHash(Independence mode, std::uint64_t seed, std::uint64_t n, std::uint64_t buckets,
               std::size_t reps, unsigned t = 2, bool allow_cache = true);

  std::uint32_t map(std::size_t rep, std::uint64_t x) const { return fns_[rep](x); }
  std::size_t reps() const { return fns_.size(); }
  std::uint64_t buckets() const { return buckets_; }
  std::uint64_t domain() const { return n_; }

 private:
  std::uint64_t n_;
  std::uint64_t buckets_;
  std::vector<HashFn> fns_;
};

/// Two-layer bucket hashing: first layer g_r : [N) -> [B1), r < d1; second
/// layer h_{r,j} : [B1) -> [B2), j < d2. The induced left-regular bipartite
/// graph has left nodes [N), right nodes [B2 * d1 * d2) grouped by (r, j), and
/// item x's neighbor in group (r, j) is h_{r,j}(g_r(x)).
class TwoLayerHash {
 public:
  struct Shape {
    std::uint64_t n = 0;
    std::uint64_t b1 = 0;
    std::size_t d1 = 0;
    std::uint64_t b2 = 0;
    std::size_t d2 = 0;
  };

  TwoLayerHash(const Shape& shape, std::uint64_t seed,
               Independence first_mode = Independence::full_table,
               Independence second_mode = Independence::full_table, unsigned t = 2);

  const Shape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }

  std::uint32_t first(std::size_t r, std::uint64_t x) const { return g_.map(r, x); }
  std::uint32_t second(std::size_t r, std::size_t j, std::uint64_t b) const {
    return h_[r * shape_.d2 + j](b);
  }

  /// Right node id of item x in group (r, j), in [0, B2 * d1 * d2).
  std::uint64_t right_node(std::size_t r, std::size_t j, std::uint64_t x) const {
    return (static_cast<std::uint64_t>(r) * shape_.d2 + j) * shape_.b2 + second(r, j, first(r, x));
  }

  nlohmann::json descriptor() const;

 private:
  Shape shape_;
  std::uint64_t seed_;
  Independence first_mode_;
  Independence second_mode_;
  unsigned t_;
  OneLayerHash g_;
  std::vector<HashFn> h_;
};

}  // namespace hhsketch
