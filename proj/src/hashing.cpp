#include "hhsketch/hashing.hpp"

#include <stdexcept>

namespace hhsketch {

namespace {
constexpr std::uint64_t kTableCacheLimit = 1u << 14;
}

HashFn::HashFn(Independence mode, std::uint64_t seed, std::uint64_t domain, std::uint64_t range,
               unsigned t, bool allow_cache)
    : mode_(mode), seed_(seed), domain_(domain), range_(range) {
  if (range == 0 || domain == 0) throw std::invalid_argument("HashFn: empty domain or range");
  if (mode == Independence::k_wise) {
    if (t < 2) throw std::invalid_argument("HashFn: k_wise needs t >= 2");
    if (domain >= kPrime || range >= kPrime)
      throw std::invalid_argument("HashFn: domain/range must be below the field prime");
    SeedStream s(seed);
    coeffs_.resize(t);
    for (auto& c : coeffs_) c = s.next_below(kPrime);
    if (coeffs_[0] == 0) coeffs_[0] = 1;  // keep the leading coefficient nonzero
  } else if (allow_cache && domain <= kTableCacheLimit) {
    table_.resize(domain);
    for (std::uint64_t x = 0; x < domain; ++x) table_[x] = eval(x);
  }
}

std::uint32_t HashFn::eval(std::uint64_t x) const {
  if (mode_ == Independence::full_table)
    return static_cast<std::uint32_t>(reduce_to(mix2(seed_, x), range_));
  std::uint64_t acc = 0;
  for (std::uint64_t c : coeffs_) acc = (acc * x + c) % kPrime;
  return static_cast<std::uint32_t>(acc % range_);
}

OneLayerHash::OneLayerHash(Independence mode, std::uint64_t seed, std::uint64_t n,
                           std::uint64_t buckets, std::size_t reps, unsigned t, bool allow_cache)
    : n_(n), buckets_(buckets) {
  if (reps == 0) throw std::invalid_argument("OneLayerHash: need at least one repetition");
  fns_.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r)
    fns_.emplace_back(mode, mix2(seed, r), n, buckets, t, allow_cache);
}

TwoLayerHash::TwoLayerHash(const Shape& shape, std::uint64_t seed, Independence first_mode,
                           Independence second_mode, unsigned t)
    : shape_(shape),
      seed_(seed),
      first_mode_(first_mode),
      second_mode_(second_mode),
      t_(t),
      g_(first_mode, mix2(seed, 0x1a), shape.n, shape.b1, shape.d1, t) {
  if (shape.d1 == 0 || shape.d2 == 0 || shape.b1 == 0 || shape.b2 == 0 || shape.n == 0)
    throw std::invalid_argument("TwoLayerHash: degenerate shape");
  // Caching every second-layer table would cost d1*d2*B1 words; skip the cache
  // once that crosses a few MB, the lazy path computes identical values.
  bool cache_h = shape.d1 * shape.d2 * shape.b1 <= (1u << 22);
  h_.reserve(shape.d1 * shape.d2);
  for (std::size_t r = 0; r < shape.d1; ++r)
    for (std::size_t j = 0; j < shape.d2; ++j)
      h_.emplace_back(second_mode, mix3(seed ^ 0x2b, r, j), shape.b1, shape.b2, t, cache_h);
}

nlohmann::json TwoLayerHash::descriptor() const {
  return {{"n", shape_.n},
          {"b1", shape_.b1},
          {"d1", shape_.d1},
          {"b2", shape_.b2},
          {"d2", shape_.d2},
          {"seed", seed_},
          {"first_mode", first_mode_ == Independence::full_table ? "full_table" : "k_wise"},
          {"second_mode", second_mode_ == Independence::full_table ? "full_table" : "k_wise"},
          {"t", t_}};
}

}  // namespace hhsketch
