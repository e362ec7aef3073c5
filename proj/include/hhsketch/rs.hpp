#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hhsketch/gf.hpp"

namespace hhsketch {

/// Systematic Reed-Solomon codec over GF(2^m), block length <= 2^m - 1.
/// Decodes e symbol errors plus f declared erasures whenever 2e + f <= parity.
class RsCodec {
 public:
  RsCodec(unsigned field_bits, std::size_t msg_syms, std::size_t block_syms);

  std::size_t message_symbols() const { return k_; }
  std::size_t block_symbols() const { return b_; }
  std::size_t parity_symbols() const { return b_ - k_; }
  unsigned field_bits() const { return gf_.m(); }
  /// Guaranteed correctable symbol-error fraction with no erasures.
  double theta() const { return static_cast<double>(parity_symbols() / 2) / static_cast<double>(b_); }

  /// msg.size() == message_symbols(); returns the codeword, message first.
  std::vector<unsigned> encode(std::span<const unsigned> msg) const;

  /// received.size() == block_symbols(); erasures are block positions whose
  /// symbols are unreliable. Returns the message, or nullopt if the word is
  /// uncorrectable. Failure is an expected outcome, not an exception.
  std::optional<std::vector<unsigned>> decode(std::span<const unsigned> received,
                                              std::span<const std::size_t> erasures = {}) const;

 private:
  GF2m gf_;
  std::size_t k_;
  std::size_t b_;
  std::vector<unsigned> gen_;  // generator poly coefficients g_0..g_{p-1}, monic x^p implied
};

}  // namespace hhsketch
