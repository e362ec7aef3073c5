#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "hhsketch/rs.hpp"
#include "hhsketch/sketch.hpp"

namespace hhsketch {

/// Expands a measurement entry into bit-selected pairs: bit t of bits routes
/// the value into slot 2t (bit 0) or 2t + 1 (bit 1). Output length 2*bits.
std::vector<double> embed_bits(double value, std::span<const std::uint8_t> bits);

/// Reads one embedded bit back from a measurement pair: 1 iff |a| < |b|,
/// ties resolve to 0.
inline int extract_bit(double a, double b) {
  return std::abs(a) < std::abs(b) ? 1 : 0;
}

/// Extracts the t bits of a 2t-long pair block.
std::vector<std::uint8_t> extract_bits(std::span<const double> pairs);

/// Fixed-length binary code abstraction: repetition or Reed-Solomon over bit
/// strings. Decode failure is a value, not an exception.
class BitCode {
 public:
  virtual ~BitCode() = default;
  virtual std::size_t message_bits() const = 0;
  virtual std::size_t block_bits() const = 0;
  /// Guaranteed correctable error fraction, measured at the code's own symbol
  /// granularity (bit groups for Reed-Solomon, copies for repetition).
  virtual double theta() const = 0;
  virtual std::vector<std::uint8_t> encode(std::span<const std::uint8_t> msg) const = 0;
  virtual std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> block) const = 0;
};

/// Each message bit repeated `copies` times (odd), majority decode.
class RepetitionBitCode : public BitCode {
 public:
  RepetitionBitCode(std::size_t message_bits, std::size_t copies);
  std::size_t message_bits() const override { return msg_bits_; }
  std::size_t block_bits() const override { return msg_bits_ * copies_; }
  double theta() const override {
    return static_cast<double>((copies_ - 1) / 2) / static_cast<double>(copies_);
  }
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> msg) const override;
  std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> block) const override;

 private:
  std::size_t msg_bits_;
  std::size_t copies_;
};

/// Reed-Solomon over GF(2^field_bits) viewed as a binary code; symbols are
/// consecutive field_bits-wide groups, packed most significant bit first.
class RsBitCode : public BitCode {
 public:
  RsBitCode(unsigned field_bits, std::size_t msg_syms, std::size_t block_syms);
  std::size_t message_bits() const override { return codec_.message_symbols() * field_; }
  std::size_t block_bits() const override { return codec_.block_symbols() * field_; }
  double theta() const override { return codec_.theta(); }
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> msg) const override;
  std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> block) const override;
  /// Decode with erased bit positions (mapped to symbol erasures internally).
  std::optional<std::vector<std::uint8_t>> decode_with_erasures(
      std::span<const std::uint8_t> block, std::span<const std::size_t> erased_bits) const;
  const RsCodec& codec() const { return codec_; }

 private:
  unsigned field_;
  RsCodec codec_;
};

/// Regular multigraph on the d1 repetitions (d1 even), built as `distinct`
/// random perfect matchings cycled over `delta` link slots. Slot ell of r maps
/// to r's partner in matching ell % distinct, so every link is an involution
/// slot by slot: partner(ell, partner(ell, r)) == r. The matchings are
/// resampled (deterministically from the seed) until their union connects all
/// d1 repetitions: cluster fragments can only merge along link edges, so a
/// disconnected union would split every item's identity beyond repair. By
/// default each slot gets its own matching (`distinct = 0` means delta), which
/// makes the union delta-regular and a connected sample overwhelmingly likely.
class LinkGraph {
 public:
  LinkGraph(std::size_t d1, std::size_t delta, std::uint64_t seed, std::size_t distinct = 0);

  std::size_t d1() const { return d1_; }
  std::size_t delta() const { return delta_; }
  std::size_t partner(std::size_t slot, std::size_t r) const {
    return matchings_[slot % matchings_.size()][r];
  }

 private:
  std::size_t d1_;
  std::size_t delta_;
  std::vector<std::vector<std::size_t>> matchings_;
};

struct DecodedBlock {
  std::vector<std::uint8_t> chunk;       // this repetition's outer-codeword bits
  std::vector<std::uint32_t> links;      // claimed first-layer buckets, one per matching
};

/// Per-repetition message pipeline. The identity of item i is spread over d1
/// repetitions: an outer Reed-Solomon codeword over the index bits is cut into
/// d1 chunks, each chunk is joined with the item's first-layer bucket in the
/// Delta linked repetitions, and the result is protected by an inner code and
/// embedded into d2 bit slots.
class BlockCodec {
 public:
  BlockCodec(std::uint64_t n, std::size_t d1, std::uint64_t b1, std::size_t delta,
             std::size_t d2_min);

  std::size_t d2() const { return d2_; }
  std::size_t chunk_bits() const { return chunk_bits_; }
  std::size_t link_bits() const { return link_bits_; }
  std::size_t inner_message_bits() const { return msg_bits_; }
  std::size_t outer_codeword_bits() const { return outer_cw_bits_; }
  const RsBitCode& outer() const { return outer_; }
  const RsCodec& inner() const { return inner_; }

  /// Bits to embed for item i in repetition r; link_buckets[ell] is the item's
  /// first-layer bucket in repetition partner(ell, r). Returns d2 bits.
  std::vector<std::uint8_t> encode_block(std::uint64_t i, std::size_t r,
                                         std::span<const std::uint32_t> link_buckets) const;

  /// Inverse of encode_block under at most theta-fraction symbol corruption.
  std::optional<DecodedBlock> decode_block(std::span<const std::uint8_t> bits) const;

  /// Reassembles the index from per-repetition chunks (nullopt = missing
  /// repetition, decoded as an erasure). Returns nullopt when the outer code
  /// cannot commit to a codeword or the index falls outside the universe.
  std::optional<std::uint64_t> decode_index(
      const std::vector<std::optional<std::vector<std::uint8_t>>>& chunks) const;

  nlohmann::json descriptor() const;

 private:
  std::vector<std::uint8_t> index_bits(std::uint64_t i) const;

  std::uint64_t n_;
  std::size_t d1_;
  std::size_t delta_;
  std::size_t link_bits_;
  std::size_t index_bits_count_;
  RsBitCode outer_;
  std::size_t outer_cw_bits_;
  std::size_t chunk_bits_;
  std::size_t msg_bits_;        // chunk_bits + delta * link_bits
  unsigned inner_field_;
  std::size_t inner_msg_syms_;
  std::size_t inner_block_syms_;
  RsCodec inner_;
  std::size_t d2_;
};

/// Fixed 8x8 demonstration operator: two buckets of four items, two message
/// bits per item, every base entry pair-expanded. Small enough to check the
/// whole embed/measure/extract loop by hand.
class DemoEmbedMatrix : public SketchMatrix {
 public:
  DemoEmbedMatrix();

  void add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const override;
  nlohmann::json descriptor() const override;

  std::size_t bucket_of(std::uint64_t i) const { return buckets_[i]; }
  std::array<std::uint8_t, 2> bits_of(std::uint64_t i) const { return bits_[i]; }

  /// Extracted bits of both buckets, in measurement order.
  static std::vector<std::uint8_t> read_bits(std::span<const double> measurements);

 private:
  std::array<std::size_t, 8> buckets_;
  std::array<std::array<std::uint8_t, 2>, 8> bits_;
};

}  // namespace hhsketch
