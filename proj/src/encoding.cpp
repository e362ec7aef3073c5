#include "hhsketch/encoding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hhsketch/prng.hpp"

namespace hhsketch {

namespace {

/// Packs 0/1 bits into `width`-bit symbols, most significant bit first; the
/// last symbol is zero-padded on the right.
std::vector<unsigned> pack_bits(std::span<const std::uint8_t> bits, unsigned width,
                                std::size_t symbols) {
  std::vector<unsigned> syms(symbols, 0);
  for (std::size_t t = 0; t < bits.size(); ++t) {
    if (bits[t]) syms[t / width] |= 1u << (width - 1 - t % width);
  }
  return syms;
}

std::vector<std::uint8_t> unpack_bits(std::span<const unsigned> syms, unsigned width) {
  std::vector<std::uint8_t> bits(syms.size() * width);
  for (std::size_t s = 0; s < syms.size(); ++s) {
    for (unsigned t = 0; t < width; ++t) {
      bits[s * width + t] = (syms[s] >> (width - 1 - t)) & 1u;
    }
  }
  return bits;
}

}  // namespace

std::vector<double> embed_bits(double value, std::span<const std::uint8_t> bits) {
  std::vector<double> out(2 * bits.size(), 0.0);
  for (std::size_t t = 0; t < bits.size(); ++t) {
    out[2 * t + (bits[t] ? 1 : 0)] = value;
  }
  return out;
}

std::vector<std::uint8_t> extract_bits(std::span<const double> pairs) {
  if (pairs.size() % 2 != 0) throw std::invalid_argument("extract_bits: odd input length");
  std::vector<std::uint8_t> bits(pairs.size() / 2);
  for (std::size_t t = 0; t < bits.size(); ++t) {
    bits[t] = static_cast<std::uint8_t>(extract_bit(pairs[2 * t], pairs[2 * t + 1]));
  }
  return bits;
}

RepetitionBitCode::RepetitionBitCode(std::size_t message_bits, std::size_t copies)
    : msg_bits_(message_bits), copies_(copies) {
  if (message_bits == 0 || copies == 0 || copies % 2 == 0) {
    throw std::invalid_argument("RepetitionBitCode: need nonzero message and odd copies");
  }
}

std::vector<std::uint8_t> RepetitionBitCode::encode(std::span<const std::uint8_t> msg) const {
  if (msg.size() != msg_bits_) throw std::invalid_argument("RepetitionBitCode: bad message size");
  std::vector<std::uint8_t> block(block_bits());
  for (std::size_t t = 0; t < msg_bits_; ++t) {
    std::fill_n(block.begin() + static_cast<std::ptrdiff_t>(t * copies_), copies_, msg[t]);
  }
  return block;
}

std::optional<std::vector<std::uint8_t>> RepetitionBitCode::decode(
    std::span<const std::uint8_t> block) const {
  if (block.size() != block_bits()) return std::nullopt;
  std::vector<std::uint8_t> msg(msg_bits_);
  for (std::size_t t = 0; t < msg_bits_; ++t) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < copies_; ++c) ones += block[t * copies_ + c] ? 1 : 0;
    msg[t] = ones * 2 > copies_ ? 1 : 0;
  }
  return msg;
}

RsBitCode::RsBitCode(unsigned field_bits, std::size_t msg_syms, std::size_t block_syms)
    : field_(field_bits), codec_(field_bits, msg_syms, block_syms) {}

std::vector<std::uint8_t> RsBitCode::encode(std::span<const std::uint8_t> msg) const {
  if (msg.size() != message_bits()) throw std::invalid_argument("RsBitCode: bad message size");
  auto cw = codec_.encode(pack_bits(msg, field_, codec_.message_symbols()));
  return unpack_bits(cw, field_);
}

std::optional<std::vector<std::uint8_t>> RsBitCode::decode(
    std::span<const std::uint8_t> block) const {
  return decode_with_erasures(block, {});
}

std::optional<std::vector<std::uint8_t>> RsBitCode::decode_with_erasures(
    std::span<const std::uint8_t> block, std::span<const std::size_t> erased_bits) const {
  if (block.size() != block_bits()) return std::nullopt;
  auto received = pack_bits(block, field_, codec_.block_symbols());
  std::vector<std::size_t> erased_syms;
  for (std::size_t pos : erased_bits) {
    if (pos < block.size()) erased_syms.push_back(pos / field_);
  }
  std::sort(erased_syms.begin(), erased_syms.end());
  erased_syms.erase(std::unique(erased_syms.begin(), erased_syms.end()), erased_syms.end());
  auto msg = codec_.decode(received, erased_syms);
  if (!msg) return std::nullopt;
  return unpack_bits(*msg, field_);
}

LinkGraph::LinkGraph(std::size_t d1, std::size_t delta, std::uint64_t seed, std::size_t distinct)
    : d1_(d1), delta_(delta) {
  if (d1 == 0 || d1 % 2 != 0) throw std::invalid_argument("LinkGraph: d1 must be positive even");
  if (delta == 0) throw std::invalid_argument("LinkGraph: delta must be positive");
  if (distinct == 0) distinct = delta;
  matchings_.resize(std::min(std::max<std::size_t>(distinct, 1), delta));

  // Fragments of one item's identity can only merge along link edges, so the
  // union of the matchings must connect all d1 repetitions. Resample (salting
  // the stream with the attempt number, so the result is still a pure function
  // of the seed) until it does.
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    for (std::size_t ell = 0; ell < matchings_.size(); ++ell) {
      std::vector<std::size_t> perm(d1);
      std::iota(perm.begin(), perm.end(), 0);
      SeedStream stream(mix3(seed, 0x4c696e6bu + ell, attempt));
      for (std::size_t i = d1 - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(stream.next_below(i + 1));
        std::swap(perm[i], perm[j]);
      }
      matchings_[ell].assign(d1, 0);
      for (std::size_t t = 0; t < d1 / 2; ++t) {
        matchings_[ell][perm[2 * t]] = perm[2 * t + 1];
        matchings_[ell][perm[2 * t + 1]] = perm[2 * t];
      }
    }

    std::vector<std::size_t> stack{0};
    std::vector<bool> seen(d1, false);
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t r = stack.back();
      stack.pop_back();
      for (const auto& matching : matchings_) {
        const std::size_t p = matching[r];
        if (!seen[p]) {
          seen[p] = true;
          ++reached;
          stack.push_back(p);
        }
      }
    }
    if (reached == d1) return;
  }
  throw std::runtime_error("LinkGraph: could not sample a connected link union");
}

namespace {

std::size_t index_bit_count(std::uint64_t n) {
  if (n < 2) throw std::invalid_argument("BlockCodec: universe must have at least 2 items");
  return std::max<std::size_t>(1, std::bit_width(n - 1));
}

std::size_t outer_message_bytes(std::uint64_t n) {
  return (index_bit_count(n) + 7) / 8;
}

}  // namespace

BlockCodec::BlockCodec(std::uint64_t n, std::size_t d1, std::uint64_t b1, std::size_t delta,
                       std::size_t d2_min)
    : n_(n),
      d1_(d1),
      delta_(delta),
      link_bits_(0),
      index_bits_count_(index_bit_count(n)),
      outer_(8, outer_message_bytes(n), 4 * outer_message_bytes(n)),
      outer_cw_bits_(outer_.block_bits()),
      chunk_bits_((outer_cw_bits_ + d1 - 1) / d1),
      msg_bits_(0),
      inner_field_(0),
      inner_msg_syms_(0),
      inner_block_syms_(0),
      inner_(4, 1, 3),  // placeholder, replaced below once sizes are known
      d2_(0) {
  if (d1 == 0) throw std::invalid_argument("BlockCodec: d1 must be positive");
  if (b1 < 2 || (b1 & (b1 - 1)) != 0) {
    throw std::invalid_argument("BlockCodec: first-layer bucket count must be a power of two >= 2");
  }
  link_bits_ = static_cast<std::size_t>(std::bit_width(b1) - 1);
  msg_bits_ = chunk_bits_ + delta_ * link_bits_;

  // Smallest field that fits the per-repetition message at rate <= 1/2.
  for (unsigned m = 4; m <= 8; ++m) {
    std::size_t syms = (msg_bits_ + m - 1) / m;
    if (2 * syms <= (std::size_t{1} << m) - 1) {
      inner_field_ = m;
      inner_msg_syms_ = syms;
      break;
    }
  }
  if (inner_field_ == 0) {
    throw std::invalid_argument("BlockCodec: per-repetition message too long for inner code");
  }
  d2_ = std::max(d2_min, 2 * inner_msg_syms_ * inner_field_);
  inner_block_syms_ =
      std::min<std::size_t>((std::size_t{1} << inner_field_) - 1, d2_ / inner_field_);
  inner_ = RsCodec(inner_field_, inner_msg_syms_, inner_block_syms_);
}

std::vector<std::uint8_t> BlockCodec::index_bits(std::uint64_t i) const {
  // Index packed big-endian into the outer message bytes.
  std::size_t bits = outer_.message_bits();
  std::vector<std::uint8_t> out(bits, 0);
  for (std::size_t t = 0; t < bits; ++t) {
    out[bits - 1 - t] = static_cast<std::uint8_t>((i >> t) & 1u);
  }
  return out;
}

std::vector<std::uint8_t> BlockCodec::encode_block(
    std::uint64_t i, std::size_t r, std::span<const std::uint32_t> link_buckets) const {
  if (i >= n_) throw std::invalid_argument("BlockCodec: index outside universe");
  if (r >= d1_) throw std::invalid_argument("BlockCodec: repetition out of range");
  if (link_buckets.size() != delta_) {
    throw std::invalid_argument("BlockCodec: wrong number of link buckets");
  }
  auto cw = outer_.encode(index_bits(i));
  std::vector<std::uint8_t> msg(msg_bits_, 0);
  for (std::size_t t = 0; t < chunk_bits_; ++t) {
    std::size_t pos = r * chunk_bits_ + t;
    if (pos < outer_cw_bits_) msg[t] = cw[pos];
  }
  for (std::size_t ell = 0; ell < delta_; ++ell) {
    std::uint32_t b = link_buckets[ell];
    for (std::size_t t = 0; t < link_bits_; ++t) {
      msg[chunk_bits_ + ell * link_bits_ + t] =
          static_cast<std::uint8_t>((b >> (link_bits_ - 1 - t)) & 1u);
    }
  }
  auto inner_cw = inner_.encode(pack_bits(msg, inner_field_, inner_msg_syms_));
  auto bits = unpack_bits(inner_cw, inner_field_);
  bits.resize(d2_, 0);
  return bits;
}

std::optional<DecodedBlock> BlockCodec::decode_block(std::span<const std::uint8_t> bits) const {
  if (bits.size() != d2_) return std::nullopt;
  auto received =
      pack_bits(bits.first(inner_block_syms_ * inner_field_), inner_field_, inner_block_syms_);
  auto msg_syms = inner_.decode(received, {});
  if (!msg_syms) return std::nullopt;
  auto msg = unpack_bits(*msg_syms, inner_field_);
  DecodedBlock out;
  out.chunk.assign(msg.begin(), msg.begin() + static_cast<std::ptrdiff_t>(chunk_bits_));
  out.links.resize(delta_);
  for (std::size_t ell = 0; ell < delta_; ++ell) {
    std::uint32_t b = 0;
    for (std::size_t t = 0; t < link_bits_; ++t) {
      b = (b << 1) | msg[chunk_bits_ + ell * link_bits_ + t];
    }
    out.links[ell] = b;
  }
  return out;
}

std::optional<std::uint64_t> BlockCodec::decode_index(
    const std::vector<std::optional<std::vector<std::uint8_t>>>& chunks) const {
  if (chunks.size() != d1_) throw std::invalid_argument("BlockCodec: need one chunk slot per repetition");
  std::vector<std::uint8_t> cw(outer_cw_bits_, 0);
  std::vector<bool> known(outer_cw_bits_, false);
  for (std::size_t r = 0; r < d1_; ++r) {
    if (!chunks[r]) continue;
    if (chunks[r]->size() != chunk_bits_) {
      throw std::invalid_argument("BlockCodec: chunk has wrong length");
    }
    for (std::size_t t = 0; t < chunk_bits_; ++t) {
      std::size_t pos = r * chunk_bits_ + t;
      if (pos < outer_cw_bits_) {
        cw[pos] = (*chunks[r])[t];
        known[pos] = true;
      }
    }
  }
  std::vector<std::size_t> erased;
  for (std::size_t pos = 0; pos < outer_cw_bits_; ++pos) {
    if (!known[pos]) erased.push_back(pos);
  }
  auto msg = outer_.decode_with_erasures(cw, erased);
  if (!msg) return std::nullopt;
  std::uint64_t value = 0;
  for (std::size_t t = 0; t < msg->size(); ++t) {
    if ((*msg)[t] && msg->size() - 1 - t >= 64) return std::nullopt;
    value = (value << 1) | (*msg)[t];
  }
  if (value >= n_) return std::nullopt;
  return value;
}

nlohmann::json BlockCodec::descriptor() const {
  return nlohmann::json{{"universe", n_},
                        {"d1", d1_},
                        {"delta", delta_},
                        {"link_bits", link_bits_},
                        {"chunk_bits", chunk_bits_},
                        {"outer", {{"field_bits", 8},
                                   {"message_symbols", outer_.codec().message_symbols()},
                                   {"block_symbols", outer_.codec().block_symbols()}}},
                        {"inner", {{"field_bits", inner_field_},
                                   {"message_symbols", inner_msg_syms_},
                                   {"block_symbols", inner_block_syms_}}},
                        {"d2", d2_}};
}

DemoEmbedMatrix::DemoEmbedMatrix()
    : SketchMatrix(8, 8),
      buckets_{0, 1, 0, 0, 1, 0, 1, 1},
      bits_{{{1, 1}, {0, 0}, {0, 1}, {0, 1}, {1, 0}, {1, 0}, {1, 1}, {1, 0}}} {}

void DemoEmbedMatrix::add_scaled_column(std::uint64_t i, double delta,
                                        std::span<double> out) const {
  for (std::size_t t = 0; t < 2; ++t) {
    out[buckets_[i] * 4 + 2 * t + bits_[i][t]] += delta;
  }
}

nlohmann::json DemoEmbedMatrix::descriptor() const {
  return nlohmann::json{{"kind", "demo8"}};
}

std::vector<std::uint8_t> DemoEmbedMatrix::read_bits(std::span<const double> measurements) {
  if (measurements.size() != 8) throw std::invalid_argument("demo8: need 8 measurements");
  return extract_bits(measurements);
}

}  // namespace hhsketch
