#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "hhsketch/encoding.hpp"
#include "hhsketch/prng.hpp"

using namespace hhsketch;

TEST_CASE("bit embedding expands entries into slot pairs") {
  std::vector<std::uint8_t> bits{0};
  CHECK(embed_bits(1.0, bits) == std::vector<double>{1.0, 0.0});
  bits[0] = 1;
  CHECK(embed_bits(1.0, bits) == std::vector<double>{0.0, 1.0});
  std::vector<std::uint8_t> three{1, 0, 1};
  CHECK(embed_bits(-2.5, three) == std::vector<double>{0.0, -2.5, -2.5, 0.0, 0.0, -2.5});
}

TEST_CASE("bit extraction follows the magnitude convention") {
  CHECK(extract_bit(0.5, 10.2) == 1);
  CHECK(extract_bit(-10.0, 0.2) == 0);
  CHECK(extract_bit(5.0, 5.0) == 0);  // ties read as 0
  CHECK(extract_bits(std::vector<double>{0.5, 10.2, -10.0, 0.2}) ==
        std::vector<std::uint8_t>{1, 0});
  CHECK_THROWS_AS(extract_bits(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("embed and extract invert each other on isolated values") {
  SeedStream g(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::uint8_t> bits(8);
    for (auto& b : bits) b = static_cast<std::uint8_t>(g.next_below(2));
    double v = (g.next_unit() - 0.5) * 9.0;
    if (v == 0.0) v = 1.0;
    CHECK(extract_bits(embed_bits(v, bits)) == bits);
  }
}

TEST_CASE("repetition code majority-decodes") {
  RepetitionBitCode code(4, 5);
  CHECK(code.block_bits() == 20);
  CHECK(code.theta() == doctest::Approx(0.4));
  std::vector<std::uint8_t> msg{1, 0, 0, 1};
  auto block = code.encode(msg);
  // Two flips per message bit stay under the majority.
  block[0] ^= 1;
  block[4 + 1] ^= 1;
  block[4 + 2] ^= 1;
  block[15] ^= 1;
  auto back = code.decode(block);
  REQUIRE(back.has_value());
  CHECK(*back == msg);
  CHECK_THROWS_AS(RepetitionBitCode(4, 4), std::invalid_argument);  // even copies
}

TEST_CASE("binary-view Reed-Solomon corrects symbol-granular corruption") {
  RsBitCode code(5, 4, 12);  // 20 message bits, 60 block bits, parity 8 symbols
  CHECK(code.message_bits() == 20);
  CHECK(code.block_bits() == 60);
  CHECK(code.theta() == doctest::Approx(4.0 / 12.0));
  SeedStream g(17);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<std::uint8_t> msg(20);
    for (auto& b : msg) b = static_cast<std::uint8_t>(g.next_below(2));
    auto block = code.encode(msg);
    // Corrupt every bit of 4 distinct symbols: exactly theta * block symbols.
    std::set<std::size_t> syms;
    while (syms.size() < 4) syms.insert(g.next_below(12));
    for (std::size_t s : syms)
      for (std::size_t t = 0; t < 5; ++t) block[s * 5 + t] ^= 1;
    auto back = code.decode(block);
    REQUIRE(back.has_value());
    CHECK(*back == msg);
  }
}

TEST_CASE("bit-level erasures map onto symbol erasures") {
  RsBitCode code(5, 4, 12);
  std::vector<std::uint8_t> msg(20, 0);
  msg[3] = msg[11] = msg[19] = 1;
  auto block = code.encode(msg);
  // Zero out 8 whole symbols (the full parity budget as erasures).
  std::vector<std::size_t> erased_bits;
  for (std::size_t s = 0; s < 8; ++s)
    for (std::size_t t = 0; t < 5; ++t) {
      block[s * 5 + t] = 0;
      erased_bits.push_back(s * 5 + t);
    }
  auto back = code.decode_with_erasures(block, erased_bits);
  REQUIRE(back.has_value());
  CHECK(*back == msg);
}

TEST_CASE("link graph is a slotwise involution") {
  LinkGraph link(10, 4, 99);
  CHECK(link.d1() == 10);
  CHECK(link.delta() == 4);
  for (std::size_t ell = 0; ell < 4; ++ell) {
    std::set<std::size_t> seen;
    for (std::size_t r = 0; r < 10; ++r) {
      std::size_t p = link.partner(ell, r);
      CHECK(p != r);
      CHECK(link.partner(ell, p) == r);
      seen.insert(p);
    }
    CHECK(seen.size() == 10);  // perfect matching hits everyone
  }
  LinkGraph again(10, 4, 99);
  for (std::size_t ell = 0; ell < 4; ++ell)
    for (std::size_t r = 0; r < 10; ++r) CHECK(again.partner(ell, r) == link.partner(ell, r));
  CHECK_THROWS_AS(LinkGraph(9, 4, 1), std::invalid_argument);  // odd d1
  CHECK_THROWS_AS(LinkGraph(8, 0, 1), std::invalid_argument);
}

TEST_CASE("link graph union connects every repetition") {
  // Identity fragments merge only along link edges, so the union of the slot
  // matchings must reach all repetitions from any starting point.
  auto reach_count = [](const LinkGraph& link) {
    std::vector<bool> seen(link.d1(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t r = stack.back();
      stack.pop_back();
      for (std::size_t ell = 0; ell < link.delta(); ++ell) {
        const std::size_t p = link.partner(ell, r);
        if (!seen[p]) {
          seen[p] = true;
          ++reached;
          stack.push_back(p);
        }
      }
    }
    return reached;
  };
  for (std::size_t d1 : {2, 4, 6, 10, 20}) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      CHECK(reach_count(LinkGraph(d1, 4, seed)) == d1);
    }
  }
  // The default gives every slot its own matching; an explicit override with
  // fewer distinct matchings cycles them over the slots (and still connects).
  LinkGraph two(10, 4, 7, 2);
  for (std::size_t r = 0; r < 10; ++r) {
    CHECK(two.partner(0, r) == two.partner(2, r));
    CHECK(two.partner(1, r) == two.partner(3, r));
  }
  CHECK(reach_count(two) == 10);
}

TEST_CASE("block codec assembles chunk plus link fields") {
  BlockCodec codec(4096, 4, 64, 4, 1);
  CHECK(codec.chunk_bits() == 16);
  CHECK(codec.link_bits() == 6);
  CHECK(codec.inner_message_bits() == 16 + 4 * 6);
  CHECK(codec.outer_codeword_bits() == 64);
  CHECK(codec.d2() >= 2 * codec.inner_message_bits());
  CHECK(codec.descriptor().dump() == BlockCodec(4096, 4, 64, 4, 1).descriptor().dump());

  SeedStream g(5);
  for (int rep = 0; rep < 40; ++rep) {
    std::uint64_t i = g.next_below(4096);
    std::size_t r = g.next_below(4);
    std::vector<std::uint32_t> links(4);
    for (auto& b : links) b = static_cast<std::uint32_t>(g.next_below(64));
    auto bits = codec.encode_block(i, r, links);
    REQUIRE(bits.size() == codec.d2());
    auto decoded = codec.decode_block(bits);
    REQUIRE(decoded.has_value());
    CHECK(decoded->links == links);

    // The chunk is the r-th slice of the outer codeword; feeding all four
    // noiseless chunks back reassembles the index.
    std::vector<std::optional<std::vector<std::uint8_t>>> chunks(4);
    for (std::size_t rr = 0; rr < 4; ++rr) {
      auto b2 = codec.encode_block(i, rr, links);
      auto d2 = codec.decode_block(b2);
      REQUIRE(d2.has_value());
      chunks[rr] = d2->chunk;
    }
    auto back = codec.decode_index(chunks);
    REQUIRE(back.has_value());
    CHECK(*back == i);
  }
}

TEST_CASE("block decode survives theta-fraction symbol corruption") {
  BlockCodec codec(4096, 4, 64, 4, 1);
  const std::size_t field = 5;  // inner field bits at this shape
  const std::size_t block_syms = codec.inner().block_symbols();
  const std::size_t budget = codec.inner().parity_symbols() / 2;
  SeedStream g(31);
  for (int rep = 0; rep < 40; ++rep) {
    std::uint64_t i = g.next_below(4096);
    std::vector<std::uint32_t> links(4);
    for (auto& b : links) b = static_cast<std::uint32_t>(g.next_below(64));
    auto bits = codec.encode_block(i, 1, links);
    std::set<std::size_t> syms;
    while (syms.size() < budget) syms.insert(g.next_below(block_syms));
    for (std::size_t s : syms)
      for (std::size_t t = 0; t < field && s * field + t < bits.size(); ++t)
        bits[s * field + t] ^= 1;
    auto decoded = codec.decode_block(bits);
    REQUIRE(decoded.has_value());
    CHECK(decoded->links == links);
  }
}

TEST_CASE("index reassembly tolerates missing and corrupted repetitions") {
  BlockCodec codec(4096, 4, 64, 4, 1);
  const std::uint64_t i = 2741;
  std::vector<std::uint32_t> links(4, 0);
  std::vector<std::optional<std::vector<std::uint8_t>>> chunks(4);
  for (std::size_t r = 0; r < 4; ++r) {
    auto d = codec.decode_block(codec.encode_block(i, r, links));
    REQUIRE(d.has_value());
    chunks[r] = d->chunk;
  }

  SUBCASE("up to three missing chunks decode as erasures") {
    auto partial = chunks;
    partial[0] = std::nullopt;
    partial[2] = std::nullopt;
    partial[3] = std::nullopt;
    auto back = codec.decode_index(partial);
    REQUIRE(back.has_value());
    CHECK(*back == i);
    partial[1] = std::nullopt;
    CHECK_FALSE(codec.decode_index(partial).has_value());
  }

  SUBCASE("bit errors inside present chunks are corrected") {
    auto noisy = chunks;
    // Corrupt all of chunk 0 and part of chunk 1: 3 bad outer symbols, within
    // the outer distance (parity 6 symbols, no erasures declared).
    for (auto& b : *noisy[0]) b ^= 1;
    for (std::size_t t = 0; t < 8; ++t) (*noisy[1])[t] ^= 1;
    auto back = codec.decode_index(noisy);
    REQUIRE(back.has_value());
    CHECK(*back == i);
  }
}

TEST_CASE("every small index round-trips") {
  BlockCodec codec(256, 2, 16, 2, 1);
  std::vector<std::uint32_t> links(2, 3);
  for (std::uint64_t i = 0; i < 256; ++i) {
    std::vector<std::optional<std::vector<std::uint8_t>>> chunks(2);
    for (std::size_t r = 0; r < 2; ++r) {
      auto d = codec.decode_block(codec.encode_block(i, r, links));
      REQUIRE(d.has_value());
      chunks[r] = d->chunk;
    }
    auto back = codec.decode_index(chunks);
    REQUIRE(back.has_value());
    CHECK(*back == i);
  }
}

TEST_CASE("codec rejects malformed parameters") {
  CHECK_THROWS_AS(BlockCodec(4096, 4, 63, 4, 1), std::invalid_argument);  // b1 not a power of 2
  CHECK_THROWS_AS(BlockCodec(1, 4, 64, 4, 1), std::invalid_argument);     // degenerate universe
  BlockCodec codec(4096, 4, 64, 4, 1);
  std::vector<std::uint32_t> links(4, 0);
  CHECK_THROWS_AS(codec.encode_block(4096, 0, links), std::invalid_argument);
  CHECK_THROWS_AS(codec.encode_block(0, 4, links), std::invalid_argument);
  std::vector<std::uint32_t> short_links(3, 0);
  CHECK_THROWS_AS(codec.encode_block(0, 0, short_links), std::invalid_argument);
}

TEST_CASE("demonstration operator reproduces the worked measurements") {
  DemoEmbedMatrix demo;
  CHECK(demo.universe() == 8);
  CHECK(demo.rows() == 8);
  Signal x{10.1, -0.1, 0.3, 0.2, -9.7, 0.1, 0.2, -0.2};
  SketchVector y = hhsketch::apply(demo, x);
  const std::vector<double> want{0.5, 10.2, 0.1, 10.6, -0.1, -9.7, -10.0, 0.2};
  REQUIRE(y.values.size() == want.size());
  for (std::size_t q = 0; q < want.size(); ++q)
    CHECK(y.values[q] == doctest::Approx(want[q]).epsilon(1e-12));
  CHECK(DemoEmbedMatrix::read_bits(y.values) == std::vector<std::uint8_t>{1, 1, 1, 0});

  // Structure behind the numbers: two buckets of four items, two bits each.
  std::size_t bucket0 = 0;
  for (std::uint64_t i = 0; i < 8; ++i) bucket0 += demo.bucket_of(i) == 0 ? 1 : 0;
  CHECK(bucket0 == 4);
}
