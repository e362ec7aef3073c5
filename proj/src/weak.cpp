#include "hhsketch/weak.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>
#include <stdexcept>

#include "hhsketch/prng.hpp"

namespace hhsketch {

namespace {

constexpr std::size_t kDelta = 4;  // link slots per repetition

const char* mode_name(Independence mode) {
  return mode == Independence::full_table ? "full_table" : "k_wise";
}

/// Median of an unordered sample; even sizes average the two middle values.
double median_of(std::vector<double>& vals) {
  if (vals.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(vals.begin(), vals.end());
  std::size_t mid = vals.size() / 2;
  if (vals.size() % 2 == 1) return vals[mid];
  return 0.5 * (vals[mid - 1] + vals[mid]);
}

}  // namespace

nlohmann::json TwoLayerConstants::to_json() const {
  return nlohmann::json{{"alpha", alpha},   {"zeta", zeta},   {"c_b1", c_b1},
                        {"c_d1", c_d1},     {"c_b2", c_b2},   {"c_d2", c_d2},
                        {"b1_cap_factor", b1_cap_factor}};
}

TwoLayerConstants TwoLayerConstants::from_json(const nlohmann::json& j) {
  TwoLayerConstants c;
  c.alpha = j.at("alpha").get<double>();
  c.zeta = j.at("zeta").get<double>();
  c.c_b1 = j.at("c_b1").get<double>();
  c.c_d1 = j.at("c_d1").get<double>();
  c.c_b2 = j.at("c_b2").get<double>();
  c.c_d2 = j.at("c_d2").get<double>();
  c.b1_cap_factor = j.at("b1_cap_factor").get<std::uint64_t>();
  return c;
}

WeakGoal WeakGoal::l1l1(std::size_t s, double eps) {
  if (s == 0) throw std::invalid_argument("weak goal: s must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("weak goal: eps must be positive");
  WeakGoal g;
  g.flavor = WeakFlavor::l1l1;
  g.s = s;
  g.eps = eps;
  return g;
}

WeakGoal WeakGoal::linf(double k, std::size_t s, double w) {
  if (!(k > 0.0)) throw std::invalid_argument("weak goal: k must be positive");
  if (s == 0) throw std::invalid_argument("weak goal: s must be positive");
  if (!(w > 0.0) || w > static_cast<double>(s) + 1e-9) {
    throw std::invalid_argument("weak goal: need 0 < w <= s");
  }
  if (static_cast<double>(s) > std::max(4.0, k) + 1e-9) {
    throw std::invalid_argument("weak goal: need s <= max(4, k)");
  }
  WeakGoal g;
  g.flavor = WeakFlavor::linf;
  g.s = s;
  g.k = k;
  g.w = w;
  return g;
}

double WeakGoal::eps_eff() const {
  double e = flavor == WeakFlavor::l1l1 ? eps : std::sqrt(static_cast<double>(s) * w) / k;
  return std::clamp(e, 1e-6, 1.0);
}

double WeakGoal::filter_fraction() const {
  if (flavor == WeakFlavor::l1l1) return std::min(eps, 1.0) / (4.0 * static_cast<double>(s));
  return 1.0 / (4.0 * k);
}

nlohmann::json WeakGoal::to_json() const {
  return nlohmann::json{{"flavor", flavor == WeakFlavor::l1l1 ? "l1l1" : "linf"},
                        {"s", s},
                        {"eps", eps},
                        {"k", k},
                        {"w", w}};
}

WeakGoal WeakGoal::from_json(const nlohmann::json& j) {
  std::string flavor = j.at("flavor").get<std::string>();
  if (flavor == "l1l1") return l1l1(j.at("s").get<std::size_t>(), j.at("eps").get<double>());
  if (flavor == "linf") {
    return linf(j.at("k").get<double>(), j.at("s").get<std::size_t>(), j.at("w").get<double>());
  }
  throw std::invalid_argument("unknown weak flavor: " + flavor);
}

WeakDimensions derive_weak_dimensions(std::uint64_t n, const WeakGoal& goal,
                                      const TwoLayerConstants& c) {
  if (n < 2) throw std::invalid_argument("weak dimensions: universe too small");
  if (!(c.zeta > 0.0) || !(c.zeta < 1.0) || !(c.alpha >= 1.0) || !(c.c_b1 > 0.0) ||
      !(c.c_d1 > 0.0) || !(c.c_b2 > 0.0) || !(c.c_d2 > 0.0) || c.b1_cap_factor == 0) {
    throw std::invalid_argument("weak dimensions: constants out of range");
  }
  double keff = static_cast<double>(goal.k_eff());
  double eps = goal.eps_eff();
  double zeta = c.zeta;

  WeakDimensions d;
  // First-layer buckets: polynomial in k/eps, capped near the universe size
  // (more buckets than items is pure waste), rounded up to a power of two so
  // bucket ids pack into whole bits of the block message.
  double raw_b1 = c.c_b1 * std::pow(keff, c.alpha) /
                  (std::pow(zeta, c.alpha) * std::pow(eps, 2.0 * c.alpha));
  std::uint64_t lower = 4 * std::bit_ceil(std::max<std::uint64_t>(goal.k_eff(), 1));
  std::uint64_t cap = std::max(c.b1_cap_factor * std::bit_ceil(n), lower);
  std::uint64_t b1 = lower;
  if (raw_b1 >= static_cast<double>(cap)) {
    b1 = cap;
  } else if (raw_b1 > static_cast<double>(lower)) {
    b1 = static_cast<std::uint64_t>(std::ceil(raw_b1));
  }
  d.b1 = std::bit_ceil(b1);

  double lr = std::max(1.0, std::log2(static_cast<double>(d.b1) / keff));
  double logn = std::log2(static_cast<double>(n));
  std::size_t d1 = static_cast<std::size_t>(std::ceil(c.c_d1 * logn / (zeta * eps * lr)));
  d1 = std::max<std::size_t>(d1, 6);
  if (d1 % 2 != 0) ++d1;
  d.d1 = d1;

  d.b2 = std::max<std::uint64_t>(
      4, static_cast<std::uint64_t>(std::ceil(c.c_b2 * keff / (zeta * eps))));
  d.d2_min = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(c.c_d2 * lr / zeta)));
  return d;
}

BlockCodec WeakMatrix::make_codec(std::uint64_t n, const WeakGoal& goal,
                                  const TwoLayerConstants& constants) {
  WeakDimensions d = derive_weak_dimensions(n, goal, constants);
  return BlockCodec(n, d.d1, d.b1, kDelta, d.d2_min);
}

TwoLayerHash::Shape WeakMatrix::make_shape(std::uint64_t n, const WeakGoal& goal,
                                           const TwoLayerConstants& constants,
                                           const BlockCodec& codec) {
  WeakDimensions d = derive_weak_dimensions(n, goal, constants);
  return TwoLayerHash::Shape{n, d.b1, d.d1, d.b2, codec.d2()};
}

WeakMatrix::WeakMatrix(std::uint64_t n, const WeakGoal& goal, std::uint64_t seed,
                       const TwoLayerConstants& constants, Independence mode, unsigned t)
    : SketchMatrix(n, 0),
      goal_(goal),
      constants_(constants),
      seed_(seed),
      mode_(mode),
      t_(t),
      codec_(make_codec(n, goal, constants)),
      hash_(make_shape(n, goal, constants, codec_), mix2(seed, 0x68617368u), mode, mode, t),
      links_(hash_.shape().d1, kDelta, mix2(seed, 0x6c696e6bu)),
      min_cluster_(std::max<std::size_t>(2, 3 * hash_.shape().d1 / 8)) {
  double sqrt_cap = std::sqrt(static_cast<double>(n)) + 1e-9;
  if (goal.flavor == WeakFlavor::l1l1) {
    if (static_cast<double>(goal.s) > sqrt_cap) {
      throw std::invalid_argument("weak matrix: l1l1 flavor needs s <= sqrt(n)");
    }
  } else {
    if (goal.k > sqrt_cap) {
      throw std::invalid_argument("weak matrix: linf flavor needs k <= sqrt(n)");
    }
  }
  m_ = 2 * hash_.shape().b2 * hash_.shape().d1 * hash_.shape().d2;
}

std::vector<std::uint8_t> WeakMatrix::block_bits(std::uint64_t i, std::size_t r) const {
  std::vector<std::uint32_t> link_buckets(kDelta);
  for (std::size_t ell = 0; ell < kDelta; ++ell) {
    link_buckets[ell] = hash_.first(links_.partner(ell, r), i);
  }
  return codec_.encode_block(i, r, link_buckets);
}

void WeakMatrix::add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const {
  for (std::size_t r = 0; r < d1(); ++r) {
    std::uint32_t b = hash_.first(r, i);
    std::vector<std::uint8_t> bits = block_bits(i, r);
    for (std::size_t j = 0; j < d2(); ++j) {
      std::uint32_t c = hash_.second(r, j, b);
      out[pair_row(r, j, c, bits[j])] += delta;
    }
  }
}

double WeakMatrix::median_estimate(std::span<const double> v, std::uint64_t i) const {
  std::vector<double> vals;
  vals.reserve(d1() * d2());
  for (std::size_t r = 0; r < d1(); ++r) {
    std::uint32_t b = hash_.first(r, i);
    for (std::size_t j = 0; j < d2(); ++j) {
      vals.push_back(pair_sum(v, r, j, hash_.second(r, j, b)));
    }
  }
  return median_of(vals);
}

nlohmann::json WeakMatrix::descriptor() const {
  return nlohmann::json{{"kind", "two_layer_weak"},
                        {"n", universe()},
                        {"seed", seed_},
                        {"mode", mode_name(mode_)},
                        {"t", t_},
                        {"goal", goal_.to_json()},
                        {"constants", constants_.to_json()},
                        {"shape",
                         {{"b1", b1()}, {"d1", d1()}, {"b2", b2()}, {"d2", d2()}}},
                        {"delta", kDelta},
                        {"code", codec_.descriptor()}};
}

std::vector<std::vector<std::size_t>> connected_component_clusters(const ChunkGraph& g) {
  std::vector<std::vector<std::size_t>> adj(g.nodes.size());
  for (const auto& [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> seen(g.nodes.size(), false);
  for (std::size_t start = 0; start < g.nodes.size(); ++start) {
    if (seen[start]) continue;
    std::vector<std::size_t> comp;
    std::vector<std::size_t> frontier{start};
    seen[start] = true;
    while (!frontier.empty()) {
      std::size_t u = frontier.back();
      frontier.pop_back();
      comp.push_back(u);
      for (std::size_t v : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          frontier.push_back(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

double estimate_scale(const WeakMatrix& mat, const SketchVector& v) {
  if (v.values.size() != mat.rows()) {
    throw std::invalid_argument("estimate_scale: sketch length mismatch");
  }
  std::span<const double> y(v.values);
  std::vector<double> per_rep;
  per_rep.reserve(mat.d1());
  std::size_t trim = static_cast<std::size_t>(
      std::min<std::uint64_t>(mat.goal().k_eff(), mat.b2()));
  for (std::size_t r = 0; r < mat.d1(); ++r) {
    std::vector<double> mags;
    mags.reserve(mat.b2());
    double total = 0.0;
    for (std::uint64_t c = 0; c < mat.b2(); ++c) {
      double m = std::abs(mat.pair_sum(y, r, 0, c));
      mags.push_back(m);
      total += m;
    }
    // Remove the heaviest k_eff buckets so the estimate tracks the tail, not
    // the heavy hitters themselves.
    std::partial_sort(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(trim), mags.end(),
                      std::greater<double>());
    for (std::size_t t = 0; t < trim; ++t) total -= mags[t];
    per_rep.push_back(std::max(total, 0.0));
  }
  return median_of(per_rep);
}

WeakResult weak_decode(const WeakMatrix& mat, const SketchVector& v, double scale,
                       const Clusterer& clusterer) {
  if (v.matrix_hash != mat.descriptor_hash()) {
    throw std::invalid_argument("weak_decode: sketch was not produced by this matrix");
  }
  if (v.values.size() != mat.rows()) {
    throw std::invalid_argument("weak_decode: sketch length mismatch");
  }
  WeakResult res;
  res.xhat = SparseVector(mat.universe(), mat.goal().s);
  std::span<const double> y(v.values);
  if (scale <= 0.0) scale = estimate_scale(mat, v);
  const double thr = mat.goal().filter_fraction() * scale;

  // Stage 1: filter first-layer buckets by magnitude and decode the survivors'
  // embedded messages.
  ChunkGraph g;
  std::map<std::pair<std::size_t, std::uint32_t>, std::size_t> node_at;
  std::vector<std::uint8_t> bits(mat.d2());
  for (std::size_t r = 0; r < mat.d1(); ++r) {
    for (std::uint64_t b = 0; b < mat.b1(); ++b) {
      double mag = mat.pair_mag(y, r, 0, mat.hash().second(r, 0, b));
      if (mag == 0.0 || mag < thr) continue;
      ++res.stats.buckets_decoded;
      for (std::size_t j = 0; j < mat.d2(); ++j) {
        std::uint32_t c = mat.hash().second(r, j, b);
        std::size_t row = mat.pair_row(r, j, c, 0);
        bits[j] = static_cast<std::uint8_t>(extract_bit(y[row], y[row + 1]));
      }
      auto block = mat.codec().decode_block(bits);
      if (!block) continue;
      node_at[{r, static_cast<std::uint32_t>(b)}] = g.nodes.size();
      g.nodes.push_back(ChunkNode{r, static_cast<std::uint32_t>(b), std::move(*block)});
    }
  }

  // Stage 2: mutual-suggestion edges. Links are involutions, so u's claim
  // about slot ell is checked against v's claim in the same slot.
  for (std::size_t u = 0; u < g.nodes.size(); ++u) {
    const ChunkNode& nu = g.nodes[u];
    for (std::size_t ell = 0; ell < mat.link_graph().delta(); ++ell) {
      std::size_t r2 = mat.link_graph().partner(ell, nu.r);
      auto it = node_at.find({r2, nu.block.links[ell]});
      if (it == node_at.end() || it->second <= u) continue;
      const ChunkNode& nv = g.nodes[it->second];
      if (nv.block.links[ell] == nu.b) g.edges.emplace_back(u, it->second);
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

  // Stage 3: cluster, reassemble the outer codeword per cluster, decode to a
  // candidate index, and keep clusters that actually hash where they claim.
  auto clusters = clusterer ? clusterer(g) : connected_component_clusters(g);
  std::set<std::uint64_t> candidate_set;
  for (const auto& cluster : clusters) {
    if (cluster.size() < mat.min_cluster()) continue;
    ++res.stats.clusters_formed;
    std::vector<std::optional<std::vector<std::uint8_t>>> chunks(mat.d1());
    std::vector<bool> conflicted(mat.d1(), false);
    for (std::size_t idx : cluster) {
      const ChunkNode& node = g.nodes[idx];
      if (conflicted[node.r]) continue;
      if (!chunks[node.r]) {
        chunks[node.r] = node.block.chunk;
      } else if (*chunks[node.r] != node.block.chunk) {
        // Two decoded buckets disagree about this repetition: trust neither.
        conflicted[node.r] = true;
        chunks[node.r].reset();
      }
    }
    auto index = mat.codec().decode_index(chunks);
    if (!index) continue;
    std::size_t consistent = 0;
    for (std::size_t idx : cluster) {
      const ChunkNode& node = g.nodes[idx];
      if (mat.hash().first(node.r, *index) == node.b) ++consistent;
    }
    if (consistent < std::max<std::size_t>(1, cluster.size() / 2)) continue;
    candidate_set.insert(*index);
  }

  // Stage 4: median estimates and top-s selection.
  for (std::uint64_t i : candidate_set) {
    double est = mat.median_estimate(y, i);
    ++res.stats.candidate_evaluations;
    res.candidates.emplace_back(i, est);
  }
  std::vector<std::pair<std::uint64_t, double>> ranked = res.candidates;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    double ma = std::abs(a.second), mb = std::abs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  for (std::size_t t = 0; t < ranked.size() && t < mat.goal().s; ++t) {
    res.xhat.set(ranked[t].first, ranked[t].second);
  }
  return res;
}

}  // namespace hhsketch
