#include "hhsketch/strict.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <map>
#include <stdexcept>
#include <utility>

namespace hhsketch {

namespace {

bool is_prime(std::uint64_t v) {
  if (v < 2) return false;
  if (v % 2 == 0) return v == 2;
  for (std::uint64_t d = 3; d * d <= v; d += 2) {
    if (v % d == 0) return false;
  }
  return true;
}

std::uint64_t smallest_prime_at_least(std::uint64_t v) {
  if (v <= 2) return 2;
  if (v % 2 == 0) ++v;
  while (!is_prime(v)) v += 2;
  return v;
}

/// Median with the same convention as the estimators elsewhere: exact middle
/// for odd length, average of the two middle values for even length.
double median_destructive(std::vector<double>& vals) {
  const std::size_t m = vals.size();
  if (m == 0) return 0.0;
  const std::size_t mid = m / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  double hi = vals[mid];
  if (m % 2 == 1) return hi;
  double lo = *std::max_element(vals.begin(), vals.begin() + mid);
  return 0.5 * (lo + hi);
}

/// Global ranking rule: magnitude descending, index ascending on ties.
void rank_entries(std::vector<std::pair<std::uint64_t, double>>& items) {
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    double ma = std::abs(a.second);
    double mb = std::abs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
}

}  // namespace

RsCodeMatrix::RsCodeMatrix(std::uint64_t n, std::size_t code_k)
    : SketchMatrix(n, 0), code_k_(code_k) {
  if (n < 2) throw std::invalid_argument("RsCodeMatrix: universe must be at least 2");
  if (code_k < 1) throw std::invalid_argument("RsCodeMatrix: code_k must be positive");
  const double lg_n = std::log2(static_cast<double>(n));
  const double denom =
      std::max(1.0, std::log2(std::max(1.0, lg_n)) + std::log2(static_cast<double>(code_k)));
  const auto ratio = static_cast<std::uint64_t>(std::ceil(lg_n / denom));
  q_ = smallest_prime_at_least(4 * static_cast<std::uint64_t>(code_k) * std::max<std::uint64_t>(1, ratio));
  ml_ = 1;
  unsigned __int128 pw = q_;
  while (pw < n) {
    pw *= q_;
    ++ml_;
  }
  m_ = static_cast<std::size_t>(q_ * q_);
}

std::uint64_t RsCodeMatrix::code_symbol(std::uint64_t i, std::uint64_t alpha) const {
  // Base-q digits of i are the polynomial's coefficients, low digit first.
  std::uint64_t digits[16];
  std::uint64_t rem = i;
  for (std::size_t j = 0; j < ml_; ++j) {
    digits[j] = rem % q_;
    rem /= q_;
  }
  std::uint64_t acc = digits[ml_ - 1];
  for (std::size_t j = ml_ - 1; j-- > 0;) {
    acc = (acc * alpha + digits[j]) % q_;
  }
  return acc;
}

void RsCodeMatrix::add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const {
  if (i >= n_) throw std::out_of_range("RsCodeMatrix: column index out of range");
  if (out.size() != m_) throw std::invalid_argument("RsCodeMatrix: output size mismatch");
  std::uint64_t digits[16];
  std::uint64_t rem = i;
  for (std::size_t j = 0; j < ml_; ++j) {
    digits[j] = rem % q_;
    rem /= q_;
  }
  for (std::uint64_t alpha = 0; alpha < q_; ++alpha) {
    std::uint64_t acc = digits[ml_ - 1];
    for (std::size_t j = ml_ - 1; j-- > 0;) {
      acc = (acc * alpha + digits[j]) % q_;
    }
    out[static_cast<std::size_t>(alpha * q_ + acc)] += delta;
  }
}

nlohmann::json RsCodeMatrix::descriptor() const {
  return nlohmann::json{{"kind", "rs_code"},
                        {"n", n_},
                        {"code_k", code_k_},
                        {"q", q_},
                        {"message_len", ml_}};
}

double rs_point_query(const RsCodeMatrix& m, std::span<const double> v, std::uint64_t i,
                      DecodeStats* stats) {
  if (v.size() != m.rows()) throw std::invalid_argument("rs_point_query: sketch size mismatch");
  const std::uint64_t q = m.q();
  std::vector<double> vals(static_cast<std::size_t>(q));
  for (std::uint64_t alpha = 0; alpha < q; ++alpha) {
    vals[static_cast<std::size_t>(alpha)] =
        v[static_cast<std::size_t>(alpha * q + m.code_symbol(i, alpha))];
  }
  if (stats != nullptr) ++stats->candidate_evaluations;
  return median_destructive(vals);
}

SparseVector reduce_noise(const RsCodeMatrix& m, std::span<const double> u,
                          std::span<const std::uint64_t> S, std::size_t k,
                          DecodeStats* stats) {
  if (u.size() != m.rows()) throw std::invalid_argument("reduce_noise: sketch size mismatch");
  const std::uint64_t q = m.q();
  std::vector<double> vals(static_cast<std::size_t>(q));
  std::vector<std::pair<std::uint64_t, double>> ests;
  ests.reserve(S.size());
  for (std::uint64_t i : S) {
    for (std::uint64_t alpha = 0; alpha < q; ++alpha) {
      vals[static_cast<std::size_t>(alpha)] =
          u[static_cast<std::size_t>(alpha * q + m.code_symbol(i, alpha))];
    }
    if (stats != nullptr) ++stats->candidate_evaluations;
    double est = median_destructive(vals);
    if (est != 0.0) ests.emplace_back(i, est);
  }
  rank_entries(ests);
  const std::size_t keep = std::min(ests.size(), 5 * k);
  SparseVector out(m.universe(), std::max<std::size_t>(1, 5 * k));
  for (std::size_t t = 0; t < keep; ++t) out.set(ests[t].first, ests[t].second);
  return out;
}

SparseVector tail_point_query(const RsCodeMatrix& m, std::span<const double> v,
                              std::span<const std::uint64_t> S, std::size_t k,
                              double beta, DecodeStats* stats) {
  if (v.size() != m.rows()) throw std::invalid_argument("tail_point_query: sketch size mismatch");
  if (beta < 5.0) throw std::invalid_argument("tail_point_query: beta must be at least 5");
  // Conservative bound on the per-round contraction of the unexplained mass.
  const double gamma = 0.5 + 2.0 / beta;
  const double lg_n = std::log2(static_cast<double>(m.universe()));
  const std::size_t rounds =
      static_cast<std::size_t>(std::ceil(lg_n / std::log2(1.0 / gamma))) + 2;
  std::vector<double> residual(v.begin(), v.end());
  SparseVector acc(m.universe(), std::max<std::size_t>(1, S.size()));
  for (std::size_t t = 0; t < rounds; ++t) {
    SparseVector step = reduce_noise(m, residual, S, k, stats);
    if (step.support_size() == 0) break;  // fixed point: later rounds are identical
    for (const auto& [i, val] : step.entries()) {
      m.add_scaled_column(i, -val, residual);
      acc.add(i, val);
    }
  }
  std::vector<std::pair<std::uint64_t, double>> items(acc.entries().begin(), acc.entries().end());
  rank_entries(items);
  const std::size_t keep = std::min(items.size(), 5 * k);
  SparseVector out(m.universe(), std::max<std::size_t>(1, 5 * k));
  for (std::size_t t = 0; t < keep; ++t) out.set(items[t].first, items[t].second);
  return out;
}

StrictScheme::StrictScheme(std::uint64_t n, std::size_t k, std::size_t beta)
    : SketchMatrix(n, 0), k_(k), beta_(beta) {
  if (n < 2) throw std::invalid_argument("StrictScheme: universe must be at least 2");
  if (k < 1) throw std::invalid_argument("StrictScheme: k must be positive");
  if (beta < 5) throw std::invalid_argument("StrictScheme: beta must be at least 5");
  const std::uint64_t padded = std::bit_ceil(n);
  bits_ = static_cast<unsigned>(std::bit_width(padded) - 1);
  if (bits_ == 0) bits_ = 1;
  const std::uint64_t enumerable = 25 * static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k);

  struct Pending {
    std::size_t level, pos;
    unsigned lo, width;
  };
  std::deque<Pending> queue;
  queue.push_back({0, 0, 0, bits_});
  std::map<unsigned, std::shared_ptr<const RsCodeMatrix>> by_width;
  std::size_t total = 0;
  while (!queue.empty()) {
    Pending p = queue.front();
    queue.pop_front();
    Node node;
    node.level = p.level;
    node.pos = p.pos;
    node.lo = p.lo;
    node.width = p.width;
    node.offset = total;
    auto it = by_width.find(p.width);
    if (it == by_width.end()) {
      it = by_width
               .emplace(p.width, std::make_shared<const RsCodeMatrix>(
                                     std::uint64_t{1} << p.width, beta_ * k_))
               .first;
    }
    node.matrix = it->second;
    total += node.matrix->rows();
    nodes_.push_back(std::move(node));
    if ((std::uint64_t{1} << p.width) > enumerable) {
      const unsigned hi_bits = (p.width + 1) / 2;
      const unsigned lo_bits = p.width - hi_bits;
      queue.push_back({p.level + 1, 2 * p.pos, p.lo + lo_bits, hi_bits});
      queue.push_back({p.level + 1, 2 * p.pos + 1, p.lo, lo_bits});
    }
  }
  levels_ = nodes_.back().level + 1;
  m_ = total;
}

void StrictScheme::add_scaled_column(std::uint64_t i, double delta, std::span<double> out) const {
  if (i >= n_) throw std::out_of_range("StrictScheme: column index out of range");
  if (out.size() != m_) throw std::invalid_argument("StrictScheme: output size mismatch");
  for (const Node& node : nodes_) {
    const std::uint64_t mask = (std::uint64_t{1} << node.width) - 1;
    const std::uint64_t j = (i >> node.lo) & mask;
    node.matrix->add_scaled_column(j, delta, out.subspan(node.offset, node.matrix->rows()));
  }
}

nlohmann::json StrictScheme::descriptor() const {
  nlohmann::json node_list = nlohmann::json::array();
  for (const Node& node : nodes_) {
    node_list.push_back(nlohmann::json{{"level", node.level},
                                       {"pos", node.pos},
                                       {"lo", node.lo},
                                       {"width", node.width},
                                       {"q", node.matrix->q()},
                                       {"rows", node.matrix->rows()}});
  }
  return nlohmann::json{{"kind", "rs_split_tree"}, {"n", n_},    {"k", k_},
                        {"beta", beta_},           {"bits", bits_}, {"nodes", node_list}};
}

StrictDecodeResult recursive_decode(const StrictScheme& scheme, const SketchVector& v) {
  if (v.matrix_hash != scheme.descriptor_hash()) {
    throw std::invalid_argument("recursive_decode: sketch was made by a different matrix");
  }
  if (v.values.size() != scheme.rows()) {
    throw std::invalid_argument("recursive_decode: sketch size mismatch");
  }
  double max_abs = 0.0;
  double most_negative = 0.0;
  for (double x : v.values) {
    max_abs = std::max(max_abs, std::abs(x));
    most_negative = std::min(most_negative, x);
  }
  if (most_negative < -1e-9 * std::max(1.0, max_abs)) {
    throw StrictModelViolation(
        "recursive_decode: sketch has negative counters; the signal is not nonnegative");
  }

  const auto& nodes = scheme.nodes();
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index_of;
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    index_of.emplace(std::make_pair(nodes[idx].level, nodes[idx].pos), idx);
  }

  StrictDecodeResult res;
  const std::size_t k = scheme.k();
  const double beta = static_cast<double>(scheme.beta());

  auto decode_node = [&](auto&& self, std::size_t idx) -> SparseVector {
    const StrictScheme::Node& node = nodes[idx];
    const auto hi_it = index_of.find({node.level + 1, 2 * node.pos});
    std::vector<std::uint64_t> cand;
    if (hi_it == index_of.end()) {
      // Leaf: the universe is small enough to enumerate outright.
      const std::uint64_t uni = std::uint64_t{1} << node.width;
      cand.resize(static_cast<std::size_t>(uni));
      for (std::uint64_t i = 0; i < uni; ++i) cand[static_cast<std::size_t>(i)] = i;
    } else {
      const std::size_t lo_idx = index_of.at({node.level + 1, 2 * node.pos + 1});
      SparseVector hi_part = self(self, hi_it->second);
      SparseVector lo_part = self(self, lo_idx);
      const unsigned lo_bits = nodes[lo_idx].width;
      cand.reserve(hi_part.support_size() * lo_part.support_size());
      for (const auto& [hi_val, unused_hi] : hi_part.entries()) {
        (void)unused_hi;
        for (const auto& [lo_val, unused_lo] : lo_part.entries()) {
          (void)unused_lo;
          cand.push_back((hi_val << lo_bits) | lo_val);
        }
      }
    }
    std::span<const double> seg(v.values.data() + node.offset, node.matrix->rows());
    return tail_point_query(*node.matrix, seg, cand, k, beta, &res.stats);
  };

  SparseVector root = decode_node(decode_node, 0);
  res.xhat = SparseVector(scheme.universe(), std::max<std::size_t>(1, 5 * k));
  for (const auto& [i, val] : root.entries()) {
    if (i < scheme.universe()) res.xhat.set(i, val);
  }
  return res;
}

}  // namespace hhsketch
