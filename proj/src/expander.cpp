#include "hhsketch/expander.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hhsketch {

BipartiteGraph induced_graph(const TwoLayerHash& h) {
  const auto& s = h.shape();
  BipartiteGraph g;
  g.n_left = s.n;
  g.n_right = static_cast<std::size_t>(s.b2) * s.d1 * s.d2;
  g.degree = s.d1 * s.d2;
  g.adj.resize(g.n_left);
  for (std::uint64_t x = 0; x < s.n; ++x) {
    auto& row = g.adj[x];
    row.reserve(g.degree);
    for (std::size_t r = 0; r < s.d1; ++r)
      for (std::size_t j = 0; j < s.d2; ++j) row.push_back(h.right_node(r, j, x));
  }
  return g;
}

namespace {

void require_subset_gate(std::size_t n, std::size_t ell) {
  long double total = 0.0L, c = 1.0L;
  for (std::size_t j = 1; j <= ell && j <= n; ++j) {
    c = c * static_cast<long double>(n - j + 1) / static_cast<long double>(j);
    total += c;
    if (total > 1e6L)
      throw std::invalid_argument("subset check: C(n_left, <= ell) exceeds 1e6 gate");
  }
}

std::vector<std::vector<std::uint64_t>> sorted_adj(const BipartiteGraph& g) {
  auto adj = g.adj;
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

// Collision-free graphs (no right node shared between two left nodes, nor
// repeated within one list) expand and isolate perfectly; checking pairs is
// enough to certify them and keeps the common certification path cheap.
bool pairwise_disjoint(const std::vector<std::vector<std::uint64_t>>& adj) {
  std::vector<std::uint64_t> all;
  for (const auto& row : adj) all.insert(all.end(), row.begin(), row.end());
  std::sort(all.begin(), all.end());
  return std::adjacent_find(all.begin(), all.end()) == all.end();
}

std::size_t union_size(const std::vector<const std::vector<std::uint64_t>*>& rows) {
  std::vector<std::uint64_t> merged;
  for (const auto* r : rows) merged.insert(merged.end(), r->begin(), r->end());
  std::sort(merged.begin(), merged.end());
  return std::unique(merged.begin(), merged.end()) - merged.begin();
}

// Depth-first enumeration of subsets as increasing index sequences; visit is
// called on every nonempty subset of size <= ell and may veto.
template <typename Visit>
bool for_each_subset(std::size_t n, std::size_t ell, Visit visit) {
  std::vector<std::size_t> chosen;
  std::vector<std::size_t> iter{0};
  while (!iter.empty()) {
    std::size_t& cursor = iter.back();
    if (cursor >= n) {
      iter.pop_back();
      if (!chosen.empty()) chosen.pop_back();
      if (!iter.empty()) ++iter.back();
      continue;
    }
    chosen.push_back(cursor);
    if (!visit(chosen)) return false;
    if (chosen.size() < ell) {
      iter.push_back(cursor + 1);
    } else {
      chosen.pop_back();
      ++cursor;
    }
  }
  return true;
}

}  // namespace

bool check_expansion(const BipartiteGraph& g, std::size_t ell, double eps) {
  if (ell == 0) throw std::invalid_argument("check_expansion: ell must be positive");
  require_subset_gate(g.n_left, ell);
  auto adj = sorted_adj(g);
  if (pairwise_disjoint(adj)) return true;
  double d = static_cast<double>(g.degree);
  return for_each_subset(g.n_left, ell, [&](const std::vector<std::size_t>& subset) {
    std::vector<const std::vector<std::uint64_t>*> rows;
    rows.reserve(subset.size());
    for (std::size_t i : subset) rows.push_back(&adj[i]);
    double need = (1.0 - eps) * d * static_cast<double>(subset.size());
    return static_cast<double>(union_size(rows)) >= need - 1e-9;
  });
}

bool check_isolation(const BipartiteGraph& g, std::size_t L, double eta, double zeta) {
  if (L == 0) throw std::invalid_argument("check_isolation: L must be positive");
  require_subset_gate(g.n_left, L);
  auto adj = sorted_adj(g);
  if (pairwise_disjoint(adj)) return true;
  double d = static_cast<double>(g.degree);
  std::vector<std::uint64_t> others;
  return for_each_subset(g.n_left, L, [&](const std::vector<std::size_t>& subset) {
    std::size_t isolated = 0;
    for (std::size_t member : subset) {
      others.clear();
      for (std::size_t o : subset)
        if (o != member) others.insert(others.end(), adj[o].begin(), adj[o].end());
      std::sort(others.begin(), others.end());
      // Count member's distinct right nodes that no other member touches.
      std::size_t exclusive = 0;
      const auto& mine = adj[member];
      for (std::size_t i = 0; i < mine.size(); ++i) {
        if (i > 0 && mine[i] == mine[i - 1]) continue;
        if (!std::binary_search(others.begin(), others.end(), mine[i])) ++exclusive;
      }
      if (static_cast<double>(exclusive) >= (1.0 - zeta) * d - 1e-9) ++isolated;
    }
    return static_cast<double>(isolated) >=
           (1.0 - eta) * static_cast<double>(subset.size()) - 1e-9;
  });
}

std::size_t decoy_count(const BipartiteGraph& g, const Signal& x,
                        const std::vector<std::uint64_t>& who, double eps, double gamma,
                        double delta) {
  if (x.size() != g.n_left) throw std::invalid_argument("decoy_count: signal length mismatch");
  std::vector<double> bucket(g.n_right, 0.0);
  for (std::size_t u = 0; u < g.n_left; ++u) {
    if (x[u] == 0.0) continue;
    for (std::uint64_t v : g.adj[u]) bucket[v] += x[u];
  }
  double thr = eps * gamma / 4.0;
  double need = (1.0 - delta) * static_cast<double>(g.degree);
  std::size_t decoys = 0;
  for (std::uint64_t i : who) {
    if (i >= g.n_left) throw std::invalid_argument("decoy_count: index out of range");
    std::size_t far = 0;
    for (std::uint64_t v : g.adj[i])
      if (std::fabs(x[i] - bucket[v]) >= thr) ++far;
    if (static_cast<double>(far) >= need - 1e-9) ++decoys;
  }
  return decoys;
}

void dump_graph(const BipartiteGraph& g, std::ostream& os) {
  os << "# bipartite " << g.n_left << ' ' << g.n_right << ' ' << g.degree << '\n';
  for (const auto& row : g.adj) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? " " : "") << row[i];
    os << '\n';
  }
}

}  // namespace hhsketch
