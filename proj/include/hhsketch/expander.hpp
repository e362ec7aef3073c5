#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hhsketch/hashing.hpp"
#include "hhsketch/signal.hpp"

namespace hhsketch {

/// Left-regular bipartite graph, adjacency stored per left node. Neighbor
/// lists are multisets of right-node ids; left degree is uniform.
struct BipartiteGraph {
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  std::size_t degree = 0;
  std::vector<std::vector<std::uint64_t>> adj;
};

/// The bipartite graph induced by a two-layer hash: left nodes are items,
/// right nodes are (repetition, sub-repetition, bucket) triples.
BipartiteGraph induced_graph(const TwoLayerHash& h);

/// True iff |Gamma(S)| >= (1 - eps) * d * |S| for every S with 1 <= |S| <= ell.
/// Exhaustive; throws std::invalid_argument when C(n_left, <= ell) > 1e6.
bool check_expansion(const BipartiteGraph& g, std::size_t ell, double eps);

/// True iff every S with |S| <= L contains at least (1 - eta) * |S| members x
/// with |Gamma({x}) \ Gamma(S \ {x})| >= (1 - zeta) * d. Same subset gate.
bool check_isolation(const BipartiteGraph& g, std::size_t L, double eta, double zeta);

/// Counts i in D whose bucket-sum multiset E_i has at least (1 - delta) * d
/// values w with |x_i - w| >= eps * gamma / 4. Thresholds are relative to the
/// normalization ||tail(x)||_1 <= 1, which the caller is responsible for.
std::size_t decoy_count(const BipartiteGraph& g, const Signal& x,
                        const std::vector<std::uint64_t>& who, double eps, double gamma,
                        double delta);

/// Adjacency-list dump, one left node per line; '#' header carries the sizes.
void dump_graph(const BipartiteGraph& g, std::ostream& os);

}  // namespace hhsketch
