#include "hhsketch/recover_l1.hpp"

#include <cmath>
#include <stdexcept>

#include "hhsketch/prng.hpp"

namespace hhsketch {

std::vector<L1Layer> l1_layer_plan(std::size_t k, double eps) {
  if (k == 0) throw std::invalid_argument("l1 layer plan: k must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("l1 layer plan: eps must be positive");
  std::vector<L1Layer> plan;
  double budget = eps / 4.0;
  for (std::uint64_t step = 1; step <= k; step *= 8) {
    plan.push_back(L1Layer{static_cast<std::size_t>((k + step - 1) / step), budget});
    budget /= 2.0;
    if (step > k / 8) break;  // next power of 8 would exceed k
  }
  plan.push_back(L1Layer{1, budget});  // cleanup pass for the stragglers
  return plan;
}

L1Scheme::L1Scheme(std::uint64_t n, std::size_t k, double eps, std::uint64_t seed,
                   const TwoLayerConstants& constants, Independence mode)
    : n_(n), k_(k), eps_(eps), seed_(seed), support_bound_(0) {
  if (static_cast<double>(k) * static_cast<double>(k) > static_cast<double>(n) + 1e-9) {
    throw std::invalid_argument("l1 scheme: k must be at most sqrt(n)");
  }
  auto plan = l1_layer_plan(k, eps);
  layers_.reserve(plan.size());
  std::vector<const SketchMatrix*> parts;
  for (std::size_t t = 0; t < plan.size(); ++t) {
    layers_.push_back(std::make_unique<WeakMatrix>(
        n, WeakGoal::l1l1(plan[t].s, plan[t].eps), mix2(seed, t), constants, mode));
    parts.push_back(layers_.back().get());
    support_bound_ += plan[t].s;
  }
  stacked_ = std::make_unique<StackedMatrix>(n, parts);
}

L1DecodeResult l1_decode(const L1Scheme& scheme, const SketchVector& v, double scale) {
  const StackedMatrix& stacked = scheme.matrix();
  if (v.matrix_hash != stacked.descriptor_hash()) {
    throw std::invalid_argument("l1_decode: sketch was not produced by this scheme");
  }
  if (v.values.size() != stacked.rows()) {
    throw std::invalid_argument("l1_decode: sketch length mismatch");
  }

  L1DecodeResult res;
  res.xhat = SparseVector(scheme.universe(), scheme.support_bound());
  std::vector<double> residual = v.values;
  for (std::size_t t = 0; t < scheme.layer_count(); ++t) {
    const WeakMatrix& layer = scheme.layer(t);
    const double* seg = residual.data() + stacked.part_offset(t);
    SketchVector layer_view{std::vector<double>(seg, seg + layer.rows()),
                            layer.descriptor_hash()};
    WeakResult wres = weak_decode(layer, layer_view, scale);
    res.stats.candidate_evaluations += wres.stats.candidate_evaluations;
    res.stats.clusters_formed += wres.stats.clusters_formed;
    res.stats.buckets_decoded += wres.stats.buckets_decoded;
    if (wres.xhat.support_size() == 0) continue;
    // Fold this layer's estimates into the accumulator and remove their
    // contribution from the sketch segments we have yet to decode.
    for (const auto& [i, val] : wres.xhat.entries()) {
      res.xhat.add(i, val);
      for (std::size_t u = t + 1; u < scheme.layer_count(); ++u) {
        std::span<double> useg(residual.data() + stacked.part_offset(u),
                               scheme.layer(u).rows());
        scheme.layer(u).add_scaled_column(i, -val, useg);
      }
    }
  }
  return res;
}

}  // namespace hhsketch
