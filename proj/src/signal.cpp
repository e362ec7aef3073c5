#include "hhsketch/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hhsketch {

SparseVector::SparseVector(std::size_t n, std::size_t support_bound)
    : n_(n), support_bound_(support_bound) {}

double SparseVector::at(std::uint64_t i) const {
  auto it = entries_.find(i);
  return it == entries_.end() ? 0.0 : it->second;
}

void SparseVector::set(std::uint64_t i, double v) {
  if (i >= n_) throw std::invalid_argument("SparseVector: index out of range");
  if (v == 0.0) {
    entries_.erase(i);
    return;
  }
  if (entries_.find(i) == entries_.end() && entries_.size() >= support_bound_)
    throw std::invalid_argument("SparseVector: support bound exceeded");
  entries_[i] = v;
}

void SparseVector::add(std::uint64_t i, double v) { set(i, at(i) + v); }

Signal SparseVector::densify() const {
  Signal x(n_, 0.0);
  for (const auto& [i, v] : entries_) x[i] = v;
  return x;
}

namespace {

// Magnitude descending, index ascending. Total order, so every selection
// below is deterministic.
bool mag_before(double va, std::uint64_t ia, double vb, std::uint64_t ib) {
  double ma = std::fabs(va), mb = std::fabs(vb);
  if (ma != mb) return ma > mb;
  return ia < ib;
}

}  // namespace

double tail_norm(const Signal& x, std::size_t k) {
  if (k > x.size()) throw std::invalid_argument("tail_norm: k > n");
  if (k == x.size()) return 0.0;
  std::vector<double> mags(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mags[i] = std::fabs(x[i]);
  std::nth_element(mags.begin(), mags.begin() + k, mags.end(), std::greater<double>());
  // Ascending partial sums of the tail keep the accumulation stable.
  std::sort(mags.begin() + k, mags.end());
  long double acc = 0.0L;
  for (std::size_t i = k; i < mags.size(); ++i) acc += mags[i];
  return static_cast<double>(acc);
}

std::vector<std::uint64_t> head_topk(const Signal& x, std::size_t k) {
  if (k > x.size()) throw std::invalid_argument("head_topk: k > n");
  std::vector<std::uint64_t> idx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) idx[i] = i;
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](std::uint64_t a, std::uint64_t b) {
                      return mag_before(x[a], a, x[b], b);
                    });
  idx.resize(k);
  return idx;
}

std::vector<std::uint64_t> head_set(const Signal& x, std::size_t k, double eps) {
  if (k == 0) throw std::invalid_argument("head_set: k must be positive");
  double tail = tail_norm(x, k);
  std::vector<std::uint64_t> out;
  if (tail == 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) out.push_back(i);
    return out;
  }
  double thr = (eps / static_cast<double>(k)) * tail;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::fabs(x[i]) >= thr) out.push_back(i);
  return out;
}

bool oracle_verify_linf(const Signal& x, const SparseVector& xhat, std::size_t k, std::size_t r) {
  if (k == 0) throw std::invalid_argument("oracle_verify_linf: k must be positive");
  long double bound = static_cast<long double>(tail_norm(x, r)) / static_cast<long double>(k);
  return static_cast<long double>(linf_error(x, xhat)) <= bound + 1e-12L;
}

double linf_error(const Signal& x, const SparseVector& xhat) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::fabs(x[i] - xhat.at(i)));
  for (const auto& [i, v] : xhat.entries())
    if (i >= x.size()) worst = std::max(worst, std::fabs(v));
  return worst;
}

double l1_error(const Signal& x, const SparseVector& xhat) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::fabs(x[i] - xhat.at(i));
  return static_cast<double>(acc);
}

}  // namespace hhsketch
