#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

namespace hhsketch {

/// One turnstile stream element: x[index] += delta.
struct Update {
  std::uint64_t index = 0;
  double delta = 0.0;
};

/// Dense signal over the universe [0, n). Used by tests, oracles and the
/// verification path; the sketching path never materializes it.
using Signal = std::vector<double>;

/// Sparse recovery result. Entries hold only nonzero values; support_bound is
/// the sparsity promise made by the producer (|entries| <= support_bound).
class SparseVector {
 public:
  SparseVector() = default;
  SparseVector(std::size_t n, std::size_t support_bound);

  std::size_t universe() const { return n_; }
  std::size_t support_bound() const { return support_bound_; }
  const std::map<std::uint64_t, double>& entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }

  double at(std::uint64_t i) const;
  /// Sets x[i] = v; exact zeroes are removed. Throws if i >= n or the support
  /// bound would be exceeded.
  void set(std::uint64_t i, double v);
  /// x[i] += v with the same rules as set().
  void add(std::uint64_t i, double v);

  Signal densify() const;

 private:
  std::size_t n_ = 0;
  std::size_t support_bound_ = 0;
  std::map<std::uint64_t, double> entries_;
};

/// ||x - top_k(x)||_1: l1 mass outside the k largest-magnitude coordinates.
/// Ties are broken toward lower indices; any tie-break yields the same value.
double tail_norm(const Signal& x, std::size_t k);

/// Index set of the k largest-magnitude coordinates, magnitude descending,
/// ties by lower index. Requires k <= n.
std::vector<std::uint64_t> head_topk(const Signal& x, std::size_t k);

/// H(x, k, eps) = { i : |x_i| >= (eps/k) * tail_norm(x, k) }. When the tail is
/// exactly zero this degenerates to supp(x).
std::vector<std::uint64_t> head_set(const Signal& x, std::size_t k, double eps);

/// Checks max_i |x_i - xhat_i| <= (1/k) * tail_norm(x, r). High-precision
/// accumulation; used as the acceptance oracle for the l_inf decoders.
bool oracle_verify_linf(const Signal& x, const SparseVector& xhat, std::size_t k, std::size_t r);

/// max_i |x_i - xhat_i|.
double linf_error(const Signal& x, const SparseVector& xhat);

/// ||x - xhat||_1.
double l1_error(const Signal& x, const SparseVector& xhat);

}  // namespace hhsketch
