#pragma once

#include <cstdint>
#include <vector>

namespace hhsketch {

/// GF(2^m) arithmetic via log/antilog tables, m in [2, 12].
class GF2m {
 public:
  explicit GF2m(unsigned m);

  unsigned m() const { return m_; }
  unsigned size() const { return 1u << m_; }
  unsigned order() const { return size() - 1; }  // multiplicative group order

  unsigned add(unsigned a, unsigned b) const { return a ^ b; }
  unsigned mul(unsigned a, unsigned b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[log_[a] + log_[b]];
  }
  unsigned inv(unsigned a) const;
  unsigned div(unsigned a, unsigned b) const { return mul(a, inv(b)); }
  unsigned pow(unsigned a, unsigned e) const;
  unsigned alpha_pow(unsigned e) const { return exp_[e % order()]; }
  unsigned log(unsigned a) const;

 private:
  unsigned m_;
  std::vector<unsigned> log_;
  std::vector<unsigned> exp_;  // doubled to absorb log sums without a modulo
};

}  // namespace hhsketch
