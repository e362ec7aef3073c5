#include "hhsketch/gf.hpp"

#include <stdexcept>

namespace hhsketch {

namespace {

// Primitive polynomials (bit i = coefficient of x^i), one per field size.
constexpr unsigned kPrimPoly[13] = {
    0, 0,
    0x7,     // x^2 + x + 1
    0xB,     // x^3 + x + 1
    0x13,    // x^4 + x + 1
    0x25,    // x^5 + x^2 + 1
    0x43,    // x^6 + x + 1
    0x89,    // x^7 + x^3 + 1
    0x11D,   // x^8 + x^4 + x^3 + x^2 + 1
    0x211,   // x^9 + x^4 + 1
    0x409,   // x^10 + x^3 + 1
    0x805,   // x^11 + x^2 + 1
    0x1053,  // x^12 + x^6 + x^4 + x + 1
};

}  // namespace

GF2m::GF2m(unsigned m) : m_(m) {
  if (m < 2 || m > 12) throw std::invalid_argument("GF2m: m must be in [2, 12]");
  unsigned n = size();
  log_.assign(n, 0);
  exp_.assign(2 * (n - 1), 0);
  unsigned x = 1;
  for (unsigned i = 0; i < n - 1; ++i) {
    exp_[i] = x;
    exp_[i + n - 1] = x;
    log_[x] = i;
    x <<= 1;
    if (x & n) x ^= kPrimPoly[m];
  }
}

unsigned GF2m::inv(unsigned a) const {
  if (a == 0) throw std::invalid_argument("GF2m: division by zero");
  return exp_[order() - log_[a]];
}

unsigned GF2m::pow(unsigned a, unsigned e) const {
  if (a == 0) return e == 0 ? 1 : 0;
  return exp_[(static_cast<std::uint64_t>(log_[a]) * e) % order()];
}

unsigned GF2m::log(unsigned a) const {
  if (a == 0) throw std::invalid_argument("GF2m: log of zero");
  return log_[a];
}

}  // namespace hhsketch
