#include "hhsketch/rs.hpp"

#include <algorithm>
#include <stdexcept>

namespace hhsketch {

RsCodec::RsCodec(unsigned field_bits, std::size_t msg_syms, std::size_t block_syms)
    : gf_(field_bits), k_(msg_syms), b_(block_syms) {
  if (k_ == 0 || b_ <= k_) throw std::invalid_argument("RsCodec: need 0 < msg < block");
  if (b_ > gf_.order()) throw std::invalid_argument("RsCodec: block exceeds field order");
  // g(x) = prod_{j=0}^{p-1} (x - alpha^j), built up one root at a time.
  std::size_t p = b_ - k_;
  gen_.assign(1, 1);
  for (std::size_t j = 0; j < p; ++j) {
    unsigned root = gf_.alpha_pow(static_cast<unsigned>(j));
    std::vector<unsigned> next(gen_.size() + 1, 0);
    for (std::size_t d = 0; d < gen_.size(); ++d) {
      next[d + 1] ^= gen_[d];
      next[d] ^= gf_.mul(gen_[d], root);
    }
    gen_ = std::move(next);
  }
  gen_.pop_back();  // drop the monic leading coefficient
}

std::vector<unsigned> RsCodec::encode(std::span<const unsigned> msg) const {
  if (msg.size() != k_) throw std::invalid_argument("RsCodec::encode: bad message length");
  std::size_t p = parity_symbols();
  std::vector<unsigned> rem(p, 0);
  for (std::size_t i = 0; i < k_; ++i) {
    unsigned fb = rem[p - 1] ^ msg[i];
    for (std::size_t d = p - 1; d > 0; --d) rem[d] = rem[d - 1] ^ gf_.mul(fb, gen_[d]);
    rem[0] = gf_.mul(fb, gen_[0]);
  }
  std::vector<unsigned> cw(msg.begin(), msg.end());
  for (std::size_t d = 0; d < p; ++d) cw.push_back(rem[p - 1 - d]);
  return cw;
}

std::optional<std::vector<unsigned>> RsCodec::decode(std::span<const unsigned> received,
                                                     std::span<const std::size_t> erasures) const {
  if (received.size() != b_) throw std::invalid_argument("RsCodec::decode: bad block length");
  const std::size_t p = parity_symbols();
  for (std::size_t e : erasures)
    if (e >= b_) throw std::invalid_argument("RsCodec::decode: erasure position out of range");
  if (erasures.size() > p) return std::nullopt;

  // Syndromes S_j = R(alpha^j). Position i carries power b-1-i.
  std::vector<unsigned> synd(p, 0);
  bool clean = true;
  for (std::size_t j = 0; j < p; ++j) {
    unsigned a = gf_.alpha_pow(static_cast<unsigned>(j));
    unsigned acc = 0;
    for (std::size_t i = 0; i < b_; ++i) acc = gf_.mul(acc, a) ^ received[i];
    synd[j] = acc;
    clean = clean && acc == 0;
  }
  if (clean) return std::vector<unsigned>(received.begin(), received.begin() + k_);

  auto x_of = [&](std::size_t pos) {
    return gf_.alpha_pow(static_cast<unsigned>(b_ - 1 - pos));
  };

  // Erasure locator Gamma(x) = prod (1 - X_e x).
  std::vector<unsigned> gamma(1, 1);
  for (std::size_t e : erasures) {
    unsigned xe = x_of(e);
    std::vector<unsigned> next(gamma.size() + 1, 0);
    for (std::size_t d = 0; d < gamma.size(); ++d) {
      next[d] ^= gamma[d];
      next[d + 1] ^= gf_.mul(gamma[d], xe);
    }
    gamma = std::move(next);
  }
  const std::size_t f = erasures.size();

  // Modified syndromes T = S * Gamma mod x^p. For j >= f the sequence T_j is a
  // pure exponential sum over the unknown error locators.
  std::vector<unsigned> tmod(p, 0);
  for (std::size_t d = 0; d < gamma.size(); ++d)
    for (std::size_t j = 0; d + j < p; ++j) tmod[d + j] ^= gf_.mul(gamma[d], synd[j]);

  const std::size_t nu_max = (p - f) / 2;
  std::vector<unsigned> lambda;  // error locator, lambda[0] = 1

  for (std::size_t nu = nu_max;; --nu) {
    if (nu == 0) {
      bool ok = true;
      for (std::size_t j = f; j < p; ++j) ok = ok && tmod[j] == 0;
      if (!ok) return std::nullopt;
      lambda.assign(1, 1);
      break;
    }
    // Solve sum_{c=1}^{nu} L_c * T_{f+nu+r-c} = T_{f+nu+r} for r = 0..nu-1.
    std::vector<std::vector<unsigned>> aug(nu, std::vector<unsigned>(nu + 1, 0));
    for (std::size_t r = 0; r < nu; ++r) {
      for (std::size_t c = 1; c <= nu; ++c) aug[r][c - 1] = tmod[f + nu + r - c];
      aug[r][nu] = tmod[f + nu + r];
    }
    bool singular = false;
    for (std::size_t col = 0; col < nu && !singular; ++col) {
      std::size_t piv = col;
      while (piv < nu && aug[piv][col] == 0) ++piv;
      if (piv == nu) {
        singular = true;
        break;
      }
      std::swap(aug[col], aug[piv]);
      unsigned ipiv = gf_.inv(aug[col][col]);
      for (std::size_t c = col; c <= nu; ++c) aug[col][c] = gf_.mul(aug[col][c], ipiv);
      for (std::size_t r = 0; r < nu; ++r) {
        if (r == col || aug[r][col] == 0) continue;
        unsigned factor = aug[r][col];
        for (std::size_t c = col; c <= nu; ++c) aug[r][c] ^= gf_.mul(factor, aug[col][c]);
      }
    }
    if (singular) continue;
    lambda.assign(nu + 1, 0);
    lambda[0] = 1;
    for (std::size_t c = 1; c <= nu; ++c) lambda[c] = aug[c - 1][nu];
    // Remaining rows of the (overdetermined) recurrence must agree.
    bool consistent = true;
    for (std::size_t j = f + nu; j < p && consistent; ++j) {
      unsigned acc = 0;
      for (std::size_t c = 0; c <= nu && c <= j; ++c) acc ^= gf_.mul(lambda[c], tmod[j - c]);
      consistent = acc == 0;
    }
    if (consistent) break;
    lambda.clear();
  }

  // Psi = Lambda * Gamma locates errors and erasures together.
  std::vector<unsigned> psi(lambda.size() + gamma.size() - 1, 0);
  for (std::size_t a = 0; a < lambda.size(); ++a)
    for (std::size_t d = 0; d < gamma.size(); ++d) psi[a + d] ^= gf_.mul(lambda[a], gamma[d]);

  auto poly_eval = [&](const std::vector<unsigned>& poly, unsigned x) {
    unsigned acc = 0;
    for (std::size_t d = poly.size(); d-- > 0;) acc = gf_.mul(acc, x) ^ poly[d];
    return acc;
  };

  std::vector<std::size_t> positions;
  for (std::size_t pos = 0; pos < b_; ++pos) {
    unsigned xinv = gf_.inv(x_of(pos));
    if (poly_eval(psi, xinv) == 0) positions.push_back(pos);
  }
  if (positions.size() + 1 != psi.size()) return std::nullopt;

  // Omega = S * Psi mod x^p; Forney with fcr = 0: Y = X * Omega(1/X) / Psi'(1/X).
  std::vector<unsigned> omega(p, 0);
  for (std::size_t d = 0; d < psi.size(); ++d)
    for (std::size_t j = 0; d + j < p; ++j) omega[d + j] ^= gf_.mul(psi[d], synd[j]);
  std::vector<unsigned> dpsi;
  for (std::size_t d = 1; d < psi.size(); d += 2) {
    dpsi.resize(d, 0);
    dpsi[d - 1] = psi[d];
  }
  if (dpsi.empty()) return std::nullopt;

  std::vector<unsigned> fixed(received.begin(), received.end());
  for (std::size_t pos : positions) {
    unsigned x = x_of(pos);
    unsigned xinv = gf_.inv(x);
    unsigned denom = poly_eval(dpsi, xinv);
    if (denom == 0) return std::nullopt;
    unsigned mag = gf_.mul(x, gf_.div(poly_eval(omega, xinv), denom));
    fixed[pos] ^= mag;
  }

  // Accept only words that are exactly codewords after correction.
  for (std::size_t j = 0; j < p; ++j) {
    unsigned a = gf_.alpha_pow(static_cast<unsigned>(j));
    unsigned acc = 0;
    for (std::size_t i = 0; i < b_; ++i) acc = gf_.mul(acc, a) ^ fixed[i];
    if (acc != 0) return std::nullopt;
  }
  return std::vector<unsigned>(fixed.begin(), fixed.begin() + k_);
}

}  // namespace hhsketch
