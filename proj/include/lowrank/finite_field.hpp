#pragma once

// Table-driven arithmetic over F_q for prime powers q <= 257. Elements are the
// integers [0, q); for q = p^m an element encodes the coefficient vector of a
// polynomial of degree < m in base p, reduced modulo a fixed irreducible.

#include <cstdint>
#include <string>
#include <vector>

#include "lowrank/error.hpp"

namespace lowrank {

namespace detail {

inline bool is_prime(int v) {
  if (v < 2) return false;
  for (int f = 2; f * f <= v; ++f)
    if (v % f == 0) return false;
  return true;
}

/// Returns {p, m} with q = p^m, or {0, 0} if q is not a prime power.
inline std::pair<int, int> prime_power(int q) {
  if (q < 2) return {0, 0};
  int p = 2;
  while (q % p != 0) ++p;
  int m = 0, r = q;
  while (r % p == 0) {
    r /= p;
    ++m;
  }
  return r == 1 ? std::pair{p, m} : std::pair{0, 0};
}

}  // namespace detail

inline bool is_prime_power(int q) { return detail::prime_power(q).first != 0; }

class FiniteField {
 public:
  static constexpr int kMaxOrder = 257;

  explicit FiniteField(int q) : q_(q) {
    auto [p, m] = detail::prime_power(q);
    if (p == 0 || q > kMaxOrder)
      throw ParameterError("field order must be a prime power <= 257, got " + std::to_string(q));
    p_ = p;
    m_ = m;
    add_.resize(static_cast<std::size_t>(q) * q);
    mul_.resize(static_cast<std::size_t>(q) * q);
    if (m == 1) {
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
          add_[idx(a, b)] = static_cast<std::uint16_t>((a + b) % q);
          mul_[idx(a, b)] = static_cast<std::uint16_t>((a * b) % q);
        }
    } else {
      build_extension();
    }
    neg_.resize(q);
    inv_.assign(q, 0);
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        if (add_[idx(a, b)] == 0) neg_[a] = static_cast<std::uint16_t>(b);
        if (a != 0 && mul_[idx(a, b)] == 1) inv_[a] = static_cast<std::uint16_t>(b);
      }
  }

  int order() const noexcept { return q_; }
  int characteristic() const noexcept { return p_; }
  int degree() const noexcept { return m_; }

  int add(int a, int b) const { return add_[idx(a, b)]; }
  int sub(int a, int b) const { return add_[idx(a, neg_[b])]; }
  int mul(int a, int b) const { return mul_[idx(a, b)]; }
  int neg(int a) const { return neg_[a]; }
  /// Multiplicative inverse; inv(0) is 0 by convention.
  int inv(int a) const { return inv_[a]; }

  bool operator==(const FiniteField& o) const noexcept { return q_ == o.q_; }

 private:
  std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * q_ + b; }

  // Polynomials over F_p stored as coefficient vectors, lowest degree first.
  std::vector<int> digits(int a) const {
    std::vector<int> d(m_);
    for (int i = 0; i < m_; ++i) {
      d[i] = a % p_;
      a /= p_;
    }
    return d;
  }

  int undigits(const std::vector<int>& d) const {
    int a = 0;
    for (int i = m_ - 1; i >= 0; --i) a = a * p_ + d[i];
    return a;
  }

  // Remainder of poly (any degree) modulo the monic `modulus` of degree m_.
  std::vector<int> reduce(std::vector<int> poly, const std::vector<int>& modulus) const {
    for (int deg = static_cast<int>(poly.size()) - 1; deg >= m_; --deg) {
      const int c = poly[deg] % p_;
      if (c == 0) continue;
      for (int i = 0; i <= m_; ++i) poly[deg - m_ + i] = ((poly[deg - m_ + i] - c * modulus[i]) % p_ + p_) % p_;
    }
    poly.resize(m_);
    return poly;
  }

  // Monic f of degree m is irreducible iff no monic g of degree 1..m/2 divides it.
  bool irreducible(const std::vector<int>& f) const {
    for (int dg = 1; dg <= m_ / 2; ++dg) {
      int count = 1;
      for (int i = 0; i < dg; ++i) count *= p_;
      for (int code = 0; code < count; ++code) {
        std::vector<int> g(dg + 1);
        int c = code;
        for (int i = 0; i < dg; ++i) {
          g[i] = c % p_;
          c /= p_;
        }
        g[dg] = 1;
        // remainder of f by g
        std::vector<int> r = f;
        for (int deg = m_; deg >= dg; --deg) {
          const int lead = r[deg] % p_;
          if (lead == 0) continue;
          for (int i = 0; i <= dg; ++i) r[deg - dg + i] = ((r[deg - dg + i] - lead * g[i]) % p_ + p_) % p_;
        }
        bool zero = true;
        for (int i = 0; i < dg; ++i) zero = zero && r[i] == 0;
        if (zero) return false;
      }
    }
    return true;
  }

  void build_extension() {
    std::vector<int> modulus;
    for (int code = 0; code < q_; ++code) {
      std::vector<int> f(m_ + 1);
      int c = code;
      for (int i = 0; i < m_; ++i) {
        f[i] = c % p_;
        c /= p_;
      }
      f[m_] = 1;
      if (irreducible(f)) {
        modulus = f;
        break;
      }
    }
    for (int a = 0; a < q_; ++a) {
      const auto da = digits(a);
      for (int b = 0; b < q_; ++b) {
        const auto db = digits(b);
        std::vector<int> s(m_);
        for (int i = 0; i < m_; ++i) s[i] = (da[i] + db[i]) % p_;
        add_[idx(a, b)] = static_cast<std::uint16_t>(undigits(s));
        std::vector<int> prod(2 * m_ - 1, 0);
        for (int i = 0; i < m_; ++i)
          for (int j = 0; j < m_; ++j) prod[i + j] = (prod[i + j] + da[i] * db[j]) % p_;
        mul_[idx(a, b)] = static_cast<std::uint16_t>(undigits(reduce(prod, modulus)));
      }
    }
  }

  int q_;
  int p_ = 0;
  int m_ = 0;
  std::vector<std::uint16_t> add_, mul_, neg_, inv_;
};

}  // namespace lowrank
