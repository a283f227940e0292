#pragma once

// Small dense linear algebra: Jacobi eigenvalues, singular values, exact
// integer rank and a rank-revealing exact factorization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "lowrank/error.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

struct JacobiOptions {
  double off_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
inline std::vector<double> symmetric_eigenvalues(const DenseMatrix& s, JacobiOptions opt = {}) {
  if (s.rows() != s.cols()) throw DimensionError("symmetric_eigenvalues needs a square matrix");
  const std::size_t n = s.rows();
  std::vector<double> a(s.entries().begin(), s.entries().end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  const double threshold = opt.off_tolerance * std::max(scale, 1.0);
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(at(i, j)));
    if (off <= threshold) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = at(r, p);
          const double arq = at(r, q);
          at(r, p) = c * arp - sn * arq;
          at(r, q) = sn * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = at(p, r);
          const double aqr = at(q, r);
          at(p, r) = c * apr - sn * aqr;
          at(q, r) = sn * apr + c * aqr;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

/// Singular values of A, descending (via the eigenvalues of AᵀA).
inline std::vector<double> singular_values(const DenseMatrix& a) {
  const DenseMatrix g = real_product(a.transpose(), a.with_domain(Domain::real()));
  auto ev = symmetric_eigenvalues(g);
  for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
  return ev;
}

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1;
  for (; e; e >>= 1, a = mulmod(a, a, m))
    if (e & 1) r = mulmod(r, a, m);
  return r;
}

inline std::size_t rank_mod(const DenseMatrix& a, std::uint64_t prime) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  std::vector<std::uint64_t> m(n * d);
  for (std::size_t i = 0; i < n * d; ++i) {
    const auto v = static_cast<std::int64_t>(a.entries()[i]);
    const auto r = static_cast<std::uint64_t>(v < 0 ? -v : v) % prime;
    m[i] = v < 0 && r ? prime - r : r;
  }
  std::size_t rank = 0;
  for (std::size_t c = 0; c < d && rank < n; ++c) {
    std::size_t piv = rank;
    while (piv < n && m[piv * d + c] == 0) ++piv;
    if (piv == n) continue;
    for (std::size_t j = 0; j < d; ++j) std::swap(m[piv * d + j], m[rank * d + j]);
    const std::uint64_t inv = powmod(m[rank * d + c], prime - 2, prime);
    for (std::size_t i = rank + 1; i < n; ++i) {
      const std::uint64_t f = mulmod(m[i * d + c], inv, prime);
      if (!f) continue;
      for (std::size_t j = c; j < d; ++j)
        m[i * d + j] = (m[i * d + j] + prime - mulmod(f, m[rank * d + j], prime)) % prime;
    }
    ++rank;
  }
  return rank;
}

}  // namespace detail

/// Exact rank of an integer-valued matrix. Rank over Q equals the maximum
/// of the ranks modulo primes; three 61-bit primes miss only if each divides
/// all maximal nonzero minors, impossible for entries below 2^61 / sqrt(n)^n.
inline std::size_t integer_rank(const DenseMatrix& a) {
  if (!a.is_integer_valued()) throw ContractError("integer_rank needs integer entries");
  if (a.max_abs() >= 0x1.0p62) throw ContractError("integer_rank: entries too large");
  static constexpr std::uint64_t kPrimes[] = {2305843009213693951ULL, 2305843009213693921ULL, 2305843009213693907ULL};
  std::size_t r = 0;
  for (auto p : kPrimes) r = std::max(r, detail::rank_mod(a, p));
  return r;
}

/// sigma_{k+1}(A) for an integer-valued A; nullopt when rank(A) <= k, i.e.
/// when an exact rank-k factorization exists.
inline std::optional<double> sigma_lower_bound(const DenseMatrix& a, std::size_t k) {
  if (!a.domain().is_real() || !a.is_integer_valued())
    throw ContractError("sigma_lower_bound needs an integer-valued Real matrix");
  if (integer_rank(a) <= k) return std::nullopt;
  return singular_values(a)[k];
}

/// Exact rank-r factorization A = C·R with C a subset of A's columns (the
/// pivot columns) and R the nonzero rows of A's reduced row echelon form.
/// Pivots are selected with tolerance `tol` relative to max |A|.
inline FactorPair column_basis_factorization(const DenseMatrix& a, std::size_t k, double tol = 1e-10) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  std::vector<double> m(a.entries().begin(), a.entries().end());
  const double eps = tol * std::max(1.0, a.max_abs());
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t c = 0; c < d && row < n; ++c) {
    std::size_t best = row;
    for (std::size_t i = row + 1; i < n; ++i)
      if (std::abs(m[i * d + c]) > std::abs(m[best * d + c])) best = i;
    if (std::abs(m[best * d + c]) <= eps) continue;
    for (std::size_t j = 0; j < d; ++j) std::swap(m[best * d + j], m[row * d + j]);
    const double pv = m[row * d + c];
    for (std::size_t j = 0; j < d; ++j) m[row * d + j] /= pv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == row || m[i * d + c] == 0.0) continue;
      const double f = m[i * d + c];
      for (std::size_t j = 0; j < d; ++j) m[i * d + j] -= f * m[row * d + j];
    }
    pivots.push_back(c);
    ++row;
  }
  if (pivots.size() > k) throw ContractError("column_basis_factorization: rank exceeds k");
  DenseMatrix u(n, k);
  DenseMatrix v(k, d);
  for (std::size_t l = 0; l < pivots.size(); ++l) {
    for (std::size_t i = 0; i < n; ++i) u.set(i, l, a(i, pivots[l]));
    for (std::size_t j = 0; j < d; ++j) v.set(l, j, m[l * d + j]);
    // Pivot columns of R are exact unit vectors.
    for (std::size_t l2 = 0; l2 < pivots.size(); ++l2) v.set(l2, pivots[l], l2 == l ? 1.0 : 0.0);
  }
  return {std::move(u), std::move(v), 0.0};
}

}  // namespace lowrank
