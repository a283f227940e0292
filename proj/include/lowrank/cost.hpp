#pragma once

// Entrywise cost functionals and the generalized / finite-field products.

#include <cmath>
#include <cstddef>
#include <optional>

#include "lowrank/error.hpp"
#include "lowrank/finite_field.hpp"
#include "lowrank/inner_product.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

/// Raised entrywise cost sum |A_ij - B_ij|^p. For p = 0 this counts entries
/// whose difference exceeds `tol` (default: the domain tolerance of A).
inline double lp_cost(const DenseMatrix& a, const DenseMatrix& b, double p, std::optional<double> tol = std::nullopt) {
  require_same_shape(a, b, "lp_cost");
  if (!(p >= 0.0)) throw ParameterError("lp_cost needs p >= 0");
  const auto ea = a.entries();
  const auto eb = b.entries();
  double total = 0.0;
  if (p == 0.0) {
    const double t = tol.value_or(a.domain().l0_tolerance());
    std::size_t count = 0;
    for (std::size_t i = 0; i < ea.size(); ++i) count += std::abs(ea[i] - eb[i]) > t;
    return static_cast<double>(count);
  }
  if (p == 1.0) {
    for (std::size_t i = 0; i < ea.size(); ++i) total += std::abs(ea[i] - eb[i]);
    return total;
  }
  for (std::size_t i = 0; i < ea.size(); ++i) total += std::pow(std::abs(ea[i] - eb[i]), p);
  return total;
}

/// Raised lp norm of a single vector (p = 0 counts nonzeros beyond tol).
inline double lp_norm_raised(std::span<const double> v, double p, double tol = 0.0) {
  double total = 0.0;
  for (double x : v) {
    if (p == 0.0)
      total += std::abs(x) > tol;
    else
      total += std::pow(std::abs(x), p);
  }
  return total;
}

inline void require_binary_factors(const DenseMatrix& u, const DenseMatrix& v, const InnerProductTable& ip) {
  if (!u.domain().is_binary() || !v.domain().is_binary())
    throw ContractError("generalized product needs Binary factors");
  if (u.cols() != v.rows()) throw ContractError("factor inner ranks differ");
  if (u.cols() != ip.rank())
    throw ContractError("inner product table has rank " + std::to_string(ip.rank()) + ", factors have rank " +
                        std::to_string(u.cols()));
}

/// B_ij = <U_{i,:}, V_{:,j}> under the table.
inline DenseMatrix generalized_product(const DenseMatrix& u, const DenseMatrix& v, const InnerProductTable& ip) {
  require_binary_factors(u, v, ip);
  const std::size_t n = u.rows();
  const std::size_t d = v.cols();
  std::vector<Label> cl(d);
  for (std::size_t j = 0; j < d; ++j) cl[j] = col_label(v, j);
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const Label x = row_label(u, i);
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = ip(x, cl[j]);
  }
  return DenseMatrix(n, d, Domain::real(), std::move(out));
}

/// Number of entries where A differs from the generalized product (exact comparison).
inline double generalized_l0_cost(const DenseMatrix& a, const DenseMatrix& u, const DenseMatrix& v,
                                  const InnerProductTable& ip) {
  if (!a.domain().is_binary()) throw ContractError("generalized_l0_cost needs a Binary A");
  if (a.rows() != u.rows() || a.cols() != v.cols()) throw DimensionError("generalized_l0_cost: factor shapes");
  return lp_cost(a.with_domain(Domain::real()), generalized_product(u, v, ip), 0.0, 0.0);
}

/// U·V with arithmetic in F_q; both factors must be over the same field.
inline DenseMatrix fq_product(const DenseMatrix& u, const DenseMatrix& v) {
  if (!u.domain().is_fq() || !(u.domain() == v.domain())) throw ContractError("fq_product needs factors over one F_q");
  if (u.cols() != v.rows()) throw DimensionError("fq_product: inner dimensions differ");
  const FiniteField f(u.domain().q);
  DenseMatrix out(u.rows(), v.cols(), u.domain());
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) {
      int s = 0;
      for (std::size_t l = 0; l < u.cols(); ++l) s = f.add(s, f.mul(u.residue(i, l), v.residue(l, j)));
      out.set(i, j, s);
    }
  return out;
}

/// ||A - U·V||_0 over F_q.
inline double fq_l0_cost(const DenseMatrix& a, const DenseMatrix& u, const DenseMatrix& v) {
  if (!(a.domain() == u.domain())) throw ContractError("fq_l0_cost: A and factors over different fields");
  return lp_cost(a, fq_product(u, v), 0.0, 0.0);
}

}  // namespace lowrank
