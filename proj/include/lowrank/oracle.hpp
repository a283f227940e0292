#pragma once

// Brute-force reference solvers. These deliberately use plain loops over
// DenseMatrix entries and share no code with the solvers they check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lowrank/cost.hpp"
#include "lowrank/error.hpp"
#include "lowrank/finite_field.hpp"
#include "lowrank/inner_product.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

inline constexpr double kOracleCap = 16777216.0;  // 2^24 candidates

struct OracleResult {
  double opt_cost = 0.0;
  FactorPair witness;
  std::uint64_t enumerated = 0;
};

enum class EnumerationSide { Auto, V, U };

namespace detail {

inline void require_oracle_cap(double required, const char* what) {
  if (!(required <= kOracleCap)) throw BudgetExceeded(what, required, kOracleCap);
}

/// Bits of `code` as a rows x cols Binary matrix (entry e = bit e, row-major).
inline DenseMatrix bits_matrix(std::uint64_t code, std::size_t rows, std::size_t cols) {
  DenseMatrix m(rows, cols, Domain::binary());
  for (std::size_t e = 0; e < rows * cols; ++e) m.set(e / cols, e % cols, (code >> e) & 1 ? 1.0 : 0.0);
  return m;
}

/// Best response U for fixed V by direct recount, one row at a time.
inline std::pair<DenseMatrix, double> oracle_best_u(const DenseMatrix& a, const DenseMatrix& v,
                                                    const InnerProductTable& ip) {
  const std::size_t k = v.rows();
  DenseMatrix u(a.rows(), k, Domain::binary());
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Label arg = 0;
    for (Label x = 0; x < (Label{1} << k); ++x) {
      double c = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) {
        Label y = 0;
        for (std::size_t l = 0; l < k; ++l) y = (y << 1) | static_cast<Label>(v.residue(l, j));
        c += ip(x, y) != a(i, j);
      }
      if (c < best) {
        best = c;
        arg = x;
      }
    }
    for (std::size_t l = 0; l < k; ++l) u.set(i, l, (arg >> (k - 1 - l)) & 1 ? 1.0 : 0.0);
    total += best;
  }
  return {std::move(u), total};
}

}  // namespace detail

/// Exact optimum of the generalized binary problem: enumerate every V (or
/// every U), pair it with its best response, keep the minimum.
inline OracleResult brute_force_binary(const DenseMatrix& a, std::size_t k, const InnerProductTable& ip,
                                       EnumerationSide side = EnumerationSide::Auto) {
  if (!a.domain().is_binary()) throw ContractError("brute_force_binary needs a Binary A");
  if (ip.rank() != k) throw ContractError("inner product table rank differs from k");
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  if (side == EnumerationSide::Auto) side = n < d ? EnumerationSide::U : EnumerationSide::V;
  const std::size_t free_bits = k * (side == EnumerationSide::V ? d : n);
  detail::require_oracle_cap(std::ldexp(1.0, static_cast<int>(free_bits)), "brute_force_binary");

  OracleResult r;
  r.opt_cost = std::numeric_limits<double>::infinity();
  const std::uint64_t total = std::uint64_t{1} << free_bits;
  // Transposing A swaps the roles of U and V only for symmetric tables, so
  // U-enumeration evaluates columns directly instead.
  for (std::uint64_t code = 0; code < total; ++code) {
    FactorPair fp;
    if (side == EnumerationSide::V) {
      fp.v = detail::bits_matrix(code, k, d);
      auto [u, c] = detail::oracle_best_u(a, fp.v, ip);
      fp.u = std::move(u);
      fp.cost = c;
    } else {
      fp.u = detail::bits_matrix(code, n, k);
      fp.v = DenseMatrix(k, d, Domain::binary());
      double c = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double best = std::numeric_limits<double>::infinity();
        Label arg = 0;
        for (Label y = 0; y < (Label{1} << k); ++y) {
          double cc = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            Label x = 0;
            for (std::size_t l = 0; l < k; ++l) x = (x << 1) | static_cast<Label>(fp.u.residue(i, l));
            cc += ip(x, y) != a(i, j);
          }
          if (cc < best) {
            best = cc;
            arg = y;
          }
        }
        for (std::size_t l = 0; l < k; ++l) fp.v.set(l, j, (arg >> (k - 1 - l)) & 1 ? 1.0 : 0.0);
        c += best;
      }
      fp.cost = c;
    }
    ++r.enumerated;
    if (fp.cost < r.opt_cost) {
      r.opt_cost = fp.cost;
      r.witness = std::move(fp);
    }
  }
  return r;
}

/// Exact optimum of ||A - U V||_0 over F_q by V-enumeration with per-row
/// best responses.
inline OracleResult brute_force_fq(const DenseMatrix& a, std::size_t k) {
  if (!a.domain().is_fq()) throw ContractError("brute_force_fq needs an F_q matrix");
  const int q = a.domain().q;
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  detail::require_oracle_cap(std::pow(static_cast<double>(q), static_cast<double>(k * d)), "brute_force_fq");
  const FiniteField f(q);
  const std::uint64_t total = static_cast<std::uint64_t>(std::llround(std::pow(q, static_cast<double>(k * d))));
  const std::uint64_t rows_total = static_cast<std::uint64_t>(std::llround(std::pow(q, static_cast<double>(k))));
  OracleResult r;
  r.opt_cost = std::numeric_limits<double>::infinity();
  for (std::uint64_t code = 0; code < total; ++code) {
    DenseMatrix v(k, d, a.domain());
    std::uint64_t c = code;
    for (std::size_t e = 0; e < k * d; ++e) {
      v.set(e / d, e % d, static_cast<double>(c % static_cast<std::uint64_t>(q)));
      c /= static_cast<std::uint64_t>(q);
    }
    DenseMatrix u(n, k, a.domain());
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint64_t arg = 0;
      for (std::uint64_t x = 0; x < rows_total; ++x) {
        std::vector<int> xs(k);
        std::uint64_t xc = x;
        for (std::size_t l = 0; l < k; ++l) {
          xs[l] = static_cast<int>(xc % static_cast<std::uint64_t>(q));
          xc /= static_cast<std::uint64_t>(q);
        }
        double mism = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          int s = 0;
          for (std::size_t l = 0; l < k; ++l) s = f.add(s, f.mul(xs[l], v.residue(l, j)));
          mism += s != a.residue(i, j);
        }
        if (mism < best) {
          best = mism;
          arg = x;
        }
      }
      for (std::size_t l = 0; l < k; ++l) {
        u.set(i, l, static_cast<double>(arg % static_cast<std::uint64_t>(q)));
        arg /= static_cast<std::uint64_t>(q);
      }
      cost += best;
    }
    ++r.enumerated;
    if (cost < r.opt_cost) {
      r.opt_cost = cost;
      r.witness = {std::move(u), std::move(v), cost};
    }
  }
  return r;
}

/// Exact optimum of ||U V - A||_p^p over U, V with every entry in `grid`
/// (V enumerated, each row of U chosen independently).
inline OracleResult brute_force_lp_grid(const DenseMatrix& a, std::size_t k, const std::vector<double>& grid,
                                        double p) {
  if (!a.domain().is_real()) throw ContractError("grid oracle needs a Real matrix");
  if (grid.empty()) throw ParameterError("grid must be nonempty");
  if (!(p > 0.0)) throw ParameterError("grid oracle needs p > 0");
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const double g = static_cast<double>(grid.size());
  detail::require_oracle_cap(std::pow(g, static_cast<double>(k * (n + d))), "brute_force_lp_grid");
  const auto vcount = static_cast<std::uint64_t>(std::llround(std::pow(g, static_cast<double>(k * d))));
  const auto ucount = static_cast<std::uint64_t>(std::llround(std::pow(g, static_cast<double>(k))));
  auto decode = [&](std::uint64_t code, std::size_t len) {
    std::vector<double> out(len);
    for (std::size_t e = 0; e < len; ++e) {
      out[e] = grid[code % grid.size()];
      code /= grid.size();
    }
    return out;
  };
  OracleResult r;
  r.opt_cost = std::numeric_limits<double>::infinity();
  for (std::uint64_t vc = 0; vc < vcount; ++vc) {
    const auto ve = decode(vc, k * d);
    DenseMatrix v(k, d, Domain::real(), ve);
    DenseMatrix u(n, k);
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::vector<double> arg;
      for (std::uint64_t uc = 0; uc < ucount; ++uc) {
        const auto ue = decode(uc, k);
        double c = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          double s = 0.0;
          for (std::size_t l = 0; l < k; ++l) s += ue[l] * v(l, j);
          c += std::pow(std::abs(s - a(i, j)), p);
        }
        if (c < best) {
          best = c;
          arg = ue;
        }
      }
      for (std::size_t l = 0; l < k; ++l) u.set(i, l, arg[l]);
      cost += best;
    }
    r.enumerated += ucount;
    if (cost < r.opt_cost) {
      r.opt_cost = cost;
      r.witness = {std::move(u), std::move(v), cost};
    }
  }
  return r;
}

inline OracleResult brute_force_l1_grid(const DenseMatrix& a, std::size_t k, const std::vector<double>& grid) {
  return brute_force_lp_grid(a, k, grid, 1.0);
}

/// Closed-form expectation of the estimated row cost under D_{V,t}:
/// clusters smaller than t are used whole; for larger ones each of the t
/// uniform samples mismatches with probability Z/|C_y|, so the expected
/// summand is alpha_y Z/|C_y|. `alpha` defaults to the exact sizes.
inline double expected_estimator(std::size_t i, Label x, const DenseMatrix& a, const DenseMatrix& v_true,
                                 std::size_t t, const InnerProductTable& ip,
                                 std::optional<std::vector<double>> alpha = std::nullopt) {
  const std::size_t k = v_true.rows();
  const std::size_t labels = std::size_t{1} << k;
  std::vector<double> size(labels, 0.0), mism(labels, 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    Label y = 0;
    for (std::size_t l = 0; l < k; ++l) y = (y << 1) | static_cast<Label>(v_true.residue(l, j));
    size[y] += 1.0;
    mism[y] += ip(x, y) != a(i, j);
  }
  (void)t;  // the expectation is the same in both regimes
  double total = 0.0;
  for (std::size_t y = 0; y < labels; ++y) {
    if (size[y] == 0.0) continue;
    const double al = alpha ? (*alpha)[y] : size[y];
    total += al * mism[y] / size[y];
  }
  return total;
}

}  // namespace lowrank
