#pragma once

// Entrywise lp rank-k approximation for 0 < p < 2 by guessing a sketched
// left factor over a finite grid (desk-scale version of the guess-a-sketch
// scheme), plus the exact per-row regressions it relies on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "lowrank/cost.hpp"
#include "lowrank/error.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/matrix.hpp"
#include "lowrank/random.hpp"
#include "lowrank/sketch.hpp"

namespace lowrank {

struct LpConfig {
  double p = 1.0;
  double eps = 0.5;
  std::size_t sketch_rows = 6;
  double grid_step = 1.0;
  double grid_bound = 2.0;
  /// Maximum number of sketched-factor guesses |G|^(m k).
  double budget = 1e6;
  std::uint64_t seed = 1;
  /// Sketch entries are rounded to multiples of this; zero keeps them exact.
  double sketch_quantum = 1e-3;
  /// Rows of the independent right sketch used when p < 1; zero selects max(m, 32).
  std::size_t right_sketch_rows = 0;
  /// Return an exact factorization when an integer-valued A has rank <= k.
  bool rank_shortcut = true;
};

/// Symmetric grid {-B, -B + step, ..., B'} with B' the last point <= B.
inline std::vector<double> make_grid(double step, double bound) {
  if (!(step > 0.0)) throw ParameterError("grid step must be positive");
  if (!(bound > 0.0)) throw ParameterError("grid bound must be positive");
  if (step > bound) throw ParameterError("grid step must not exceed the grid bound");
  const auto count = static_cast<std::size_t>(std::floor(2.0 * bound / step + 1e-9)) + 1;
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = -bound + static_cast<double>(i) * step;
    if (std::abs(g[i]) < step * 1e-9) g[i] = 0.0;
  }
  return g;
}

namespace detail {

/// Solves the k x k system m·x = b by Gaussian elimination with partial
/// pivoting. Returns nullopt if a pivot falls below tol.
inline std::optional<std::vector<double>> solve_small(std::vector<double> m, std::vector<double> b, double tol = 1e-12) {
  const std::size_t k = b.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::abs(m[r * k + c]) > std::abs(m[piv * k + c])) piv = r;
    if (std::abs(m[piv * k + c]) <= tol) return std::nullopt;
    if (piv != c) {
      for (std::size_t j = 0; j < k; ++j) std::swap(m[piv * k + j], m[c * k + j]);
      std::swap(b[piv], b[c]);
    }
    for (std::size_t r = c + 1; r < k; ++r) {
      const double f = m[r * k + c] / m[c * k + c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j < k; ++j) m[r * k + j] -= f * m[c * k + j];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(k);
  for (std::size_t c = k; c-- > 0;) {
    double s = b[c];
    for (std::size_t j = c + 1; j < k; ++j) s -= m[c * k + j] * x[j];
    x[c] = s / m[c * k + c];
  }
  return x;
}

/// Row objective sum_j |u·V_{:,j} - a_j|^p.
inline double row_objective(std::span<const double> u, const DenseMatrix& v, std::span<const double> a, double p) {
  double total = 0.0;
  for (std::size_t j = 0; j < v.cols(); ++j) {
    double r = -a[j];
    for (std::size_t l = 0; l < u.size(); ++l) r += u[l] * v(l, j);
    total += p == 1.0 ? std::abs(r) : std::pow(std::abs(r), p);
  }
  return total;
}

/// Indices of a maximal linearly independent subset of V's rows.
inline std::vector<std::size_t> independent_rows(const DenseMatrix& v) {
  const std::size_t k = v.rows();
  const std::size_t d = v.cols();
  std::vector<double> basis;  // orthonormalized accepted rows
  std::vector<std::size_t> keep;
  const double scale = std::max(1.0, v.max_abs());
  for (std::size_t l = 0; l < k; ++l) {
    std::vector<double> r(v.row(l).begin(), v.row(l).end());
    for (std::size_t b = 0; b < keep.size(); ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += r[j] * basis[b * d + j];
      for (std::size_t j = 0; j < d; ++j) r[j] -= dot * basis[b * d + j];
    }
    double norm = 0.0;
    for (double x : r) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= 1e-10 * scale) continue;
    for (double& x : r) x /= norm;
    basis.insert(basis.end(), r.begin(), r.end());
    keep.push_back(l);
  }
  return keep;
}

/// Exact l1 regression of one row: the optimum of min_u ||u·V - a||_1 is
/// attained where r independent columns have zero residual (r = rank V), so
/// enumerating those basic solutions is exact.
inline std::vector<double> l1_row_fit(const DenseMatrix& v, const std::vector<std::size_t>& rows,
                                      std::span<const double> a) {
  const std::size_t k = v.rows();
  const std::size_t d = v.cols();
  const std::size_t r = rows.size();
  std::vector<double> best(k, 0.0);
  double best_val = row_objective(best, v, a, 1.0);
  if (r == 0) return best;
  std::vector<std::size_t> cols(r);
  std::iota(cols.begin(), cols.end(), 0);
  std::vector<double> u(k, 0.0);
  while (true) {
    std::vector<double> m(r * r), b(r);
    for (std::size_t e = 0; e < r; ++e) {
      for (std::size_t f = 0; f < r; ++f) m[e * r + f] = v(rows[f], cols[e]);
      b[e] = a[cols[e]];
    }
    if (auto sol = solve_small(std::move(m), std::move(b), 1e-12)) {
      std::fill(u.begin(), u.end(), 0.0);
      for (std::size_t f = 0; f < r; ++f) u[rows[f]] = (*sol)[f];
      const double val = row_objective(u, v, a, 1.0);
      if (val < best_val) {
        best_val = val;
        best = u;
      }
    }
    // Next r-subset of [d] in lexicographic order.
    std::size_t i = r;
    while (i > 0 && cols[i - 1] == d - r + i - 1) --i;
    if (i == 0) break;
    ++cols[i - 1];
    for (std::size_t j = i; j < r; ++j) cols[j] = cols[j - 1] + 1;
  }
  return best;
}

/// Gradient of sum_j |r_j|^p with respect to u (p > 1).
inline std::vector<double> lp_gradient(std::span<const double> u, const DenseMatrix& v, std::span<const double> a,
                                       double p) {
  std::vector<double> g(u.size(), 0.0);
  for (std::size_t j = 0; j < v.cols(); ++j) {
    double r = -a[j];
    for (std::size_t l = 0; l < u.size(); ++l) r += u[l] * v(l, j);
    const double w = r == 0.0 ? 0.0 : p * std::pow(std::abs(r), p - 1.0) * (r > 0 ? 1.0 : -1.0);
    for (std::size_t l = 0; l < u.size(); ++l) g[l] += w * v(l, j);
  }
  return g;
}

inline double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// lp regression of one row for 1 < p < 2: IRLS started from least squares,
/// then cyclic coordinate bisection on the (monotone) partial derivative.
inline std::vector<double> lp_row_fit(const DenseMatrix& v, const std::vector<std::size_t>& rows,
                                      std::span<const double> a, double p) {
  const std::size_t k = v.rows();
  const std::size_t d = v.cols();
  const std::size_t r = rows.size();
  std::vector<double> u(k, 0.0);
  if (r == 0) return u;
  constexpr double kGradTol = 1e-9;
  constexpr int kMaxIter = 500;
  std::vector<double> w(d, 1.0);
  for (int it = 0; it < kMaxIter; ++it) {
    std::vector<double> m(r * r, 0.0), b(r, 0.0);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t e = 0; e < r; ++e) {
        b[e] += w[j] * v(rows[e], j) * a[j];
        for (std::size_t f = 0; f < r; ++f) m[e * r + f] += w[j] * v(rows[e], j) * v(rows[f], j);
      }
    auto sol = solve_small(std::move(m), std::move(b), 1e-300);
    if (!sol) break;
    std::vector<double> cand(k, 0.0);
    for (std::size_t f = 0; f < r; ++f) cand[rows[f]] = (*sol)[f];
    if (it > 0 && row_objective(cand, v, a, p) > row_objective(u, v, a, p)) break;
    u = cand;
    if (norm2(lp_gradient(u, v, a, p)) <= kGradTol) return u;
    for (std::size_t j = 0; j < d; ++j) {
      double res = -a[j];
      for (std::size_t l = 0; l < k; ++l) res += u[l] * v(l, j);
      w[j] = std::pow(std::max(std::abs(res), 1e-12), p - 2.0);
    }
  }
  // Coordinate bisection polish: each 1-D slice is convex, so bisect on the
  // sign of the partial derivative.
  double scale = 1.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  for (double x : u) scale = std::max(scale, std::abs(x));
  for (int cycle = 0; cycle < 200; ++cycle) {
    for (std::size_t f : rows) {
      auto partial = [&](double t) {
        std::vector<double> uu = u;
        uu[f] = t;
        return lp_gradient(uu, v, a, p)[f];
      };
      double lo = u[f] - scale, hi = u[f] + scale;
      while (partial(lo) > 0) lo -= 2.0 * (hi - lo);
      while (partial(hi) < 0) hi += 2.0 * (hi - lo);
      for (int s = 0; s < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++s) {
        const double mid = 0.5 * (lo + hi);
        (partial(mid) > 0 ? hi : lo) = mid;
      }
      u[f] = 0.5 * (lo + hi);
    }
    if (norm2(lp_gradient(u, v, a, p)) <= kGradTol) break;
  }
  return u;
}

}  // namespace detail

/// Row-separable minimizer of ||U·V - A||_p^p over real U for p >= 1.
/// p = 1 is solved exactly by basic-solution enumeration; 1 < p < 2 by
/// IRLS with coordinate-bisection polishing.
inline DenseMatrix fit_U_given_V(const DenseMatrix& a, const DenseMatrix& v, double p) {
  if (!(p >= 1.0)) throw ContractError("fit_U_given_V is only convex for p >= 1; use the right-sketch path for p < 1");
  if (a.cols() != v.cols()) throw DimensionError("fit_U_given_V: A and V column counts differ");
  const auto rows = detail::independent_rows(v);
  DenseMatrix u(a.rows(), v.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto sol = p == 1.0 ? detail::l1_row_fit(v, rows, a.row(i)) : detail::lp_row_fit(v, rows, a.row(i), p);
    for (std::size_t l = 0; l < v.rows(); ++l) u.set(i, l, sol[l]);
  }
  return u;
}

struct DiscretizationParams {
  double theta = 0.0;
  double delta = 0.0;
  double bound = 0.0;
};

/// Grid pair suggested by the analysis: theta = n d gamma^2 (gamma = max
/// |A_ij|, at least 1), delta = eps / (n k theta^k) clipped below by
/// `delta_floor`, bound = n d gamma k / eps clipped above by `bound_cap`.
inline DiscretizationParams discretization_params(const DenseMatrix& a, std::size_t k, double eps,
                                                  double delta_floor = 1e-9, double bound_cap = 1e9) {
  const double n = static_cast<double>(a.rows());
  const double d = static_cast<double>(a.cols());
  const double gamma = std::max(1.0, a.max_abs());
  DiscretizationParams r;
  r.theta = n * d * gamma * gamma;
  r.delta = std::max(eps / (n * static_cast<double>(k) * std::pow(r.theta, static_cast<double>(k))), delta_floor);
  r.bound = std::min(n * d * gamma * static_cast<double>(k) / eps, bound_cap);
  return r;
}

/// Number of guesses |G|^(m k) for a configuration (saturating).
inline double lp_guess_count(const LpConfig& cfg, std::size_t k) {
  const auto g = static_cast<double>(make_grid(cfg.grid_step, cfg.grid_bound).size());
  const double v = std::pow(g, static_cast<double>(cfg.sketch_rows * k));
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

namespace detail {

inline void validate_lp(const DenseMatrix& a, std::size_t k, const LpConfig& cfg) {
  if (!a.domain().is_real()) throw ContractError("lp PTAS needs a Real matrix");
  if (k == 0) throw ParameterError("rank k must be positive");
  if (!(cfg.p > 0.0 && cfg.p < 2.0)) throw ParameterError("lp PTAS needs p in (0, 2)");
  if (cfg.sketch_rows == 0) throw ParameterError("sketch needs at least one row");
  if (!(cfg.grid_step > 0.0)) throw ParameterError("grid step must be positive");
}

/// Minimizes med(h·c - target) over grid vectors c in G^k. `h` is m x k
/// row-major; products for every candidate are precomputed in `images`.
struct GridCandidates {
  std::vector<double> values;  // count x k, lexicographic over G^k
  std::size_t k = 0;
  std::size_t count() const { return k ? values.size() / k : 0; }
};

inline GridCandidates grid_candidates(const std::vector<double>& grid, std::size_t k) {
  GridCandidates c;
  c.k = k;
  std::size_t count = 1;
  for (std::size_t l = 0; l < k; ++l) count *= grid.size();
  c.values.resize(count * k);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t r = idx;
    for (std::size_t l = k; l-- > 0;) {
      c.values[idx * k + l] = grid[r % grid.size()];
      r /= grid.size();
    }
  }
  return c;
}

inline void candidate_images(const std::vector<double>& h, std::size_t m, const GridCandidates& cand,
                             std::vector<double>& images) {
  const std::size_t k = cand.k;
  images.assign(cand.count() * m, 0.0);
  for (std::size_t c = 0; c < cand.count(); ++c)
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += h[r * k + l] * cand.values[c * k + l];
      images[c * m + r] = s;
    }
}

/// Index of the first candidate minimizing med(image - target).
inline std::size_t best_median_candidate(const std::vector<double>& images, std::size_t m, std::size_t count,
                                         std::span<const double> target, std::vector<double>& scratch) {
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  scratch.resize(m);
  const std::size_t mid = (m + 1) / 2 - 1;
  for (std::size_t c = 0; c < count; ++c) {
    for (std::size_t r = 0; r < m; ++r) scratch[r] = std::abs(images[c * m + r] - target[r]);
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid), scratch.end());
    if (scratch[mid] < best_val) {
      best_val = scratch[mid];
      best = c;
    }
  }
  return best;
}

}  // namespace detail

/// Guess-a-sketch PTAS for p in (0, 2) with an explicit left sketch S
/// (m x n). For p < 1 an independent right sketch is drawn from cfg.seed.
inline FactorPair lp_rank_k_ptas(const DenseMatrix& a, std::size_t k, const LpConfig& cfg, const StableSketch& s) {
  detail::validate_lp(a, k, cfg);
  if (s.cols() != a.rows()) throw DimensionError("left sketch width must equal the row count of A");
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const std::size_t m = s.rows();
  const double p = cfg.p;

  if (cfg.rank_shortcut && a.is_integer_valued() && a.max_abs() < 0x1.0p52 && integer_rank(a) <= k) {
    FactorPair fp = column_basis_factorization(a, k);
    fp.cost = lp_cost(a, real_product(fp.u, fp.v), p);
    return fp;
  }

  const auto grid = make_grid(cfg.grid_step, cfg.grid_bound);
  const double required = std::pow(static_cast<double>(grid.size()), static_cast<double>(m * k));
  if (!(required <= cfg.budget)) throw BudgetExceeded("lp PTAS guess enumeration", required, cfg.budget);

  const DenseMatrix sa = sketch_apply(s, a);
  std::vector<std::vector<double>> sa_cols(d);
  for (std::size_t j = 0; j < d; ++j) sa_cols[j] = sa.column(j);
  const auto cand = detail::grid_candidates(grid, k);

  // Right sketch for p < 1: rows of U are chosen by med(u·(V T) - (A T)_i).
  std::optional<StableSketch> right;
  std::vector<std::vector<double>> at_rows;
  if (p < 1.0) {
    const std::size_t m2 = cfg.right_sketch_rows ? cfg.right_sketch_rows : std::max<std::size_t>(m, 32);
    StableSketch t = StableSketch::sample(m2, d, p, hash64(cfg.seed, std::string_view("right")));
    if (cfg.sketch_quantum > 0.0) t = t.rounded(cfg.sketch_quantum);
    const DenseMatrix at = sketch_apply(t, a.transpose());  // m2 x n
    at_rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) at_rows[i] = at.column(i);
    right = std::move(t);
  }

  auto fit_u = [&](const DenseMatrix& v) -> DenseMatrix {
    if (p >= 1.0) return fit_U_given_V(a, v, p);
    const std::size_t m2 = right->rows();
    const DenseMatrix h = sketch_apply(*right, v.transpose());  // m2 x k
    std::vector<double> hv(h.entries().begin(), h.entries().end());
    std::vector<double> images, scratch;
    detail::candidate_images(hv, m2, cand, images);
    DenseMatrix u(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = detail::best_median_candidate(images, m2, cand.count(), at_rows[i], scratch);
      for (std::size_t l = 0; l < k; ++l) u.set(i, l, cand.values[c * k + l]);
    }
    return u;
  };

  std::map<std::vector<std::size_t>, double> seen;  // chosen V (by candidate index) -> cost
  FactorPair best;
  best.cost = std::numeric_limits<double>::infinity();
  const auto total = static_cast<std::uint64_t>(required);
  std::vector<std::size_t> digits(m * k, 0);
  std::vector<double> h(m * k, grid[0]);
  std::vector<double> images, scratch;
  std::vector<std::size_t> choice(d);
  for (std::uint64_t g = 0; g < total; ++g) {
    if (g > 0) {
      for (std::size_t e = digits.size(); e-- > 0;) {
        if (++digits[e] < grid.size()) {
          h[e] = grid[digits[e]];
          break;
        }
        digits[e] = 0;
        h[e] = grid[0];
      }
    }
    detail::candidate_images(h, m, cand, images);
    for (std::size_t j = 0; j < d; ++j)
      choice[j] = detail::best_median_candidate(images, m, cand.count(), sa_cols[j], scratch);
    if (seen.count(choice)) continue;
    DenseMatrix v(k, d);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t l = 0; l < k; ++l) v.set(l, j, cand.values[choice[j] * k + l]);
    DenseMatrix u = fit_u(v);
    const double cost = lp_cost(a, real_product(u, v), p);
    seen.emplace(choice, cost);
    if (cost < best.cost) best = {std::move(u), std::move(v), cost};
  }
  return best;
}

/// Guess-a-sketch PTAS drawing its left p-stable sketch from cfg.seed.
inline FactorPair lp_rank_k_ptas(const DenseMatrix& a, std::size_t k, const LpConfig& cfg) {
  detail::validate_lp(a, k, cfg);
  StableSketch s = StableSketch::sample(cfg.sketch_rows, std::max<std::size_t>(a.rows(), 1), cfg.p, cfg.seed);
  if (cfg.sketch_quantum > 0.0) s = s.rounded(cfg.sketch_quantum);
  return lp_rank_k_ptas(a, k, cfg, s);
}

/// The p = 1 instance of lp_rank_k_ptas.
inline FactorPair l1_rank_k_ptas(const DenseMatrix& a, std::size_t k, LpConfig cfg) {
  cfg.p = 1.0;
  return lp_rank_k_ptas(a, k, cfg);
}

}  // namespace lowrank
