#pragma once

// Generalized binary l0 rank-k approximation: min ||A - U ∘ V||_0 over
// binary U (n x k), V (k x d), where (U ∘ V)_ij = <U_{i,:}, V_{:,j}> under an
// explicit inner-product table. Viewed as clustering: column j of A is
// assigned the center U ∘ y of its label y = V_{:,j}.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "lowrank/cost.hpp"
#include "lowrank/error.hpp"
#include "lowrank/inner_product.hpp"
#include "lowrank/matrix.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

/// Column partition induced by the labels y_j = V_{:,j}.
struct Clustering {
  std::size_t k = 0;
  std::vector<Label> assignment;

  static Clustering from_v(const DenseMatrix& v) {
    if (!v.domain().is_binary()) throw ContractError("clustering needs a Binary V");
    Clustering c;
    c.k = v.rows();
    c.assignment.resize(v.cols());
    for (std::size_t j = 0; j < v.cols(); ++j) c.assignment[j] = col_label(v, j);
    return c;
  }

  std::size_t labels() const { return std::size_t{1} << k; }

  /// C_y for every label y, each sorted ascending.
  std::vector<std::vector<std::size_t>> sets() const {
    std::vector<std::vector<std::size_t>> s(labels());
    for (std::size_t j = 0; j < assignment.size(); ++j) s[assignment[j]].push_back(j);
    return s;
  }

  DenseMatrix to_v() const { return matrix_from_col_labels(assignment, k); }
};

/// Per-label multisets of column indices with approximate cluster sizes.
struct SampleFamily {
  std::size_t k = 0;
  std::size_t t = 0;
  std::vector<std::vector<std::size_t>> members;  // sorted, with multiplicity
  std::vector<std::size_t> alpha;

  static SampleFamily empty(std::size_t k, std::size_t t) {
    SampleFamily f;
    f.k = k;
    f.t = t;
    f.members.assign(std::size_t{1} << k, {});
    f.alpha.assign(std::size_t{1} << k, 0);
    return f;
  }

  /// The exact clustering as a family: every C_y in full with alpha = |C_y|.
  static SampleFamily exact(const Clustering& c, std::size_t t) {
    SampleFamily f = empty(c.k, t);
    f.members = c.sets();
    for (std::size_t y = 0; y < f.members.size(); ++y) f.alpha[y] = f.members[y].size();
    return f;
  }

  std::size_t labels() const { return std::size_t{1} << k; }

  /// Structural checks: label count, index range and alpha = 0 <=> empty.
  void validate(std::size_t d) const {
    if (members.size() != labels() || alpha.size() != labels()) throw ContractError("family label count != 2^k");
    for (std::size_t y = 0; y < labels(); ++y) {
      if ((alpha[y] == 0) != members[y].empty()) throw ContractError("family: alpha_y = 0 must match an empty sample");
      for (auto j : members[y])
        if (j >= d) throw ContractError("family: column index out of range");
    }
  }

  /// Sampled-family rules: at most t members, and exactly alpha distinct
  /// members whenever alpha < t.
  bool well_formed() const {
    for (std::size_t y = 0; y < labels(); ++y) {
      if (members[y].size() > t && alpha[y] >= t) return false;
      if (alpha[y] < t) {
        if (members[y].size() != alpha[y]) return false;
        if (std::adjacent_find(members[y].begin(), members[y].end()) != members[y].end()) return false;
      }
    }
    return true;
  }
};

/// Theory sample size 2^(4k+14) / eps^2 (reference value only).
inline double theory_sample_size(std::size_t k, double eps) {
  return std::ldexp(1.0, static_cast<int>(4 * k + 14)) / (eps * eps);
}

namespace detail {

/// Bit-packed view of a binary instance: columns of A as row bitsets plus
/// the table reduced to "value 0 / value 1 / never equal to a bit".
class BinaryEngine {
 public:
  BinaryEngine(const DenseMatrix& a, const InnerProductTable& ip)
      : n_(a.rows()), d_(a.cols()), k_(ip.rank()), labels_(std::size_t{1} << ip.rank()), words_((a.rows() + 63) / 64) {
    if (!a.domain().is_binary()) throw ContractError("binary l0 needs a Binary A");
    cols_.assign(d_ * words_, 0);
    bytes_.assign(d_ * n_, 0);
    for (std::size_t j = 0; j < d_; ++j)
      for (std::size_t i = 0; i < n_; ++i)
        if (a.residue(i, j)) {
          cols_[j * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
          bytes_[j * n_ + i] = 1;
        }
    type_.resize(labels_ * labels_);
    for (std::size_t x = 0; x < labels_; ++x)
      for (std::size_t y = 0; y < labels_; ++y) {
        const double v = ip(static_cast<Label>(x), static_cast<Label>(y));
        type_[x * labels_ + y] = v == 0.0 ? 0 : v == 1.0 ? 1 : 2;
      }
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  std::size_t k() const { return k_; }
  std::size_t labels() const { return labels_; }
  std::uint8_t bit(std::size_t i, std::size_t j) const { return bytes_[j * n_ + i]; }
  const std::uint8_t* column_bytes(std::size_t j) const { return bytes_.data() + j * n_; }
  /// Table class of <x,y>: 0, 1, or 2 (a value no bit can equal).
  std::uint8_t type(Label x, Label y) const { return type_[x * labels_ + y]; }

  std::size_t column_distance(std::size_t j1, std::size_t j2) const {
    std::size_t s = 0;
    for (std::size_t w = 0; w < words_; ++w) s += std::popcount(cols_[j1 * words_ + w] ^ cols_[j2 * words_ + w]);
    return s;
  }

  /// Adds label y's estimated mismatch cost to every (row, x) entry:
  /// out[i*L + x] = base[i*L + x] + w * mismatches(<x,y>, ones[i], cnt).
  void add_label_cost(const double* base, const std::uint32_t* ones, double cnt, double w, Label y,
                      double* out) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const double o = ones[i];
      const double vals[3] = {w * o, w * (cnt - o), w * cnt};
      for (std::size_t x = 0; x < labels_; ++x)
        out[i * labels_ + x] = base[i * labels_ + x] + vals[type_[x * labels_ + y]];
    }
  }

  /// Per-row argmin of a cost table (ties within 1e-9 to the smallest label).
  void rows_from_costs(const double* costs, std::vector<Label>& out) const {
    out.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* c = costs + i * labels_;
      Label best = 0;
      for (std::size_t x = 1; x < labels_; ++x)
        if (c[x] < c[best] - 1e-9) best = static_cast<Label>(x);
      out[i] = best;
    }
  }

  /// Row labels minimizing sum_y w_y * mismatches(<x,y>, ones_y[i], cnt_y),
  /// i.e. the (estimated) row costs. Labels with ones[y] == nullptr are
  /// skipped.
  void best_rows(const std::vector<const std::uint32_t*>& ones, const std::vector<double>& cnt,
                 const std::vector<double>& weight, std::vector<Label>& out) const {
    scratch_.assign(n_ * labels_, 0.0);
    for (std::size_t y = 0; y < labels_; ++y)
      if (ones[y]) add_label_cost(scratch_.data(), ones[y], cnt[y], weight[y], static_cast<Label>(y), scratch_.data());
    rows_from_costs(scratch_.data(), out);
  }

  /// Best-response column labels for fixed row labels; returns the exact cost.
  std::size_t best_columns(const std::vector<Label>& rows, std::vector<Label>* out) const {
    // Rows grouped by label, then centers: bit i of centers[y] is <rows[i],y>
    // == 1, bit i of never[y] marks a value no entry can match.
    rowmask_.assign(labels_ * words_, 0);
    for (std::size_t i = 0; i < n_; ++i) rowmask_[rows[i] * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
    centers_.assign(labels_ * words_, 0);
    never_.assign(labels_ * words_, 0);
    for (std::size_t x = 0; x < labels_; ++x)
      for (std::size_t y = 0; y < labels_; ++y) {
        const std::uint8_t tp = type_[x * labels_ + y];
        if (tp == 0) continue;
        auto& dst = tp == 1 ? centers_ : never_;
        for (std::size_t w = 0; w < words_; ++w) dst[y * words_ + w] |= rowmask_[x * words_ + w];
      }
    if (out) out->resize(d_);
    std::size_t total = 0;
    for (std::size_t j = 0; j < d_; ++j) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      Label arg = 0;
      const std::uint64_t* col = cols_.data() + j * words_;
      for (std::size_t y = 0; y < labels_; ++y) {
        std::size_t c = 0;
        for (std::size_t w = 0; w < words_; ++w)
          c += std::popcount((col[w] ^ centers_[y * words_ + w]) | never_[y * words_ + w]);
        if (c < best) {
          best = c;
          arg = static_cast<Label>(y);
        }
      }
      total += best;
      if (out) (*out)[j] = arg;
    }
    return total;
  }

  /// Exact cost of (row labels, column labels).
  std::size_t cost(const std::vector<Label>& rows, const std::vector<Label>& cols) const {
    std::size_t total = 0;
    for (std::size_t j = 0; j < d_; ++j)
      for (std::size_t i = 0; i < n_; ++i) {
        const std::uint8_t tp = type_[rows[i] * labels_ + cols[j]];
        total += tp == 2 || tp != bytes_[j * n_ + i];
      }
    return total;
  }

  /// ||A_{:,j} - U ∘ y||_0 for row labels `rows`.
  std::size_t column_cost(const std::vector<Label>& rows, std::size_t j, Label y) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::uint8_t tp = type_[rows[i] * labels_ + y];
      c += tp == 2 || tp != bytes_[j * n_ + i];
    }
    return c;
  }

  /// Per-label row sums of A over a multiset of columns.
  void accumulate(std::uint32_t* ones, std::size_t j) const {
    const std::uint8_t* b = bytes_.data() + j * n_;
    for (std::size_t i = 0; i < n_; ++i) ones[i] += b[i];
  }

 private:
  std::size_t n_, d_, k_, labels_, words_;
  std::vector<std::uint64_t> cols_;
  std::vector<std::uint8_t> bytes_;
  std::vector<std::uint8_t> type_;
  // Scratch space: an engine must not be shared between threads.
  mutable std::vector<double> scratch_;
  mutable std::vector<std::uint64_t> rowmask_, centers_, never_;
};

inline void require_instance(const DenseMatrix& a, std::size_t k, const InnerProductTable& ip) {
  if (!a.domain().is_binary()) throw ContractError("binary l0 needs a Binary A");
  if (k != ip.rank())
    throw ContractError("inner product table has rank " + std::to_string(ip.rank()) + ", requested k=" +
                        std::to_string(k));
}

/// Row sums per label of a family, in the layout best_rows expects.
struct FamilyStats {
  std::vector<std::vector<std::uint32_t>> ones;
  std::vector<const std::uint32_t*> ptr;
  std::vector<double> cnt, weight;

  FamilyStats(const BinaryEngine& e, const SampleFamily& f) {
    const std::size_t l = e.labels();
    ones.assign(l, {});
    ptr.assign(l, nullptr);
    cnt.assign(l, 0.0);
    weight.assign(l, 0.0);
    for (std::size_t y = 0; y < l; ++y) {
      if (f.alpha[y] == 0 || f.members[y].empty()) continue;
      ones[y].assign(e.n(), 0);
      for (auto j : f.members[y]) e.accumulate(ones[y].data(), j);
      ptr[y] = ones[y].data();
      cnt[y] = static_cast<double>(f.members[y].size());
      weight[y] = static_cast<double>(f.alpha[y]) / cnt[y];
    }
  }
};

inline FactorPair labels_to_pair(const std::vector<Label>& rows, const std::vector<Label>& cols, std::size_t k,
                                 double cost) {
  return {matrix_from_row_labels(rows, k), matrix_from_col_labels(cols, k), cost};
}

}  // namespace detail

/// Exact column-wise best response: each V_{:,j} minimizes
/// ||A_{:,j} - U ∘ y||_0 over y, ties to the smallest label.
inline DenseMatrix best_response_V(const DenseMatrix& a, const DenseMatrix& u, const InnerProductTable& ip) {
  detail::require_instance(a, u.cols(), ip);
  if (u.rows() != a.rows()) throw DimensionError("best_response_V: U rows != A rows");
  const detail::BinaryEngine e(a, ip);
  std::vector<Label> rows(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) rows[i] = row_label(u, i);
  std::vector<Label> cols;
  e.best_columns(rows, &cols);
  return matrix_from_col_labels(cols, ip.rank());
}

/// Exact row-wise best response: each U_{i,:} minimizes the row cost
/// against the clusters of V, ties to the smallest label.
inline DenseMatrix best_response_U(const DenseMatrix& a, const DenseMatrix& v, const InnerProductTable& ip) {
  detail::require_instance(a, v.rows(), ip);
  if (v.cols() != a.cols()) throw DimensionError("best_response_U: V cols != A cols");
  const detail::BinaryEngine e(a, ip);
  const auto fam = SampleFamily::exact(Clustering::from_v(v), std::max<std::size_t>(a.cols(), 1) + 1);
  const detail::FamilyStats st(e, fam);
  std::vector<Label> rows;
  e.best_rows(st.ptr, st.cnt, st.weight, rows);
  return matrix_from_row_labels(rows, ip.rank());
}

/// Z_{i,y,b}: number of columns j in C_y with A_ij = b.
inline std::size_t cluster_count(const DenseMatrix& a, std::size_t i, const std::vector<std::size_t>& members, int b) {
  std::size_t z = 0;
  for (auto j : members) z += a.residue(i, j) == b;
  return z;
}

/// E_{i,x} = sum_y Z_{i,y,≠<x,y>}: cost of row i if it were set to x.
inline std::size_t exact_row_cost(std::size_t i, Label x, const DenseMatrix& a, const Clustering& c,
                                  const InnerProductTable& ip) {
  const auto sets = c.sets();
  std::size_t total = 0;
  for (std::size_t y = 0; y < sets.size(); ++y) {
    const double v = ip(x, static_cast<Label>(y));
    if (v == 0.0)
      total += cluster_count(a, i, sets[y], 1);
    else if (v == 1.0)
      total += cluster_count(a, i, sets[y], 0);
    else
      total += sets[y].size();
  }
  return total;
}

/// Estimated row cost sum_y (alpha_y / |C~_y|) Z~_{i,y,≠<x,y>}, empty labels
/// contributing zero.
inline double estimated_row_cost(std::size_t i, Label x, const DenseMatrix& a, const SampleFamily& f,
                                 const InnerProductTable& ip) {
  f.validate(a.cols());
  double total = 0.0;
  for (std::size_t y = 0; y < f.labels(); ++y) {
    if (f.members[y].empty()) continue;
    const double v = ip(x, static_cast<Label>(y));
    const double size = static_cast<double>(f.members[y].size());
    double z;
    if (v == 0.0)
      z = static_cast<double>(cluster_count(a, i, f.members[y], 1));
    else if (v == 1.0)
      z = static_cast<double>(cluster_count(a, i, f.members[y], 0));
    else
      z = size;
    total += static_cast<double>(f.alpha[y]) / size * z;
  }
  return total;
}

/// Ũ: row i is the smallest label minimizing the estimated row cost.
inline DenseMatrix build_U_tilde(const DenseMatrix& a, const SampleFamily& f, const InnerProductTable& ip) {
  detail::require_instance(a, f.k, ip);
  f.validate(a.cols());
  const detail::BinaryEngine e(a, ip);
  const detail::FamilyStats st(e, f);
  std::vector<Label> rows;
  e.best_rows(st.ptr, st.cnt, st.weight, rows);
  return matrix_from_row_labels(rows, f.k);
}

/// (Ũ, best response to Ũ) with its exact cost.
inline FactorPair estimate_best_response(const DenseMatrix& a, const SampleFamily& f, const InnerProductTable& ip) {
  detail::require_instance(a, f.k, ip);
  f.validate(a.cols());
  const detail::BinaryEngine e(a, ip);
  const detail::FamilyStats st(e, f);
  std::vector<Label> rows, cols;
  e.best_rows(st.ptr, st.cnt, st.weight, rows);
  const std::size_t cost = e.best_columns(rows, &cols);
  return detail::labels_to_pair(rows, cols, f.k, static_cast<double>(cost));
}

/// A draw from D_{V,t}: clusters smaller than t are taken whole, larger ones
/// contribute t uniform samples with replacement; alpha_y = |C_y|.
inline SampleFamily sample_from_truth(const DenseMatrix& v_true, std::size_t t, std::uint64_t seed) {
  if (t == 0) throw ParameterError("sample size t must be positive");
  const Clustering c = Clustering::from_v(v_true);
  SampleFamily f = SampleFamily::empty(c.k, t);
  const auto sets = c.sets();
  Rng rng(seed);
  for (std::size_t y = 0; y < sets.size(); ++y) {
    f.alpha[y] = sets[y].size();
    if (sets[y].size() < t) {
      f.members[y] = sets[y];
      continue;
    }
    f.members[y].resize(t);
    for (auto& m : f.members[y]) m = sets[y][rng.below(sets[y].size())];
    std::sort(f.members[y].begin(), f.members[y].end());
  }
  return f;
}

namespace detail {

/// Sizes {1..min(t-1, hi)} followed by a geometric net of [lo', hi] with
/// lo' = max(t, lo): a_{j+1} = max(a_j + 1, floor(a_j (1 + delta))), plus hi.
/// Every c in [lo', hi] has a net point in [c, (1 + delta) c].
inline std::vector<std::size_t> size_grid(std::size_t t, double lo, std::size_t hi, double delta) {
  std::vector<std::size_t> out;
  for (std::size_t a = 1; a < t && a <= hi; ++a) out.push_back(a);
  const std::size_t start = std::max<std::size_t>(t, static_cast<std::size_t>(std::ceil(lo - 1e-9)));
  if (start > hi) return out;
  for (std::size_t a = start; a <= hi;) {
    out.push_back(a);
    a = std::max(a + 1, static_cast<std::size_t>(std::floor(static_cast<double>(a) * (1.0 + delta))));
  }
  if (out.back() != hi) out.push_back(hi);
  return out;
}

inline double log_binomial(double n, double r) {
  if (r < 0 || r > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1) - std::lgamma(r + 1) - std::lgamma(n - r + 1);
}

}  // namespace detail

struct SimplePtasBudget {
  /// Maximum number of feasible size vectors alpha.
  double sizes = 1e6;
  /// Maximum number of families (estimate_best_response calls).
  double families = 1e7;
};

/// Planned enumeration of simple_ptas: feasible size vectors and families.
struct SimplePtasPlan {
  double size_vectors = 0;
  double families = 0;
};

namespace detail {

struct SimpleEnumerator {
  const BinaryEngine& e;
  std::size_t t;
  double delta;
  std::vector<std::size_t> grid;  // 0 plus size_grid
  std::vector<std::size_t> alpha;

  // Feasible iff sum_exact + sum_approx lo <= d <= sum_exact + sum_approx alpha,
  // with lo = max(t, ceil(alpha / (1 + delta))).
  static std::size_t lower_size(std::size_t a, std::size_t t, double delta) {
    if (a < t) return a;
    return std::max<std::size_t>(t, static_cast<std::size_t>(std::ceil(static_cast<double>(a) / (1.0 + delta) - 1e-9)));
  }

  template <class F>
  bool for_each_sizes(std::size_t y, std::size_t lo_sum, std::size_t hi_sum, F&& f) {
    const std::size_t d = e.d();
    if (y == e.labels()) {
      if (lo_sum <= d && d <= hi_sum) return f();
      return true;
    }
    for (std::size_t a : grid) {
      const std::size_t lo = lower_size(a, t, delta);
      if (lo_sum + lo > d) break;
      alpha[y] = a;
      if (!for_each_sizes(y + 1, lo_sum + lo, hi_sum + a, f)) return false;
    }
    alpha[y] = 0;
    return true;
  }

  double log_family_count() const {
    const double d = static_cast<double>(e.d());
    double lg = 0.0;
    double used = 0.0;
    for (std::size_t a : alpha)
      if (a > 0 && a < t) {
        lg += log_binomial(d - used, static_cast<double>(a));
        used += static_cast<double>(a);
      }
    const double rest = d - used;
    for (std::size_t a : alpha)
      if (a >= t) lg += log_binomial(rest + static_cast<double>(t) - 1.0, static_cast<double>(t));
    return lg;
  }
};

}  // namespace detail

inline SimplePtasPlan simple_ptas_plan(const DenseMatrix& a, std::size_t k, const InnerProductTable& ip, double eps,
                                       std::size_t t, const SimplePtasBudget& budget = {}) {
  detail::require_instance(a, k, ip);
  if (t == 0) throw ParameterError("sample size t must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
  const detail::BinaryEngine e(a, ip);
  detail::SimpleEnumerator en{e, t, eps / 6.0, {0}, std::vector<std::size_t>(e.labels(), 0)};
  for (auto s : detail::size_grid(t, static_cast<double>(t), e.d(), eps / 6.0)) en.grid.push_back(s);
  SimplePtasPlan plan;
  en.for_each_sizes(0, 0, 0, [&] {
    plan.size_vectors += 1;
    plan.families += std::exp(en.log_family_count());
    return plan.size_vectors <= budget.sizes;
  });
  return plan;
}

/// Exhaustive PTAS: every feasible size vector alpha (exact below t,
/// geometric above) and every family with, per label, alpha_y distinct
/// columns (alpha_y < t; labels pairwise disjoint) or a size-t multiset from
/// the remaining columns (alpha_y >= t). Returns the cheapest
/// estimate_best_response; ties keep the first in enumeration order.
inline FactorPair simple_ptas(const DenseMatrix& a, std::size_t k, const InnerProductTable& ip, double eps,
                              std::size_t t, const SimplePtasBudget& budget = {}) {
  const SimplePtasPlan plan = simple_ptas_plan(a, k, ip, eps, t, budget);
  if (plan.size_vectors > budget.sizes)
    throw BudgetExceeded("simple_ptas size vectors", plan.size_vectors, budget.sizes);
  if (plan.families > budget.families) throw BudgetExceeded("simple_ptas families", plan.families, budget.families);

  const detail::BinaryEngine e(a, ip);
  const std::size_t d = e.d();
  const std::size_t n = e.n();
  const std::size_t labels = e.labels();
  detail::SimpleEnumerator en{e, t, eps / 6.0, {0}, std::vector<std::size_t>(labels, 0)};
  for (auto s : detail::size_grid(t, static_cast<double>(t), d, eps / 6.0)) en.grid.push_back(s);

  std::size_t best_cost = std::numeric_limits<std::size_t>::max();
  std::vector<Label> rows, cols, best_rows, best_cols;
  std::vector<std::vector<std::uint32_t>> ones(labels, std::vector<std::uint32_t>(n, 0));
  std::vector<const std::uint32_t*> ptr(labels, nullptr);
  std::vector<double> cnt(labels, 0.0), weight(labels, 0.0);
  std::vector<char> used(d, 0);

  auto leaf = [&] {
    e.best_rows(ptr, cnt, weight, rows);
    const std::size_t c = e.best_columns(rows, &cols);
    if (c < best_cost) {
      best_cost = c;
      best_rows = rows;
      best_cols = cols;
    }
  };

  en.for_each_sizes(0, 0, 0, [&] {
    // Order: exact labels first (they claim columns), then approximate ones.
    std::vector<Label> order;
    for (std::size_t y = 0; y < labels; ++y)
      if (en.alpha[y] > 0 && en.alpha[y] < t) order.push_back(static_cast<Label>(y));
    for (std::size_t y = 0; y < labels; ++y)
      if (en.alpha[y] >= t) order.push_back(static_cast<Label>(y));
    std::fill(ptr.begin(), ptr.end(), nullptr);
    std::vector<std::size_t> pick;
    auto rec = [&](auto& self, std::size_t pos) -> void {
      if (pos == order.size()) {
        leaf();
        return;
      }
      const Label y = order[pos];
      const std::size_t a_y = en.alpha[y];
      const bool exact = a_y < t;
      const std::size_t m = exact ? a_y : t;
      std::vector<std::size_t> avail;
      for (std::size_t j = 0; j < d; ++j)
        if (!used[j]) avail.push_back(j);
      if (exact && avail.size() < m) return;
      if (!exact && avail.empty()) return;
      std::vector<std::size_t> idx(m, 0);
      if (exact) std::iota(idx.begin(), idx.end(), 0);
      cnt[y] = static_cast<double>(m);
      weight[y] = static_cast<double>(a_y) / static_cast<double>(m);
      ptr[y] = ones[y].data();
      while (true) {
        std::fill(ones[y].begin(), ones[y].end(), 0);
        for (auto q : idx) e.accumulate(ones[y].data(), avail[q]);
        if (exact)
          for (auto q : idx) used[avail[q]] = 1;
        self(self, pos + 1);
        if (exact)
          for (auto q : idx) used[avail[q]] = 0;
        // Advance: combinations for exact labels, non-decreasing tuples otherwise.
        std::size_t i = m;
        if (exact) {
          while (i > 0 && idx[i - 1] == avail.size() - m + i - 1) --i;
          if (i == 0) break;
          ++idx[i - 1];
          for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
        } else {
          while (i > 0 && idx[i - 1] == avail.size() - 1) --i;
          if (i == 0) break;
          ++idx[i - 1];
          for (std::size_t j = i; j < m; ++j) idx[j] = idx[i - 1];
        }
      }
      ptr[y] = nullptr;
      cnt[y] = weight[y] = 0.0;
    };
    rec(rec, 0);
    return true;
  });
  if (best_cost == std::numeric_limits<std::size_t>::max()) {
    std::fill(ptr.begin(), ptr.end(), nullptr);
    leaf();
  }
  return detail::labels_to_pair(best_rows, best_cols, k, static_cast<double>(best_cost));
}

struct SamplePtasOptions {
  double eps = 0.5;
  std::size_t t = 16;
  std::size_t restarts = 1;
  std::uint64_t seed = 1;
  /// Worker threads for restarts (0 = hardware concurrency).
  std::size_t threads = 1;
};

namespace detail {

/// One run of the Sample recursion. The estimated row costs of the labels
/// fixed so far travel down the recursion as an n x 2^k table per depth.
class SampleRecursion {
 public:
  SampleRecursion(const BinaryEngine& e, double eps, std::size_t t, std::uint64_t seed)
      : e_(e), eps_(eps), t_(t), rng_(seed) {
    const std::size_t l = e.labels();
    rep_.assign(l, -1);
    // Each level either fixes a label or halves the live columns.
    const std::size_t depth = l + std::bit_width(e.d()) + 2;
    ones_.assign(depth, std::vector<std::uint32_t>(e.n(), 0));
    costs_.assign(depth + 1, std::vector<double>(e.n() * l, 0.0));
  }

  void run() {
    std::vector<std::size_t> live(e_.d());
    std::iota(live.begin(), live.end(), 0);
    std::vector<Label> todo(e_.labels());
    std::iota(todo.begin(), todo.end(), 0);
    recurse(live, todo, capacity(e_.d()), 0, costs_[0].data());
  }

  std::size_t best_cost() const { return best_cost_; }
  const std::vector<Label>& best_rows() const { return best_rows_; }
  const std::vector<Label>& best_cols() const { return best_cols_; }
  std::size_t leaves() const { return leaves_; }

 private:
  std::size_t capacity(std::size_t dm) const {
    return static_cast<std::size_t>(std::floor(static_cast<double>(dm) * (1.0 + eps_ / 6.0) + 1e-9));
  }

  void leaf(const double* costs) {
    ++leaves_;
    e_.rows_from_costs(costs, next_rows_);
    // Same rows as the previous leaf: same best response, nothing to update.
    if (leaves_ > 1 && next_rows_ == rows_) return;
    rows_.swap(next_rows_);
    const std::size_t c = e_.best_columns(rows_, &cols_);
    if (c < best_cost_) {
      best_cost_ = c;
      best_rows_ = rows_;
      best_cols_ = cols_;
    }
  }

  void recurse(const std::vector<std::size_t>& live, const std::vector<Label>& todo, std::size_t cap,
               std::size_t depth, const double* base) {
    const std::size_t dm = live.size();
    // alpha_y = 0 for any guessed y: the current family as is.
    leaf(base);
    if (todo.empty() || dm == 0) return;

    const std::size_t l = e_.labels();
    const double nu = std::pow(eps_ / std::ldexp(1.0, static_cast<int>(e_.k() + 4)),
                               static_cast<double>(l + 2 - todo.size()));
    std::vector<std::size_t> grid = size_grid(t_, nu * static_cast<double>(dm), dm, eps_ / 6.0);
    while (!grid.empty() && grid.back() > cap) grid.pop_back();
    if (!grid.empty()) {
      const std::size_t draws = std::min(t_, grid.back());
      std::vector<std::size_t> seq(draws);
      std::vector<Label> rest;
      rest.reserve(todo.size() - 1);
      double* child = costs_[depth + 1].data();
      for (std::size_t pos = 0; pos < todo.size(); ++pos) {
        const Label y = todo[pos];
        rest.clear();
        for (auto z : todo)
          if (z != y) rest.push_back(z);
        for (auto& s : seq) s = live[rng_.below(dm)];
        auto& ones = ones_[depth];
        std::fill(ones.begin(), ones.end(), 0);
        std::size_t taken = 0;
        for (std::size_t a : grid) {
          const std::size_t m = std::min(t_, a);
          while (taken < m) e_.accumulate(ones.data(), seq[taken++]);
          rep_[y] = static_cast<long>(live[rng_.below(dm)]);
          e_.add_label_cost(base, ones.data(), static_cast<double>(m),
                            static_cast<double>(a) / static_cast<double>(m), y, child);
          recurse(live, rest, cap - a, depth + 1, child);
        }
        rep_[y] = -1;
      }
    }

    // Pruning: drop the floor(dm/2) live columns closest to the sampled
    // representatives (ties by column index).
    const std::size_t drop = dm / 2;
    if (todo.size() == l || drop == 0) return;
    std::vector<std::pair<std::size_t, std::size_t>> dist(dm);
    for (std::size_t q = 0; q < dm; ++q) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (std::size_t y = 0; y < l; ++y)
        if (rep_[y] >= 0) best = std::min(best, e_.column_distance(live[q], static_cast<std::size_t>(rep_[y])));
      dist[q] = {best, live[q]};
    }
    std::sort(dist.begin(), dist.end());
    std::vector<std::size_t> kept;
    kept.reserve(dm - drop);
    for (std::size_t q = drop; q < dm; ++q) kept.push_back(dist[q].second);
    std::sort(kept.begin(), kept.end());
    recurse(kept, todo, std::min(cap, capacity(kept.size())), depth + 1, base);
  }

  const BinaryEngine& e_;
  double eps_;
  std::size_t t_;
  Rng rng_;
  std::vector<long> rep_;
  std::vector<std::vector<std::uint32_t>> ones_;
  std::vector<std::vector<double>> costs_;
  std::vector<Label> rows_, next_rows_, cols_;
  std::size_t best_cost_ = std::numeric_limits<std::size_t>::max();
  std::vector<Label> best_rows_, best_cols_;
  std::size_t leaves_ = 0;
};

}  // namespace detail

/// Randomized PTAS: independent restarts of the Sample recursion, restart r
/// seeded with hash64(seed, r). Returns the cheapest pair; ties go to the
/// lowest restart index.
inline FactorPair sample_ptas(const DenseMatrix& a, std::size_t k, const InnerProductTable& ip,
                              const SamplePtasOptions& opt) {
  detail::require_instance(a, k, ip);
  if (opt.t == 0) throw ParameterError("sample size t must be positive");
  if (opt.restarts == 0) throw ParameterError("restarts must be positive");
  if (!(opt.eps > 0.0 && opt.eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
  const detail::BinaryEngine e(a, ip);
  struct Outcome {
    std::size_t cost = std::numeric_limits<std::size_t>::max();
    std::vector<Label> rows, cols;
  };
  std::vector<Outcome> out(opt.restarts);
  parallel_for(opt.restarts, opt.threads, [&](std::size_t r) {
    const detail::BinaryEngine local = e;
    detail::SampleRecursion rec(local, opt.eps, opt.t, hash64(opt.seed, r));
    rec.run();
    out[r] = {rec.best_cost(), rec.best_rows(), rec.best_cols()};
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < out.size(); ++r)
    if (out[r].cost < out[best].cost) best = r;
  return detail::labels_to_pair(out[best].rows, out[best].cols, k, static_cast<double>(out[best].cost));
}

inline FactorPair sample_ptas(const DenseMatrix& a, std::size_t k, const InnerProductTable& ip, double eps,
                              std::size_t t, std::size_t restarts, std::uint64_t seed) {
  SamplePtasOptions opt;
  opt.eps = eps;
  opt.t = t;
  opt.restarts = restarts;
  opt.seed = seed;
  return sample_ptas(a, k, ip, opt);
}

/// Makes V (U,V,eps)-clusterable: alternately (a) moves every column to its
/// best center among the labels still in use (keeping the current label on
/// ties, else the smallest), and (b) merges the first violating pair y < z,
/// i.e. one with ||U∘y - U∘z||_0 <= eps 2^-k cost0 / min(|C_y|, |C_z|), by
/// relabelling the smaller cluster (y on equal sizes) to the other label.
/// cost0 = ||A - U∘V||_0. Every merge removes a label, so this stops after at
/// most 2^k rounds.
inline DenseMatrix clusterify(const DenseMatrix& a, const DenseMatrix& u, const DenseMatrix& v,
                              const InnerProductTable& ip, double eps) {
  detail::require_instance(a, u.cols(), ip);
  if (u.rows() != a.rows() || v.cols() != a.cols() || v.rows() != u.cols())
    throw DimensionError("clusterify: factor shapes");
  const detail::BinaryEngine e(a, ip);
  const std::size_t d = e.d();
  const std::size_t l = e.labels();
  std::vector<Label> rows(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) rows[i] = row_label(u, i);
  std::vector<Label> w(d);
  for (std::size_t j = 0; j < d; ++j) w[j] = col_label(v, j);
  const double cost0 = static_cast<double>(e.cost(rows, w));
  const double scale = eps * std::ldexp(1.0, -static_cast<int>(e.k())) * cost0;

  // Center distance ||U∘y - U∘z||_0.
  auto center_distance = [&](Label y, Label z) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double vy = ip(rows[i], y);
      const double vz = ip(rows[i], z);
      s += vy != vz;
    }
    return s;
  };

  for (std::size_t round = 0; round <= l; ++round) {
    std::vector<char> in_use(l, 0);
    for (auto y : w) in_use[y] = 1;
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t best = e.column_cost(rows, j, w[j]);
      Label arg = w[j];
      for (std::size_t y = 0; y < l; ++y) {
        if (!in_use[y] || y == w[j]) continue;
        const std::size_t c = e.column_cost(rows, j, static_cast<Label>(y));
        if (c < best) {
          best = c;
          arg = static_cast<Label>(y);
        }
      }
      w[j] = arg;
    }
    std::vector<std::size_t> size(l, 0);
    for (auto y : w) ++size[y];
    bool merged = false;
    for (std::size_t y = 0; y < l && !merged; ++y) {
      if (!size[y]) continue;
      for (std::size_t z = y + 1; z < l && !merged; ++z) {
        if (!size[z]) continue;
        const double lhs = static_cast<double>(center_distance(static_cast<Label>(y), static_cast<Label>(z)));
        const double rhs = scale / static_cast<double>(std::min(size[y], size[z]));
        if (lhs <= rhs) {
          const Label from = size[y] <= size[z] ? static_cast<Label>(y) : static_cast<Label>(z);
          const Label to = from == y ? static_cast<Label>(z) : static_cast<Label>(y);
          for (auto& lab : w)
            if (lab == from) lab = to;
          merged = true;
        }
      }
    }
    if (!merged) break;
  }
  return matrix_from_col_labels(w, e.k());
}

}  // namespace lowrank
