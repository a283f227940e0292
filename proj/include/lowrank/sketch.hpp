#pragma once

// Cauchy / p-stable sketch matrices and the median and quantile estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <tuple>
#include <vector>

#include "lowrank/cost.hpp"
#include "lowrank/error.hpp"
#include "lowrank/matrix.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

namespace detail {

/// Chambers-Mallows-Stuck map from an angle theta in (-pi/2, pi/2) and an
/// Exp(1) variate w to a standard symmetric p-stable variate (characteristic
/// function exp(-|t|^p)). At p = 1 this is tan(theta).
inline double cms_transform(double p, double theta, double w) {
  if (p == 1.0) return std::tan(theta);
  const double a = std::sin(p * theta) / std::pow(std::cos(theta), 1.0 / p);
  const double b = std::pow(std::cos((1.0 - p) * theta) / w, (1.0 - p) / p);
  return a * b;
}

}  // namespace detail

/// One standard p-stable draw. p = 1 uses the Cauchy inverse CDF directly.
inline double sample_stable(Rng& rng, double p) {
  if (p == 1.0) return std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
  const double theta = std::numbers::pi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  return detail::cms_transform(p, theta, w);
}

inline void require_stability_index(double p) {
  if (!(p > 0.0 && p <= 2.0)) throw ParameterError("stability index p must lie in (0, 2]");
}

class StableSketch {
 public:
  StableSketch() = default;

  /// Entries drawn row-major from Rng(seed).
  static StableSketch sample(std::size_t m, std::size_t n, double p, std::uint64_t seed) {
    if (m < 1 || n < 1) throw ParameterError("sketch dimensions must be positive");
    require_stability_index(p);
    Rng rng(seed);
    std::vector<double> e(m * n);
    for (double& x : e) x = sample_stable(rng, p);
    return StableSketch(DenseMatrix(m, n, Domain::real(), std::move(e)), p, seed);
  }

  /// Wrap explicit entries (tests, deterministic fixtures).
  static StableSketch from_matrix(DenseMatrix s, double p = 1.0) {
    if (!s.domain().is_real()) throw ContractError("sketch entries must be Real");
    return StableSketch(std::move(s), p, 0);
  }

  std::size_t rows() const noexcept { return s_.rows(); }
  std::size_t cols() const noexcept { return s_.cols(); }
  double p() const noexcept { return p_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const DenseMatrix& matrix() const noexcept { return s_; }

  /// Entries rounded to the nearest multiple of `quantum` (quantum > 0).
  StableSketch rounded(double quantum) const {
    if (!(quantum > 0.0)) throw ParameterError("rounding quantum must be positive");
    std::vector<double> e(s_.entries().begin(), s_.entries().end());
    for (double& x : e) x = std::round(x / quantum) * quantum;
    return StableSketch(DenseMatrix(s_.rows(), s_.cols(), Domain::real(), std::move(e)), p_, seed_);
  }

 private:
  StableSketch(DenseMatrix s, double p, std::uint64_t seed) : s_(std::move(s)), p_(p), seed_(seed) {}

  DenseMatrix s_;
  double p_ = 1.0;
  std::uint64_t seed_ = 0;
};

inline StableSketch sample_sketch(std::size_t m, std::size_t n, double p, std::uint64_t seed) {
  return StableSketch::sample(m, n, p, seed);
}

/// Exact dense product S·M.
inline DenseMatrix sketch_apply(const StableSketch& s, const DenseMatrix& m) {
  if (s.cols() != m.rows())
    throw DimensionError("sketch has " + std::to_string(s.cols()) + " columns, matrix has " + std::to_string(m.rows()) +
                         " rows");
  return real_product(s.matrix(), m.with_domain(Domain::real()));
}

inline std::vector<double> sketch_apply(const StableSketch& s, std::span<const double> x) {
  if (s.cols() != x.size()) throw DimensionError("sketch/vector dimension mismatch");
  std::vector<double> out(s.rows(), 0.0);
  const auto& mat = s.matrix();
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += mat(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

/// q_alpha(v): the ceil(alpha * len)-th smallest |v_i| (1-based).
inline double quantile(std::span<const double> v, double alpha) {
  if (v.empty()) throw ContractError("quantile of an empty vector");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("quantile level must lie in (0, 1]");
  std::vector<double> a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  // The small slack keeps alpha * len from rounding up past an exact integer.
  auto idx = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(a.size()) - 1e-12));
  idx = std::clamp<std::size_t>(idx, 1, a.size()) - 1;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(idx), a.end());
  return a[idx];
}

inline double med(std::span<const double> v) { return quantile(v, 0.5); }

/// Sum over columns of the column quantiles.
inline double quantile_matrix(const DenseMatrix& m, double alpha) {
  if (m.empty()) throw ContractError("quantile of an empty matrix");
  double total = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) total += quantile(m.column(j), alpha);
  return total;
}

/// Sum of the column medians.
inline double med_matrix(const DenseMatrix& m) { return quantile_matrix(m, 0.5); }

/// Monte Carlo median of |X| for a standard p-stable X, cached per arguments.
inline double estimate_medp(double p, std::size_t trials = 1'000'000, std::uint64_t seed = 1) {
  if (!(p > 0.0 && p < 2.0)) throw ParameterError("estimate_medp needs p in (0, 2)");
  if (trials < 10'000) throw ParameterError("estimate_medp needs at least 10^4 trials");
  static std::mutex mu;
  static std::map<std::tuple<double, std::size_t, std::uint64_t>, double> cache;
  const auto key = std::make_tuple(p, trials, seed);
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  Rng rng(hash64(seed, std::string_view("medp")));
  std::vector<double> draws(trials);
  for (double& x : draws) x = sample_stable(rng, p);
  const double value = med(draws);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, value);
  return value;
}

/// Suggested embedding sketch size ceil(c * k * eps^-2 * ln(k / eps)).
inline std::size_t suggested_embedding_rows(std::size_t k, double eps, double c = 4.0) {
  const double kk = static_cast<double>(std::max<std::size_t>(k, 1));
  const double v = c * kk / (eps * eps) * std::max(std::log(kk / eps), 1.0);
  return static_cast<std::size_t>(std::ceil(v));
}

/// Fraction of random x = U·y (y standard normal) whose median estimate lands
/// in the (1 ± eps) band. For p >= 1 the estimate med(Sx)/med_p is compared
/// with ||x||_p; for p < 1 its p-th power is compared with ||x||_p^p. x = 0
/// counts as in band, and eps >= 1 is the degenerate band containing every
/// nonnegative estimate. A fresh S is drawn from `seed`; trial t draws y from
/// the stream seed + t + 1.
inline double embedding_trial(const DenseMatrix& u, double p, std::size_t m, std::size_t trials, double eps,
                              std::uint64_t seed) {
  require_stability_index(p);
  if (trials == 0) throw ParameterError("embedding_trial needs at least one trial");
  if (!(eps > 0.0)) throw ParameterError("eps must be positive");
  const std::size_t n = u.rows();
  const std::size_t k = u.cols();
  const StableSketch s = StableSketch::sample(m, n, p, seed);
  const double medp = p == 1.0 ? 1.0 : estimate_medp(p);
  std::size_t in_band = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(seed + t + 1);
    std::vector<double> y(k);
    for (double& c : y) c = rng.normal();
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < k; ++l) x[i] += u(i, l) * y[l];
    const double norm_raised = lp_norm_raised(x, p);
    if (norm_raised == 0.0 || eps >= 1.0) {
      ++in_band;
      continue;
    }
    const double est = med(sketch_apply(s, x)) / medp;
    const double lhs = p >= 1.0 ? est : std::pow(est, p);
    const double rhs = p >= 1.0 ? std::pow(norm_raised, 1.0 / p) : norm_raised;
    if (lhs >= (1.0 - eps) * rhs && lhs <= (1.0 + eps) * rhs) ++in_band;
  }
  return static_cast<double>(in_band) / static_cast<double>(trials);
}

}  // namespace lowrank
