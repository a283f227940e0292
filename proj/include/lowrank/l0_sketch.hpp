#pragma once

// l0 sketch over F_q: nested level subsampling, pairwise-independent bucket
// hashing, the level estimator and a bank of independent instances.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lowrank/error.hpp"
#include "lowrank/finite_field.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

struct L0SketchParams {
  double eps = 0.25;
  double c = 16.0;
  /// Zero selects the default 4·c².
  double c_prime = 0.0;
  std::size_t instances = 9;

  double c_prime_value() const { return c_prime > 0.0 ? c_prime : 4.0 * c * c; }

  /// Level threshold tau = ceil(c / eps^4).
  std::size_t tau() const { return static_cast<std::size_t>(std::ceil(c / std::pow(eps, 4) - 1e-9)); }

  /// Bucket count max(ceil(c' / eps^8), (4 tau)^2), saturating at 2^62.
  std::uint64_t buckets() const {
    const double raw = std::ceil(c_prime_value() / std::pow(eps, 8) - 1e-9);
    const double floor_sq = 16.0 * static_cast<double>(tau()) * static_cast<double>(tau());
    const double b = std::max(raw, floor_sq);
    return b >= 0x1.0p62 ? (std::uint64_t{1} << 62) : static_cast<std::uint64_t>(b);
  }

  void validate() const {
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("l0 sketch eps must lie in (0, 1)");
    if (!(c > 0.0)) throw ParameterError("l0 sketch constant c must be positive");
    if (c_prime < 0.0) throw ParameterError("l0 sketch constant c' must be nonnegative");
    if (instances == 0) throw ParameterError("l0 sketch bank needs at least one instance");
  }
};

inline std::size_t l0_levels(std::size_t n) {
  return n > 2 ? static_cast<std::size_t>(std::bit_width(n - 1)) : 1;
}

/// Level subsampling from one uniform per coordinate: coordinate j belongs to
/// level i iff u_j < 2^-i, so level 0 is everything and levels are nested.
class NestedSampler {
 public:
  NestedSampler() = default;

  NestedSampler(std::size_t n, Rng& rng) : n_(n), levels_(l0_levels(n)), u_(n) {
    for (double& v : u_) v = rng.uniform();
    top_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t i = 0;
      while (i + 1 < levels_ && u_[j] < std::ldexp(1.0, -static_cast<int>(i + 1))) ++i;
      top_[j] = static_cast<std::uint8_t>(i);
    }
  }

  std::size_t dimension() const noexcept { return n_; }
  std::size_t levels() const noexcept { return levels_; }
  std::span<const double> uniforms() const noexcept { return u_; }

  bool in_level(std::size_t j, std::size_t i) const { return i <= top_[j]; }
  /// Deepest level containing coordinate j.
  std::size_t top_level(std::size_t j) const { return top_[j]; }
  /// Sampling probability of level i, 2^-i.
  static double probability(std::size_t i) { return std::ldexp(1.0, -static_cast<int>(i)); }

 private:
  std::size_t n_ = 0;
  std::size_t levels_ = 1;
  std::vector<double> u_;
  std::vector<std::uint8_t> top_;
};

inline std::uint64_t least_prime_at_least(std::uint64_t n) {
  auto prime = [](std::uint64_t v) {
    if (v < 2) return false;
    for (std::uint64_t f = 2; f * f <= v; ++f)
      if (v % f == 0) return false;
    return true;
  };
  while (!prime(n)) ++n;
  return n;
}

/// h(j) = ((a j + b) mod P) mod B with P the least prime >= n.
struct AffineHash {
  std::uint64_t a = 1;
  std::uint64_t b = 0;
  std::uint64_t prime = 2;
  std::uint64_t buckets = 1;

  static AffineHash draw(std::size_t n, std::uint64_t buckets, Rng& rng) {
    AffineHash h;
    h.prime = least_prime_at_least(std::max<std::uint64_t>(n, 2));
    h.a = 1 + rng.below(h.prime - 1);
    h.b = rng.below(h.prime);
    h.buckets = buckets;
    return h;
  }

  std::uint64_t operator()(std::uint64_t j) const {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * j + b) % prime) % buckets;
  }
};

struct LevelCounts {
  std::vector<std::size_t> counts;
};

struct LevelCountPair {
  LevelCounts hashed;
  LevelCounts unhashed;
};

/// One sketch instance. For every level the coordinates of that level map to
/// dense "slots", one per bucket hit by some coordinate of the level. The
/// sketch of x at level i is the vector of F_q bucket sums over those slots;
/// it is linear in x and its nonzero count is the hashed level count.
class L0SketchInstance {
 public:
  L0SketchInstance(std::size_t n, std::uint64_t buckets, Rng& rng)
      : sampler_(n, rng), hash_(AffineHash::draw(n, buckets, rng)) {
    const std::size_t levels = sampler_.levels();
    slot_of_.assign(levels, std::vector<std::uint32_t>(n, kNoSlot));
    slots_.assign(levels, 0);
    std::vector<std::uint64_t> bucket(n);
    for (std::size_t j = 0; j < n; ++j) bucket[j] = hash_(j);
    for (std::size_t i = 0; i < levels; ++i) {
      std::vector<std::uint64_t> hit;
      for (std::size_t j = 0; j < n; ++j)
        if (sampler_.in_level(j, i)) hit.push_back(bucket[j]);
      std::sort(hit.begin(), hit.end());
      hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
      slots_[i] = hit.size();
      for (std::size_t j = 0; j < n; ++j)
        if (sampler_.in_level(j, i))
          slot_of_[i][j] =
              static_cast<std::uint32_t>(std::lower_bound(hit.begin(), hit.end(), bucket[j]) - hit.begin());
    }
  }

  static constexpr std::uint32_t kNoSlot = UINT32_MAX;

  const NestedSampler& sampler() const noexcept { return sampler_; }
  const AffineHash& hash() const noexcept { return hash_; }
  std::size_t dimension() const noexcept { return sampler_.dimension(); }
  std::size_t levels() const noexcept { return sampler_.levels(); }
  /// Number of buckets structurally occupied at level i.
  std::size_t slots(std::size_t level) const { return slots_[level]; }
  std::size_t total_slots() const {
    std::size_t s = 0;
    for (auto v : slots_) s += v;
    return s;
  }
  /// Slot of coordinate j at level i, or kNoSlot when j is not sampled there.
  std::uint32_t slot(std::size_t level, std::size_t j) const { return slot_of_[level][j]; }

  /// Per-level bucket sums of x (residues of `field`).
  std::vector<std::vector<int>> sketch(std::span<const int> x, const FiniteField& field) const {
    require_dim(x.size());
    std::vector<std::vector<int>> out(levels());
    for (std::size_t i = 0; i < levels(); ++i) {
      out[i].assign(slots_[i], 0);
      for (std::size_t j = 0; j < x.size(); ++j)
        if (x[j] && slot_of_[i][j] != kNoSlot) out[i][slot_of_[i][j]] = field.add(out[i][slot_of_[i][j]], x[j]);
    }
    return out;
  }

  LevelCountPair level_counts(std::span<const int> x, const FiniteField& field) const {
    const auto sk = sketch(x, field);
    LevelCountPair r;
    r.hashed.counts.resize(levels());
    r.unhashed.counts.assign(levels(), 0);
    for (std::size_t i = 0; i < levels(); ++i)
      r.hashed.counts[i] = static_cast<std::size_t>(std::count_if(sk[i].begin(), sk[i].end(), [](int v) { return v != 0; }));
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j])
        for (std::size_t i = 0; i <= sampler_.top_level(j); ++i) ++r.unhashed.counts[i];
    return r;
  }

 private:
  void require_dim(std::size_t n) const {
    if (n != dimension()) throw DimensionError("l0 sketch dimension mismatch");
  }

  NestedSampler sampler_;
  AffineHash hash_;
  std::vector<std::vector<std::uint32_t>> slot_of_;
  std::vector<std::size_t> slots_;
};

/// Level estimator: with j* the largest level whose count exceeds gamma
/// (strictly), returns counts[j*] / 2^-j*; falls back to counts[0].
inline double est(const LevelCounts& v, double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("est needs gamma > 0");
  if (v.counts.empty()) return 0.0;
  for (std::size_t j = v.counts.size(); j-- > 0;)
    if (static_cast<double>(v.counts[j]) > gamma)
      return static_cast<double>(v.counts[j]) / NestedSampler::probability(j);
  return static_cast<double>(v.counts[0]);
}

/// K independent sketch instances over F_q^n.
class L0SketchBank {
 public:
  L0SketchBank(std::size_t n, int q, L0SketchParams params, std::uint64_t seed)
      : params_(params), field_(q), seed_(seed) {
    params_.validate();
    if (n == 0) throw ParameterError("l0 sketch dimension must be positive");
    Rng rng(seed);
    instances_.reserve(params_.instances);
    for (std::size_t i = 0; i < params_.instances; ++i) instances_.emplace_back(n, params_.buckets(), rng);
  }

  const L0SketchParams& params() const noexcept { return params_; }
  const FiniteField& field() const noexcept { return field_; }
  std::size_t size() const noexcept { return instances_.size(); }
  std::size_t dimension() const noexcept { return instances_.front().dimension(); }
  const L0SketchInstance& operator[](std::size_t i) const { return instances_[i]; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  L0SketchParams params_;
  FiniteField field_;
  std::uint64_t seed_;
  std::vector<L0SketchInstance> instances_;
};

/// One estimate per bank instance; gamma defaults to tau.
inline std::vector<double> estimate_l0(const L0SketchBank& bank, std::span<const int> x, double gamma = 0.0) {
  const double g = gamma > 0.0 ? gamma : static_cast<double>(bank.params().tau());
  std::vector<double> out(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) out[i] = est(bank[i].level_counts(x, bank.field()).hashed, g);
  return out;
}

/// Median (lower median: the ceil(K/2)-th smallest) of the bank estimates.
inline double med_l0(const L0SketchBank& bank, std::span<const int> x, double gamma = 0.0) {
  auto e = estimate_l0(bank, x, gamma);
  const std::size_t idx = (e.size() + 1) / 2 - 1;
  std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(idx), e.end());
  return e[idx];
}

}  // namespace lowrank
