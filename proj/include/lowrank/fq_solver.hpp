#pragma once

// Rank-k l0 approximation over F_q by exhaustive guessing of a sketched
// factor (desk scale: the sketch is sized by an enumeration budget).

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lowrank/cost.hpp"
#include "lowrank/error.hpp"
#include "lowrank/finite_field.hpp"
#include "lowrank/l0_sketch.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

enum class SketchSide {
  /// Sketch length-d rows: guess the sketched V (as H·Vᵀ), pick each row of U
  /// under the sketched objective, refit V exactly.
  Rows,
  /// Sketch length-n columns: guess H·U, pick each column of V, refit U.
  Columns,
};

struct FqConfig {
  L0SketchParams sketch{};
  /// Maximum number of guesses q^G to enumerate.
  double budget = 4096.0;
  std::uint64_t seed = 1;
  /// Level threshold for est; zero selects tau.
  double gamma = 0.0;
  SketchSide side = SketchSide::Rows;
};

struct FqPlan {
  std::size_t instances_used = 0;
  std::size_t guessed_entries = 0;
  double guesses = 0.0;
};

namespace detail {

/// All q^k vectors of F_q^k in lexicographic order, flattened.
inline std::vector<int> fq_candidates(int q, std::size_t k) {
  std::size_t count = 1;
  for (std::size_t l = 0; l < k; ++l) count *= static_cast<std::size_t>(q);
  std::vector<int> out(count * k);
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t r = c;
    for (std::size_t l = k; l-- > 0;) {
      out[c * k + l] = static_cast<int>(r % static_cast<std::size_t>(q));
      r /= static_cast<std::size_t>(q);
    }
  }
  return out;
}

inline double pow_saturating(double base, double exp) {
  const double v = std::pow(base, exp);
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

/// Row-wise exact best response: row i of X minimizes ||x·Y - A_{i,:}||_0.
inline DenseMatrix fq_best_rows(const DenseMatrix& a, const DenseMatrix& y, const FiniteField& f,
                                const std::vector<int>& cand, std::size_t k) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const std::size_t count = cand.size() / std::max<std::size_t>(k, 1);
  // Precompute every candidate's row x·Y.
  std::vector<int> prod(count * d, 0);
  for (std::size_t c = 0; c < count; ++c)
    for (std::size_t j = 0; j < d; ++j) {
      int s = 0;
      for (std::size_t l = 0; l < k; ++l) s = f.add(s, f.mul(cand[c * k + l], y.residue(l, j)));
      prod[c * d + j] = s;
    }
  DenseMatrix x(n, k, a.domain());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    std::size_t best_cost = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t cost = 0;
      for (std::size_t j = 0; j < d && cost < best_cost; ++j) cost += prod[c * d + j] != a.residue(i, j);
      if (cost < best_cost) {
        best_cost = cost;
        best = c;
      }
    }
    for (std::size_t l = 0; l < k; ++l) x.set(i, l, cand[best * k + l]);
  }
  return x;
}

}  // namespace detail

/// Exact best response U for fixed V over F_q (rows enumerate q^k vectors).
inline DenseMatrix fq_best_response_U(const DenseMatrix& a, const DenseMatrix& v) {
  if (!a.domain().is_fq() || !(a.domain() == v.domain())) throw ContractError("fq best response needs F_q operands");
  const FiniteField f(a.domain().q);
  return detail::fq_best_rows(a, v, f, detail::fq_candidates(a.domain().q, v.rows()), v.rows());
}

/// Exact best response V for fixed U over F_q.
inline DenseMatrix fq_best_response_V(const DenseMatrix& a, const DenseMatrix& u) {
  return fq_best_response_U(a.transpose(), u.transpose()).transpose();
}

/// Largest prefix of the bank whose guesses fit the budget.
inline FqPlan fq_plan(const L0SketchBank& bank, std::size_t k, int q, double budget) {
  FqPlan plan;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const std::size_t entries = plan.guessed_entries + k * bank[i].total_slots();
    const double guesses = detail::pow_saturating(q, static_cast<double>(entries));
    if (guesses > budget) break;
    plan.instances_used = i + 1;
    plan.guessed_entries = entries;
    plan.guesses = guesses;
  }
  if (plan.instances_used == 0) {
    const double need = detail::pow_saturating(q, static_cast<double>(k * bank[0].total_slots()));
    throw BudgetExceeded("fq_rank_k_approx: even one sketch instance", need, budget);
  }
  return plan;
}

namespace detail {

/// Works on columns: A ≈ X·Y with X n×k, sketching length-n columns.
inline FactorPair fq_guess_columns(const DenseMatrix& a, std::size_t k, const FqConfig& cfg) {
  const int q = a.domain().q;
  const FiniteField f(q);
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const L0SketchBank bank(n, q, cfg.sketch, cfg.seed);
  const FqPlan plan = fq_plan(bank, k, q, cfg.budget);
  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : static_cast<double>(cfg.sketch.tau());
  const auto cand = fq_candidates(q, k);
  const std::size_t count = cand.size() / k;

  // Flatten (instance, level, slot) into one index space of "rows" of the
  // sketched factor; remember level boundaries for counting.
  struct Block {
    std::size_t instance, level, offset, slots;
  };
  std::vector<Block> blocks;
  std::size_t total = 0;
  for (std::size_t s = 0; s < plan.instances_used; ++s)
    for (std::size_t i = 0; i < bank[s].levels(); ++i) {
      blocks.push_back({s, i, total, bank[s].slots(i)});
      total += bank[s].slots(i);
    }

  // Sketches of the columns of A: ta[j][r] for flattened slot r.
  std::vector<std::vector<int>> ta(d, std::vector<int>(total, 0));
  for (std::size_t j = 0; j < d; ++j)
    for (const auto& b : blocks)
      for (std::size_t r = 0; r < n; ++r) {
        const auto slot = bank[b.instance].slot(b.level, r);
        if (slot == L0SketchInstance::kNoSlot) continue;
        auto& cell = ta[j][b.offset + slot];
        cell = f.add(cell, a.residue(r, j));
      }

  const auto guesses = static_cast<std::uint64_t>(plan.guesses);
  std::vector<int> guess(total * k, 0);  // row-major (slot, l)
  std::vector<int> img(count * total);   // guess · candidate
  std::vector<double> estimates(plan.instances_used);
  FactorPair best;
  best.cost = std::numeric_limits<double>::infinity();
  DenseMatrix y(k, d, a.domain());
  for (std::uint64_t g = 0; g < guesses; ++g) {
    if (g > 0) {
      for (std::size_t e = guess.size(); e-- > 0;) {
        if (++guess[e] < q) break;
        guess[e] = 0;
      }
    }
    for (std::size_t c = 0; c < count; ++c)
      for (std::size_t r = 0; r < total; ++r) {
        int s = 0;
        for (std::size_t l = 0; l < k; ++l) s = f.add(s, f.mul(guess[r * k + l], cand[c * k + l]));
        img[c * total + r] = s;
      }
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t pick = 0;
      double pick_value = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < count; ++c) {
        std::fill(estimates.begin(), estimates.end(), 0.0);
        LevelCounts lc;
        std::size_t current = 0;
        lc.counts.clear();
        for (std::size_t bi = 0; bi <= blocks.size(); ++bi) {
          if (bi == blocks.size() || blocks[bi].instance != current) {
            estimates[current] = est(lc, gamma);
            if (bi == blocks.size()) break;
            current = blocks[bi].instance;
            lc.counts.clear();
          }
          const auto& b = blocks[bi];
          std::size_t nz = 0;
          for (std::size_t s = 0; s < b.slots; ++s) nz += img[c * total + b.offset + s] != ta[j][b.offset + s];
          lc.counts.push_back(nz);
        }
        const std::size_t mid = (estimates.size() + 1) / 2 - 1;
        std::nth_element(estimates.begin(), estimates.begin() + static_cast<std::ptrdiff_t>(mid), estimates.end());
        const double value = estimates[mid];
        if (value < pick_value) {
          pick_value = value;
          pick = c;
        }
      }
      for (std::size_t l = 0; l < k; ++l) y.set(l, j, cand[pick * k + l]);
    }
    DenseMatrix x = fq_best_rows(a, y, f, cand, k);
    const double cost = fq_l0_cost(a, x, y);
    if (cost < best.cost) best = {std::move(x), y, cost};
  }
  return best;
}

}  // namespace detail

/// Rank-k factorization of an F_q matrix minimizing ||A - U·V||_0, by
/// enumerating every value of the sketched factor allowed by cfg.budget.
/// Throws BudgetExceeded if not even one sketch instance fits.
inline FactorPair fq_rank_k_approx(const DenseMatrix& a, std::size_t k, const FqConfig& cfg) {
  if (!a.domain().is_fq()) throw ContractError("fq_rank_k_approx needs an F_q matrix");
  if (k == 0) throw ParameterError("rank k must be positive");
  if (a.empty()) return {DenseMatrix(a.rows(), k, a.domain()), DenseMatrix(k, a.cols(), a.domain()), 0.0};
  const Domain dom = a.domain();
  if (k >= a.cols()) {
    DenseMatrix v(k, a.cols(), dom);
    for (std::size_t j = 0; j < a.cols(); ++j) v.set(j, j, 1);
    DenseMatrix u(a.rows(), k, dom);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) u.set(i, j, a(i, j));
    return {std::move(u), std::move(v), 0.0};
  }
  if (k >= a.rows()) {
    auto t = fq_rank_k_approx(a.transpose(), k, cfg);
    return {t.v.transpose(), t.u.transpose(), t.cost};
  }
  if (cfg.side == SketchSide::Columns) return detail::fq_guess_columns(a, k, cfg);
  auto t = detail::fq_guess_columns(a.transpose(), k, cfg);
  return {t.v.transpose(), t.u.transpose(), t.cost};
}

inline FactorPair fq_rank_k_approx(const DenseMatrix& a, std::size_t k, double eps, double budget,
                                   std::uint64_t seed = 1) {
  FqConfig cfg;
  cfg.sketch.eps = eps;
  cfg.budget = budget;
  cfg.seed = seed;
  return fq_rank_k_approx(a, k, cfg);
}

}  // namespace lowrank
