#include <gtest/gtest.h>

#include <limits>

#include "lowrank/cost.hpp"
#include "lowrank/fq_solver.hpp"
#include "lowrank/oracle.hpp"

using namespace lowrank;

namespace {

DenseMatrix random_fq(Rng& rng, std::size_t n, std::size_t d, int q) {
  DenseMatrix m(n, d, Domain::fq(q));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.set(i, j, static_cast<double>(rng.below(static_cast<std::uint64_t>(q))));
  return m;
}

/// min over every U in F_q^{n x k} of ||A - U V||_0, by plain enumeration.
double exhaustive_u_cost(const DenseMatrix& a, const DenseMatrix& v) {
  const int q = a.domain().q;
  const std::size_t cells = a.rows() * v.rows();
  std::size_t total = 1;
  for (std::size_t c = 0; c < cells; ++c) total *= static_cast<std::size_t>(q);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    DenseMatrix u(a.rows(), v.rows(), a.domain());
    std::size_t r = code;
    for (std::size_t c = 0; c < cells; ++c) {
      u.set(c / v.rows(), c % v.rows(), static_cast<double>(r % static_cast<std::size_t>(q)));
      r /= static_cast<std::size_t>(q);
    }
    best = std::min(best, fq_l0_cost(a, u, v));
  }
  return best;
}

}  // namespace

TEST(FqBestResponse, MatchesExhaustiveEnumeration) {
  Rng rng(1);
  for (int q : {2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_fq(rng, 2, 4, q);
      const auto v = random_fq(rng, 2, 4, q);
      const auto u = fq_best_response_U(a, v);
      EXPECT_EQ(fq_l0_cost(a, u, v), exhaustive_u_cost(a, v));
      const auto ut = random_fq(rng, 4, 2, q);
      const auto at = random_fq(rng, 4, 2, q);
      const auto vt = fq_best_response_V(at, ut);
      EXPECT_EQ(fq_l0_cost(at, ut, vt), exhaustive_u_cost(at.transpose(), ut.transpose()));
    }
  }
}

TEST(FqSolver, ExactRankKInputHasZeroCost) {
  Rng rng(2);
  for (int q : {2, 3}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto u = random_fq(rng, 4, 1, q);
      const auto v = random_fq(rng, 1, 4, q);
      const auto a = fq_product(u, v);
      FqConfig cfg;
      cfg.seed = 10 + static_cast<std::uint64_t>(trial);
      cfg.budget = q == 2 ? 4096 : 6561;
      const auto fp = fq_rank_k_approx(a, 1, cfg);
      EXPECT_EQ(fp.cost, 0.0) << "q=" << q << " trial " << trial;
    }
  }
}

TEST(FqSolver, FullRankShortcuts) {
  Rng rng(3);
  const auto a = random_fq(rng, 5, 3, 5);
  const auto wide = fq_rank_k_approx(a, 3, FqConfig{});
  EXPECT_EQ(wide.cost, 0.0);
  EXPECT_EQ(fq_l0_cost(a, wide.u, wide.v), 0.0);
  const auto tall = fq_rank_k_approx(a.transpose(), 3, FqConfig{});
  EXPECT_EQ(tall.cost, 0.0);
  EXPECT_EQ(tall.u.cols(), 3u);
  EXPECT_EQ(fq_l0_cost(a.transpose(), tall.u, tall.v), 0.0);
}

TEST(FqSolver, ReportedCostIsExact) {
  Rng rng(4);
  for (auto side : {SketchSide::Rows, SketchSide::Columns}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = random_fq(rng, 4, 5, 2);
      FqConfig cfg;
      cfg.side = side;
      cfg.seed = static_cast<std::uint64_t>(trial);
      const auto fp = fq_rank_k_approx(a, 1, cfg);
      EXPECT_EQ(fp.u.domain(), a.domain());
      EXPECT_EQ(fp.cost, fq_l0_cost(a, fp.u, fp.v));
    }
  }
}

TEST(FqSolver, BudgetRefusal) {
  Rng rng(5);
  const auto a = random_fq(rng, 6, 6, 3);
  FqConfig cfg;
  cfg.budget = 2;
  try {
    fq_rank_k_approx(a, 1, cfg);
    FAIL() << "expected BudgetExceeded";
  } catch (const BudgetExceeded& e) {
    EXPECT_GT(e.required(), 2.0);
    EXPECT_EQ(e.budget(), 2.0);
  }
}

TEST(FqSolver, PlanStaysWithinBudget) {
  const L0SketchBank bank(16, 2, {}, 3);
  for (double budget : {64.0, 4096.0, 1e6}) {
    try {
      const auto plan = fq_plan(bank, 1, 2, budget);
      EXPECT_LE(plan.guesses, budget);
      EXPECT_GE(plan.instances_used, 1u);
      std::size_t entries = 0;
      for (std::size_t i = 0; i < plan.instances_used; ++i) entries += bank[i].total_slots();
      EXPECT_EQ(plan.guessed_entries, entries);
      if (plan.instances_used < bank.size()) {
        EXPECT_GT(std::ldexp(1.0, static_cast<int>(entries + bank[plan.instances_used].total_slots())), budget);
      }
    } catch (const BudgetExceeded&) {
      EXPECT_LT(budget, std::ldexp(1.0, static_cast<int>(bank[0].total_slots())));
    }
  }
}

TEST(FqSolver, RejectsWrongDomain) {
  EXPECT_THROW(fq_rank_k_approx(DenseMatrix(3, 3), 1, FqConfig{}), ContractError);
  EXPECT_THROW(fq_rank_k_approx(DenseMatrix(3, 3, Domain::fq(2)), 0, FqConfig{}), ParameterError);
}

TEST(FqSolver, CloseToOracleOnSmallInstances) {
  Rng rng(6);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_fq(rng, 4, 4, 2);
    FqConfig cfg;
    cfg.seed = 100 + static_cast<std::uint64_t>(trial);
    const auto fp = fq_rank_k_approx(a, 1, cfg);
    const auto opt = brute_force_fq(a, 1);
    EXPECT_GE(fp.cost, opt.opt_cost);
    good += fp.cost <= opt.opt_cost + 1;
  }
  EXPECT_GE(good, 18);
}
