#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lowrank/cost.hpp"
#include "lowrank/finite_field.hpp"
#include "lowrank/inner_product.hpp"
#include "lowrank/io.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/matrix.hpp"
#include "lowrank/random.hpp"

using namespace lowrank;

namespace {

DenseMatrix random_real(Rng& rng, std::size_t n, std::size_t d, double lo, double hi) {
  DenseMatrix m(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.set(i, j, lo + (hi - lo) * rng.uniform());
  return m;
}

DenseMatrix random_int(Rng& rng, std::size_t n, std::size_t d, int bound) {
  DenseMatrix m(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      m.set(i, j, static_cast<double>(static_cast<int>(rng.below(2 * bound + 1)) - bound));
  return m;
}

DenseMatrix random_bits(Rng& rng, std::size_t n, std::size_t d) {
  DenseMatrix m(n, d, Domain::binary());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.set(i, j, static_cast<double>(rng.below(2)));
  return m;
}

}  // namespace

TEST(FiniteField, PrimeFieldMatchesModularArithmetic) {
  for (int q : {2, 3, 5, 7, 13}) {
    FiniteField f(q);
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        EXPECT_EQ(f.add(a, b), (a + b) % q);
        EXPECT_EQ(f.mul(a, b), (a * b) % q);
        EXPECT_EQ(f.sub(a, b), ((a - b) % q + q) % q);
      }
  }
}

TEST(FiniteField, ExtensionFieldsSatisfyFieldAxioms) {
  for (int q : {4, 8, 9}) {
    FiniteField f(q);
    for (int a = 0; a < q; ++a) {
      EXPECT_EQ(f.add(a, f.neg(a)), 0);
      if (a) {
        EXPECT_EQ(f.mul(a, f.inv(a)), 1);
      }
      for (int b = 0; b < q; ++b) {
        EXPECT_EQ(f.add(a, b), f.add(b, a));
        EXPECT_EQ(f.mul(a, b), f.mul(b, a));
        for (int c = 0; c < q; ++c) {
          EXPECT_EQ(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
          EXPECT_EQ(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        }
      }
    }
    // Multiplicative group has no zero divisors.
    for (int a = 1; a < q; ++a)
      for (int b = 1; b < q; ++b) EXPECT_NE(f.mul(a, b), 0);
  }
}

TEST(FiniteField, RejectsNonPrimePowers) {
  EXPECT_THROW(FiniteField(6), ParameterError);
  EXPECT_THROW(FiniteField(1), ParameterError);
  EXPECT_THROW(FiniteField(263), ParameterError);
  EXPECT_TRUE(is_prime_power(256));
  EXPECT_FALSE(is_prime_power(12));
}

TEST(Domain, ParseRoundTrip) {
  for (const char* s : {"real", "binary", "fq:2", "fq:9"}) EXPECT_EQ(Domain::parse(s).name(), s);
  EXPECT_THROW(Domain::parse("fq:6"), ParameterError);
  EXPECT_THROW(Domain::parse("complex"), ParseError);
  EXPECT_THROW(Domain::parse("fq:x"), ParseError);
}

TEST(DenseMatrix, ValidatesEntriesAgainstDomain) {
  DenseMatrix b(2, 2, Domain::binary());
  EXPECT_THROW(b.set(0, 0, 2.0), ContractError);
  DenseMatrix f(2, 2, Domain::fq(5));
  EXPECT_NO_THROW(f.set(1, 1, 4.0));
  EXPECT_THROW(f.set(1, 1, 5.0), ContractError);
  EXPECT_THROW(f.set(1, 1, 1.5), ContractError);
  DenseMatrix r(1, 1);
  EXPECT_THROW(r.set(0, 0, std::nan("")), ContractError);
  EXPECT_THROW(DenseMatrix(2, 2, Domain::real(), {1.0, 2.0}), DimensionError);
  EXPECT_THROW(DenseMatrix::from_rows({{1, 2}, {3}}), DimensionError);
}

TEST(DenseMatrix, TransposeAndProduct) {
  const auto a = DenseMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const auto t = a.transpose();
  ASSERT_EQ(t.rows(), 3u);
  EXPECT_EQ(t(2, 1), 6.0);
  const auto p = real_product(a, t);
  EXPECT_EQ(p, DenseMatrix::from_rows({{14, 32}, {32, 77}}));
  EXPECT_THROW(real_product(a, a), DimensionError);
}

TEST(InnerProduct, LabelEncodingIsLexicographic) {
  // Coordinate 0 is the most significant bit.
  const auto u = DenseMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}}, Domain::binary());
  EXPECT_EQ(row_label(u, 0), 2u);
  EXPECT_EQ(row_label(u, 1), 1u);
  EXPECT_EQ(row_label(u, 2), 3u);
  const Label labels[] = {2, 1, 3};
  EXPECT_EQ(matrix_from_row_labels(labels, 2), u);
  EXPECT_EQ(col_label(u.transpose(), 0), 2u);
}

TEST(InnerProduct, BuiltinTablesMatchBitFormulas) {
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto r = InnerProductTable::real_dot(k);
    const auto f = InnerProductTable::f2(k);
    const auto b = InnerProductTable::boolean(k);
    for (Label x = 0; x < (1u << k); ++x)
      for (Label y = 0; y < (1u << k); ++y) {
        int common = 0;
        for (std::size_t l = 0; l < k; ++l) common += label_bit(x, l, k) && label_bit(y, l, k);
        EXPECT_EQ(r(x, y), common);
        EXPECT_EQ(f(x, y), common % 2);
        EXPECT_EQ(b(x, y), common > 0 ? 1 : 0);
      }
  }
}

TEST(InnerProduct, ParseTable) {
  std::istringstream in("0 1\n\n1 5\n");
  const auto t = InnerProductTable::parse(in);
  EXPECT_EQ(t.rank(), 1u);
  EXPECT_EQ(t(1, 1), 5.0);
  std::istringstream bad("0 1 2\n1 1\n");
  EXPECT_THROW(InnerProductTable::parse(bad), ParseError);
  std::istringstream three("0\n1\n2\n");
  EXPECT_THROW(InnerProductTable::parse(three), ParseError);
  std::istringstream word("0 x\n1 1\n");
  try {
    InnerProductTable::parse(word);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW(InnerProductTable::from_name("tropical", 2), ParameterError);
}

TEST(Cost, HandComputedValues) {
  const auto a = DenseMatrix::from_rows({{1, -2}, {0, 3}});
  const auto b = DenseMatrix::from_rows({{0, 0}, {0, 1}});
  EXPECT_DOUBLE_EQ(lp_cost(a, b, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(lp_cost(a, b, 2.0), 9.0);
  EXPECT_DOUBLE_EQ(lp_cost(a, b, 0.0), 3.0);
  EXPECT_DOUBLE_EQ(lp_cost(a, b, 0.5), 1.0 + 2.0 * std::sqrt(2.0));
  EXPECT_THROW(lp_cost(a, DenseMatrix(1, 2), 1.0), DimensionError);
  EXPECT_THROW(lp_cost(a, b, -1.0), ParameterError);
}

TEST(Cost, TriangleProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_real(rng, 3, 4, -2, 2);
    const auto b = random_real(rng, 3, 4, -2, 2);
    const auto c = random_real(rng, 3, 4, -2, 2);
    for (double p : {1.0, 1.3, 1.9}) {
      const double ac = std::pow(lp_cost(a, c, p), 1 / p);
      EXPECT_LE(ac, std::pow(lp_cost(a, b, p), 1 / p) + std::pow(lp_cost(b, c, p), 1 / p) + 1e-12);
    }
    for (double p : {0.3, 0.7}) EXPECT_LE(lp_cost(a, c, p), lp_cost(a, b, p) + lp_cost(b, c, p) + 1e-12);
  }
}

TEST(Cost, GeneralizedF2CostEqualsEveryLpOfIndicator) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_bits(rng, 5, 6);
    const auto u = random_bits(rng, 5, 2);
    const auto v = random_bits(rng, 2, 6);
    const auto ip = InnerProductTable::f2(2);
    const double c = generalized_l0_cost(a, u, v, ip);
    const auto prod = generalized_product(u, v, ip);
    // Independent F2 product.
    DenseMatrix direct(5, 6);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        direct.set(i, j, static_cast<double>((u.residue(i, 0) * v.residue(0, j) + u.residue(i, 1) * v.residue(1, j)) % 2));
    EXPECT_EQ(prod.with_domain(Domain::real()), direct);
    const auto ar = a.with_domain(Domain::real());
    for (double p : {0.0, 0.5, 1.0, 2.0}) EXPECT_DOUBLE_EQ(lp_cost(ar, direct, p), c);
  }
}

TEST(Cost, RealTableReproducesRealProduct) {
  Rng rng(8);
  const auto u = random_bits(rng, 4, 3);
  const auto v = random_bits(rng, 3, 5);
  const auto g = generalized_product(u, v, InnerProductTable::real_dot(3));
  EXPECT_EQ(g, real_product(u.with_domain(Domain::real()), v.with_domain(Domain::real())));
}

TEST(Cost, FqProductAndCost) {
  const Domain f3 = Domain::fq(3);
  const auto u = DenseMatrix::from_rows({{1, 2}, {2, 2}}, f3);
  const auto v = DenseMatrix::from_rows({{2, 1}, {2, 0}}, f3);
  // [1*2+2*2, 1*1+2*0] = [0, 1]; [2*2+2*2, 2] = [2, 2] (mod 3).
  EXPECT_EQ(fq_product(u, v), DenseMatrix::from_rows({{0, 1}, {2, 2}}, f3));
  const auto a = DenseMatrix::from_rows({{0, 0}, {2, 1}}, f3);
  EXPECT_DOUBLE_EQ(fq_l0_cost(a, u, v), 2.0);
  EXPECT_THROW(fq_product(u, DenseMatrix::from_rows({{1}, {0}}, Domain::fq(5))), ContractError);
}

TEST(Linalg, SingularValuesOfKnownMatrices) {
  // A^T A = [[25, 20], [20, 25]] has eigenvalues 45 and 5.
  const auto s = singular_values(DenseMatrix::from_rows({{3, 0}, {4, 5}}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], std::sqrt(45.0), 1e-10);
  EXPECT_NEAR(s[1], std::sqrt(5.0), 1e-10);
  const auto r = singular_values(DenseMatrix::from_rows({{1, 2, 3}, {2, 4, 6}}));
  EXPECT_NEAR(r[0], std::sqrt(70.0), 1e-10);
  EXPECT_NEAR(r[1], 0.0, 1e-7);
}

TEST(Linalg, SingularValuesMatchFrobeniusNorm) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_real(rng, 5, 4, -1, 1);
    double fro = 0.0;
    for (double v : a.entries()) fro += v * v;
    double sum = 0.0;
    for (double s : singular_values(a)) sum += s * s;
    EXPECT_NEAR(sum, fro, 1e-10);
  }
}

TEST(Linalg, IntegerRank) {
  EXPECT_EQ(integer_rank(DenseMatrix::from_rows({{1, 2, 3}, {2, 4, 6}, {1, 0, 1}})), 2u);
  EXPECT_EQ(integer_rank(DenseMatrix(3, 3)), 0u);
  EXPECT_EQ(integer_rank(DenseMatrix::identity(4)), 4u);
  EXPECT_EQ(integer_rank(DenseMatrix::from_rows({{-1, 1}, {1, -1}})), 1u);
}

TEST(Linalg, SigmaLowerBoundHoldsOnRandomIntegerMatrices) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int gamma = 1 + static_cast<int>(rng.below(3));
    const auto a = random_int(rng, 5, 4, gamma);
    const double g = a.max_abs();
    for (std::size_t k : {1u, 2u}) {
      const auto s = sigma_lower_bound(a, k);
      if (!s) continue;
      EXPECT_GE(*s, std::pow(20.0 * g * g, -static_cast<double>(k)));
    }
  }
  EXPECT_FALSE(sigma_lower_bound(DenseMatrix::from_rows({{1, 2}, {2, 4}}), 1).has_value());
  EXPECT_THROW(sigma_lower_bound(DenseMatrix::from_rows({{0.5}}), 1), ContractError);
}

TEST(Linalg, ColumnBasisFactorizationIsExact) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_int(rng, 4, 2, 2);
    const auto v = random_int(rng, 2, 5, 2);
    const auto a = real_product(u, v);
    const auto fp = column_basis_factorization(a, 2);
    EXPECT_EQ(fp.u.cols(), 2u);
    EXPECT_NEAR(lp_cost(a, real_product(fp.u, fp.v), 1.0), 0.0, 1e-9);
  }
}

TEST(Io, TextRoundTrip) {
  const auto a = DenseMatrix::from_rows({{0.1, -2}, {1e-7, 3.25}});
  std::istringstream in(to_text(a));
  EXPECT_EQ(read_matrix(in), a);
  const auto f = DenseMatrix::from_rows({{0, 4}, {3, 1}}, Domain::fq(5));
  std::istringstream fin(to_text(f));
  EXPECT_EQ(read_matrix(fin), f);
}

TEST(Io, CommentsAndErrors) {
  std::istringstream ok("# header\n2 2 binary\n1 0\n# mid\n0 1\n");
  EXPECT_EQ(read_matrix(ok), DenseMatrix::identity(2, Domain::binary()));
  std::istringstream short_row("2 2 real\n1 2\n3\n");
  try {
    read_matrix(short_row);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream bad_value("1 1 binary\n2\n");
  EXPECT_THROW(read_matrix(bad_value), Error);
  std::istringstream bad_header("x 2 real\n");
  EXPECT_THROW(read_matrix(bad_header), ParseError);
}

TEST(Io, FactorPairJsonRoundTrip) {
  FactorPair fp{DenseMatrix::from_rows({{1, 0}}, Domain::binary()), DenseMatrix::from_rows({{1}, {1}}, Domain::binary()), 3};
  const auto j = factor_pair_to_json(fp);
  EXPECT_EQ(j.at("domain"), "binary");
  const auto back = factor_pair_from_json(j);
  EXPECT_EQ(back.u, fp.u);
  EXPECT_EQ(back.v, fp.v);
  EXPECT_EQ(back.cost, 3.0);
}
