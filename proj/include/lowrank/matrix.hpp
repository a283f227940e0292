#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "lowrank/error.hpp"
#include "lowrank/finite_field.hpp"

namespace lowrank {

enum class DomainKind { Real, Binary, Fq };

/// Element domain of a matrix. For Fq, `q` is the field order.
struct Domain {
  DomainKind kind = DomainKind::Real;
  int q = 0;

  static Domain real() { return {DomainKind::Real, 0}; }
  static Domain binary() { return {DomainKind::Binary, 2}; }
  static Domain fq(int order) {
    if (!is_prime_power(order) || order > FiniteField::kMaxOrder)
      throw ParameterError("Fq domain needs a prime power q <= 257, got " + std::to_string(order));
    return {DomainKind::Fq, order};
  }

  bool is_real() const noexcept { return kind == DomainKind::Real; }
  bool is_binary() const noexcept { return kind == DomainKind::Binary; }
  bool is_fq() const noexcept { return kind == DomainKind::Fq; }

  /// "real", "binary" or "fq:<q>"; the token used by the text format.
  std::string name() const {
    switch (kind) {
      case DomainKind::Real: return "real";
      case DomainKind::Binary: return "binary";
      case DomainKind::Fq: return "fq:" + std::to_string(q);
    }
    return "real";
  }

  static Domain parse(const std::string& token) {
    if (token == "real") return real();
    if (token == "binary") return binary();
    if (token.rfind("fq:", 0) == 0) {
      const std::string digits = token.substr(3);
      std::size_t used = 0;
      int q = 0;
      try {
        q = std::stoi(digits, &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used == 0 || used != digits.size()) throw ParseError("bad field order in domain '" + token + "'");
      return fq(q);
    }
    throw ParseError("unknown domain '" + token + "'");
  }

  bool operator==(const Domain& o) const noexcept {
    return kind == o.kind && (kind != DomainKind::Fq || q == o.q);
  }

  /// Default tolerance for exact-equality (l0) comparisons in this domain.
  double l0_tolerance() const noexcept { return kind == DomainKind::Real ? 1e-9 : 0.0; }
};

/// Dense row-major matrix. Every entry is stored as a double; Binary entries
/// are 0/1 and Fq entries are residues in [0, q), both exactly representable.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, Domain domain = Domain::real())
      : rows_(rows), cols_(cols), domain_(domain), entries_(rows * cols, 0.0) {}

  DenseMatrix(std::size_t rows, std::size_t cols, Domain domain, std::vector<double> entries)
      : rows_(rows), cols_(cols), domain_(domain), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_)
      throw DimensionError("entry count " + std::to_string(entries_.size()) + " != " + std::to_string(rows_) +
                           "x" + std::to_string(cols_));
    for (double v : entries_) check_value(v);
  }

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows,
                               Domain domain = Domain::real()) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> e;
    e.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged row list");
      e.insert(e.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, domain, std::move(e));
  }

  static DenseMatrix identity(std::size_t n, Domain domain = Domain::real()) {
    DenseMatrix m(n, n, domain);
    for (std::size_t i = 0; i < n; ++i) m.entries_[i * n + i] = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const Domain& domain() const noexcept { return domain_; }

  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  /// Integer view of a Binary/Fq entry.
  int residue(std::size_t i, std::size_t j) const { return static_cast<int>(entries_[i * cols_ + j]); }

  void set(std::size_t i, std::size_t j, double v) {
    check_value(v);
    entries_[i * cols_ + j] = v;
  }

  std::span<const double> entries() const noexcept { return entries_; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = entries_[i * cols_ + j];
    return c;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_, domain_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t.entries_[j * rows_ + i] = entries_[i * cols_ + j];
    return t;
  }

  /// Same entries reinterpreted in another domain (validated).
  DenseMatrix with_domain(Domain domain) const { return DenseMatrix(rows_, cols_, domain, entries_); }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : entries_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_integer_valued() const noexcept {
    for (double v : entries_)
      if (v != std::round(v)) return false;
    return true;
  }

  bool operator==(const DenseMatrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_ && domain_ == o.domain_ && entries_ == o.entries_;
  }

 private:
  void check_value(double v) const {
    switch (domain_.kind) {
      case DomainKind::Real:
        if (!std::isfinite(v)) throw ContractError("real entries must be finite");
        break;
      case DomainKind::Binary:
        if (v != 0.0 && v != 1.0) throw ContractError("binary entries must be 0 or 1");
        break;
      case DomainKind::Fq:
        if (v != std::floor(v) || v < 0.0 || v >= domain_.q)
          throw ContractError("Fq entries must be residues in [0, " + std::to_string(domain_.q) + ")");
        break;
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Domain domain_{};
  std::vector<double> entries_;
};

/// A rank-k factorization candidate (U: n x k, V: k x d) with its objective.
struct FactorPair {
  DenseMatrix u;
  DenseMatrix v;
  double cost = 0.0;
};

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

/// Plain real product, no domain semantics.
inline DenseMatrix real_product(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("real_product: inner dimensions differ");
  std::vector<double> out(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double ail = a(i, l);
      if (ail == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out[i * b.cols() + j] += ail * b(l, j);
    }
  return DenseMatrix(a.rows(), b.cols(), Domain::real(), std::move(out));
}

}  // namespace lowrank
