#pragma once

// Explicit inner-product tables <.,.>: {0,1}^k x {0,1}^k -> R.
//
// A bit vector x in {0,1}^k is encoded as an unsigned label whose most
// significant bit (bit k-1) is coordinate 0. Numeric label order therefore
// coincides with lexicographic order of the vectors.

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "lowrank/error.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

using Label = std::uint32_t;

inline constexpr int kMaxTableRank = 12;

inline bool label_bit(Label x, std::size_t coord, std::size_t k) { return (x >> (k - 1 - coord)) & 1u; }

/// Label of row i of a Binary matrix (its k columns are the coordinates).
inline Label row_label(const DenseMatrix& u, std::size_t i) {
  Label x = 0;
  for (std::size_t l = 0; l < u.cols(); ++l) x = (x << 1) | static_cast<Label>(u.residue(i, l));
  return x;
}

/// Label of column j of a Binary matrix (its k rows are the coordinates).
inline Label col_label(const DenseMatrix& v, std::size_t j) {
  Label y = 0;
  for (std::size_t l = 0; l < v.rows(); ++l) y = (y << 1) | static_cast<Label>(v.residue(l, j));
  return y;
}

/// n x k Binary matrix whose rows spell the given labels.
inline DenseMatrix matrix_from_row_labels(std::span<const Label> labels, std::size_t k) {
  DenseMatrix u(labels.size(), k, Domain::binary());
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t l = 0; l < k; ++l) u.set(i, l, label_bit(labels[i], l, k) ? 1.0 : 0.0);
  return u;
}

/// k x d Binary matrix whose columns spell the given labels.
inline DenseMatrix matrix_from_col_labels(std::span<const Label> labels, std::size_t k) {
  DenseMatrix v(k, labels.size(), Domain::binary());
  for (std::size_t j = 0; j < labels.size(); ++j)
    for (std::size_t l = 0; l < k; ++l) v.set(l, j, label_bit(labels[j], l, k) ? 1.0 : 0.0);
  return v;
}

class InnerProductTable {
 public:
  /// Table of the given values, row-major with values[x * 2^k + y] = <x,y>.
  InnerProductTable(std::size_t k, std::vector<double> values, std::string name = "table")
      : k_(k), values_(std::move(values)), name_(std::move(name)) {
    if (k_ < 1 || k_ > kMaxTableRank)
      throw ParameterError("inner product rank must be in [1, 12], got " + std::to_string(k_));
    if (values_.size() != labels() * labels())
      throw DimensionError("inner product table needs 4^k values");
  }

  static InnerProductTable real_dot(std::size_t k) {
    return build(k, "real", [](Label x, Label y) { return static_cast<double>(std::popcount(x & y)); });
  }

  static InnerProductTable f2(std::size_t k) {
    return build(k, "f2", [](Label x, Label y) { return static_cast<double>(std::popcount(x & y) & 1); });
  }

  static InnerProductTable boolean(std::size_t k) {
    return build(k, "bool", [](Label x, Label y) { return (x & y) != 0 ? 1.0 : 0.0; });
  }

  /// 2^k lines of 2^k whitespace-separated reals; k is inferred.
  static InnerProductTable parse(std::istream& in, std::string name = "table") {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      std::vector<double> row;
      std::string tok;
      while (ls >> tok) {
        try {
          row.push_back(std::stod(tok));
        } catch (const std::logic_error&) {
          throw ParseError("bad number '" + tok + "' in inner product table", lineno);
        }
      }
      rows.push_back(std::move(row));
    }
    const std::size_t count = rows.size();
    if (count < 2 || !std::has_single_bit(count))
      throw ParseError("inner product table needs 2^k rows, got " + std::to_string(count));
    const auto k = static_cast<std::size_t>(std::countr_zero(count));
    std::vector<double> values;
    values.reserve(count * count);
    for (std::size_t r = 0; r < count; ++r) {
      if (rows[r].size() != count)
        throw ParseError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) + " values, expected " +
                         std::to_string(count));
      values.insert(values.end(), rows[r].begin(), rows[r].end());
    }
    return InnerProductTable(k, std::move(values), std::move(name));
  }

  static InnerProductTable from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open inner product table '" + path + "'");
    return parse(in, "table:" + path);
  }

  /// "f2", "bool", "real" or "table:<file>".
  static InnerProductTable from_name(const std::string& semiring, std::size_t k) {
    if (semiring == "f2") return f2(k);
    if (semiring == "bool") return boolean(k);
    if (semiring == "real") return real_dot(k);
    if (semiring.rfind("table:", 0) == 0) {
      auto t = from_file(semiring.substr(6));
      if (t.rank() != k)
        throw ParameterError("table rank " + std::to_string(t.rank()) + " does not match k=" + std::to_string(k));
      return t;
    }
    throw ParameterError("unknown semiring '" + semiring + "'");
  }

  std::size_t rank() const noexcept { return k_; }
  std::size_t labels() const noexcept { return std::size_t{1} << k_; }
  const std::string& name() const noexcept { return name_; }

  double operator()(Label x, Label y) const { return values_[static_cast<std::size_t>(x) * labels() + y]; }

  std::span<const double> values() const noexcept { return values_; }

 private:
  template <class F>
  static InnerProductTable build(std::size_t k, std::string name, F f) {
    if (k < 1 || k > kMaxTableRank)
      throw ParameterError("inner product rank must be in [1, 12], got " + std::to_string(k));
    const std::size_t n = std::size_t{1} << k;
    std::vector<double> v(n * n);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) v[x * n + y] = f(static_cast<Label>(x), static_cast<Label>(y));
    return InnerProductTable(k, std::move(v), std::move(name));
  }

  std::size_t k_;
  std::vector<double> values_;
  std::string name_;
};

}  // namespace lowrank
