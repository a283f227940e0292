#pragma once

// Matrix text format and FactorPair JSON.
//
// Text format: a header line "n d domain" (domain is real, binary or fq:<q>)
// followed by n rows of d whitespace-separated values. Blank lines and lines
// starting with '#' are ignored.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lowrank/error.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline DenseMatrix read_matrix(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_content_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      const auto pos = out.find_first_not_of(" \t\r");
      if (pos == std::string::npos || out[pos] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_content_line(line)) throw ParseError("empty matrix file");
  std::istringstream header(line);
  long long n = -1, d = -1;
  std::string dom;
  if (!(header >> n >> d >> dom) || n < 0 || d < 0) throw ParseError("header must be 'n d domain'", lineno);
  Domain domain;
  try {
    domain = Domain::parse(dom);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), lineno);
  } catch (const ParameterError& e) {
    throw ParseError(e.what(), lineno);
  }
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(n * d));
  for (long long i = 0; i < n; ++i) {
    if (!next_content_line(line)) throw ParseError("expected " + std::to_string(n) + " rows", lineno);
    std::istringstream ls(line);
    std::string tok;
    long long count = 0;
    while (ls >> tok) {
      double v = 0.0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError("bad value '" + tok + "'", lineno);
      entries.push_back(v);
      ++count;
    }
    if (count != d) throw ParseError("row has " + std::to_string(count) + " values, expected " + std::to_string(d), lineno);
  }
  try {
    return DenseMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d), domain, std::move(entries));
  } catch (const ContractError& e) {
    throw ParseError(e.what());
  }
}

inline DenseMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file '" + path + "'");
  return read_matrix(in);
}

inline void write_matrix(std::ostream& out, const DenseMatrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.domain().name() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline std::string to_text(const DenseMatrix& m) {
  std::ostringstream s;
  write_matrix(s, m);
  return s.str();
}

inline nlohmann::json matrix_to_json(const DenseMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

inline DenseMatrix matrix_from_json(const nlohmann::json& j, Domain domain) {
  if (!j.is_array()) throw ParseError("matrix JSON must be an array of rows");
  const std::size_t n = j.size();
  const std::size_t d = n ? j[0].size() : 0;
  std::vector<double> e;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != d) throw ParseError("ragged matrix JSON");
    for (const auto& v : row) e.push_back(v.get<double>());
  }
  return DenseMatrix(n, d, domain, std::move(e));
}

inline nlohmann::json factor_pair_to_json(const FactorPair& fp) {
  return {{"u", matrix_to_json(fp.u)}, {"v", matrix_to_json(fp.v)}, {"cost", fp.cost}, {"domain", fp.u.domain().name()}};
}

inline FactorPair factor_pair_from_json(const nlohmann::json& j) {
  try {
    const Domain dom = Domain::parse(j.at("domain").get<std::string>());
    return {matrix_from_json(j.at("u"), dom), matrix_from_json(j.at("v"), dom), j.at("cost").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("factor pair JSON: ") + e.what());
  }
}

}  // namespace lowrank
