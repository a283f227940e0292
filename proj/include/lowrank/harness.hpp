#pragma once

// Planted instance generation and the bench runner.
//
// Bench config: one `key = value` per line, '#' starts a comment.
//   seed = <u64>                 base seed (LOWRANK_SEED overrides it)
//   timing = true|false          include wall_ms in reports (default false,
//                                keeping reports byte-identical across reruns)
//   threads = <n>                worker threads (default 1)
//   instance = <id> key=val ...  n d k domain semiring noise count bound
//   algorithm = <id> key=val ... alg=<solver> plus solver parameters and
//                                reference=oracle|planted|none threshold=<r>
//                                min_pass=<fraction> instances=<id,id,...>
// Instance `id` with count=c expands to ids id#000 .. id#(c-1). The run seed
// of (instance, algorithm) is hash64(seed, instance id, algorithm id).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowrank/binary_l0.hpp"
#include "lowrank/cost.hpp"
#include "lowrank/error.hpp"
#include "lowrank/fq_solver.hpp"
#include "lowrank/inner_product.hpp"
#include "lowrank/io.hpp"
#include "lowrank/lp_solver.hpp"
#include "lowrank/matrix.hpp"
#include "lowrank/oracle.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

struct PlantedSpec {
  std::size_t n = 8;
  std::size_t d = 8;
  std::size_t k = 1;
  Domain domain = Domain::binary();
  /// Table for Binary instances: f2, bool, real or table:<file>.
  std::string semiring = "f2";
  double noise = 0.0;
  std::uint64_t seed = 1;
  /// Real instances: factor entries are integers in [-bound, bound], noise
  /// entries nonzero integers in the same range.
  int bound = 2;
};

struct PlantedInstance {
  DenseMatrix a;
  /// Noise-free product U*·V* (Binary/Fq: in the instance domain).
  DenseMatrix clean;
  DenseMatrix u;
  DenseMatrix v;
  /// Number of entries changed by the noise.
  std::size_t flips = 0;
};

/// Planted instance: U*, V* uniform, A = noise_rho(U*·V*). Draw order from
/// Rng(seed): U row-major, V row-major, then per entry of A (row-major) one
/// Bernoulli(rho) and, if it fires and the domain needs one, the new value.
inline PlantedInstance generate(const PlantedSpec& s) {
  if (!(s.noise >= 0.0 && s.noise <= 1.0)) throw ParameterError("noise rate must lie in [0, 1]");
  if (s.k == 0) throw ParameterError("rank k must be positive");
  Rng rng(s.seed);
  PlantedInstance p;
  switch (s.domain.kind) {
    case DomainKind::Binary: {
      const auto ip = InnerProductTable::from_name(s.semiring, s.k);
      for (double v : ip.values())
        if (v != 0.0 && v != 1.0)
          throw ContractError("planted binary instances need a {0,1}-valued table; '" + s.semiring + "' is not");
      p.u = DenseMatrix(s.n, s.k, Domain::binary());
      p.v = DenseMatrix(s.k, s.d, Domain::binary());
      for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t l = 0; l < s.k; ++l) p.u.set(i, l, static_cast<double>(rng.below(2)));
      for (std::size_t l = 0; l < s.k; ++l)
        for (std::size_t j = 0; j < s.d; ++j) p.v.set(l, j, static_cast<double>(rng.below(2)));
      p.clean = generalized_product(p.u, p.v, ip).with_domain(Domain::binary());
      p.a = p.clean;
      for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < s.d; ++j)
          if (rng.bernoulli(s.noise)) {
            p.a.set(i, j, 1.0 - p.a(i, j));
            ++p.flips;
          }
      break;
    }
    case DomainKind::Fq: {
      const auto q = static_cast<std::uint64_t>(s.domain.q);
      p.u = DenseMatrix(s.n, s.k, s.domain);
      p.v = DenseMatrix(s.k, s.d, s.domain);
      for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t l = 0; l < s.k; ++l) p.u.set(i, l, static_cast<double>(rng.below(q)));
      for (std::size_t l = 0; l < s.k; ++l)
        for (std::size_t j = 0; j < s.d; ++j) p.v.set(l, j, static_cast<double>(rng.below(q)));
      p.clean = fq_product(p.u, p.v);
      p.a = p.clean;
      for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < s.d; ++j)
          if (rng.bernoulli(s.noise)) {
            // Uniform among the q-1 other residues.
            const auto shift = 1 + rng.below(q - 1);
            p.a.set(i, j, static_cast<double>((static_cast<std::uint64_t>(p.a.residue(i, j)) + shift) % q));
            ++p.flips;
          }
      break;
    }
    case DomainKind::Real: {
      if (s.bound < 1) throw ParameterError("entry bound must be positive");
      const auto span = static_cast<std::uint64_t>(2 * s.bound + 1);
      auto draw = [&] { return static_cast<double>(static_cast<long>(rng.below(span)) - s.bound); };
      p.u = DenseMatrix(s.n, s.k);
      p.v = DenseMatrix(s.k, s.d);
      for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t l = 0; l < s.k; ++l) p.u.set(i, l, draw());
      for (std::size_t l = 0; l < s.k; ++l)
        for (std::size_t j = 0; j < s.d; ++j) p.v.set(l, j, draw());
      p.clean = real_product(p.u, p.v);
      p.a = p.clean;
      for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < s.d; ++j)
          if (rng.bernoulli(s.noise)) {
            const auto mag = static_cast<double>(1 + rng.below(static_cast<std::uint64_t>(s.bound)));
            p.a.set(i, j, p.a(i, j) + (rng.below(2) ? mag : -mag));
            ++p.flips;
          }
      break;
    }
  }
  return p;
}

struct InstanceDecl {
  std::string id;
  PlantedSpec spec;
  std::size_t count = 1;
};

struct AlgorithmDecl {
  std::string id;
  std::string alg;
  std::map<std::string, std::string> params;
  std::string reference = "none";
  std::optional<double> threshold;
  double min_pass = 1.0;
  std::vector<std::string> instances;  // empty = all
};

struct BenchConfig {
  std::uint64_t seed = 1;
  bool timing = false;
  std::size_t threads = 1;
  std::vector<InstanceDecl> instances;
  std::vector<AlgorithmDecl> algorithms;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& v, const std::string& key, std::size_t line) {
  T out{};
  std::istringstream s(v);
  if (!(s >> out) || !s.eof()) throw ParseError("bad value '" + v + "' for " + key, line);
  return out;
}

inline bool parse_bool(const std::string& v, std::size_t line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("expected true or false, got '" + v + "'", line);
}

/// "<id> k=v k=v ..." -> id and map.
inline std::pair<std::string, std::map<std::string, std::string>> parse_fields(const std::string& rest,
                                                                              std::size_t line) {
  std::istringstream s(rest);
  std::string id;
  if (!(s >> id) || id.find('=') != std::string::npos) throw ParseError("expected an id before the parameters", line);
  std::map<std::string, std::string> kv;
  std::string tok;
  while (s >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("expected key=value, got '" + tok + "'", line);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return {id, kv};
}

}  // namespace detail

inline BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos && (hash == 0 || raw[hash - 1] != '='))
      raw = raw.substr(0, hash);
    const std::string text = detail::trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key == "seed") {
      cfg.seed = detail::parse_number<std::uint64_t>(value, key, line);
    } else if (key == "timing") {
      cfg.timing = detail::parse_bool(value, line);
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<std::size_t>(value, key, line);
    } else if (key == "instance") {
      auto [id, kv] = detail::parse_fields(value, line);
      InstanceDecl decl;
      decl.id = id;
      for (const auto& [k, v] : kv) {
        if (k == "n") decl.spec.n = detail::parse_number<std::size_t>(v, k, line);
        else if (k == "d") decl.spec.d = detail::parse_number<std::size_t>(v, k, line);
        else if (k == "k") decl.spec.k = detail::parse_number<std::size_t>(v, k, line);
        else if (k == "noise") decl.spec.noise = detail::parse_number<double>(v, k, line);
        else if (k == "count") decl.count = detail::parse_number<std::size_t>(v, k, line);
        else if (k == "bound") decl.spec.bound = detail::parse_number<int>(v, k, line);
        else if (k == "semiring") decl.spec.semiring = v;
        else if (k == "domain") {
          try {
            decl.spec.domain = Domain::parse(v);
          } catch (const Error& e) {
            throw ParseError(e.what(), line);
          }
        } else {
          throw ParseError("unknown instance key '" + k + "'", line);
        }
      }
      if (decl.spec.k == 0) throw ParseError("instance rank k must be positive", line);
      if (!(decl.spec.noise >= 0.0 && decl.spec.noise <= 1.0)) throw ParseError("noise must lie in [0, 1]", line);
      cfg.instances.push_back(std::move(decl));
    } else if (key == "algorithm") {
      auto [id, kv] = detail::parse_fields(value, line);
      AlgorithmDecl decl;
      decl.id = id;
      for (const auto& [k, v] : kv) {
        if (k == "alg") decl.alg = v;
        else if (k == "reference") decl.reference = v;
        else if (k == "threshold") decl.threshold = detail::parse_number<double>(v, k, line);
        else if (k == "min_pass") decl.min_pass = detail::parse_number<double>(v, k, line);
        else if (k == "instances") {
          std::string item;
          std::istringstream s(v);
          while (std::getline(s, item, ',')) decl.instances.push_back(item);
        } else {
          decl.params[k] = v;
        }
      }
      static const char* const kAlgs[] = {"binary-simple", "binary-sample", "fq-sketch", "lp-ptas",
                                          "oracle-binary", "oracle-fq",     "oracle-lpgrid"};
      if (std::find_if(std::begin(kAlgs), std::end(kAlgs), [&](const char* a) { return decl.alg == a; }) ==
          std::end(kAlgs))
        throw ParseError("unknown or missing alg '" + decl.alg + "'", line);
      if (decl.reference != "oracle" && decl.reference != "planted" && decl.reference != "none")
        throw ParseError("reference must be oracle, planted or none", line);
      cfg.algorithms.push_back(std::move(decl));
    } else {
      throw ParseError("unknown key '" + key + "'", line);
    }
  }
  return cfg;
}

inline BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open bench config '" + path + "'");
  return parse_bench_config(in);
}

/// LOWRANK_SEED, when set, replaces the config seed.
inline void apply_seed_override(BenchConfig& cfg) {
  if (const char* env = std::getenv("LOWRANK_SEED"); env && *env) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::logic_error&) {
      throw ParameterError(std::string("LOWRANK_SEED is not an unsigned integer: ") + env);
    }
  }
}

struct RunReport {
  std::string instance;
  std::string algorithm;
  std::string alg;
  std::map<std::string, std::string> params;
  double cost = 0.0;
  std::optional<double> reference;
  std::string reference_kind;
  std::optional<double> ratio;
  bool pass = true;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

struct SummaryRow {
  std::string algorithm;
  std::size_t runs = 0;
  std::optional<double> mean_ratio;
  std::optional<double> max_ratio;
  double pass_rate = 1.0;
  std::optional<double> threshold;
  double min_pass = 1.0;
  bool ok = true;
};

struct BenchResult {
  std::vector<RunReport> reports;
  std::vector<SummaryRow> summary;
  bool ok() const {
    return std::all_of(summary.begin(), summary.end(), [](const SummaryRow& r) { return r.ok; });
  }
};

namespace detail {

inline const std::string& param_or(const std::map<std::string, std::string>& p, const std::string& key,
                                   const std::string& fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline double param_num(const std::map<std::string, std::string>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw ParameterError("bad numeric parameter " + key + "=" + it->second);
  }
}

inline LpConfig lp_config_from(const std::map<std::string, std::string>& p, std::uint64_t seed) {
  LpConfig c;
  c.p = param_num(p, "p", 1.0);
  c.eps = param_num(p, "eps", 0.5);
  c.sketch_rows = static_cast<std::size_t>(param_num(p, "m", 6));
  c.grid_step = param_num(p, "grid_step", 1.0);
  c.grid_bound = param_num(p, "grid_bound", 2.0);
  c.budget = param_num(p, "budget", 1e6);
  c.sketch_quantum = param_num(p, "quantum", 1e-3);
  c.right_sketch_rows = static_cast<std::size_t>(param_num(p, "right_m", 0));
  c.seed = seed;
  return c;
}

struct Job {
  std::string instance_id;
  const InstanceDecl* decl;
  std::size_t copy;
  const AlgorithmDecl* alg;
};

inline std::string copy_id(const std::string& id, std::size_t copy) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%03zu", copy);
  return id + buf;
}

/// Runs one solver, recomputes its cost from (A, U, V) and returns it.
inline double run_solver(const AlgorithmDecl& alg, const PlantedInstance& inst, const PlantedSpec& spec,
                         std::uint64_t seed) {
  const auto& p = alg.params;
  const DenseMatrix& a = inst.a;
  const std::size_t k = static_cast<std::size_t>(param_num(p, "k", static_cast<double>(spec.k)));
  FactorPair fp;
  double recomputed = 0.0;
  if (alg.alg == "binary-simple" || alg.alg == "binary-sample" || alg.alg == "oracle-binary") {
    if (!a.domain().is_binary()) throw ContractError(alg.id + ": needs a Binary instance");
    const auto ip = InnerProductTable::from_name(param_or(p, "semiring", spec.semiring), k);
    const double eps = param_num(p, "eps", 0.5);
    const auto t = static_cast<std::size_t>(param_num(p, "t", 16));
    if (alg.alg == "binary-simple") {
      SimplePtasBudget b;
      b.sizes = param_num(p, "size_budget", b.sizes);
      b.families = param_num(p, "family_budget", b.families);
      fp = simple_ptas(a, k, ip, eps, t, b);
    } else if (alg.alg == "binary-sample") {
      SamplePtasOptions o;
      o.eps = eps;
      o.t = t;
      o.restarts = static_cast<std::size_t>(param_num(p, "restarts", 1));
      o.seed = seed;
      fp = sample_ptas(a, k, ip, o);
    } else {
      fp = brute_force_binary(a, k, ip).witness;
    }
    recomputed = generalized_l0_cost(a, fp.u, fp.v, ip);
  } else if (alg.alg == "fq-sketch" || alg.alg == "oracle-fq") {
    if (!a.domain().is_fq()) throw ContractError(alg.id + ": needs an F_q instance");
    if (alg.alg == "fq-sketch") {
      FqConfig c;
      c.sketch.eps = param_num(p, "eps", c.sketch.eps);
      c.sketch.instances = static_cast<std::size_t>(param_num(p, "instances", static_cast<double>(c.sketch.instances)));
      c.budget = param_num(p, "budget", c.budget);
      c.seed = seed;
      fp = fq_rank_k_approx(a, k, c);
    } else {
      fp = brute_force_fq(a, k).witness;
    }
    recomputed = fq_l0_cost(a, fp.u, fp.v);
  } else {
    if (!a.domain().is_real()) throw ContractError(alg.id + ": needs a Real instance");
    const LpConfig c = lp_config_from(p, seed);
    if (alg.alg == "lp-ptas")
      fp = lp_rank_k_ptas(a, k, c);
    else
      fp = brute_force_lp_grid(a, k, make_grid(c.grid_step, c.grid_bound), c.p).witness;
    recomputed = lp_cost(a, real_product(fp.u, fp.v), c.p);
  }
  if (std::abs(recomputed - fp.cost) > 1e-9 * std::max(1.0, std::abs(recomputed)))
    throw Error(alg.id + ": reported cost " + format_double(fp.cost) + " differs from recomputed " +
                format_double(recomputed));
  return recomputed;
}

inline double reference_cost(const AlgorithmDecl& alg, const PlantedInstance& inst, const PlantedSpec& spec) {
  const auto& p = alg.params;
  const std::size_t k = static_cast<std::size_t>(param_num(p, "k", static_cast<double>(spec.k)));
  if (alg.reference == "planted") {
    switch (inst.a.domain().kind) {
      case DomainKind::Binary:
      case DomainKind::Fq: return static_cast<double>(inst.flips);
      case DomainKind::Real: return lp_cost(inst.a, inst.clean, param_num(p, "p", 1.0));
    }
  }
  switch (inst.a.domain().kind) {
    case DomainKind::Binary:
      return brute_force_binary(inst.a, k, InnerProductTable::from_name(param_or(p, "semiring", spec.semiring), k))
          .opt_cost;
    case DomainKind::Fq: return brute_force_fq(inst.a, k).opt_cost;
    case DomainKind::Real: {
      const LpConfig c = lp_config_from(p, 0);
      return brute_force_lp_grid(inst.a, k, make_grid(c.grid_step, c.grid_bound), c.p).opt_cost;
    }
  }
  return 0.0;
}

}  // namespace detail

inline BenchResult run_bench(const BenchConfig& cfg) {
  std::vector<detail::Job> jobs;
  for (const auto& alg : cfg.algorithms)
    for (const auto& inst : cfg.instances) {
      if (!alg.instances.empty() &&
          std::find(alg.instances.begin(), alg.instances.end(), inst.id) == alg.instances.end())
        continue;
      for (std::size_t c = 0; c < inst.count; ++c) jobs.push_back({detail::copy_id(inst.id, c), &inst, c, &alg});
    }
  std::vector<RunReport> reports(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    PlantedSpec spec = job.decl->spec;
    spec.seed = hash64(cfg.seed, std::string_view(job.instance_id));
    const PlantedInstance inst = generate(spec);
    RunReport r;
    r.instance = job.instance_id;
    r.algorithm = job.alg->id;
    r.alg = job.alg->alg;
    r.params = job.alg->params;
    r.seed = hash64(cfg.seed, std::string_view(job.instance_id), std::string_view(job.alg->id));
    const auto t0 = std::chrono::steady_clock::now();
    r.cost = detail::run_solver(*job.alg, inst, spec, r.seed);
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.reference_kind = job.alg->reference;
    if (job.alg->reference != "none") {
      r.reference = detail::reference_cost(*job.alg, inst, spec);
      if (*r.reference > 0.0) r.ratio = r.cost / *r.reference;
    }
    if (job.alg->threshold) {
      if (r.ratio)
        r.pass = *r.ratio <= *job.alg->threshold + 1e-12;
      else
        r.pass = r.reference && r.cost == 0.0;
    }
    reports[i] = std::move(r);
  });
  std::sort(reports.begin(), reports.end(), [](const RunReport& x, const RunReport& y) {
    return std::tie(x.instance, x.algorithm) < std::tie(y.instance, y.algorithm);
  });

  BenchResult out;
  for (const auto& alg : cfg.algorithms) {
    SummaryRow row;
    row.algorithm = alg.id;
    row.threshold = alg.threshold;
    row.min_pass = alg.min_pass;
    double sum = 0.0;
    std::size_t with_ratio = 0, passed = 0;
    for (const auto& r : reports) {
      if (r.algorithm != alg.id) continue;
      ++row.runs;
      passed += r.pass;
      if (r.ratio) {
        sum += *r.ratio;
        ++with_ratio;
        row.max_ratio = std::max(row.max_ratio.value_or(0.0), *r.ratio);
      }
    }
    if (with_ratio) row.mean_ratio = sum / static_cast<double>(with_ratio);
    row.pass_rate = row.runs ? static_cast<double>(passed) / static_cast<double>(row.runs) : 1.0;
    row.ok = !alg.threshold || row.pass_rate + 1e-12 >= alg.min_pass;
    out.summary.push_back(row);
  }
  out.reports = std::move(reports);
  return out;
}

inline nlohmann::json report_to_json(const RunReport& r, bool timing) {
  nlohmann::json j;
  j["instance"] = r.instance;
  j["algorithm"] = r.algorithm;
  j["alg"] = r.alg;
  j["params"] = r.params;
  j["cost"] = r.cost;
  j["reference_kind"] = r.reference_kind;
  if (r.reference) j["reference"] = *r.reference;
  if (r.ratio) j["ratio"] = *r.ratio;
  j["pass"] = r.pass;
  j["seed"] = r.seed;
  if (timing) j["wall_ms"] = r.wall_ms;
  return j;
}

inline void write_jsonl(std::ostream& out, const BenchResult& res, bool timing) {
  for (const auto& r : res.reports) out << report_to_json(r, timing).dump() << '\n';
}

inline void write_summary_csv(std::ostream& out, const BenchResult& res) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "algorithm,runs,mean_ratio,max_ratio,pass_rate,threshold,min_pass,status\n";
  for (const auto& r : res.summary)
    out << r.algorithm << ',' << r.runs << ',' << opt(r.mean_ratio) << ',' << opt(r.max_ratio) << ','
        << format_double(r.pass_rate) << ',' << opt(r.threshold) << ',' << format_double(r.min_pass) << ','
        << (r.threshold ? (r.ok ? "pass" : "fail") : "n/a") << '\n';
}

}  // namespace lowrank
