// lowrank_cli: generate instances, run solvers and oracles, drive benches.
//
//   lowrank_cli gen --n 16 --d 12 --k 2 --domain binary --noise 0.05 -o a.txt
//   lowrank_cli solve --alg binary-sample --input a.txt --k 2 --t 16
//   lowrank_cli oracle --alg binary --input a.txt --k 2
//   lowrank_cli bench bench/acceptance.cfg --jsonl runs.jsonl --summary summary.csv
//   lowrank_cli sketch-test --k 2 --eps 0.2 --m 400
//
// Exit codes: 0 success, 1 bench threshold failure or sketch-test failure,
// 2 usage/parse error, 3 budget refusal, 4 other library error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lowrank/lowrank.hpp"

namespace {

using namespace lowrank;

DenseMatrix load_input(const std::string& path) {
  if (path == "-") return read_matrix(std::cin);
  return read_matrix_file(path);
}

void emit(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

struct GenArgs {
  PlantedSpec spec;
  std::string domain = "binary";
  std::string out = "-";
  std::string truth;
};

struct SolveArgs {
  std::string alg;
  std::string input = "-";
  std::string out = "-";
  std::size_t k = 1;
  std::string semiring = "f2";
  double eps = 0.5;
  std::size_t t = 16;
  std::size_t restarts = 1;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  double p = 1.0;
  double grid_step = 1.0;
  double grid_bound = 2.0;
  std::size_t sketch_rows = 6;
  double budget = 0.0;
  double fq_eps = 0.25;
  std::size_t instances = 9;
};

struct OracleArgs {
  std::string alg;
  std::string input = "-";
  std::string out = "-";
  std::size_t k = 1;
  std::string semiring = "f2";
  double p = 1.0;
  double grid_step = 1.0;
  double grid_bound = 2.0;
};

struct BenchArgs {
  std::string config;
  std::string jsonl = "-";
  std::string summary;
  std::size_t threads = 0;
};

struct SketchTestArgs {
  std::size_t k = 2;
  std::size_t n = 20;
  double eps = 0.2;
  std::size_t m = 400;
  std::size_t trials = 200;
  double p = 1.0;
  double threshold = 0.9;
  std::uint64_t seed = 1;
};

int run_gen(GenArgs& g) {
  g.spec.domain = Domain::parse(g.domain);
  const PlantedInstance inst = generate(g.spec);
  if (g.out == "-") {
    write_matrix(std::cout, inst.a);
  } else {
    std::ofstream out(g.out);
    if (!out) throw Error("cannot write '" + g.out + "'");
    write_matrix(out, inst.a);
  }
  if (!g.truth.empty()) {
    nlohmann::json j;
    j["u"] = matrix_to_json(inst.u);
    j["v"] = matrix_to_json(inst.v);
    j["flips"] = inst.flips;
    j["domain"] = inst.a.domain().name();
    emit(j, g.truth);
  }
  return 0;
}

int run_solve(const SolveArgs& s) {
  const DenseMatrix a = load_input(s.input);
  FactorPair fp;
  if (s.alg == "binary-simple") {
    const auto ip = InnerProductTable::from_name(s.semiring, s.k);
    SimplePtasBudget b;
    if (s.budget > 0) b.families = s.budget;
    fp = simple_ptas(a, s.k, ip, s.eps, s.t, b);
  } else if (s.alg == "binary-sample") {
    const auto ip = InnerProductTable::from_name(s.semiring, s.k);
    SamplePtasOptions o;
    o.eps = s.eps;
    o.t = s.t;
    o.restarts = s.restarts;
    o.seed = s.seed;
    o.threads = s.threads;
    fp = sample_ptas(a, s.k, ip, o);
  } else if (s.alg == "fq-sketch") {
    FqConfig c;
    c.sketch.eps = s.fq_eps;
    c.sketch.instances = s.instances;
    if (s.budget > 0) c.budget = s.budget;
    c.seed = s.seed;
    fp = fq_rank_k_approx(a, s.k, c);
  } else {
    LpConfig c;
    c.p = s.p;
    c.eps = s.eps;
    c.grid_step = s.grid_step;
    c.grid_bound = s.grid_bound;
    c.sketch_rows = s.sketch_rows;
    if (s.budget > 0) c.budget = s.budget;
    c.seed = s.seed;
    fp = lp_rank_k_ptas(a, s.k, c);
  }
  emit(factor_pair_to_json(fp), s.out);
  return 0;
}

int run_oracle(const OracleArgs& o) {
  const DenseMatrix a = load_input(o.input);
  OracleResult r;
  if (o.alg == "binary")
    r = brute_force_binary(a, o.k, InnerProductTable::from_name(o.semiring, o.k));
  else if (o.alg == "fq")
    r = brute_force_fq(a, o.k);
  else
    r = brute_force_lp_grid(a, o.k, make_grid(o.grid_step, o.grid_bound), o.p);
  nlohmann::json j = factor_pair_to_json(r.witness);
  j["enumerated"] = r.enumerated;
  emit(j, o.out);
  return 0;
}

int run_bench_cmd(const BenchArgs& b) {
  BenchConfig cfg = load_bench_config(b.config);
  apply_seed_override(cfg);
  if (b.threads) cfg.threads = b.threads;
  const BenchResult res = run_bench(cfg);
  if (b.jsonl == "-") {
    write_jsonl(std::cout, res, cfg.timing);
  } else {
    std::ofstream out(b.jsonl);
    if (!out) throw Error("cannot write '" + b.jsonl + "'");
    write_jsonl(out, res, cfg.timing);
  }
  if (b.summary.empty()) {
    write_summary_csv(std::cerr, res);
  } else {
    std::ofstream out(b.summary);
    if (!out) throw Error("cannot write '" + b.summary + "'");
    write_summary_csv(out, res);
  }
  return res.ok() ? 0 : 1;
}

int run_sketch_test(const SketchTestArgs& s) {
  // Fixed random k-dimensional subspace of R^n, Gaussian basis.
  Rng rng(hash64(s.seed, std::string_view("subspace")));
  DenseMatrix u(s.n, s.k);
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t l = 0; l < s.k; ++l) u.set(i, l, rng.normal());
  const double frac = embedding_trial(u, s.p, s.m, s.trials, s.eps, s.seed);
  const bool pass = frac >= s.threshold;
  std::printf("%-8s %-6s %-6s %-8s %-8s %-10s %-10s %s\n", "p", "k", "n", "m", "trials", "in_band", "threshold",
              "result");
  std::printf("%-8g %-6zu %-6zu %-8zu %-8zu %-10.4f %-10g %s\n", s.p, s.k, s.n, s.m, s.trials, frac, s.threshold,
              pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank approximation toolkit: entrywise lp, binary l0 and F_q solvers"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a planted instance");
  g->add_option("--n", gen.spec.n, "Rows")->required();
  g->add_option("--d", gen.spec.d, "Columns")->required();
  g->add_option("--k", gen.spec.k, "Planted rank")->required();
  g->add_option("--domain", gen.domain, "real, binary or fq:<q>");
  g->add_option("--semiring", gen.spec.semiring, "Binary table: f2, bool, real or table:<file>");
  g->add_option("--noise", gen.spec.noise, "Per-entry noise rate");
  g->add_option("--bound", gen.spec.bound, "Real instances: entry bound");
  g->add_option("--seed", gen.spec.seed, "Seed");
  g->add_option("-o,--output", gen.out, "Matrix output file (- for stdout)");
  g->add_option("--truth", gen.truth, "Write planted factors as JSON to this file");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run an approximation algorithm");
  s->add_option("--alg", solve.alg, "Solver")
      ->required()
      ->check(CLI::IsMember({"lp-ptas", "binary-simple", "binary-sample", "fq-sketch"}));
  s->add_option("-i,--input", solve.input, "Matrix file (- for stdin)");
  s->add_option("-o,--output", solve.out, "JSON output file (- for stdout)");
  s->add_option("--k", solve.k, "Target rank");
  s->add_option("--semiring", solve.semiring, "Binary table");
  s->add_option("--eps", solve.eps, "Accuracy parameter (lp-ptas, binary)");
  s->add_option("--t", solve.t, "Sample size (binary)");
  s->add_option("--restarts", solve.restarts, "Restarts (binary-sample)");
  s->add_option("--threads", solve.threads, "Worker threads (binary-sample)");
  s->add_option("--seed", solve.seed, "Seed");
  s->add_option("--p", solve.p, "Norm exponent (lp-ptas)");
  s->add_option("--grid-step", solve.grid_step, "Grid spacing (lp-ptas)");
  s->add_option("--grid-bound", solve.grid_bound, "Grid bound (lp-ptas)");
  s->add_option("--sketch-rows", solve.sketch_rows, "Sketch rows m (lp-ptas)");
  s->add_option("--budget", solve.budget, "Enumeration budget");
  s->add_option("--fq-eps", solve.fq_eps, "Sketch accuracy (fq-sketch)");
  s->add_option("--instances", solve.instances, "Sketch instances (fq-sketch)");

  OracleArgs oracle;
  auto* o = app.add_subcommand("oracle", "Exact brute-force optimum");
  o->add_option("--alg", oracle.alg, "Oracle")->required()->check(CLI::IsMember({"binary", "fq", "l1grid", "lpgrid"}));
  o->add_option("-i,--input", oracle.input, "Matrix file (- for stdin)");
  o->add_option("-o,--output", oracle.out, "JSON output file (- for stdout)");
  o->add_option("--k", oracle.k, "Target rank");
  o->add_option("--semiring", oracle.semiring, "Binary table");
  o->add_option("--p", oracle.p, "Norm exponent (lpgrid)");
  o->add_option("--grid-step", oracle.grid_step, "Grid spacing");
  o->add_option("--grid-bound", oracle.grid_bound, "Grid bound");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a bench config");
  b->add_option("config", bench.config, "Config file")->required();
  b->add_option("--jsonl", bench.jsonl, "JSON-lines report file (- for stdout)");
  b->add_option("--summary", bench.summary, "CSV summary file (default: stderr)");
  b->add_option("--threads", bench.threads, "Worker threads (overrides the config)");

  SketchTestArgs st;
  auto* e = app.add_subcommand("sketch-test", "Median sketch embedding check on a random subspace");
  e->add_option("--k", st.k, "Subspace dimension");
  e->add_option("--n", st.n, "Ambient dimension");
  e->add_option("--eps", st.eps, "Band half-width");
  e->add_option("--m", st.m, "Sketch rows");
  e->add_option("--trials", st.trials, "Random vectors");
  e->add_option("--p", st.p, "Stability index");
  e->add_option("--threshold", st.threshold, "Required in-band fraction");
  e->add_option("--seed", st.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    // --help and --version exit 0; every other usage error maps to 2.
    return app.exit(ex) == 0 ? 0 : 2;
  }

  try {
    if (*g) return run_gen(gen);
    if (*s) return run_solve(solve);
    if (*o) {
      if (oracle.alg == "l1grid") oracle.p = 1.0;
      return run_oracle(oracle);
    }
    if (*b) return run_bench_cmd(bench);
    if (*e) return run_sketch_test(st);
  } catch (const BudgetExceeded& ex) {
    std::fprintf(stderr, "refused: %s\n", ex.what());
    return 3;
  } catch (const ParseError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const Error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 4;
  }
  return 2;
}
