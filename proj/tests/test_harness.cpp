#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "lowrank/harness.hpp"

using namespace lowrank;

namespace {

BenchConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_bench_config(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::string jsonl(const BenchResult& r, bool timing = false) {
  std::ostringstream s;
  write_jsonl(s, r, timing);
  return s.str();
}

const char* kSmallConfig =
    "# small\n"
    "seed = 7\n"
    "instance = b n=4 d=4 k=1 domain=binary noise=0.2 count=3\n"
    "instance = f n=3 d=3 k=1 domain=fq:3 noise=0.2 count=2\n"
    "algorithm = simple alg=binary-simple t=8 reference=oracle threshold=1 instances=b\n"
    "algorithm = ob alg=oracle-binary reference=oracle threshold=1 instances=b\n"
    "algorithm = of alg=oracle-fq reference=planted instances=f\n";

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    setenv(name, value, 1);
  }
  ~ScopedEnv() {
    if (old_.empty())
      unsetenv(name_);
    else
      setenv(name_, old_.c_str(), 1);
  }

 private:
  const char* name_;
  std::string old_;
};

std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("lowrank_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " 2>/dev/null").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Generate, DeterministicAndNoiseFree) {
  PlantedSpec s;
  s.n = 6;
  s.d = 5;
  s.k = 2;
  s.seed = 3;
  const auto a = generate(s);
  const auto b = generate(s);
  EXPECT_EQ(a.a, b.a);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.flips, 0u);
  EXPECT_EQ(a.a, a.clean);
  EXPECT_EQ(generalized_l0_cost(a.a, a.u, a.v, InnerProductTable::f2(2)), 0.0);
  s.seed = 4;
  EXPECT_NE(generate(s).u, a.u);
}

TEST(Generate, FullNoiseComplementsOverF2) {
  PlantedSpec s;
  s.n = 5;
  s.d = 7;
  s.k = 1;
  s.noise = 1.0;
  const auto p = generate(s);
  EXPECT_EQ(p.flips, 35u);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(p.a(i, j), 1.0 - p.clean(i, j));
}

TEST(Generate, FlipFractionConcentrates) {
  PlantedSpec s;
  s.n = 32;
  s.d = 32;
  s.k = 2;
  s.noise = 0.1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    s.seed = seed;
    const auto p = generate(s);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < 32; ++i)
      for (std::size_t j = 0; j < 32; ++j) diff += p.a(i, j) != p.clean(i, j);
    EXPECT_EQ(diff, p.flips);
    EXPECT_NEAR(static_cast<double>(p.flips) / 1024.0, 0.1, 0.05);
  }
}

TEST(Generate, FqAndRealDomains) {
  PlantedSpec s;
  s.n = 8;
  s.d = 8;
  s.k = 2;
  s.noise = 0.3;
  s.domain = Domain::fq(5);
  const auto f = generate(s);
  EXPECT_EQ(f.clean, fq_product(f.u, f.v));
  std::size_t diff = 0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) diff += f.a(i, j) != f.clean(i, j);
  EXPECT_EQ(diff, f.flips);
  EXPECT_EQ(fq_l0_cost(f.a, f.u, f.v), static_cast<double>(f.flips));

  s.domain = Domain::real();
  s.bound = 3;
  const auto r = generate(s);
  for (double x : r.u.entries()) {
    EXPECT_EQ(x, std::round(x));
    EXPECT_LE(std::abs(x), 3.0);
  }
  EXPECT_EQ(lp_cost(r.a, r.clean, 0.0, 0.0), static_cast<double>(r.flips));
}

TEST(Generate, RejectsBadSpecs) {
  PlantedSpec s;
  s.noise = 1.5;
  EXPECT_THROW(generate(s), ParameterError);
  s.noise = 0.0;
  s.k = 0;
  EXPECT_THROW(generate(s), ParameterError);
  s.k = 2;
  s.semiring = "real";  // <x,y> can reach 2
  EXPECT_THROW(generate(s), ContractError);
}

TEST(Config, ParsesValidFile) {
  const auto cfg = parse(kSmallConfig);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_FALSE(cfg.timing);
  ASSERT_EQ(cfg.instances.size(), 2u);
  EXPECT_EQ(cfg.instances[0].count, 3u);
  EXPECT_EQ(cfg.instances[1].spec.domain, Domain::fq(3));
  ASSERT_EQ(cfg.algorithms.size(), 3u);
  EXPECT_EQ(cfg.algorithms[0].params.at("t"), "8");
  EXPECT_EQ(cfg.algorithms[0].instances, std::vector<std::string>{"b"});
  EXPECT_EQ(*cfg.algorithms[0].threshold, 1.0);
  EXPECT_EQ(cfg.algorithms[2].reference, "planted");
  EXPECT_FALSE(cfg.algorithms[2].threshold);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("seed = 1\n\nbogus = 3\n"), 3u);
  EXPECT_EQ(parse_error_line("seed = x\n"), 1u);
  EXPECT_EQ(parse_error_line("# c\nnot a pair\n"), 2u);
  EXPECT_EQ(parse_error_line("instance = a n=2 colour=red\n"), 1u);
  EXPECT_EQ(parse_error_line("instance = a n=2 domain=fq:4x\n"), 1u);
  EXPECT_EQ(parse_error_line("timing = maybe\n"), 1u);
  EXPECT_EQ(parse_error_line("seed = 1\nalgorithm = x alg=magic\n"), 2u);
  EXPECT_EQ(parse_error_line("algorithm = x alg=lp-ptas reference=best\n"), 1u);
  EXPECT_EQ(parse_error_line("instance = n=3\n"), 1u);
  try {
    parse("\n\nseed = -\n");
  } catch (const ParseError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 3: ", 0), 0u);
  }
}

TEST(Bench, EmptyInstanceListGivesEmptyStream) {
  const auto res = run_bench(parse("algorithm = o alg=oracle-binary reference=oracle threshold=1\n"));
  EXPECT_TRUE(res.reports.empty());
  EXPECT_TRUE(res.ok());
  EXPECT_EQ(jsonl(res), "");
}

TEST(Bench, OracleAgainstItselfHasRatioOne) {
  const auto res = run_bench(parse(kSmallConfig));
  ASSERT_EQ(res.reports.size(), 3u + 3u + 2u);
  for (const auto& r : res.reports) {
    if (r.algorithm == "ob" && r.reference && *r.reference > 0) {
      ASSERT_TRUE(r.ratio);
      EXPECT_DOUBLE_EQ(*r.ratio, 1.0);
    }
    if (r.reference && *r.reference == 0.0 && r.cost == 0.0) {
      EXPECT_FALSE(r.ratio);
    }
  }
  EXPECT_TRUE(res.ok());
}

TEST(Bench, SortedSeededAndDeterministic) {
  const auto cfg = parse(kSmallConfig);
  const auto a = run_bench(cfg);
  for (std::size_t i = 1; i < a.reports.size(); ++i)
    EXPECT_LT(std::tie(a.reports[i - 1].instance, a.reports[i - 1].algorithm),
              std::tie(a.reports[i].instance, a.reports[i].algorithm));
  EXPECT_EQ(a.reports.front().instance, "b#000");
  for (const auto& r : a.reports)
    EXPECT_EQ(r.seed, hash64(cfg.seed, std::string_view(r.instance), std::string_view(r.algorithm)));
  auto threaded = cfg;
  threaded.threads = 3;
  EXPECT_EQ(jsonl(a), jsonl(run_bench(cfg)));
  EXPECT_EQ(jsonl(a), jsonl(run_bench(threaded)));
}

TEST(Bench, FailingThresholdFlipsStatus) {
  // Threshold below 1 cannot be met by the oracle on noisy instances.
  const auto res = run_bench(parse(
      "instance = b n=4 d=4 k=1 domain=binary noise=0.3 count=4\n"
      "algorithm = ob alg=oracle-binary reference=planted threshold=0.01\n"));
  EXPECT_FALSE(res.ok());
  ASSERT_EQ(res.summary.size(), 1u);
  EXPECT_LT(res.summary[0].pass_rate, 1.0);
  std::ostringstream csv;
  write_summary_csv(csv, res);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "algorithm,runs,mean_ratio,max_ratio,pass_rate,threshold,min_pass,status");
  EXPECT_NE(csv.str().find(",fail\n"), std::string::npos);
}

TEST(Bench, JsonLinesFields) {
  const auto res = run_bench(parse(kSmallConfig));
  std::istringstream in(jsonl(res));
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"instance", "algorithm", "alg", "params", "cost", "reference_kind", "pass", "seed"})
      EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_FALSE(j.contains("wall_ms"));
    ++count;
  }
  EXPECT_EQ(count, res.reports.size());
  const auto timed = nlohmann::json::parse(jsonl(res, true).substr(0, jsonl(res, true).find('\n')));
  EXPECT_TRUE(timed.contains("wall_ms"));
}

TEST(Bench, SeedOverrideFromEnvironment) {
  auto cfg = parse(kSmallConfig);
  {
    ScopedEnv env("LOWRANK_SEED", "12345");
    apply_seed_override(cfg);
  }
  EXPECT_EQ(cfg.seed, 12345u);
  {
    ScopedEnv env("LOWRANK_SEED", "abc");
    EXPECT_THROW(apply_seed_override(cfg), ParameterError);
  }
}

TEST(Cli, EndToEnd) {
  const char* cli = std::getenv("LOWRANK_CLI");
  if (!cli || !*cli) GTEST_SKIP() << "LOWRANK_CLI not set";
  const std::string exe = cli;
  const auto dir = scratch_dir("cli");
  const auto mat = (dir / "a.txt").string();
  const auto truth = (dir / "truth.json").string();
  const auto sol = (dir / "sol.json").string();

  ASSERT_EQ(run(exe + " gen --n 6 --d 6 --k 1 --noise 0.1 --seed 5 -o " + mat + " --truth " + truth), 0);
  const DenseMatrix a = read_matrix_file(mat);
  EXPECT_EQ(a.rows(), 6u);
  EXPECT_TRUE(a.domain().is_binary());

  ASSERT_EQ(run(exe + " solve --alg binary-sample --k 1 --t 6 --restarts 4 -i " + mat + " -o " + sol), 0);
  const auto fp = factor_pair_from_json(nlohmann::json::parse(slurp(sol)));
  EXPECT_EQ(fp.cost, generalized_l0_cost(a, fp.u, fp.v, InnerProductTable::f2(1)));

  ASSERT_EQ(run(exe + " oracle --alg binary --k 1 -i " + mat + " -o " + sol), 0);
  const auto j = nlohmann::json::parse(slurp(sol));
  EXPECT_EQ(j.at("enumerated").get<std::uint64_t>(), 64u);
  EXPECT_LE(j.at("cost").get<double>(), fp.cost);

  // Exit codes: usage 2, refusal 3, threshold failure 1.
  EXPECT_EQ(run(exe + " solve --alg nope"), 2);
  EXPECT_EQ(run(exe + " oracle --alg binary --k 1 -i " + (dir / "missing.txt").string()), 2);
  const auto big = (dir / "big.txt").string();
  ASSERT_EQ(run(exe + " gen --n 30 --d 30 --k 1 -o " + big), 0);
  EXPECT_EQ(run(exe + " oracle --alg binary --k 1 -i " + big), 3);

  const auto cfg = (dir / "bench.cfg").string();
  std::ofstream(cfg) << kSmallConfig;
  const auto r1 = (dir / "r1.jsonl").string(), r2 = (dir / "r2.jsonl").string(), csv = (dir / "s.csv").string();
  EXPECT_EQ(run(exe + " bench " + cfg + " --jsonl " + r1 + " --summary " + csv), 0);
  EXPECT_EQ(run(exe + " bench " + cfg + " --jsonl " + r2 + " --summary " + csv), 0);
  EXPECT_FALSE(slurp(r1).empty());
  EXPECT_EQ(slurp(r1), slurp(r2));
  EXPECT_EQ(slurp(r1), jsonl(run_bench(parse(kSmallConfig))));
  EXPECT_EQ(run("LOWRANK_SEED=99 " + exe + " bench " + cfg + " --jsonl " + r2 + " --summary " + csv), 0);
  EXPECT_NE(slurp(r1), slurp(r2));

  std::ofstream(cfg) << "instance = b n=4 d=4 k=1 domain=binary noise=0.3 count=4\n"
                        "algorithm = ob alg=oracle-binary reference=planted threshold=0.01\n";
  EXPECT_EQ(run(exe + " bench " + cfg + " --jsonl " + r1 + " --summary " + csv), 1);
  std::ofstream(cfg) << "seed = 1\nwhat = 2\n";
  EXPECT_EQ(run(exe + " bench " + cfg + " --jsonl " + r1 + " --summary " + csv), 2);

  EXPECT_EQ(run(exe + " sketch-test --m 400 --trials 50 > " + (dir / "st.txt").string()), 0);
  EXPECT_NE(slurp(dir / "st.txt").find("PASS"), std::string::npos);
  std::filesystem::remove_all(dir);
}
