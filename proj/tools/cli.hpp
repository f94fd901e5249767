#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drcc/opf.hpp"
#include "drcc/pwl.hpp"
#include "drcc/solve.hpp"
#include "drcc/stats.hpp"

namespace drcc::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,           ///< bad flags, unreadable or malformed files, out-of-domain settings
  kExitInfeasible = 2,      ///< the conic program has no feasible point
  kExitIterationLimit = 3,  ///< cutting-plane loop hit its cap
  kExitInvalidModel = 4,    ///< unimodal inner matrix is indefinite
  kExitNumerical = 5,       ///< solver or search failed numerically
};

/// Methods accepted by `solve`.
const std::vector<std::string>& method_names();

struct RunConfig {
  std::string case_path;
  std::string samples_path;    ///< CSV; takes precedence over the generator
  std::string generator_path;  ///< JSON generator config, drawn with `seed`
  std::string test_path;       ///< optional CSV for out-of-sample reliability
  std::string method = "dr-u";
  double epsilon = 0.05;
  double alpha = 1.0;
  int K = 3;
  int bins = 15;
  std::uint64_t seed = 1;
  std::string output_dir;  ///< report.json and summary.txt; empty = stdout only
  bool timings = false;
  int max_iterations = 100;
};

/// Runs one method; returns the exit code. Human-readable output goes to
/// `out`, diagnostics to `err`.
int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct BenchmarkConfig {
  std::string case_path;
  std::string generator_path;  ///< scenario pool generator
  std::string samples_path;    ///< alternative: fixed scenario pool from CSV
  double epsilon = 0.05;
  double alpha = 1.0;
  int bins = 15;
  std::uint64_t first_seed = 1;
  int seeds = 3;
  long train = 5000;  ///< training draws per seed, with replacement from the pool
  long test = 10000;  ///< test draws per seed, with replacement from the pool
  int kmax = 5;       ///< largest K of the sweep
  bool timings = false;
  int jobs = 1;
  std::string output_dir;
};

/// Training and test sets for one seed.
struct SeedData {
  stats::SampleSet train;
  stats::SampleSet test;
};

/// Draws the pool (generator with `seed`, or the fixed pool) and resamples
/// train / test sets from it with a seed-derived stream.
SeedData draw_seed_data(const stats::GeneratorSpec* spec, const stats::SampleSet* pool,
                        std::uint64_t seed, long train, long test);

/// One method run on one seed.
struct MethodRun {
  std::string method;
  int K = 0;
  solve::SolveReport report;
  double reliability = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double exact_objective = 0.0;
  std::vector<MethodRun> table;  ///< ar, sc, dr-m, dr-u and conservative variants at kmax
  std::vector<MethodRun> sweep;  ///< relaxed K=1..kmax, conservative K=2..kmax
};

/// Every method of the benchmark on one seed. Deterministic.
SeedResult run_seed(const solve::OpfModel& model, const BenchmarkConfig& cfg, const SeedData& data,
                    std::uint64_t seed);

struct BenchmarkOutput {
  std::string metrics_csv;  ///< min / avg / max rows per method
  std::string sweep_csv;    ///< tidy (variable, K, value)
  std::string runs_csv;     ///< one row per seed and method
  std::vector<SeedResult> seeds;
};

/// Full benchmark; seeds run concurrently up to cfg.jobs, results are merged
/// in seed order so the text is independent of the job count.
BenchmarkOutput run_benchmark(const BenchmarkConfig& cfg);

int cmd_benchmark(const BenchmarkConfig& cfg, std::ostream& out, std::ostream& err);

struct OpsTableConfig {
  double epsilon = 0.05;
  double alpha = 1.0;
  int max_pieces = 5;
  pwl::OpsConfig ops;
  std::string output_path;  ///< empty = stdout
  std::string cache_dir;    ///< empty = no cache
};

/// CSV of ops_search results for |S| = 1..max_pieces.
std::string ops_table_csv(const OpsTableConfig& cfg);
/// 64-bit FNV-1a of the canonical (epsilon, alpha, max_pieces, cfg) text.
std::uint64_t ops_cache_key(const OpsTableConfig& cfg);

int cmd_ops_table(const OpsTableConfig& cfg, std::ostream& out, std::ostream& err);

struct GenSamplesConfig {
  std::string generator_path;
  std::uint64_t seed = 1;
  long count = 0;  ///< 0 = value from the config
  std::string output_path;
};

int cmd_gen_samples(const GenSamplesConfig& cfg, std::ostream& out, std::ostream& err);

struct ValidateCaseConfig {
  std::string case_path;
  std::string samples_path;  ///< optional: also check the uncertainty model
  double epsilon = 0.05;
  double alpha = 1.0;
  int bins = 15;
};

int cmd_validate_case(const ValidateCaseConfig& cfg, std::ostream& out, std::ostream& err);

/// Entry point used by the executable: parses argv with CLI11 and dispatches.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace drcc::cli
