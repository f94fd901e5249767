#include "cli.hpp"

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <json.hpp>

#include "drcc/error.hpp"
#include "drcc/eval.hpp"
#include "drcc/io.hpp"

namespace drcc::cli {

namespace fs = std::filesystem;
using Eigen::Index;
using nlohmann::json;

namespace {

int exit_for(solve::Status s) {
  switch (s) {
    case solve::Status::Optimal: return kExitOk;
    case solve::Status::Infeasible: return kExitInfeasible;
    case solve::Status::IterationLimit: return kExitIterationLimit;
    case solve::Status::NumericalError: return kExitNumerical;
  }
  return kExitNumerical;
}

// Maps library exceptions onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const NotPsdError& e) {
    err << "error: validate_unimodal_model: " << e.what() << " (min eigenvalue "
        << io::fmt(e.min_eigenvalue()) << ")\n";
    return kExitInvalidModel;
  } catch (const pwl::OpsNoConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NetworkError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

stats::SampleSet load_samples(const std::string& samples_path, const std::string& generator_path,
                              std::uint64_t seed) {
  if (!samples_path.empty()) return io::read_samples_csv(samples_path);
  if (!generator_path.empty())
    return stats::synth_unimodal_samples(io::parse_generator_spec(io::read_text(generator_path)), seed);
  throw InputError("either a samples CSV or a generator config is required");
}

void check_settings(double epsilon, double alpha, int bins) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("epsilon must lie in (0, 0.5)");
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (bins < 1) throw DomainError("bins must be >= 1");
}

bool needs_unimodal(const std::string& method) {
  return method == "dr-u" || method == "relaxed" || method == "ub" || method.rfind("ops", 0) == 0;
}

solve::SolveReport run_method(const solve::OpfModel& m, const std::string& method, int K,
                              const stats::SampleSet& samples, const stats::UncertaintyModel& model,
                              const solve::SolveConfig& sc) {
  if (method == "nominal") return solve::solve_nominal(m, sc);
  if (method == "ar") return solve::solve_ar(m, model, sc);
  if (method == "sc") return solve::solve_sc(m, samples, 0, sc);
  if (method == "dr-m") return solve::solve_moment(m, model, sc);
  if (method == "dr-u") return solve::solve_exact_unimodal(m, model, sc);
  if (method == "relaxed") {
    const auto exact = solve::solve_exact_unimodal(m, model, sc);
    return solve::solve_relaxed(m, model, K, exact, sc);
  }
  return solve::solve_conservative(m, model, solve::parse_variant(method), K, sc);
}

std::string summary_text(const solve::SolveReport& r, const std::optional<double>& reliability) {
  std::ostringstream s;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  auto list = [&](const Eigen::VectorXd& v) {
    std::string t;
    for (Index i = 0; i < v.size(); ++i) t += (i ? " " : "") + num(v(i));
    return t;
  };
  s << "method       " << r.method << (r.K > 0 ? " (K=" + std::to_string(r.K) + ")" : "") << "\n";
  s << "status       " << solve::status_name(r.status) << "\n";
  s << "objective    " << num(r.objective) << "\n";
  s << "iterations   " << r.iterations << "\n";
  s << "cuts added   " << r.cuts_added.size() << "\n";
  if (reliability) s << "reliability  " << num(*reliability) << " %\n";
  if (r.x.size() > 0) {
    s << "P_G          " << list(r.decision.pg) << "\n";
    s << "R_up         " << list(r.decision.rup) << "\n";
    s << "R_dn         " << list(r.decision.rdn) << "\n";
    s << "d_G          " << list(r.decision.dist) << "\n";
  }
  for (const auto& n : r.notes) s << "note         " << n << "\n";
  return s.str();
}

}  // namespace

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"nominal", "ar",   "sc",   "dr-m", "dr-u", "relaxed",
                                              "ub",      "ops0", "ops1", "ops2", "ops3"};
  return names;
}

// ---------------------------------------------------------------------------

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (std::find(method_names().begin(), method_names().end(), cfg.method) == method_names().end())
      throw InputError("unknown method '" + cfg.method + "'");
    check_settings(cfg.epsilon, cfg.alpha, cfg.bins);
    const solve::OpfModel m(opf::load_case(cfg.case_path));

    // Without forecast wind and without data, the errors are taken as identically zero.
    const bool no_data = cfg.samples_path.empty() && cfg.generator_path.empty();
    const stats::SampleSet samples =
        no_data && m.network().total_forecast() == 0.0 && m.uncertainty_dimension() > 0
            ? stats::SampleSet(Eigen::MatrixXd::Zero(2, m.uncertainty_dimension()))
            : load_samples(cfg.samples_path, cfg.generator_path, cfg.seed);
    const auto model = stats::UncertaintyModel::from_samples(samples, cfg.bins, cfg.alpha, cfg.epsilon);
    if (needs_unimodal(cfg.method)) {
      const auto diag = stats::validate_unimodal_model(model);
      if (!diag.valid) {
        err << "error: validate_unimodal_model: " << diag.message << " (min eigenvalue "
            << io::fmt(diag.min_eigenvalue) << ")\n";
        return kExitInvalidModel;
      }
    }

    solve::SolveConfig sc;
    sc.max_iterations = cfg.max_iterations;
    const auto report = run_method(m, cfg.method, cfg.K, samples, model, sc);

    std::optional<double> rel;
    if (!cfg.test_path.empty() && report.x.size() > 0)
      rel = eval::reliability(m.chance_constraints(), report.x, io::read_samples_csv(cfg.test_path));

    json j = report.to_json(cfg.timings);
    j["config"] = {{"case", m.network().name}, {"epsilon", cfg.epsilon}, {"alpha", cfg.alpha},
                   {"bins", cfg.bins},         {"samples", samples.count()}};
    if (rel) j["reliability"] = *rel;
    const std::string summary = summary_text(report, rel);
    if (!cfg.output_dir.empty()) {
      fs::create_directories(cfg.output_dir);
      io::write_text((fs::path(cfg.output_dir) / "report.json").string(), j.dump(2) + "\n");
      io::write_text((fs::path(cfg.output_dir) / "summary.txt").string(), summary);
    }
    out << summary;
    return exit_for(report.status);
  });
}

// ---------------------------------------------------------------------------

SeedData draw_seed_data(const stats::GeneratorSpec* spec, const stats::SampleSet* pool_in,
                        std::uint64_t seed, long train, long test) {
  if (train < 2 || test < 2) throw InputError("train and test counts must be >= 2");
  const stats::SampleSet pool = pool_in ? *pool_in : stats::synth_unimodal_samples(*spec, seed);
  // Index stream separate from the generator's.
  boost::random::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  boost::random::uniform_int_distribution<Index> pick(0, pool.count() - 1);
  std::vector<Index> tr(static_cast<std::size_t>(train)), te(static_cast<std::size_t>(test));
  for (auto& i : tr) i = pick(rng);
  for (auto& i : te) i = pick(rng);
  return SeedData{pool.select(tr), pool.select(te)};
}

SeedResult run_seed(const solve::OpfModel& m, const BenchmarkConfig& cfg, const SeedData& data,
                    std::uint64_t seed) {
  const auto model = stats::UncertaintyModel::from_samples(data.train, cfg.bins, cfg.alpha, cfg.epsilon);
  stats::validate_unimodal_model(model).throw_if_invalid();
  const solve::SolveConfig sc;
  const auto& ccs = m.chance_constraints();
  auto make = [&](std::string method, int K, solve::SolveReport r) {
    MethodRun run{std::move(method), K, std::move(r), 0.0};
    if (run.report.x.size() > 0) run.reliability = eval::reliability(ccs, run.report.x, data.test);
    return run;
  };

  SeedResult out;
  out.seed = seed;
  out.table.push_back(make("ar", 0, solve::solve_ar(m, model, sc)));
  out.table.push_back(make("sc", 0, solve::solve_sc(m, data.train, 0, sc)));
  out.table.push_back(make("dr-m", 0, solve::solve_moment(m, model, sc)));
  const auto exact = solve::solve_exact_unimodal(m, model, sc);
  out.exact_objective = exact.objective;
  out.table.push_back(make("dr-u", 0, exact));

  for (int K = 1; K <= cfg.kmax; ++K) out.sweep.push_back(make("relaxed", K, solve::solve_relaxed(m, model, K, exact, sc)));
  for (auto v : {solve::Variant::UB, solve::Variant::OPS0, solve::Variant::OPS1, solve::Variant::OPS2,
                 solve::Variant::OPS3}) {
    for (int K = 2; K <= cfg.kmax; ++K) {
      out.sweep.push_back(make(solve::variant_name(v), K, solve::solve_conservative(m, model, v, K, sc, &exact)));
      if (K == cfg.kmax) out.table.push_back(out.sweep.back());
    }
  }
  return out;
}

namespace {

std::string opt_fmt(const std::optional<double>& v) { return v ? io::fmt(*v) : std::string(); }

std::string metrics_csv(const std::vector<SeedResult>& seeds, bool timings) {
  // Per-seed metrics rows, then min / avg / max across seeds per method.
  std::vector<std::vector<eval::MetricsRow>> per_seed;
  for (const auto& s : seeds) {
    std::vector<eval::MethodResult> in;
    for (const auto& r : s.table) in.push_back({r.method, r.report.objective, r.reliability, r.report.time_total});
    per_seed.push_back(eval::metrics_table(in));
  }
  std::ostringstream csv;
  csv << "method,K,stat,cost,reliability,cdiff,rdiff,improv" << (timings ? ",time" : "") << "\n";
  const auto& first = seeds.front().table;
  for (std::size_t k = 0; k < first.size(); ++k) {
    std::vector<double> cost, rel, time;
    std::vector<double> cd, rd, im;
    for (const auto& rows : per_seed) {
      cost.push_back(rows[k].cost);
      rel.push_back(rows[k].reliability);
      time.push_back(rows[k].time);
      if (rows[k].cdiff) cd.push_back(*rows[k].cdiff);
      if (rows[k].rdiff) rd.push_back(*rows[k].rdiff);
      if (rows[k].improv) im.push_back(*rows[k].improv);
    }
    auto stat = [](const std::vector<double>& v) -> std::optional<eval::Summary> {
      if (v.empty()) return std::nullopt;
      return eval::summarize(v);
    };
    const auto sc = stat(cost), sr = stat(rel), st = stat(time), sd = stat(cd), srd = stat(rd), si = stat(im);
    const char* names[] = {"min", "avg", "max"};
    for (int w = 0; w < 3; ++w) {
      auto pick = [&](const std::optional<eval::Summary>& s) -> std::optional<double> {
        if (!s) return std::nullopt;
        return w == 0 ? s->min : (w == 1 ? s->avg : s->max);
      };
      csv << first[k].method << "," << (first[k].K > 0 ? std::to_string(first[k].K) : "") << "," << names[w]
          << "," << opt_fmt(pick(sc)) << "," << opt_fmt(pick(sr)) << "," << opt_fmt(pick(sd)) << ","
          << opt_fmt(pick(srd)) << "," << opt_fmt(pick(si));
      if (timings) csv << "," << opt_fmt(pick(st));
      csv << "\n";
    }
  }
  return csv.str();
}

std::string sweep_csv(const std::vector<SeedResult>& seeds, bool timings) {
  // Seed-averaged series keyed by (variable, K), kept in first-seen order.
  std::vector<std::pair<std::string, int>> keys;
  std::map<std::pair<std::string, int>, double> sum;
  auto add = [&](const std::string& var, int K, double v) {
    const auto key = std::make_pair(var, K);
    if (!sum.count(key)) keys.push_back(key);
    sum[key] += v;
  };
  for (const auto& s : seeds) {
    for (const auto& r : s.sweep) {
      add("gap_pct:" + r.method, r.K, eval::optimality_gap(r.report.objective, s.exact_objective));
      add("cost:" + r.method, r.K, r.report.objective);
      add("reliability_pct:" + r.method, r.K, r.reliability);
      add("iterations:" + r.method, r.K, r.report.iterations);
      if (timings) add("time_s:" + r.method, r.K, r.report.time_total);
    }
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::ostringstream csv;
  csv << "variable,K,value\n";
  const double n = static_cast<double>(seeds.size());
  for (const auto& k : keys) csv << k.first << "," << k.second << "," << io::fmt(sum[k] / n) << "\n";
  return csv.str();
}

std::string runs_csv(const std::vector<SeedResult>& seeds, bool timings) {
  std::ostringstream csv;
  csv << "seed,method,K,status,cost,reliability,iterations" << (timings ? ",time" : "") << "\n";
  auto row = [&](std::uint64_t seed, const MethodRun& r) {
    csv << seed << "," << r.method << "," << (r.K > 0 ? std::to_string(r.K) : "") << ","
        << solve::status_name(r.report.status) << "," << io::fmt(r.report.objective) << ","
        << io::fmt(r.reliability) << "," << r.report.iterations;
    if (timings) csv << "," << io::fmt(r.report.time_total);
    csv << "\n";
  };
  for (const auto& s : seeds) {
    for (std::size_t k = 0; k < 4 && k < s.table.size(); ++k) row(s.seed, s.table[k]);
    for (const auto& r : s.sweep) row(s.seed, r);
  }
  return csv.str();
}

}  // namespace

BenchmarkOutput run_benchmark(const BenchmarkConfig& cfg) {
  check_settings(cfg.epsilon, cfg.alpha, cfg.bins);
  if (cfg.seeds < 1) throw InputError("at least one seed is required");
  if (cfg.kmax < 1) throw InputError("kmax must be >= 1");
  if (cfg.jobs < 1) throw InputError("jobs must be >= 1");
  const solve::OpfModel m(opf::load_case(cfg.case_path));
  if (m.uncertainty_dimension() == 0) throw InputError("benchmark needs at least one wind plant");

  std::optional<stats::GeneratorSpec> spec;
  std::optional<stats::SampleSet> pool;
  if (!cfg.samples_path.empty())
    pool = io::read_samples_csv(cfg.samples_path);
  else if (!cfg.generator_path.empty())
    spec = io::parse_generator_spec(io::read_text(cfg.generator_path));
  else
    throw InputError("benchmark needs a generator config or a samples CSV");

  const auto n = static_cast<std::size_t>(cfg.seeds);
  std::vector<SeedResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const std::uint64_t seed = cfg.first_seed + i;
        const SeedData data = draw_seed_data(spec ? &*spec : nullptr, pool ? &*pool : nullptr, seed,
                                             cfg.train, cfg.test);
        results[i] = run_seed(m, cfg, data, seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  BenchmarkOutput out;
  out.metrics_csv = metrics_csv(results, cfg.timings);
  out.sweep_csv = sweep_csv(results, cfg.timings);
  out.runs_csv = runs_csv(results, cfg.timings);
  out.seeds = std::move(results);
  return out;
}

int cmd_benchmark(const BenchmarkConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const BenchmarkOutput b = run_benchmark(cfg);
    if (!cfg.output_dir.empty()) {
      fs::create_directories(cfg.output_dir);
      io::write_text((fs::path(cfg.output_dir) / "metrics.csv").string(), b.metrics_csv);
      io::write_text((fs::path(cfg.output_dir) / "sweep.csv").string(), b.sweep_csv);
      io::write_text((fs::path(cfg.output_dir) / "runs.csv").string(), b.runs_csv);
    }
    out << b.metrics_csv;
    int code = kExitOk;
    for (const auto& s : b.seeds)
      for (const auto& r : s.table)
        if (r.report.status != solve::Status::Optimal) {
          err << "warning: seed " << s.seed << " " << r.method << " finished "
              << solve::status_name(r.report.status) << "\n";
          if (code == kExitOk) code = exit_for(r.report.status);
        }
    return code;
  });
}

// ---------------------------------------------------------------------------

std::uint64_t ops_cache_key(const OpsTableConfig& cfg) {
  char text[256];
  std::snprintf(text, sizeof text, "eps=%.17g;alpha=%.17g;pieces=%d;delta=%.17g;iter=%d;step=%.17g;end=%.17g;retries=%d",
                cfg.epsilon, cfg.alpha, cfg.max_pieces, cfg.ops.delta, cfg.ops.max_iterations, cfg.ops.step,
                cfg.ops.initial_end, cfg.ops.max_retries);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* p = text; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ops_table_csv(const OpsTableConfig& cfg) {
  if (cfg.max_pieces < 1) throw InputError("max-pieces must be >= 1");
  const pwl::VFunction vf(cfg.epsilon, cfg.alpha);
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + io::fmt(v[i]);
    return s;
  };
  std::ostringstream csv;
  csv << "pieces,iterations,emax,end_error,breakpoints,tangent_points\n";
  for (int p = 1; p <= cfg.max_pieces; ++p) {
    const pwl::OpsResult r = pwl::ops_search(vf, p, cfg.ops);
    csv << p << "," << r.iterations << "," << io::fmt(r.emax) << "," << io::fmt(r.end_error) << ","
        << join(r.pwl.breakpoints()) << "," << join(r.pwl.tangent_points()) << "\n";
  }
  return csv.str();
}

int cmd_ops_table(const OpsTableConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    // Validates epsilon and alpha before touching the cache.
    const pwl::VFunction vf(cfg.epsilon, cfg.alpha);
    std::string text;
    if (!cfg.cache_dir.empty()) {
      char name[40];
      std::snprintf(name, sizeof name, "ops-%016" PRIx64 ".csv", ops_cache_key(cfg));
      const fs::path file = fs::path(cfg.cache_dir) / name;
      if (fs::exists(file)) {
        text = io::read_text(file.string());
        err << "cache hit: " << file.string() << "\n";
      } else {
        text = ops_table_csv(cfg);
        fs::create_directories(cfg.cache_dir);
        io::write_text(file.string(), text);
        err << "cache miss: wrote " << file.string() << "\n";
      }
    } else {
      text = ops_table_csv(cfg);
    }
    if (cfg.output_path.empty())
      out << text;
    else
      io::write_text(cfg.output_path, text);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_gen_samples(const GenSamplesConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    auto spec = io::parse_generator_spec(io::read_text(cfg.generator_path));
    if (cfg.count < 0) throw InputError("count must be >= 0");
    if (cfg.count > 0) spec.count = cfg.count;
    const std::string text = io::format_samples_csv(stats::synth_unimodal_samples(spec, cfg.seed));
    if (cfg.output_path.empty())
      out << text;
    else
      io::write_text(cfg.output_path, text);
    return kExitOk;
  });
}

int cmd_validate_case(const ValidateCaseConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const opf::NetworkCase c = opf::load_case(cfg.case_path);
    c.validate();
    const Eigen::MatrixXd ptdf = opf::build_ptdf(c);
    const auto ccs = opf::extract_chance_constraints(c, ptdf);
    out << "case         " << c.name << "\n"
        << "buses        " << c.bus_count() << "\n"
        << "lines        " << c.lines.size() << "\n"
        << "generators   " << c.gen_count() << "\n"
        << "wind plants  " << c.wind_count() << "\n"
        << "load         " << io::fmt(c.total_load()) << " MW\n"
        << "forecast     " << io::fmt(c.total_forecast()) << " MW\n"
        << "chance rows  " << ccs.size() << "\n";
    if (cfg.samples_path.empty()) return kExitOk;

    check_settings(cfg.epsilon, cfg.alpha, cfg.bins);
    const auto samples = io::read_samples_csv(cfg.samples_path);
    if (samples.dimension() != c.wind_count())
      throw InputError("samples have " + std::to_string(samples.dimension()) + " columns, case has " +
                       std::to_string(c.wind_count()) + " wind plants");
    const auto model = stats::UncertaintyModel::from_samples(samples, cfg.bins, cfg.alpha, cfg.epsilon);
    const auto diag = stats::validate_unimodal_model(model);
    out << "samples      " << samples.count() << "\n"
        << "unimodal     " << (diag.valid ? "valid" : "invalid") << " (min eigenvalue "
        << io::fmt(diag.min_eigenvalue) << ")\n";
    if (!diag.valid) {
      err << "error: validate_unimodal_model: " << diag.message << "\n";
      return kExitInvalidModel;
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributionally robust chance-constrained DC-OPF"};
  app.require_subcommand(1);

  RunConfig rc;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one method on a case");
  solve_cmd->add_option("--case", rc.case_path, "Case file (.json or .m)")->required();
  solve_cmd->add_option("--samples", rc.samples_path, "Forecast-error samples CSV");
  solve_cmd->add_option("--generator", rc.generator_path, "Generator config JSON (used with --seed)");
  solve_cmd->add_option("--test", rc.test_path, "Test scenarios CSV for reliability");
  solve_cmd->add_option("--method", rc.method, "nominal, ar, sc, dr-m, dr-u, relaxed, ub, ops0..ops3")
      ->capture_default_str();
  solve_cmd->add_option("--epsilon", rc.epsilon, "Risk level")->capture_default_str();
  solve_cmd->add_option("--alpha", rc.alpha, "Unimodality order")->capture_default_str();
  solve_cmd->add_option("-K,--K", rc.K, "Approximation size")->capture_default_str();
  solve_cmd->add_option("--bins", rc.bins, "Histogram bins for the mode")->capture_default_str();
  solve_cmd->add_option("--seed", rc.seed, "Generator seed")->capture_default_str();
  solve_cmd->add_option("--max-iterations", rc.max_iterations, "Cutting-plane cap")->capture_default_str();
  solve_cmd->add_option("--out", rc.output_dir, "Directory for report.json and summary.txt");
  solve_cmd->add_flag("--timings", rc.timings, "Include wall-clock fields in the report");

  BenchmarkConfig bc;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run every method over several seeds");
  bench_cmd->add_option("--case", bc.case_path, "Case file")->required();
  bench_cmd->add_option("--generator", bc.generator_path, "Scenario pool generator config");
  bench_cmd->add_option("--samples", bc.samples_path, "Fixed scenario pool CSV");
  bench_cmd->add_option("--epsilon", bc.epsilon, "Risk level")->capture_default_str();
  bench_cmd->add_option("--alpha", bc.alpha, "Unimodality order")->capture_default_str();
  bench_cmd->add_option("--bins", bc.bins, "Histogram bins")->capture_default_str();
  bench_cmd->add_option("--seed", bc.first_seed, "First seed")->capture_default_str();
  bench_cmd->add_option("--seeds", bc.seeds, "Number of seeds")->capture_default_str();
  bench_cmd->add_option("--train", bc.train, "Training draws per seed")->capture_default_str();
  bench_cmd->add_option("--test", bc.test, "Test draws per seed")->capture_default_str();
  bench_cmd->add_option("--kmax", bc.kmax, "Largest K in the sweep")->capture_default_str();
  bench_cmd->add_option("--jobs", bc.jobs, "Seeds run concurrently")->capture_default_str();
  bench_cmd->add_option("--out", bc.output_dir, "Directory for metrics.csv, sweep.csv, runs.csv");
  bench_cmd->add_flag("--timings", bc.timings, "Add wall-clock columns");

  OpsTableConfig oc;
  auto* ops_cmd = app.add_subcommand("ops-table", "Tabulate OPS break points");
  ops_cmd->add_option("--epsilon", oc.epsilon, "Risk level")->capture_default_str();
  ops_cmd->add_option("--alpha", oc.alpha, "Unimodality order")->capture_default_str();
  ops_cmd->add_option("--max-pieces", oc.max_pieces, "Largest |S|")->capture_default_str();
  ops_cmd->add_option("--delta", oc.ops.delta, "Equalization tolerance")->capture_default_str();
  ops_cmd->add_option("--max-iterations", oc.ops.max_iterations, "Iteration budget")->capture_default_str();
  ops_cmd->add_option("--step", oc.ops.step, "Initial step")->capture_default_str();
  ops_cmd->add_option("--initial-end", oc.ops.initial_end, "Initial last break point")->capture_default_str();
  ops_cmd->add_option("--out", oc.output_path, "Output CSV (default stdout)");
  ops_cmd->add_option("--cache", oc.cache_dir, "Cache directory");

  GenSamplesConfig gc;
  auto* gen_cmd = app.add_subcommand("gen-samples", "Draw synthetic forecast errors");
  gen_cmd->add_option("--generator", gc.generator_path, "Generator config JSON")->required();
  gen_cmd->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  gen_cmd->add_option("--count", gc.count, "Scenario count (0 = from config)")->capture_default_str();
  gen_cmd->add_option("--out", gc.output_path, "Output CSV (default stdout)");

  ValidateCaseConfig vc;
  auto* val_cmd = app.add_subcommand("validate-case", "Check a case file");
  val_cmd->add_option("--case", vc.case_path, "Case file")->required();
  val_cmd->add_option("--samples", vc.samples_path, "Also check the uncertainty model of these samples");
  val_cmd->add_option("--epsilon", vc.epsilon, "Risk level")->capture_default_str();
  val_cmd->add_option("--alpha", vc.alpha, "Unimodality order")->capture_default_str();
  val_cmd->add_option("--bins", vc.bins, "Histogram bins")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (solve_cmd->parsed()) return cmd_solve(rc, out, err);
  if (bench_cmd->parsed()) return cmd_benchmark(bc, out, err);
  if (ops_cmd->parsed()) return cmd_ops_table(oc, out, err);
  if (gen_cmd->parsed()) return cmd_gen_samples(gc, out, err);
  return cmd_validate_case(vc, out, err);
}

}  // namespace drcc::cli
