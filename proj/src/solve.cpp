#include "drcc/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "drcc/error.hpp"

namespace drcc::solve {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Status from_conic(conic::Status s) {
  switch (s) {
    case conic::Status::Optimal: return Status::Optimal;
    case conic::Status::Infeasible: return Status::Infeasible;
    default: return Status::NumericalError;
  }
}

}  // namespace

std::string status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::IterationLimit: return "iteration-limit";
    case Status::NumericalError: return "numerical-error";
  }
  return "unknown";
}

OpfModel::OpfModel(opf::NetworkCase c) : case_(std::move(c)) {
  case_.validate();
  ptdf_ = opf::build_ptdf(case_);
  ccs_ = opf::extract_chance_constraints(case_, ptdf_);
  layout_ = opf::Layout{case_.gen_count()};
  objective_ = opf::objective(case_);
}

conic::ConicProgram OpfModel::base_program() const {
  conic::ConicProgram prog(0);
  const char* blocks[] = {"pg", "rup", "rdn", "d"};
  for (const char* b : blocks)
    for (Index g = 0; g < layout_.ng; ++g) prog.add_variable(std::string(b) + "[" + std::to_string(g) + "]");
  prog.cost = objective_.linear;

  for (const auto& row : opf::deterministic_constraints(case_)) {
    if (row.sense == opf::LinearConstraint::Sense::Equal)
      prog.add_equality(row.row, row.rhs);
    else
      prog.add_inequality(row.row, -row.rhs, row.label);
  }

  std::vector<Index> idx;
  VectorXd q(layout_.ng);
  double scale = 0.0;
  for (Index g = 0; g < layout_.ng; ++g) {
    idx.push_back(layout_.pg(g));
    q(g) = objective_.quad(layout_.pg(g));
    const double pmax = case_.generators[static_cast<std::size_t>(g)].pmax;
    scale += q(g) * pmax * pmax;
  }
  conic::quadratic_epigraph(prog, idx, q, std::max(1.0, scale));
  return prog;
}

// ---------------------------------------------------------------------------

json SolveReport::to_json(bool timings) const {
  json j;
  j["method"] = method;
  if (K > 0) j["K"] = K;
  j["status"] = status_name(status);
  j["objective"] = objective;
  auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j["decision"] = {{"P_G", vec(decision.pg)},
                   {"R_up", vec(decision.rup)},
                   {"R_dn", vec(decision.rdn)},
                   {"d_G", vec(decision.dist)}};
  j["iterations"] = iterations;
  j["cuts_added"] = cuts_added;
  json hist = json::array();
  for (const auto& h : history) {
    json row{{"iteration", h.iteration}, {"objective", h.objective}};
    json cs = json::array();
    for (const auto& c : h.cuts) cs.push_back({{"constraint", c.constraint}, {"tau", c.tau}, {"violation", c.violation}});
    row["cuts"] = cs;
    if (timings) {
      row["time_solve"] = h.time_solve;
      row["time_separation"] = h.time_separation;
    }
    hist.push_back(row);
  }
  j["history"] = hist;
  j["notes"] = notes;
  if (timings) {
    j["time_total"] = time_total;
    j["time_separation"] = time_separation;
    j["clock"] = "steady";
  }
  return j;
}

namespace {

// Runs one conic solve and fills objective / decision / status.
bool run(const OpfModel& m, const conic::ConicProgram& prog, const SolveConfig& cfg, SolveReport& r,
         double* solve_time = nullptr) {
  const auto t0 = Clock::now();
  const auto backend = conic::make_backend(cfg.backend);
  const conic::Solution sol = backend->solve(prog);
  if (solve_time) *solve_time = seconds_since(t0);
  r.status = from_conic(sol.status);
  if (sol.status != conic::Status::Optimal) {
    r.notes.push_back("conic backend: " + sol.message);
    if (sol.x.size() == 0) return false;
  }
  r.x = sol.x.head(m.layout().size());
  r.decision = opf::Decision::from_vector(m.layout(), r.x);
  r.objective = m.cost()(r.x);
  return sol.status == conic::Status::Optimal;
}

SolveReport single_shot(const OpfModel& m, const conic::ConicProgram& prog, const SolveConfig& cfg,
                        const std::string& method) {
  const auto t0 = Clock::now();
  SolveReport r;
  r.method = method;
  run(m, prog, cfg, r);
  r.iterations = 1;
  r.history.push_back(IterationRecord{1, r.objective, {}, seconds_since(t0), 0.0});
  r.time_total = seconds_since(t0);
  return r;
}

void check_dimension(const OpfModel& m, const stats::UncertaintyModel& model) {
  if (model.dimension() != m.uncertainty_dimension())
    throw InputError("uncertainty model dimension " + std::to_string(model.dimension()) +
                     " does not match the number of wind plants " +
                     std::to_string(m.uncertainty_dimension()));
}

}  // namespace

SolveReport solve_nominal(const OpfModel& m, const SolveConfig& cfg) {
  conic::ConicProgram prog = m.base_program();
  for (const auto& cc : m.chance_constraints()) prog.add_inequality(cc.b, cc.b0, cc.label);
  return single_shot(m, prog, cfg, "nominal");
}

SolveReport solve_moment(const OpfModel& m, const stats::UncertaintyModel& model, const SolveConfig& cfg) {
  check_dimension(m, model);
  conic::ConicProgram prog = m.base_program();
  for (const auto& cc : m.chance_constraints()) prog.add_cone(cuts::reformulate_moment(cc, model));
  return single_shot(m, prog, cfg, "dr-m");
}

SolveReport solve_ar(const OpfModel& m, const stats::UncertaintyModel& model, const SolveConfig& cfg,
                     std::optional<double> epsilon) {
  check_dimension(m, model);
  conic::ConicProgram prog = m.base_program();
  const double eps = epsilon.value_or(model.epsilon());
  for (const auto& cc : m.chance_constraints()) prog.add_cone(cuts::gaussian_cut(cc, model, eps));
  return single_shot(m, prog, cfg, "ar");
}

SolveReport solve_sc(const OpfModel& m, const stats::SampleSet& samples, Index count,
                     const SolveConfig& cfg) {
  if (samples.dimension() != m.uncertainty_dimension())
    throw InputError("sample dimension does not match the number of wind plants");
  const Index used = count == 0 ? samples.count() : count;
  const cuts::ScenarioBox box = cuts::scenario_box(samples, used);
  conic::ConicProgram prog = m.base_program();
  const Index l = samples.dimension();
  for (std::size_t k = 0; k < m.chance_constraints().size(); ++k) {
    const auto& cc = m.chance_constraints()[k];
    const Index first = prog.size();
    for (Index i = 0; i < l; ++i) prog.add_variable("u[" + std::to_string(k) + "][" + std::to_string(i) + "]");
    // The cut is built over [x; u] with u right after x, then mapped into the program.
    const Index n = cc.variables();
    for (auto& cut : cuts::scenario_box_cuts(cc, box, n, n + l)) {
      cuts::SocCut placed = cut.widened(prog.size());
      placed.c.segment(n, l).setZero();
      placed.c.segment(first, l) = cut.c.segment(n, l);
      prog.add_cone(std::move(placed));
    }
  }
  SolveReport r = single_shot(m, prog, cfg, "sc");
  r.notes.push_back("scenario box over " + std::to_string(used) + " samples");
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::optional<cuts::Violation>> separate(const OpfModel& m, const stats::UncertaintyModel& model,
                                                     const MatrixXd& L, const VectorXd& x,
                                                     const SolveConfig& cfg, const std::vector<bool>* skip = nullptr) {
  auto out = cfg.parallel ? cuts::separate_all(m.chance_constraints(), model, L, x, cfg.tol)
                          : cuts::separate_all_serial(m.chance_constraints(), model, L, x, cfg.tol);
  if (skip) {
    for (std::size_t i = 0; i < out.size(); ++i)
      if ((*skip)[i]) out[i].reset();
  }
  return out;
}

// Initial relaxation of the exact family: tau0 and asymptotic cut per constraint.
conic::ConicProgram exact_start(const OpfModel& m, const stats::UncertaintyModel& model, const MatrixXd& L) {
  conic::ConicProgram prog = m.base_program();
  for (const auto& cc : m.chance_constraints()) {
    prog.add_cone(cuts::unimodal_cut_at_tau(cc, model, L, model.tau0()));
    prog.add_cone(cuts::asymptotic_cut(cc, model));
  }
  return prog;
}

}  // namespace

SolveReport solve_exact_unimodal(const OpfModel& m, const stats::UncertaintyModel& model,
                                 const SolveConfig& cfg) {
  check_dimension(m, model);
  const auto t_start = Clock::now();
  const MatrixXd L = cuts::lambda_factor(model);
  conic::ConicProgram prog = exact_start(m, model, L);
  const auto& ccs = m.chance_constraints();

  SolveReport r;
  r.method = "dr-u";
  r.tau_sequence.assign(ccs.size(), {});
  r.status = Status::IterationLimit;
  bool converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    r.iterations = it;
    if (!run(m, prog, cfg, r, &rec.time_solve)) {
      rec.objective = r.objective;
      r.history.push_back(rec);
      break;
    }
    rec.objective = r.objective;

    const auto t_sep = Clock::now();
    const auto found = separate(m, model, L, r.x, cfg);
    rec.time_separation = seconds_since(t_sep);
    r.time_separation += rec.time_separation;

    for (std::size_t i = 0; i < ccs.size(); ++i) {
      if (!found[i]) continue;
      rec.cuts.push_back(AddedCut{ccs[i].label, found[i]->tau, found[i]->amount});
      r.cuts_added.push_back(found[i]->tau);
      r.tau_sequence[i].push_back(found[i]->tau);
      prog.add_cone(cuts::unimodal_cut_at_tau(ccs[i], model, L, found[i]->tau));
    }
    const bool done = rec.cuts.empty();
    r.history.push_back(std::move(rec));
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged && r.status == Status::Optimal) r.status = Status::IterationLimit;
  if (r.status == Status::IterationLimit)
    r.notes.push_back("iteration limit reached; last iterate reported");
  r.time_total = seconds_since(t_start);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

SolveReport relaxed_with(const OpfModel& m, const stats::UncertaintyModel& model,
                         const std::vector<std::vector<double>>& nodes, const SolveConfig& cfg,
                         bool asymptotic, int K) {
  conic::ConicProgram prog = m.base_program();
  const auto& ccs = m.chance_constraints();
  for (std::size_t i = 0; i < ccs.size(); ++i) {
    for (auto& cut : cuts::relaxed_cuts(ccs[i], model, nodes[i])) prog.add_cone(std::move(cut));
    if (asymptotic) prog.add_cone(cuts::asymptotic_cut(ccs[i], model));
  }
  SolveReport r = single_shot(m, prog, cfg, "relaxed");
  r.K = K;
  if (asymptotic) r.notes.push_back("asymptotic cut included");
  return r;
}

}  // namespace

SolveReport solve_relaxed(const OpfModel& m, const stats::UncertaintyModel& model, int K,
                          const SolveReport& exact, const SolveConfig& cfg, bool asymptotic) {
  check_dimension(m, model);
  if (K < 1) throw DomainError("solve_relaxed: K must be >= 1");
  const auto& ccs = m.chance_constraints();
  if (exact.tau_sequence.size() != ccs.size())
    throw DomainError("solve_relaxed: exact report does not match the model");
  std::vector<std::vector<double>> nodes(ccs.size());
  for (std::size_t i = 0; i < ccs.size(); ++i) {
    std::vector<double> seq{model.tau0()};
    for (double t : exact.tau_sequence[i]) {
      if (static_cast<int>(seq.size()) >= K) break;
      seq.push_back(t);
    }
    nodes[i] = sorted_unique(std::move(seq));
  }
  return relaxed_with(m, model, nodes, cfg, asymptotic, K);
}

SolveReport solve_relaxed(const OpfModel& m, const stats::UncertaintyModel& model,
                          const std::vector<double>& nodes, const SolveConfig& cfg, bool asymptotic) {
  check_dimension(m, model);
  if (nodes.empty()) throw DomainError("solve_relaxed: at least one node required");
  return relaxed_with(m, model, std::vector<std::vector<double>>(m.chance_constraints().size(), nodes),
                      cfg, asymptotic, static_cast<int>(nodes.size()));
}

// ---------------------------------------------------------------------------

Variant parse_variant(const std::string& name) {
  if (name == "ub") return Variant::UB;
  if (name == "ops0") return Variant::OPS0;
  if (name == "ops1") return Variant::OPS1;
  if (name == "ops2") return Variant::OPS2;
  if (name == "ops3") return Variant::OPS3;
  throw InputError("unknown conservative variant '" + name + "'");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::UB: return "ub";
    case Variant::OPS0: return "ops0";
    case Variant::OPS1: return "ops1";
    case Variant::OPS2: return "ops2";
    case Variant::OPS3: return "ops3";
  }
  return "unknown";
}

const pwl::OpsResult& ops_function(double epsilon, double alpha, int pieces, const pwl::OpsConfig& cfg) {
  using Key = std::tuple<double, double, int, double, int, double, double, int>;
  static std::map<Key, pwl::OpsResult> cache;
  static std::mutex guard;
  const Key key{epsilon, alpha, pieces, cfg.delta, cfg.max_iterations, cfg.step, cfg.initial_end, cfg.max_retries};
  {
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  pwl::OpsResult r = pwl::ops_search(pwl::VFunction(epsilon, alpha), pieces, cfg);
  std::lock_guard<std::mutex> lock(guard);
  return cache.emplace(key, std::move(r)).first->second;
}

pwl::PwlFunction ops_envelope(double epsilon, double alpha, int max_pieces, const pwl::OpsConfig& cfg) {
  if (max_pieces < 1) throw DomainError("ops_envelope: at least one piece required");
  const pwl::VFunction vf(epsilon, alpha);
  std::vector<pwl::Line> lines;
  std::vector<double> tangents;
  for (int s = 1; s <= max_pieces; ++s) {
    const auto& h = ops_function(epsilon, alpha, s, cfg).pwl;
    lines.insert(lines.end(), h.pieces().begin(), h.pieces().end());
    tangents.insert(tangents.end(), h.tangent_points().begin(), h.tangent_points().end());
  }
  return pwl::PwlFunction::lower_envelope(std::move(lines), vf.tau0(), std::move(tangents));
}

SolveReport solve_conservative(const OpfModel& m, const stats::UncertaintyModel& model, Variant v, int K,
                               const SolveConfig& cfg, const SolveReport* exact) {
  check_dimension(m, model);
  if (K < 2) throw DomainError("solve_conservative: K must be >= 2");
  const auto t_start = Clock::now();
  const auto& ccs = m.chance_constraints();
  const std::string name = variant_name(v);
  const pwl::VFunction vf(model.epsilon(), model.alpha());

  if (v == Variant::UB) {
    SolveReport own;
    if (!exact) {
      own = solve_exact_unimodal(m, model, cfg);
      exact = &own;
    }
    if (exact->tau_sequence.size() != ccs.size())
      throw DomainError("solve_conservative: exact report does not match the model");
    conic::ConicProgram prog = m.base_program();
    for (std::size_t i = 0; i < ccs.size(); ++i) {
      std::vector<double> inner;
      for (double t : exact->tau_sequence[i]) {
        if (static_cast<int>(inner.size()) >= K - 2) break;
        if (t > vf.tau0()) inner.push_back(t);
      }
      std::vector<double> nodes{vf.tau0()};
      for (double t : sorted_unique(inner)) nodes.push_back(t);
      nodes.push_back(pwl::kInfinity);
      const pwl::PwlFunction g = cuts::node_g_function(vf, nodes);
      for (auto& cut : cuts::conservative_cuts(ccs[i], model, g, name)) prog.add_cone(std::move(cut));
    }
    SolveReport r = single_shot(m, prog, cfg, name);
    r.K = K;
    r.time_total = seconds_since(t_start);
    return r;
  }

  const bool envelope = v == Variant::OPS2 || v == Variant::OPS3;
  const pwl::PwlFunction g = envelope ? ops_envelope(model.epsilon(), model.alpha(), K - 1, cfg.ops)
                                      : ops_function(model.epsilon(), model.alpha(), K - 1, cfg.ops).pwl;

  if (v == Variant::OPS1 || v == Variant::OPS3) {
    conic::ConicProgram prog = m.base_program();
    for (const auto& cc : ccs)
      for (auto& cut : cuts::conservative_cuts(cc, model, g, name)) prog.add_cone(std::move(cut));
    SolveReport r = single_shot(m, prog, cfg, name);
    r.K = K;
    r.time_total = seconds_since(t_start);
    return r;
  }

  // OPS0 / OPS2: cutting-plane loop in which every constraint found violated
  // switches to the conservative cuts; the rest keep the initial exact cuts.
  const MatrixXd L = cuts::lambda_factor(model);
  conic::ConicProgram prog = exact_start(m, model, L);
  std::vector<bool> switched(ccs.size(), false);
  SolveReport r;
  r.method = name;
  r.K = K;
  r.tau_sequence.assign(ccs.size(), {});
  r.status = Status::IterationLimit;
  bool converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    r.iterations = it;
    if (!run(m, prog, cfg, r, &rec.time_solve)) {
      rec.objective = r.objective;
      r.history.push_back(rec);
      break;
    }
    rec.objective = r.objective;
    const auto t_sep = Clock::now();
    const auto found = separate(m, model, L, r.x, cfg, &switched);
    rec.time_separation = seconds_since(t_sep);
    r.time_separation += rec.time_separation;
    for (std::size_t i = 0; i < ccs.size(); ++i) {
      if (!found[i]) continue;
      rec.cuts.push_back(AddedCut{ccs[i].label, found[i]->tau, found[i]->amount});
      r.tau_sequence[i].push_back(found[i]->tau);
      switched[i] = true;
      for (auto& cut : cuts::conservative_cuts(ccs[i], model, g, name)) prog.add_cone(std::move(cut));
    }
    const bool done = rec.cuts.empty();
    if (it == 1) {
      r.notes.push_back("violated set taken from the first cutting-plane iterate (" +
                        std::to_string(rec.cuts.size()) + " constraints), extended while violations remain");
    }
    r.history.push_back(std::move(rec));
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged && r.status == Status::Optimal) r.status = Status::IterationLimit;
  std::size_t count = 0;
  for (bool s : switched) count += s;
  r.notes.push_back(std::to_string(count) + " of " + std::to_string(ccs.size()) +
                    " constraints use the conservative cuts");
  r.time_total = seconds_since(t_start);
  return r;
}

// ---------------------------------------------------------------------------

double unimodal_violation(const OpfModel& m, const stats::UncertaintyModel& model, const VectorXd& x) {
  const MatrixXd L = cuts::lambda_factor(model);
  const pwl::VFunction vf(model.epsilon(), model.alpha());
  double worst = 0.0;
  for (const auto& cc : m.chance_constraints()) {
    cuts::SeparationTerms t = cuts::separation_terms(cc, model, L, x);
    if (t.c2 < 0.0) {
      worst = std::max(worst, -t.c2);
      t.c2 = 0.0;
    }
    if (auto v = cuts::separate(vf, t, 0.0)) worst = std::max(worst, v->amount);
  }
  return worst;
}

double deterministic_violation(const OpfModel& m, const VectorXd& x) {
  double worst = 0.0;
  for (const auto& row : opf::deterministic_constraints(m.network())) {
    const double r = row.residual(x.head(m.layout().size()));
    worst = std::max(worst, row.sense == opf::LinearConstraint::Sense::Equal ? std::abs(r) : -r);
  }
  return worst;
}

}  // namespace drcc::solve
