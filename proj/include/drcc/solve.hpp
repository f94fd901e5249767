#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "drcc/conic.hpp"
#include "drcc/cuts.hpp"
#include "drcc/opf.hpp"
#include "drcc/pwl.hpp"
#include "drcc/stats.hpp"

namespace drcc::solve {

/// Case plus everything derived from it once: PTDF, chance constraints,
/// deterministic rows and the objective.
class OpfModel {
 public:
  explicit OpfModel(opf::NetworkCase c);

  const opf::NetworkCase& network() const noexcept { return case_; }
  const Eigen::MatrixXd& ptdf() const noexcept { return ptdf_; }
  const std::vector<cuts::AffineChanceConstraint>& chance_constraints() const noexcept { return ccs_; }
  const opf::Layout& layout() const noexcept { return layout_; }
  const opf::QuadraticObjective& cost() const noexcept { return objective_; }
  Eigen::Index uncertainty_dimension() const noexcept { return case_.wind_count(); }

  /// Decision variables, deterministic constraints and the objective (with
  /// its epigraph cone when any C1 > 0). No chance constraints.
  conic::ConicProgram base_program() const;

 private:
  opf::NetworkCase case_;
  Eigen::MatrixXd ptdf_;
  std::vector<cuts::AffineChanceConstraint> ccs_;
  opf::Layout layout_;
  opf::QuadraticObjective objective_;
};

enum class Status { Optimal, Infeasible, IterationLimit, NumericalError };
std::string status_name(Status s);

struct AddedCut {
  std::string constraint;
  double tau = 0.0;
  double violation = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  std::vector<AddedCut> cuts;
  double time_solve = 0.0;       ///< seconds
  double time_separation = 0.0;  ///< seconds
};

struct SolveReport {
  std::string method;
  int K = 0;
  Status status = Status::NumericalError;
  double objective = 0.0;
  opf::Decision decision;
  Eigen::VectorXd x;  ///< decision vector [P_G, R_up, R_dn, d_G]
  int iterations = 0;
  std::vector<double> cuts_added;  ///< tau of every separation cut, in order
  std::vector<IterationRecord> history;
  /// Worst-case taus found per chance constraint, in discovery order.
  std::vector<std::vector<double>> tau_sequence;
  std::vector<std::string> notes;
  double time_total = 0.0;       ///< seconds, steady clock
  double time_separation = 0.0;  ///< seconds, steady clock

  /// JSON record; timing fields are included only when `timings` is set so
  /// that default output is reproducible byte for byte.
  nlohmann::json to_json(bool timings = false) const;
};

struct SolveConfig {
  double tol = cuts::kSeparationTol;
  int max_iterations = 100;
  bool parallel = true;  ///< OpenMP separation
  std::string backend;   ///< "" = environment / default
  pwl::OpsConfig ops;
};

/// Deterministic dispatch: chance constraints evaluated at xi = 0.
SolveReport solve_nominal(const OpfModel& m, const SolveConfig& cfg = {});

/// Moment-only exact reformulation (DR-M).
SolveReport solve_moment(const OpfModel& m, const stats::UncertaintyModel& model,
                         const SolveConfig& cfg = {});
/// Gaussian analytical reformulation (AR); `epsilon` overrides the model's risk
/// level when given.
SolveReport solve_ar(const OpfModel& m, const stats::UncertaintyModel& model,
                     const SolveConfig& cfg = {}, std::optional<double> epsilon = std::nullopt);
/// Box robust counterpart over the first `count` samples (SC); count 0 = all.
SolveReport solve_sc(const OpfModel& m, const stats::SampleSet& samples, Eigen::Index count = 0,
                     const SolveConfig& cfg = {});

/// Cutting-plane method for the unimodal exact reformulation (DR-U). Starts
/// with the tau0 and asymptotic cuts of every constraint; each round adds one
/// cut per violated constraint. Throws NotPsdError for an invalid model.
SolveReport solve_exact_unimodal(const OpfModel& m, const stats::UncertaintyModel& model,
                                 const SolveConfig& cfg = {});

/// Lower bound: per constraint, the first K nodes of [tau0, tau*_1, tau*_2,
/// ...] from an exact run. With `asymptotic`, the asymptotic cut is added too.
SolveReport solve_relaxed(const OpfModel& m, const stats::UncertaintyModel& model, int K,
                          const SolveReport& exact, const SolveConfig& cfg = {},
                          bool asymptotic = false);
/// Same with explicit nodes shared by every constraint.
SolveReport solve_relaxed(const OpfModel& m, const stats::UncertaintyModel& model,
                          const std::vector<double>& nodes, const SolveConfig& cfg = {},
                          bool asymptotic = false);

enum class Variant { UB, OPS0, OPS1, OPS2, OPS3 };
Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

/// Upper bounds from piecewise-linear outer approximations of v:
///   UB    nodes {tau0, first K-2 exact-run taus, inf} per constraint
///   OPS1  OPS function with |S| = K-1 on every constraint
///   OPS3  lower envelope of the OPS functions with |S| = 1..K-1 on every constraint
///   OPS0  like OPS1, applied only to constraints found violated in a cutting-plane loop
///   OPS2  like OPS3, applied only to constraints found violated in a cutting-plane loop
/// `exact` supplies the UB nodes; when absent an exact run is made.
SolveReport solve_conservative(const OpfModel& m, const stats::UncertaintyModel& model, Variant v,
                               int K, const SolveConfig& cfg = {},
                               const SolveReport* exact = nullptr);

/// OPS function for |S| pieces, memoized per (eps, alpha, |S|, cfg).
const pwl::OpsResult& ops_function(double epsilon, double alpha, int pieces,
                                   const pwl::OpsConfig& cfg = {});
/// Lower envelope of the OPS functions for |S| = 1..max_pieces.
pwl::PwlFunction ops_envelope(double epsilon, double alpha, int max_pieces,
                              const pwl::OpsConfig& cfg = {});

/// Largest violation of the unimodal exact family at x over all chance
/// constraints, by separation (0 when feasible).
double unimodal_violation(const OpfModel& m, const stats::UncertaintyModel& model,
                          const Eigen::VectorXd& x);

/// Largest violation of deterministic rows at x.
double deterministic_violation(const OpfModel& m, const Eigen::VectorXd& x);

}  // namespace drcc::solve
