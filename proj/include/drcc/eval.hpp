#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drcc/cuts.hpp"
#include "drcc/opf.hpp"
#include "drcc/stats.hpp"

namespace drcc::eval {

inline constexpr double kReliabilityTol = 1e-7;  ///< MW, per constraint

/// Percentage of scenarios under which every constraint a(x)^T xi <= b(x)
/// holds within tol. OpenMP over scenarios; integer counting keeps the result
/// independent of the thread count.
double reliability(const std::vector<cuts::AffineChanceConstraint>& ccs, const Eigen::VectorXd& x,
                   const stats::SampleSet& test, double tol = kReliabilityTol);
double reliability_serial(const std::vector<cuts::AffineChanceConstraint>& ccs,
                          const Eigen::VectorXd& x, const stats::SampleSet& test,
                          double tol = kReliabilityTol);
double reliability(const opf::NetworkCase& c, const Eigen::MatrixXd& ptdf,
                   const opf::Decision& decision, const stats::SampleSet& test,
                   double tol = kReliabilityTol);

/// Input of one metrics row.
struct MethodResult {
  std::string method;
  double cost = 0.0;
  double reliability = 0.0;  ///< percent
  double time = 0.0;         ///< seconds
};

struct MetricsRow {
  std::string method;
  double cost = 0.0;
  double reliability = 0.0;
  std::optional<double> cdiff;   ///< percent; empty when undefined
  std::optional<double> rdiff;   ///< percent; empty when undefined
  std::optional<double> improv;  ///< rdiff / cdiff when cdiff > 0
  double time = 0.0;
};

/// cdiff = 100 (cost - cost_AR) / (cost_SC - cost_AR), rdiff likewise on
/// reliability, improv = rdiff / cdiff. Rows named `ar_name` and `sc_name`
/// must be present (InputError otherwise); degenerate denominators leave the
/// metric empty.
std::vector<MetricsRow> metrics_table(const std::vector<MethodResult>& results,
                                      const std::string& ar_name = "ar",
                                      const std::string& sc_name = "sc");

/// 100 (cost - exact) / exact.
double optimality_gap(double cost, double exact_cost);

struct Summary {
  double min = 0.0;
  double avg = 0.0;
  double max = 0.0;
};

/// min / mean / max; empty input throws DomainError.
Summary summarize(const std::vector<double>& values);

}  // namespace drcc::eval
