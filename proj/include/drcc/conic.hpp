#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drcc/cuts.hpp"

namespace drcc::conic {

/// min c^T x + c0 s.t. E x = f and every cone ||M x + m|| <= g^T x + h.
/// Linear inequalities are cones with no norm rows; variable bounds are
/// linear cones too.
struct ConicProgram {
  std::vector<std::string> names;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  std::vector<cuts::SocCut> cones;
  Eigen::VectorXd cost;
  double cost_offset = 0.0;

  explicit ConicProgram(Eigen::Index n = 0);

  Eigen::Index size() const noexcept { return cost.size(); }
  /// Index of a named variable; throws InputError when absent.
  Eigen::Index index(const std::string& name) const;

  /// Appends a variable with zero cost and returns its index. Existing rows
  /// and cones are widened.
  Eigen::Index add_variable(const std::string& name);
  void add_equality(const Eigen::VectorXd& row, double rhs);
  /// row^T x + offset >= 0.
  void add_inequality(const Eigen::VectorXd& row, double offset, const std::string& tag = "");
  void add_cone(cuts::SocCut cone);
  /// x_i >= lo.
  void add_lower_bound(Eigen::Index i, double lo);

  /// Throws DomainError when any cone or row has the wrong width.
  void check() const;

  /// Largest violation over equalities and cones at x (0 when feasible).
  double max_violation(const Eigen::VectorXd& x) const;
  double objective(const Eigen::VectorXd& x) const { return cost.dot(x) + cost_offset; }

 private:
  std::map<std::string, Eigen::Index> index_;
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalError };

std::string status_name(Status s);

struct Solution {
  Status status = Status::NumericalError;
  Eigen::VectorXd x;
  double objective = 0.0;
  int newton_steps = 0;
  std::string message;
};

/// Solver contract: on Optimal, x satisfies every constraint to 1e-7 and the
/// objective is within 1e-6 relative of the optimum. Deterministic.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual Solution solve(const ConicProgram& prog) const = 0;
};

struct BarrierSettings {
  double mu = 20.0;               ///< barrier parameter growth
  double gap_tol = 1e-10;         ///< stop when nu/t <= gap_tol * max(1, |objective|)
  double newton_tol = 1e-10;      ///< half squared Newton decrement
  int max_newton = 60;            ///< Newton steps per centering
  double box = 0.0;               ///< |x_i| bound guarding unboundedness; 0 = automatic
};

/// Primal log-barrier path-following method on the equality-reduced program,
/// with a phase-one search for a strictly feasible start.
class BarrierBackend final : public Backend {
 public:
  explicit BarrierBackend(BarrierSettings s = {}) : settings_(s) {}
  std::string name() const override { return "barrier"; }
  Solution solve(const ConicProgram& prog) const override;

 private:
  BarrierSettings settings_;
};

/// Backend by name; "" reads DRCC_CONIC_BACKEND and defaults to "barrier".
/// Unknown names throw InputError.
std::unique_ptr<Backend> make_backend(const std::string& name = "");
std::vector<std::string> backend_names();

/// Convenience: make_backend("")->solve(prog).
Solution solve_conic(const ConicProgram& prog);

/// Epigraph of sum_i q_i x_{idx_i}^2 with q_i >= 0: adds a variable t and the
/// cone ||(2 sqrt(s q) .* x, t - s)|| <= t + s, equivalent to t >= sum q x^2
/// for any scale s > 0. Returns the index of t (cost 1 is added to t).
/// With all q_i == 0 nothing is added and -1 is returned.
Eigen::Index quadratic_epigraph(ConicProgram& prog, const std::vector<Eigen::Index>& idx,
                                const Eigen::VectorXd& q, double scale = 1.0);

}  // namespace drcc::conic
