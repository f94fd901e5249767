#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drcc/pwl.hpp"
#include "drcc/stats.hpp"

namespace drcc::cuts {

/// a(x)^T xi <= b(x) with a(x) = A x + a0 (length l) and b(x) = b^T x + b0.
struct AffineChanceConstraint {
  Eigen::MatrixXd A;   ///< l x n
  Eigen::VectorXd a0;  ///< l
  Eigen::VectorXd b;   ///< n
  double b0 = 0.0;
  std::string label;

  Eigen::Index dimension() const noexcept { return a0.size(); }
  Eigen::Index variables() const noexcept { return b.size(); }
  Eigen::VectorXd a_at(const Eigen::VectorXd& x) const { return A * x + a0; }
  double b_at(const Eigen::VectorXd& x) const { return b.dot(x) + b0; }
  /// Throws DomainError on inconsistent shapes.
  void check() const;
};

/// Where a cut came from: method name plus the scalar parameter (tau, q_k, ...).
struct CutTag {
  std::string method;
  double parameter = 0.0;
};

/// ||M x + m|| <= c^T x + d. A cut with zero rows in M is linear.
struct SocCut {
  Eigen::MatrixXd M;
  Eigen::VectorXd m;
  Eigen::VectorXd c;
  double d = 0.0;
  CutTag tag;

  bool is_linear() const noexcept { return M.rows() == 0; }
  /// (c^T x + d) - ||M x + m||; non-negative iff satisfied.
  double slack(const Eigen::VectorXd& x) const;
  /// Same cut acting on a longer decision vector (new trailing variables get
  /// zero coefficients).
  SocCut widened(Eigen::Index n) const;
};

/// Factor C with C C^T = S for symmetric PSD S: Cholesky when it succeeds,
/// otherwise an eigen factor with eigenvalues below tol clipped to zero.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S);

/// Lower-triangular-type factor L of the unimodal inner matrix. Throws
/// NotPsdError when the matrix is indefinite.
Eigen::MatrixXd lambda_factor(const stats::UncertaintyModel& model);

/// sqrt((1-eps)/eps) ||C^T a(x)|| <= b(x) - mu^T a(x).
SocCut reformulate_moment(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model);

/// Gaussian analytical cut Phi^{-1}(1-eps) ||C^T a(x)|| <= b(x) - mu^T a(x).
SocCut gaussian_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model);
/// Same with an explicit risk level in (0, 1); eps >= 0.5 gives a multiplier
/// <= 0, and eps = 0.5 reduces to the mean constraint.
SocCut gaussian_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                    double epsilon);

/// Generic unimodal-family cut with an arbitrary norm multiplier `coef` at tau:
/// coef ||L^T a(x)|| <= tau (b(x) - m^T a(x)) - ((alpha+1)/alpha)(mu - m)^T a(x).
/// `L` is a precomputed lambda_factor.
SocCut unimodal_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                    const Eigen::MatrixXd& L, double tau, double coef, const std::string& method);

/// Exact-family member at tau >= tau0 (coef = v(tau)). tau = kInfinity yields
/// the asymptotic cut. Throws DomainError for tau < tau0.
SocCut unimodal_cut_at_tau(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                           double tau);
SocCut unimodal_cut_at_tau(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                           const Eigen::MatrixXd& L, double tau);

/// b(x) - m^T a(x) >= 0.
SocCut asymptotic_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model);

/// Scalars of phi(tau) = v(tau) c1 - tau c2 + c3 at a candidate point.
struct SeparationTerms {
  double c1 = 0.0;  ///< ||L^T a||
  double c2 = 0.0;  ///< b - m^T a
  double c3 = 0.0;  ///< ((alpha+1)/alpha) (mu - m)^T a
};

SeparationTerms separation_terms(const AffineChanceConstraint& cc,
                                 const stats::UncertaintyModel& model, const Eigen::MatrixXd& L,
                                 const Eigen::VectorXd& x);

struct Violation {
  double tau = 0.0;
  double amount = 0.0;  ///< phi(tau) > tol
};

inline constexpr double kSeparationTol = 1e-6;
inline constexpr double kTauCap = 1e6;

/// Worst-case tau for given separation scalars. Throws DomainError when c2 < 0
/// beyond rounding (the asymptotic cut is then missing).
std::optional<Violation> separate(const pwl::VFunction& vf, const SeparationTerms& t,
                                  double tol = kSeparationTol);

std::optional<Violation> separation_oracle(const AffineChanceConstraint& cc,
                                           const stats::UncertaintyModel& model,
                                           const Eigen::VectorXd& x, double tol = kSeparationTol);

/// Separation over a batch of constraints. The OpenMP and serial versions
/// return identical results.
std::vector<std::optional<Violation>> separate_all(
    const std::vector<AffineChanceConstraint>& ccs, const stats::UncertaintyModel& model,
    const Eigen::MatrixXd& L, const Eigen::VectorXd& x, double tol = kSeparationTol);
std::vector<std::optional<Violation>> separate_all_serial(
    const std::vector<AffineChanceConstraint>& ccs, const stats::UncertaintyModel& model,
    const Eigen::MatrixXd& L, const Eigen::VectorXd& x, double tol = kSeparationTol);

/// One exact-family cut per node (nodes sorted, each >= tau0).
std::vector<SocCut> relaxed_cuts(const AffineChanceConstraint& cc,
                                 const stats::UncertaintyModel& model,
                                 const std::vector<double>& nodes);

/// min over k >= 2 of the node lines; nodes[0] must be tau0 and nodes.back()
/// kInfinity. Finite interior nodes give tangent lines of v.
pwl::PwlFunction node_g_function(const pwl::VFunction& vf, const std::vector<double>& nodes);

/// g(q_k) ||L^T a|| <= q_k (b - m^T a) - ((alpha+1)/alpha)(mu - m)^T a at every
/// break point of g, plus the asymptotic cut. Throws NotOuterApproximation if
/// g is below v on the audit grid.
std::vector<SocCut> conservative_cuts(const AffineChanceConstraint& cc,
                                      const stats::UncertaintyModel& model,
                                      const pwl::PwlFunction& g, const std::string& method);

/// Coordinate-wise bounding box of a sample set.
struct ScenarioBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Box of the first `count` scenarios. Throws DomainError for count < 1 or
/// count > N.
ScenarioBox scenario_box(const stats::SampleSet& samples, Eigen::Index count);

/// Scenario count (2/eps)(ln(1/beta) + n_x), rounded up.
Eigen::Index scenario_theory_count(double epsilon, Eigen::Index decision_count,
                                   double beta = 1e-4);

/// Robust counterpart of a(x)^T xi <= b(x) over the box, acting on the
/// extended vector [x; u] where u (l entries, starting at aux_offset) bounds
/// |a(x)| componentwise:
///   a(x)^T c + r^T u <= b(x),  u >= a(x),  u >= -a(x).
/// `total` is the length of the extended vector.
std::vector<SocCut> scenario_box_cuts(const AffineChanceConstraint& cc, const ScenarioBox& box,
                                      Eigen::Index aux_offset, Eigen::Index total);

}  // namespace drcc::cuts
