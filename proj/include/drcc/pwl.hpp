#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

namespace drcc::pwl {

/// Sentinel for tau = +infinity (asymptote of v, used as the open end node).
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// v(tau) = sqrt((1 - eps - tau^-alpha) / eps) on [tau0, inf), tau0 = (1/(1-eps))^(1/alpha).
/// Concave, non-decreasing, v(tau0) = 0, sup v = sqrt((1-eps)/eps).
class VFunction {
 public:
  VFunction(double epsilon, double alpha);

  double epsilon() const noexcept { return epsilon_; }
  double alpha() const noexcept { return alpha_; }
  double tau0() const noexcept { return tau0_; }
  double supremum() const noexcept { return supremum_; }

  /// Throws DomainError for tau < tau0; returns supremum() at kInfinity.
  double operator()(double tau) const;
  /// v'(tau); +inf at tau0, 0 at kInfinity.
  double derivative(double tau) const;
  /// The unique tau > tau0 with v'(tau) = slope, by bisection to relative 1e-12.
  /// slope <= 0 maps to kInfinity.
  double inverse_derivative(double slope) const;

 private:
  double epsilon_;
  double alpha_;
  double tau0_;
  double supremum_;
};

double v_eval(const VFunction& vf, double tau);

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double tau) const {
    if (tau == kInfinity) return slope > 0 ? kInfinity : (slope < 0 ? -kInfinity : intercept);
    return slope * tau + intercept;
  }
};

/// Tangent of v at t > tau0. Throws DomainError for t <= tau0.
Line tangent_line(const VFunction& vf, double t);

/// Concave piecewise-linear function h(tau) = min_s {d_s tau + f_s} on [tau0, inf).
///
/// pieces() are ordered by strictly decreasing slope. breakpoints()[0] is the
/// left end tau0 and breakpoints()[s] is where piece s-1 hands over to piece s.
/// tangent_points()[s] is where piece s touches v; the zero-slope asymptote
/// piece reports kInfinity.
class PwlFunction {
 public:
  PwlFunction() = default;

  /// Lower envelope of `lines` restricted to [tau0, inf). Lines that are never
  /// active are dropped. `tangents`, if given, is aligned with `lines`.
  static PwlFunction lower_envelope(std::vector<Line> lines, double tau0,
                                    std::vector<double> tangents = {});

  const std::vector<Line>& pieces() const noexcept { return pieces_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& tangent_points() const noexcept { return tangents_; }
  std::size_t size() const noexcept { return pieces_.size(); }
  double left_end() const noexcept { return breakpoints_.empty() ? 0.0 : breakpoints_.front(); }

  double operator()(double tau) const;

 private:
  std::vector<Line> pieces_;
  std::vector<double> breakpoints_;
  std::vector<double> tangents_;
};

/// Tuning of the equal-error heuristic search. Defaults follow the published
/// initialization.
struct OpsConfig {
  double delta = 0.01;        ///< relative equalization tolerance
  int max_iterations = 50;    ///< iteration budget I
  double step = 1.0;          ///< initial step size
  double initial_end = 10.0;  ///< initial last break point B_|S|
  int max_retries = 30;       ///< step halvings allowed on one iterate
};

struct OpsResult {
  PwlFunction pwl;
  double emax = 0.0;
  int iterations = 0;
  std::vector<double> errors;  ///< h - v at each break point (E_s)
  double end_error = 0.0;      ///< asymptote error at the last break point (e_T)
  std::vector<double> emax_history;
};

/// Raised when the search exhausts its iteration budget or step retries.
class OpsNoConvergence : public std::runtime_error {
 public:
  OpsNoConvergence(const std::string& what, OpsResult last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const OpsResult& last_iterate() const noexcept { return last_; }

 private:
  OpsResult last_;
};

/// Searches the |S|-piece PWL outer approximation of v with minimal largest
/// error: |S|-1 tangent pieces followed by the constant sqrt((1-eps)/eps).
OpsResult ops_search(const VFunction& vf, int pieces, const OpsConfig& cfg = {});

struct OptimalityReport {
  bool constant_asymptote = false;  ///< last piece is the constant sup v
  bool tangency = false;            ///< every other piece touches v
  bool equal_errors = false;        ///< break-point errors agree within tol
  std::vector<double> tangency_gaps;
  std::vector<double> breakpoint_errors;
  bool all() const noexcept { return constant_asymptote && tangency && equal_errors; }
};

/// Evaluates the three sufficient optimality conditions for an outer
/// approximation. Tangency is decided by golden-section minimization of
/// (piece - v) to 1e-10; a minimum within 1e-8 of zero counts as tangent.
OptimalityReport check_optimality_conditions(const VFunction& vf, const PwlFunction& h,
                                             double tol);

/// Thrown when h dips below v on the audit grid.
class NotOuterApproximation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// 10^4 points on [tau0, tau0 + 1e3], log-spaced in the offset from tau0,
/// followed by the kInfinity sentinel.
std::vector<double> audit_grid(const VFunction& vf);

/// True when h(tau) >= v(tau) - tol at every audit point.
bool is_outer_approximation(const VFunction& vf, const PwlFunction& h, double tol = 1e-10);

/// Largest distance h - v over [tau0, inf). For concave v the per-piece
/// maximum sits at a piece end, so only break points and the limit are read.
double pwl_error(const VFunction& vf, const PwlFunction& h);

}  // namespace drcc::pwl
