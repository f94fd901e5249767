#include "drcc/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drcc/error.hpp"
#include "drcc/normal.hpp"

namespace drcc::cuts {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void AffineChanceConstraint::check() const {
  if (A.rows() != a0.size() || A.cols() != b.size())
    throw DomainError("chance constraint '" + label + "': inconsistent dimensions");
}

double SocCut::slack(const VectorXd& x) const {
  const double rhs = c.dot(x) + d;
  return is_linear() ? rhs : rhs - (M * x + m).norm();
}

SocCut SocCut::widened(Index n) const {
  if (n < c.size()) throw DomainError("SocCut::widened: cannot shrink");
  SocCut w;
  w.M = MatrixXd::Zero(M.rows(), n);
  w.M.leftCols(M.cols()) = M;
  w.m = m;
  w.c = VectorXd::Zero(n);
  w.c.head(c.size()) = c;
  w.d = d;
  w.tag = tag;
  return w;
}

MatrixXd psd_factor(const MatrixXd& S) {
  if (S.rows() == 0) return MatrixXd(0, 0);
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) {
    MatrixXd L = llt.matrixL();
    if (L.allFinite()) return L;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  const double tol = 1e-8 * std::max(std::abs(S.trace()), 1e-300);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -tol) {
    std::ostringstream os;
    os << "matrix is not PSD (min eigenvalue " << min_ev << ")";
    throw NotPsdError(os.str(), min_ev);
  }
  VectorXd root = es.eigenvalues().unaryExpr([](double e) { return e > 0.0 ? std::sqrt(e) : 0.0; });
  return es.eigenvectors() * root.asDiagonal();
}

MatrixXd lambda_factor(const stats::UncertaintyModel& model) {
  stats::validate_unimodal_model(model).throw_if_invalid();
  return psd_factor(stats::unimodal_inner_matrix(model));
}

namespace {

// coef * ||F^T a(x)|| <= lhs_c^T x + lhs_d as an SocCut; coef == 0 drops the norm.
SocCut make_cut(const AffineChanceConstraint& cc, const MatrixXd& F, double coef, VectorXd c,
                double d, CutTag tag) {
  SocCut cut;
  const Index n = cc.variables();
  if (coef != 0.0 && F.size() > 0) {
    cut.M = coef * F.transpose() * cc.A;
    cut.m = coef * F.transpose() * cc.a0;
  } else {
    cut.M = MatrixXd(0, n);
    cut.m = VectorXd(0);
  }
  cut.c = std::move(c);
  cut.d = d;
  cut.tag = std::move(tag);
  return cut;
}

SocCut mean_shifted(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                    double multiplier, const std::string& method) {
  cc.check();
  if (cc.dimension() != model.dimension())
    throw DomainError("chance constraint '" + cc.label + "': uncertainty dimension mismatch");
  const MatrixXd C = psd_factor(model.covariance());
  VectorXd c = cc.b - cc.A.transpose() * model.mu();
  const double d = cc.b0 - model.mu().dot(cc.a0);
  return make_cut(cc, C, multiplier, std::move(c), d, CutTag{method, multiplier});
}

}  // namespace

SocCut reformulate_moment(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model) {
  const double eps = model.epsilon();
  return mean_shifted(cc, model, std::sqrt((1.0 - eps) / eps), "dr-m");
}

SocCut gaussian_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model) {
  return gaussian_cut(cc, model, model.epsilon());
}

SocCut gaussian_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                    double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("gaussian_cut: epsilon must lie in (0, 1)");
  const double z = epsilon == 0.5 ? 0.0 : normal_quantile(1.0 - epsilon);
  if (z < 0.0) throw DomainError("gaussian_cut: epsilon above 0.5 gives a non-convex constraint");
  return mean_shifted(cc, model, z, "ar");
}

SocCut unimodal_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                    const MatrixXd& L, double tau, double coef, const std::string& method) {
  cc.check();
  if (cc.dimension() != model.dimension())
    throw DomainError("chance constraint '" + cc.label + "': uncertainty dimension mismatch");
  const double k = (model.alpha() + 1.0) / model.alpha();
  const VectorXd shift = model.mu() - model.mode();
  const VectorXd mode_c = cc.b - cc.A.transpose() * model.mode();
  const double mode_d = cc.b0 - model.mode().dot(cc.a0);
  if (tau == pwl::kInfinity) return make_cut(cc, L, 0.0, mode_c, mode_d, CutTag{method, tau});
  VectorXd c = tau * mode_c - k * (cc.A.transpose() * shift);
  const double d = tau * mode_d - k * shift.dot(cc.a0);
  return make_cut(cc, L, coef, std::move(c), d, CutTag{method, tau});
}

SocCut unimodal_cut_at_tau(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                           const MatrixXd& L, double tau) {
  const pwl::VFunction vf(model.epsilon(), model.alpha());
  if (!(tau >= vf.tau0())) throw DomainError("unimodal_cut_at_tau: tau below tau0");
  const double coef = tau == pwl::kInfinity ? 0.0 : vf(tau);
  return unimodal_cut(cc, model, L, tau, coef, "dr-u");
}

SocCut unimodal_cut_at_tau(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model,
                           double tau) {
  return unimodal_cut_at_tau(cc, model, lambda_factor(model), tau);
}

SocCut asymptotic_cut(const AffineChanceConstraint& cc, const stats::UncertaintyModel& model) {
  return unimodal_cut(cc, model, MatrixXd(), pwl::kInfinity, 0.0, "asymptotic");
}

// ---------------------------------------------------------------------------

SeparationTerms separation_terms(const AffineChanceConstraint& cc,
                                 const stats::UncertaintyModel& model, const MatrixXd& L,
                                 const VectorXd& x) {
  const VectorXd a = cc.a_at(x);
  SeparationTerms t;
  t.c1 = a.size() > 0 ? (L.transpose() * a).norm() : 0.0;
  t.c2 = cc.b_at(x) - model.mode().dot(a);
  t.c3 = (model.alpha() + 1.0) / model.alpha() * (model.mu() - model.mode()).dot(a);
  return t;
}

std::optional<Violation> separate(const pwl::VFunction& vf, const SeparationTerms& t, double tol) {
  const double scale = std::max({1.0, std::abs(t.c1), std::abs(t.c3)});
  double c2 = t.c2;
  if (c2 < 0.0) {
    if (c2 < -1e-9 * scale) throw DomainError("separation: b - m^T a < 0, asymptotic cut missing");
    c2 = 0.0;
  }

  Violation v;
  if (t.c1 <= 0.0) {
    v.tau = vf.tau0();
    v.amount = t.c3 - vf.tau0() * c2;
  } else if (c2 == 0.0) {
    v.tau = kTauCap;
    v.amount = vf.supremum() * t.c1 + t.c3;
  } else {
    v.tau = vf.inverse_derivative(c2 / t.c1);
    v.amount = vf(v.tau) * t.c1 - v.tau * c2 + t.c3;
  }
  if (v.amount > tol) return v;
  return std::nullopt;
}

std::optional<Violation> separation_oracle(const AffineChanceConstraint& cc,
                                           const stats::UncertaintyModel& model,
                                           const VectorXd& x, double tol) {
  const pwl::VFunction vf(model.epsilon(), model.alpha());
  return separate(vf, separation_terms(cc, model, lambda_factor(model), x), tol);
}

std::vector<std::optional<Violation>> separate_all_serial(
    const std::vector<AffineChanceConstraint>& ccs, const stats::UncertaintyModel& model,
    const MatrixXd& L, const VectorXd& x, double tol) {
  const pwl::VFunction vf(model.epsilon(), model.alpha());
  std::vector<std::optional<Violation>> out(ccs.size());
  for (std::size_t i = 0; i < ccs.size(); ++i)
    out[i] = separate(vf, separation_terms(ccs[i], model, L, x), tol);
  return out;
}

std::vector<std::optional<Violation>> separate_all(const std::vector<AffineChanceConstraint>& ccs,
                                                   const stats::UncertaintyModel& model,
                                                   const MatrixXd& L, const VectorXd& x,
                                                   double tol) {
  const pwl::VFunction vf(model.epsilon(), model.alpha());
  std::vector<std::optional<Violation>> out(ccs.size());
  const auto n = static_cast<long>(ccs.size());
  // Exceptions cannot leave an OpenMP region; keep the first one and rethrow.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = separate(vf, separation_terms(ccs[i], model, L, x), tol);
    } catch (...) {
#pragma omp critical(drcc_separation_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<SocCut> relaxed_cuts(const AffineChanceConstraint& cc,
                                 const stats::UncertaintyModel& model,
                                 const std::vector<double>& nodes) {
  if (nodes.empty()) throw DomainError("relaxed_cuts: at least one node required");
  if (!std::is_sorted(nodes.begin(), nodes.end()))
    throw DomainError("relaxed_cuts: nodes must be sorted");
  const MatrixXd L = lambda_factor(model);
  std::vector<SocCut> out;
  out.reserve(nodes.size());
  for (double n : nodes) {
    SocCut cut = unimodal_cut_at_tau(cc, model, L, n);
    cut.tag.method = "relaxed";
    out.push_back(std::move(cut));
  }
  return out;
}

pwl::PwlFunction node_g_function(const pwl::VFunction& vf, const std::vector<double>& nodes) {
  if (nodes.size() < 2) throw DomainError("node_g_function: K >= 2 nodes required");
  if (std::abs(nodes.front() - vf.tau0()) > 1e-12 * vf.tau0())
    throw DomainError("node_g_function: first node must be tau0");
  if (nodes.back() != pwl::kInfinity)
    throw DomainError("node_g_function: last node must be the infinity sentinel");
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    if (!(nodes[k] > nodes[k - 1]))
      throw DomainError("node_g_function: nodes must be strictly increasing");
  }

  const double eps = vf.epsilon(), a = vf.alpha();
  std::vector<pwl::Line> lines;
  std::vector<double> tangents;
  for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
    const double n = nodes[k];
    const double p = std::pow(n, -a);
    const double scale = std::sqrt(1.0 / (eps * (1.0 - eps - p)));
    lines.push_back(pwl::Line{scale * (a * p / n / 2.0), scale * (1.0 - eps - (1.0 + a / 2.0) * p)});
    tangents.push_back(n);
  }
  lines.push_back(pwl::Line{0.0, vf.supremum()});
  tangents.push_back(pwl::kInfinity);
  return pwl::PwlFunction::lower_envelope(std::move(lines), vf.tau0(), std::move(tangents));
}

std::vector<SocCut> conservative_cuts(const AffineChanceConstraint& cc,
                                      const stats::UncertaintyModel& model,
                                      const pwl::PwlFunction& g, const std::string& method) {
  const pwl::VFunction vf(model.epsilon(), model.alpha());
  if (g.size() == 0 || std::abs(g.left_end() - vf.tau0()) > 1e-12 * vf.tau0())
    throw DomainError("conservative_cuts: g must start at tau0");
  if (!pwl::is_outer_approximation(vf, g))
    throw pwl::NotOuterApproximation("conservative_cuts: g is below v on the audit grid");
  const MatrixXd L = lambda_factor(model);
  std::vector<SocCut> out;
  for (double q : g.breakpoints()) out.push_back(unimodal_cut(cc, model, L, q, g(q), method));
  SocCut tail = asymptotic_cut(cc, model);
  tail.tag.method = method;
  out.push_back(std::move(tail));
  return out;
}

// ---------------------------------------------------------------------------

ScenarioBox scenario_box(const stats::SampleSet& samples, Index count) {
  if (count < 1) throw DomainError("scenario_box: count must be >= 1");
  if (count > samples.count()) throw DomainError("scenario_box: count exceeds available samples");
  const auto block = samples.data().topRows(count);
  return ScenarioBox{block.colwise().minCoeff().transpose(), block.colwise().maxCoeff().transpose()};
}

Index scenario_theory_count(double epsilon, Index decision_count, double beta) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw DomainError("scenario_theory_count: epsilon and beta must lie in (0, 1)");
  const double n = 2.0 / epsilon * (std::log(1.0 / beta) + static_cast<double>(decision_count));
  return static_cast<Index>(std::ceil(n - 1e-9));
}

std::vector<SocCut> scenario_box_cuts(const AffineChanceConstraint& cc, const ScenarioBox& box,
                                      Index aux_offset, Index total) {
  cc.check();
  const Index l = cc.dimension(), n = cc.variables();
  if (box.lower.size() != l || box.upper.size() != l)
    throw DomainError("scenario_box_cuts: box dimension mismatch");
  if (aux_offset < n || aux_offset + l > total)
    throw DomainError("scenario_box_cuts: auxiliary block out of range");

  const VectorXd center = 0.5 * (box.lower + box.upper);
  const VectorXd radius = 0.5 * (box.upper - box.lower);
  std::vector<SocCut> out;
  auto linear = [&](const std::string& method, double parameter) {
    SocCut cut;
    cut.M = MatrixXd(0, total);
    cut.m = VectorXd(0);
    cut.c = VectorXd::Zero(total);
    cut.tag = CutTag{method, parameter};
    return cut;
  };

  // b(x) - a(x)^T c - r^T u >= 0
  SocCut main = linear("sc", 0.0);
  main.c.head(n) = cc.b - cc.A.transpose() * center;
  main.c.segment(aux_offset, l) = -radius;
  main.d = cc.b0 - center.dot(cc.a0);
  out.push_back(std::move(main));

  // u_i - a_i(x) >= 0 and u_i + a_i(x) >= 0
  for (Index i = 0; i < l; ++i) {
    for (double sign : {1.0, -1.0}) {
      SocCut cut = linear("sc-aux", static_cast<double>(i));
      cut.c.head(n) = -sign * cc.A.row(i).transpose();
      cut.c(aux_offset + i) = 1.0;
      cut.d = -sign * cc.a0(i);
      out.push_back(std::move(cut));
    }
  }
  return out;
}

}  // namespace drcc::cuts
