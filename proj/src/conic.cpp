#include "drcc/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>

#include "drcc/error.hpp"

namespace drcc::conic {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ConicProgram::ConicProgram(Index n) : Aeq(0, n), beq(0), cost(VectorXd::Zero(n)) {
  names.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    names.push_back("x" + std::to_string(i));
    index_[names.back()] = i;
  }
}

Index ConicProgram::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InputError("conic program: unknown variable '" + name + "'");
  return it->second;
}

Index ConicProgram::add_variable(const std::string& name) {
  if (index_.count(name)) throw InputError("conic program: duplicate variable '" + name + "'");
  const Index n = size();
  names.push_back(name);
  index_[name] = n;
  cost.conservativeResize(n + 1);
  cost(n) = 0.0;
  Aeq.conservativeResize(Eigen::NoChange, n + 1);
  Aeq.col(n).setZero();
  for (auto& c : cones) c = c.widened(n + 1);
  return n;
}

void ConicProgram::add_equality(const VectorXd& row, double rhs) {
  if (row.size() != size()) throw DomainError("add_equality: width mismatch");
  Aeq.conservativeResize(Aeq.rows() + 1, Eigen::NoChange);
  Aeq.row(Aeq.rows() - 1) = row.transpose();
  beq.conservativeResize(beq.size() + 1);
  beq(beq.size() - 1) = rhs;
}

void ConicProgram::add_inequality(const VectorXd& row, double offset, const std::string& tag) {
  cuts::SocCut c;
  c.M = MatrixXd(0, size());
  c.m = VectorXd(0);
  c.c = row;
  c.d = offset;
  c.tag = cuts::CutTag{tag, 0.0};
  add_cone(std::move(c));
}

void ConicProgram::add_cone(cuts::SocCut cone) {
  if (cone.c.size() < size()) cone = cone.widened(size());
  if (cone.c.size() != size() || cone.M.cols() != size() || cone.M.rows() != cone.m.size())
    throw DomainError("add_cone: width mismatch");
  cones.push_back(std::move(cone));
}

void ConicProgram::add_lower_bound(Index i, double lo) {
  VectorXd row = VectorXd::Zero(size());
  row(i) = 1.0;
  add_inequality(row, -lo, "bound:" + names[static_cast<std::size_t>(i)]);
}

void ConicProgram::check() const {
  const Index n = size();
  if (Aeq.cols() != n || Aeq.rows() != beq.size()) throw DomainError("conic program: bad equalities");
  for (const auto& c : cones) {
    if (c.c.size() != n || c.M.cols() != n || c.M.rows() != c.m.size())
      throw DomainError("conic program: cone '" + c.tag.method + "' has wrong width");
  }
  if (!cost.allFinite() || !Aeq.allFinite() || !beq.allFinite())
    throw DomainError("conic program: non-finite data");
}

double ConicProgram::max_violation(const VectorXd& x) const {
  double worst = 0.0;
  if (Aeq.rows() > 0) worst = (Aeq * x - beq).cwiseAbs().maxCoeff();
  for (const auto& c : cones) worst = std::max(worst, -c.slack(x));
  return worst;
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalError: return "numerical-error";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Barrier method

namespace {

// Reduced cone ||U z + u|| <= g^T z + h in the free coordinates z.
struct Soc {
  MatrixXd U;
  VectorXd u;
  VectorXd g;
  double h;
};

struct Reduced {
  MatrixXd G;  // linear rows: G z + h >= 0
  VectorXd h;
  std::vector<Soc> soc;
  VectorXd c;  // objective
  double nu() const { return static_cast<double>(G.rows()) + 2.0 * static_cast<double>(soc.size()); }
};

// Barrier value; +inf outside the interior.
double barrier(const Reduced& P, const VectorXd& z) {
  double f = 0.0;
  if (P.G.rows() > 0) {
    const VectorXd s = P.G * z + P.h;
    for (Index i = 0; i < s.size(); ++i) {
      if (!(s(i) > 0.0)) return std::numeric_limits<double>::infinity();
      f -= std::log(s(i));
    }
  }
  for (const auto& c : P.soc) {
    const double s = c.g.dot(z) + c.h;
    const double r = (c.U * z + c.u).norm();
    if (!(s > r)) return std::numeric_limits<double>::infinity();
    f -= std::log(s - r) + std::log(s + r);
  }
  return f;
}

void barrier_derivatives(const Reduced& P, const VectorXd& z, VectorXd& grad, MatrixXd& hess) {
  const Index n = z.size();
  grad.setZero(n);
  hess.setZero(n, n);
  if (P.G.rows() > 0) {
    const VectorXd inv = (P.G * z + P.h).cwiseInverse();
    grad -= P.G.transpose() * inv;
    hess += P.G.transpose() * inv.cwiseAbs2().asDiagonal() * P.G;
  }
  for (const auto& c : P.soc) {
    const double s = c.g.dot(z) + c.h;
    const VectorXd w = c.U * z + c.u;
    const double D = (s - w.norm()) * (s + w.norm());
    // Gradient of -log(s^2 - |w|^2) in (s, w) is (-2s, 2w)/D; pull back.
    const VectorXd Jz_pull = s * c.g - c.U.transpose() * w;  // A^T J (s, w)
    grad -= (2.0 / D) * Jz_pull;
    // Hessian: -2 J / D + 4 (J z)(J z)^T / D^2, pulled back through A = [g^T; U].
    hess.noalias() -= (2.0 / D) * (c.g * c.g.transpose());
    hess.noalias() += (2.0 / D) * (c.U.transpose() * c.U);
    hess.noalias() += (4.0 / (D * D)) * (Jz_pull * Jz_pull.transpose());
  }
}

VectorXd newton_direction(const MatrixXd& H, const VectorXd& g) {
  const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  double reg = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    MatrixXd Hr = H;
    if (reg > 0.0) Hr.diagonal().array() += reg;
    Eigen::LDLT<MatrixXd> ldlt(Hr);
    if (ldlt.info() == Eigen::Success) {
      VectorXd d = ldlt.solve(-g);
      if (d.allFinite()) return d;
    }
    reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
  }
  return VectorXd();
}

enum class Centering { Converged, Stalled, Stopped, Failed };

// Minimizes t c^T z + barrier(z) from a strictly feasible z by damped Newton.
// `stop` is polled after each step and may end the centering early.
Centering center(const Reduced& P, double t, VectorXd& z, const BarrierSettings& cfg, int& steps,
                 const std::function<bool(const VectorXd&)>& stop) {
  VectorXd grad;
  MatrixXd hess;
  double phi = barrier(P, z);
  double dec = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_newton; ++it) {
    barrier_derivatives(P, z, grad, hess);
    grad += t * P.c;
    const VectorXd dz = newton_direction(hess, grad);
    if (dz.size() == 0) return Centering::Failed;
    dec = -grad.dot(dz);
    if (dec / 2.0 <= cfg.newton_tol) return Centering::Converged;

    // The linear part of the decrease is evaluated exactly to avoid
    // cancellation in t c^T z at large t.
    const double slope = t * P.c.dot(dz);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const VectorXd trial = z + step * dz;
      const double phi_t = barrier(P, trial);
      if (!std::isfinite(phi_t)) continue;
      if (step * slope + (phi_t - phi) <= -0.01 * step * dec) {
        z = trial;
        phi = phi_t;
        moved = true;
        break;
      }
    }
    ++steps;
    // A decrement below one still places z close to the central path, which
    // is all the outer loop needs when rounding prevents further progress.
    if (!moved) return dec < 0.5 ? Centering::Converged : Centering::Stalled;
    if (stop && stop(z)) return Centering::Stopped;
  }
  return dec < 0.5 ? Centering::Converged : Centering::Stalled;
}

enum class PathResult { Optimal, Stopped, Failed };

PathResult path_follow(const Reduced& P, VectorXd& z, const BarrierSettings& cfg, int& steps,
                       double t0, const std::function<bool(const VectorXd&)>& stop = {}) {
  const double nu = P.nu();
  double t = t0;
  for (int outer = 0; outer < 200; ++outer) {
    const Centering c = center(P, t, z, cfg, steps, stop);
    if (c == Centering::Stopped) return PathResult::Stopped;
    if (c == Centering::Failed) return PathResult::Failed;
    const double scale = std::max(1.0, std::abs(P.c.dot(z)));
    if (nu / t <= cfg.gap_tol * scale) return PathResult::Optimal;
    // Rounding limits how far the path can be followed; a stall close to the
    // end of the path is accepted.
    if (c == Centering::Stalled) return nu / t <= 1e-7 * scale ? PathResult::Optimal : PathResult::Failed;
    t *= cfg.mu;
  }
  return PathResult::Failed;
}

}  // namespace

Solution BarrierBackend::solve(const ConicProgram& prog) const {
  prog.check();
  Solution out;
  const Index n = prog.size();

  // Equality elimination x = x0 + Z y.
  VectorXd x0 = VectorXd::Zero(n);
  MatrixXd Z = MatrixXd::Identity(n, n);
  if (prog.Aeq.rows() > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(prog.Aeq.transpose());
    const Index r = qr.rank();
    x0 = prog.Aeq.completeOrthogonalDecomposition().solve(prog.beq);
    const double res = (prog.Aeq * x0 - prog.beq).norm();
    if (!(res <= 1e-9 * (1.0 + prog.beq.norm()))) {
      out.status = Status::Infeasible;
      out.message = "inconsistent equality constraints";
      return out;
    }
    MatrixXd Q = qr.householderQ();
    Z = Q.rightCols(n - r);
  }
  const Index ny = Z.cols();

  const double U = settings_.box > 0.0 ? settings_.box : 1e8 * std::max(1.0, x0.cwiseAbs().maxCoeff());

  // Reduce and normalize cones; constant cones are checked directly.
  std::vector<VectorXd> lin_rows;
  std::vector<double> lin_off;
  Reduced P;
  for (const auto& c : prog.cones) {
    const VectorXd g = Z.transpose() * c.c;
    const double h = c.c.dot(x0) + c.d;
    MatrixXd Um = c.M * Z;
    VectorXd um = c.M * x0 + c.m;
    const double w = std::max(g.norm(), Um.rows() > 0 ? Um.norm() : 0.0);
    if (w <= 1e-14 * (1.0 + std::abs(h) + um.norm())) {
      if (h - um.norm() < -1e-9 * (1.0 + std::abs(h))) {
        out.status = Status::Infeasible;
        out.message = "constant constraint '" + c.tag.method + "' violated";
        return out;
      }
      continue;
    }
    if (c.is_linear() || um.size() == 0) {
      lin_rows.push_back(g / w);
      lin_off.push_back(h / w);
    } else {
      P.soc.push_back(Soc{Um / w, um / w, g / w, h / w});
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (Z.row(i).norm() <= 1e-14) continue;
    lin_rows.push_back(Z.row(i).transpose());
    lin_off.push_back(U + x0(i));
    lin_rows.push_back(-Z.row(i).transpose());
    lin_off.push_back(U - x0(i));
  }
  P.G.resize(static_cast<Index>(lin_rows.size()), ny);
  P.h.resize(static_cast<Index>(lin_rows.size()));
  for (std::size_t k = 0; k < lin_rows.size(); ++k) {
    P.G.row(static_cast<Index>(k)) = lin_rows[k].transpose();
    P.h(static_cast<Index>(k)) = lin_off[k];
  }
  P.c = Z.transpose() * prog.cost;

  auto finish = [&](const VectorXd& y, Status st, const std::string& msg) {
    out.status = st;
    out.x = x0 + Z * y;
    out.objective = prog.objective(out.x);
    out.message = msg;
    return out;
  };

  if (ny == 0) {
    const VectorXd y(0);
    if (prog.max_violation(x0) > 1e-7) return finish(y, Status::Infeasible, "fixed point infeasible");
    return finish(y, Status::Optimal, "fixed by equalities");
  }

  // Phase one: min s over (y, s) with every non-box cone relaxed by s.
  VectorXd y = VectorXd::Zero(ny);
  double shift = 0.0;
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < P.G.rows(); ++i) worst = std::max(worst, -(P.G.row(i).dot(y) + P.h(i)));
    for (const auto& c : P.soc) worst = std::max(worst, (c.U * y + c.u).norm() - (c.g.dot(y) + c.h));

    if (worst >= -1e-3) {
      // Rows belonging to the box stay unrelaxed: they are the trailing 2*k rows.
      const Index box_rows = [&] {
        Index k = 0;
        for (Index i = 0; i < n; ++i)
          if (Z.row(i).norm() > 1e-14) k += 2;
        return k;
      }();
      const Index core = P.G.rows() - box_rows;
      Reduced Q;
      Q.G = MatrixXd::Zero(P.G.rows() + 1, ny + 1);
      Q.G.topLeftCorner(P.G.rows(), ny) = P.G;
      Q.G.col(ny).head(core).setOnes();
      Q.h = VectorXd::Zero(P.G.rows() + 1);
      Q.h.head(P.G.rows()) = P.h;
      Q.G(P.G.rows(), ny) = 1.0;  // s >= -1
      Q.h(P.G.rows()) = 1.0;
      for (const auto& c : P.soc) {
        Soc q;
        q.U = MatrixXd::Zero(c.U.rows(), ny + 1);
        q.U.leftCols(ny) = c.U;
        q.u = c.u;
        q.g = VectorXd::Zero(ny + 1);
        q.g.head(ny) = c.g;
        q.g(ny) = 1.0;
        q.h = c.h;
        Q.soc.push_back(std::move(q));
      }
      Q.c = VectorXd::Zero(ny + 1);
      Q.c(ny) = 1.0;

      VectorXd z(ny + 1);
      z.head(ny) = y;
      z(ny) = std::max(worst, 0.0) + 1.0;
      const double target = -1e-3;
      BarrierSettings cfg = settings_;
      cfg.gap_tol = 1e-12;
      const PathResult r =
          path_follow(Q, z, cfg, out.newton_steps, 1.0, [&](const VectorXd& v) { return v(ny) < target; });
      y = z.head(ny);
      const double s = z(ny);
      if (r == PathResult::Failed && !(s < 0.0)) {
        return finish(y, Status::NumericalError, "phase one failed");
      }
      if (s > 1e-8) return finish(y, Status::Infeasible, "no strictly feasible point (phase one)");
      if (!(s < -1e-10)) {
        // Feasible set without interior: relax every core row by a tiny margin.
        shift = 1e-9;
        P.h.head(core).array() += shift;
        for (auto& c : P.soc) c.h += shift;
      }
    }
  }

  const double t0 = std::max(1e-8, P.nu() / std::max(1.0, std::abs(P.c.dot(y))));
  const PathResult r = path_follow(P, y, settings_, out.newton_steps, t0);
  if (r != PathResult::Optimal) {
    Solution s = finish(y, Status::NumericalError, "barrier path following did not converge");
    if (s.x.cwiseAbs().maxCoeff() > 0.99 * U) {
      s.status = Status::Unbounded;
      s.message = "objective unbounded below";
    }
    return s;
  }
  Solution s = finish(y, Status::Optimal, shift > 0.0 ? "optimal (empty interior, relaxed 1e-9)" : "optimal");
  if (s.x.cwiseAbs().maxCoeff() > 0.99 * U) {
    s.status = Status::Unbounded;
    s.message = "objective unbounded below";
  }
  return s;
}

// ---------------------------------------------------------------------------

std::vector<std::string> backend_names() { return {"barrier"}; }

std::unique_ptr<Backend> make_backend(const std::string& name) {
  std::string chosen = name;
  if (chosen.empty()) {
    const char* env = std::getenv("DRCC_CONIC_BACKEND");
    chosen = env && *env ? env : "barrier";
  }
  if (chosen == "barrier") return std::make_unique<BarrierBackend>();
  throw InputError("unknown conic backend '" + chosen + "'");
}

Solution solve_conic(const ConicProgram& prog) { return make_backend()->solve(prog); }

Index quadratic_epigraph(ConicProgram& prog, const std::vector<Index>& idx, const VectorXd& q,
                         double scale) {
  if (static_cast<Index>(idx.size()) != q.size()) throw DomainError("quadratic_epigraph: size mismatch");
  if ((q.array() < 0.0).any()) throw DomainError("quadratic_epigraph: negative quadratic coefficient");
  if (!(scale > 0.0)) throw DomainError("quadratic_epigraph: scale must be positive");
  if ((q.array() == 0.0).all()) return -1;

  const Index t = prog.add_variable("epigraph_t");
  const Index n = prog.size();
  cuts::SocCut cone;
  cone.M = MatrixXd::Zero(q.size() + 1, n);
  cone.m = VectorXd::Zero(q.size() + 1);
  for (Index i = 0; i < q.size(); ++i) cone.M(i, idx[static_cast<std::size_t>(i)]) = 2.0 * std::sqrt(scale * q(i));
  cone.M(q.size(), t) = 1.0;
  cone.m(q.size()) = -scale;
  cone.c = VectorXd::Zero(n);
  cone.c(t) = 1.0;
  cone.d = scale;
  cone.tag = cuts::CutTag{"epigraph", scale};
  prog.add_cone(std::move(cone));
  prog.cost(t) += 1.0;
  return t;
}

}  // namespace drcc::conic
