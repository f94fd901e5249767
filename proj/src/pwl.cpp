#include "drcc/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "drcc/error.hpp"

namespace drcc::pwl {

VFunction::VFunction(double epsilon, double alpha) : epsilon_(epsilon), alpha_(alpha) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("VFunction: epsilon must lie in (0, 0.5)");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("VFunction: alpha must be positive");
  tau0_ = std::pow(1.0 / (1.0 - epsilon), 1.0 / alpha);
  supremum_ = std::sqrt((1.0 - epsilon) / epsilon);
}

double VFunction::operator()(double tau) const {
  if (tau == kInfinity) return supremum_;
  if (!(tau >= tau0_)) throw DomainError("v: tau below tau0");
  if (tau == tau0_) return 0.0;  // rounding in tau0^-alpha would leave ~1e-8 here
  const double num = 1.0 - epsilon_ - std::pow(tau, -alpha_);
  return std::sqrt(std::max(num, 0.0) / epsilon_);
}

double VFunction::derivative(double tau) const {
  if (tau == kInfinity) return 0.0;
  const double v = (*this)(tau);
  if (v <= 0.0) return kInfinity;
  return alpha_ * std::pow(tau, -alpha_ - 1.0) / (2.0 * epsilon_ * v);
}

double VFunction::inverse_derivative(double slope) const {
  if (!(slope > 0.0)) return kInfinity;
  if (slope == kInfinity) return tau0_;
  double lo = tau0_;
  double span = 1.0;
  double hi = tau0_ + span;
  while (derivative(hi) > slope) {
    lo = hi;
    span *= 2.0;
    hi = tau0_ + span;
    if (!std::isfinite(hi)) return kInfinity;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (derivative(mid) > slope)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double v_eval(const VFunction& vf, double tau) { return vf(tau); }

Line tangent_line(const VFunction& vf, double t) {
  if (t == kInfinity) return Line{0.0, vf.supremum()};
  if (!(t > vf.tau0())) throw DomainError("tangent_line: tangent point must exceed tau0");
  const double slope = vf.derivative(t);
  return Line{slope, vf(t) - slope * t};
}

// ---------------------------------------------------------------------------

PwlFunction PwlFunction::lower_envelope(std::vector<Line> lines, double tau0,
                                        std::vector<double> tangents) {
  if (lines.empty()) throw DomainError("lower_envelope: no lines");
  if (!tangents.empty() && tangents.size() != lines.size())
    throw DomainError("lower_envelope: tangent list misaligned with lines");
  if (tangents.empty()) tangents.assign(lines.size(), std::nan(""));

  // Start with the lowest line at tau0; among ties the flatter one stays lower.
  std::size_t cur = 0;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const double vk = lines[k](tau0), vc = lines[cur](tau0);
    if (vk < vc || (vk == vc && lines[k].slope < lines[cur].slope)) cur = k;
  }

  PwlFunction h;
  h.pieces_.push_back(lines[cur]);
  h.tangents_.push_back(tangents[cur]);
  h.breakpoints_.push_back(tau0);
  double at = tau0;

  for (;;) {
    std::size_t next = lines.size();
    double best = kInfinity;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (!(lines[k].slope < lines[cur].slope)) continue;
      const double cross =
          (lines[k].intercept - lines[cur].intercept) / (lines[cur].slope - lines[k].slope);
      if (cross < at) continue;
      if (cross < best || (cross == best && lines[k].slope < lines[next].slope)) {
        best = cross;
        next = k;
      }
    }
    if (next == lines.size()) break;
    if (best <= at) {
      // Zero-length piece: the flatter line takes over at the same point.
      h.pieces_.back() = lines[next];
      h.tangents_.back() = tangents[next];
    } else {
      h.pieces_.push_back(lines[next]);
      h.tangents_.push_back(tangents[next]);
      h.breakpoints_.push_back(best);
      at = best;
    }
    cur = next;
  }
  return h;
}

double PwlFunction::operator()(double tau) const {
  double out = kInfinity;
  for (const auto& p : pieces_) out = std::min(out, p(tau));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Iterate {
  std::vector<double> tangents;  // T_1..T_{|S|-1}
  std::vector<double> breaks;    // B_1..B_|S|
  std::vector<double> errors;    // E_1..E_|S|
  double end_error = 0.0;        // e_T
};

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

// Break points from tangent intersections. The last break point is
// placed on the crossing of the last tangent with the asymptote, i.e. the
// fixed point of the halving move, so E_|S| and e_T coincide.
void evaluate(const VFunction& vf, Iterate& it) {
  const std::size_t n = it.tangents.size();
  const double vmax = vf.supremum();
  std::vector<Line> lines(n);
  for (std::size_t s = 0; s < n; ++s) lines[s] = tangent_line(vf, it.tangents[s]);

  for (std::size_t s = 1; s < n; ++s) {
    const Line& a = lines[s - 1];
    const Line& b = lines[s];
    it.breaks[s] = (b.intercept - a.intercept) / (a.slope - b.slope);
  }
  const Line& last = lines[n - 1];
  it.breaks[n] = (vmax - last.intercept) / last.slope;

  it.errors.assign(n + 1, 0.0);
  it.errors[0] = lines[0](vf.tau0()) - vf(vf.tau0());
  for (std::size_t s = 1; s < n; ++s) it.errors[s] = lines[s - 1](it.breaks[s]) - vf(it.breaks[s]);
  it.end_error = vmax - vf(it.breaks[n]);
  it.errors[n] = it.end_error;
}

bool converged(const Iterate& it, double delta) {
  const double hi = std::max(max_of(it.errors), it.end_error);
  const double lo = std::min(min_of(it.errors), it.end_error);
  return hi <= (1.0 + delta) * lo;
}

// Move each tangent point toward the side with the larger error.
bool advance(const VFunction& vf, const Iterate& it, double step, std::vector<double>& out) {
  const std::size_t n = it.tangents.size();
  out.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double T = it.tangents[s];
    const double lo = it.breaks[s], hi = it.breaks[s + 1];
    const double El = it.errors[s], Er = it.errors[s + 1];
    const double denom = Er / (hi - T) + El / (T - lo);
    out[s] = T + step * (Er - El) / denom;
  }
  if (!(out[0] > vf.tau0())) return false;
  for (std::size_t s = 0; s < n; ++s) {
    if (!std::isfinite(out[s])) return false;
    if (s > 0 && !(out[s] > out[s - 1])) return false;
  }
  return true;
}

OpsResult finalize(const VFunction& vf, const Iterate& it, int iterations,
                   std::vector<double> history) {
  std::vector<Line> lines;
  std::vector<double> tangents;
  for (double T : it.tangents) {
    lines.push_back(tangent_line(vf, T));
    tangents.push_back(T);
  }
  lines.push_back(Line{0.0, vf.supremum()});
  tangents.push_back(kInfinity);

  OpsResult r;
  r.pwl = PwlFunction::lower_envelope(std::move(lines), vf.tau0(), std::move(tangents));
  for (double b : r.pwl.breakpoints()) r.errors.push_back(r.pwl(b) - vf(b));
  r.end_error = vf.supremum() - vf(r.pwl.breakpoints().back());
  r.emax = std::max(max_of(r.errors), r.end_error);
  r.iterations = iterations;
  r.emax_history = std::move(history);
  return r;
}

}  // namespace

OpsResult ops_search(const VFunction& vf, int pieces, const OpsConfig& cfg) {
  if (pieces < 1) throw DomainError("ops_search: pieces must be >= 1");
  if (!(cfg.delta > 0.0) || cfg.max_iterations < 1 || !(cfg.step > 0.0))
    throw DomainError("ops_search: invalid configuration");
  if (!(cfg.initial_end > vf.tau0())) throw DomainError("ops_search: initial_end must exceed tau0");

  if (pieces == 1) {
    OpsResult r;
    r.pwl = PwlFunction::lower_envelope({Line{0.0, vf.supremum()}}, vf.tau0(), {kInfinity});
    r.errors = {vf.supremum() - vf(vf.tau0())};
    r.end_error = r.errors.front();
    r.emax = r.end_error;
    r.iterations = 0;
    return r;
  }

  const auto n = static_cast<std::size_t>(pieces - 1);
  Iterate cur;
  cur.tangents.resize(n);
  cur.breaks.assign(n + 1, vf.tau0());
  cur.breaks[n] = cfg.initial_end;
  for (std::size_t s = 0; s < n; ++s)
    cur.tangents[s] = vf.tau0() + static_cast<double>(s + 1) * (cfg.initial_end - vf.tau0()) / pieces;

  Iterate prev;
  bool have_prev = false;
  double step = cfg.step;
  int retries = 0;
  std::vector<double> history;

  for (int i = 1;; ++i) {
    if (i > cfg.max_iterations) {
      std::ostringstream os;
      os << "ops_search: no convergence under current initialization (|S|=" << pieces << ", "
         << cfg.max_iterations << " iterations)";
      throw OpsNoConvergence(os.str(), finalize(vf, cur, i - 1, history));
    }
    evaluate(vf, cur);
    if (converged(cur, cfg.delta)) {
      history.push_back(std::max(max_of(cur.errors), cur.end_error));
      return finalize(vf, cur, i, std::move(history));
    }

    // A worse iterate is discarded and retried from its predecessor
    // with half the step.
    if (have_prev && max_of(cur.errors) > max_of(prev.errors)) {
      if (++retries > cfg.max_retries) {
        throw OpsNoConvergence("ops_search: step-size halving exhausted", finalize(vf, prev, i - 1, history));
      }
      cur = prev;
      --i;
      step *= 0.5;
    } else {
      retries = 0;
      history.push_back(std::max(max_of(cur.errors), cur.end_error));
    }

    std::vector<double> next;
    while (!advance(vf, cur, step, next)) {
      if (++retries > cfg.max_retries)
        throw OpsNoConvergence("ops_search: tangent points left their intervals", finalize(vf, cur, i, history));
      step *= 0.5;
    }
    prev = cur;
    have_prev = true;
    cur.tangents = std::move(next);
  }
}

// ---------------------------------------------------------------------------

std::vector<double> audit_grid(const VFunction& vf) {
  constexpr int kPoints = 10000;
  std::vector<double> grid;
  grid.reserve(kPoints + 1);
  grid.push_back(vf.tau0());
  for (int k = 0; k < kPoints - 1; ++k) {
    const double e = -6.0 + 9.0 * k / (kPoints - 2);
    grid.push_back(vf.tau0() + std::pow(10.0, e));
  }
  grid.push_back(kInfinity);
  return grid;
}

bool is_outer_approximation(const VFunction& vf, const PwlFunction& h, double tol) {
  for (double t : audit_grid(vf))
    if (h(t) < vf(t) - tol) return false;
  return true;
}

double pwl_error(const VFunction& vf, const PwlFunction& h) {
  if (h.size() == 0) throw DomainError("pwl_error: empty function");
  if (!is_outer_approximation(vf, h))
    throw NotOuterApproximation("pwl_error: function is not an outer approximation of v");
  double e = 0.0;
  for (double b : h.breakpoints()) e = std::max(e, h(b) - vf(b));
  const Line& last = h.pieces().back();
  if (last.slope > 0.0) return kInfinity;
  e = std::max(e, last.intercept - vf.supremum());
  return e;
}

namespace {

// Minimum of the convex gap (line - v) over [tau0, inf).
double tangency_gap(const VFunction& vf, const Line& line) {
  if (line.slope <= 0.0) {
    // Flat or falling line: the infimum is approached at infinity.
    return line.slope < 0.0 ? -kInfinity : line.intercept - vf.supremum();
  }
  auto gap = [&](double t) { return line(t) - vf(t); };
  double lo = vf.tau0();
  double hi = vf.tau0() + 1.0;
  while (vf.derivative(hi) > line.slope) hi = vf.tau0() + 2.0 * (hi - vf.tau0());

  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - ratio * (hi - lo), b = lo + ratio * (hi - lo);
  double fa = gap(a), fb = gap(b);
  for (int it = 0; it < 400 && hi - lo > 1e-10; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - ratio * (hi - lo);
      fa = gap(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + ratio * (hi - lo);
      fb = gap(b);
    }
  }
  return std::min({gap(0.5 * (lo + hi)), fa, fb, gap(vf.tau0())});
}

}  // namespace

OptimalityReport check_optimality_conditions(const VFunction& vf, const PwlFunction& h, double tol) {
  OptimalityReport r;
  if (h.size() == 0) return r;

  const Line& last = h.pieces().back();
  r.constant_asymptote = std::abs(last.slope) <= tol &&
                         std::abs(last.intercept - vf.supremum()) <= tol * vf.supremum();

  r.tangency = true;
  for (std::size_t s = 0; s + 1 < h.size(); ++s) {
    const double g = tangency_gap(vf, h.pieces()[s]);
    r.tangency_gaps.push_back(g);
    if (!(std::abs(g) <= 1e-8)) r.tangency = false;
  }

  for (double b : h.breakpoints()) r.breakpoint_errors.push_back(h(b) - vf(b));
  const double hi = max_of(r.breakpoint_errors), lo = min_of(r.breakpoint_errors);
  r.equal_errors = hi <= (1.0 + tol) * lo;
  return r;
}

}  // namespace drcc::pwl
