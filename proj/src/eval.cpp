#include "drcc/eval.hpp"

#include <algorithm>
#include <cmath>

#include "drcc/error.hpp"

namespace drcc::eval {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Rows of a(x)^T stacked, and b(x).
void stack(const std::vector<cuts::AffineChanceConstraint>& ccs, const VectorXd& x, Index l,
           MatrixXd& A, VectorXd& b) {
  A.resize(static_cast<Index>(ccs.size()), l);
  b.resize(static_cast<Index>(ccs.size()));
  for (std::size_t k = 0; k < ccs.size(); ++k) {
    if (ccs[k].dimension() != l) throw DomainError("reliability: scenario dimension mismatch");
    if (ccs[k].variables() != x.size()) throw DomainError("reliability: decision dimension mismatch");
    A.row(static_cast<Index>(k)) = ccs[k].a_at(x).transpose();
    b(static_cast<Index>(k)) = ccs[k].b_at(x);
  }
}

bool holds(const MatrixXd& A, const VectorXd& b, const Eigen::Ref<const Eigen::RowVectorXd>& xi, double tol) {
  for (Index k = 0; k < A.rows(); ++k)
    if (A.row(k).dot(xi) > b(k) + tol) return false;
  return true;
}

}  // namespace

double reliability_serial(const std::vector<cuts::AffineChanceConstraint>& ccs, const VectorXd& x,
                          const stats::SampleSet& test, double tol) {
  MatrixXd A;
  VectorXd b;
  stack(ccs, x, test.dimension(), A, b);
  const auto& X = test.data();
  long ok = 0;
  for (Index j = 0; j < X.rows(); ++j) ok += holds(A, b, X.row(j), tol) ? 1 : 0;
  return 100.0 * static_cast<double>(ok) / static_cast<double>(X.rows());
}

double reliability(const std::vector<cuts::AffineChanceConstraint>& ccs, const VectorXd& x,
                   const stats::SampleSet& test, double tol) {
  MatrixXd A;
  VectorXd b;
  stack(ccs, x, test.dimension(), A, b);
  const auto& X = test.data();
  const Index n = X.rows();
  long ok = 0;
#pragma omp parallel for reduction(+ : ok) schedule(static)
  for (Index j = 0; j < n; ++j) ok += holds(A, b, X.row(j), tol) ? 1 : 0;
  return 100.0 * static_cast<double>(ok) / static_cast<double>(n);
}

double reliability(const opf::NetworkCase& c, const MatrixXd& ptdf, const opf::Decision& decision,
                   const stats::SampleSet& test, double tol) {
  return reliability(opf::extract_chance_constraints(c, ptdf), decision.to_vector(), test, tol);
}

std::vector<MetricsRow> metrics_table(const std::vector<MethodResult>& results, const std::string& ar_name,
                                      const std::string& sc_name) {
  auto find = [&](const std::string& name) -> const MethodResult& {
    for (const auto& r : results)
      if (r.method == name) return r;
    throw InputError("metrics_table: missing '" + name + "' row");
  };
  const MethodResult& ar = find(ar_name);
  const MethodResult& sc = find(sc_name);
  const double dc = sc.cost - ar.cost;
  const double dr = sc.reliability - ar.reliability;

  std::vector<MetricsRow> out;
  for (const auto& r : results) {
    MetricsRow row;
    row.method = r.method;
    row.cost = r.cost;
    row.reliability = r.reliability;
    row.time = r.time;
    if (dc != 0.0) row.cdiff = 100.0 * (r.cost - ar.cost) / dc;
    if (dr != 0.0) row.rdiff = 100.0 * (r.reliability - ar.reliability) / dr;
    if (row.cdiff && row.rdiff && *row.cdiff > 0.0) row.improv = *row.rdiff / *row.cdiff;
    out.push_back(std::move(row));
  }
  return out;
}

double optimality_gap(double cost, double exact_cost) {
  if (exact_cost == 0.0) throw DomainError("optimality_gap: exact cost is zero");
  return 100.0 * (cost - exact_cost) / exact_cost;
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw DomainError("summarize: no values");
  Summary s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.avg = sum / static_cast<double>(values.size());
  return s;
}

}  // namespace drcc::eval
