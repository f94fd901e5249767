#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <random>

#include "drcc/conic.hpp"
#include "drcc/error.hpp"

using namespace drcc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd unit(Eigen::Index n, Eigen::Index i, double v = 1.0) {
  VectorXd e = VectorXd::Zero(n);
  e(i) = v;
  return e;
}

}  // namespace

TEST_CASE("linear program with a single bound", "[conic]") {
  conic::ConicProgram p;
  const auto x = p.add_variable("x");
  p.cost(x) = 1.0;
  p.add_lower_bound(x, 3.0);
  const auto s = conic::solve_conic(p);
  REQUIRE(s.status == conic::Status::Optimal);
  CHECK_THAT(s.x(x), WithinAbs(3.0, 1e-6));
  CHECK_THAT(s.objective, WithinRel(3.0, 1e-6));
  CHECK(p.max_violation(s.x) <= 1e-7);
}

TEST_CASE("norm minimization on a line", "[conic]") {
  conic::ConicProgram p;
  const auto x = p.add_variable("x");
  const auto y = p.add_variable("y");
  const auto t = p.add_variable("t");
  p.cost(t) = 1.0;
  VectorXd row(3);
  row << 1, 1, 0;
  p.add_equality(row, 2.0);
  cuts::SocCut c;
  c.M = MatrixXd::Zero(2, 3);
  c.M(0, x) = 1.0;
  c.M(1, y) = 1.0;
  c.m = VectorXd::Zero(2);
  c.c = unit(3, t);
  c.d = 0.0;
  p.add_cone(c);
  const auto s = conic::solve_conic(p);
  REQUIRE(s.status == conic::Status::Optimal);
  CHECK_THAT(s.x(x), WithinAbs(1.0, 1e-6));
  CHECK_THAT(s.x(y), WithinAbs(1.0, 1e-6));
  CHECK_THAT(s.objective, WithinRel(std::sqrt(2.0), 1e-6));
  CHECK(p.max_violation(s.x) <= 1e-7);
}

TEST_CASE("infeasible and unbounded programs are reported", "[conic]") {
  conic::ConicProgram inf;
  const auto x = inf.add_variable("x");
  inf.cost(x) = 1.0;
  inf.add_lower_bound(x, 2.0);
  inf.add_inequality(unit(1, 0, -1.0), 1.0);  // x <= 1
  CHECK(conic::solve_conic(inf).status == conic::Status::Infeasible);

  conic::ConicProgram unb;
  const auto y = unb.add_variable("y");
  unb.cost(y) = -1.0;
  unb.add_lower_bound(y, 0.0);
  CHECK(conic::solve_conic(unb).status == conic::Status::Unbounded);
}

TEST_CASE("feasible set without interior", "[conic]") {
  conic::ConicProgram p;
  const auto x = p.add_variable("x");
  const auto y = p.add_variable("y");
  p.cost(x) = 1.0;
  p.cost(y) = 1.0;
  p.add_lower_bound(x, 1.0);
  p.add_inequality(unit(2, x, -1.0), 1.0);  // x <= 1
  p.add_lower_bound(y, -2.0);
  const auto s = conic::solve_conic(p);
  REQUIRE(s.status == conic::Status::Optimal);
  CHECK_THAT(s.x(x), WithinAbs(1.0, 1e-6));
  CHECK_THAT(s.x(y), WithinAbs(-2.0, 1e-6));
}

TEST_CASE("free variables without cost do not trigger unboundedness", "[conic]") {
  conic::ConicProgram p;
  const auto x = p.add_variable("x");
  const auto u = p.add_variable("u");
  p.cost(x) = 1.0;
  p.add_lower_bound(x, 1.0);
  p.add_lower_bound(u, 0.0);
  const auto s = conic::solve_conic(p);
  REQUIRE(s.status == conic::Status::Optimal);
  CHECK_THAT(s.x(x), WithinAbs(1.0, 1e-6));
}

TEST_CASE("quadratic epigraph", "[conic]") {
  {
    conic::ConicProgram p;
    const auto x = p.add_variable("x");
    p.cost(x) = 1.0;
    p.add_lower_bound(x, 0.0);
    CHECK(conic::quadratic_epigraph(p, {x}, VectorXd::Zero(1)) == -1);
    CHECK(p.cones.size() == 1);
  }
  {
    conic::ConicProgram p;
    const auto x = p.add_variable("P");
    VectorXd row = VectorXd::Zero(1);
    row(0) = 1.0;
    p.add_equality(row, 3.0);
    const auto t = conic::quadratic_epigraph(p, {x}, VectorXd::Constant(1, 4.0));
    REQUIRE(t >= 0);
    const auto s = conic::solve_conic(p);
    REQUIRE(s.status == conic::Status::Optimal);
    CHECK_THAT(s.x(t), WithinRel(36.0, 1e-7));
  }
  {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.1, 3.0);
    const int n = 5;
    conic::ConicProgram p;
    std::vector<Eigen::Index> idx;
    VectorXd q(n), lo(n);
    for (int i = 0; i < n; ++i) {
      idx.push_back(p.add_variable("p" + std::to_string(i)));
      q(i) = U(rng);
      lo(i) = U(rng);
    }
    for (int i = 0; i < n; ++i) p.add_lower_bound(idx[static_cast<std::size_t>(i)], lo(i));
    const auto t = conic::quadratic_epigraph(p, idx, q, 10.0);
    const auto s = conic::solve_conic(p);
    REQUIRE(s.status == conic::Status::Optimal);
    double direct = 0.0;
    for (int i = 0; i < n; ++i) direct += q(i) * s.x(idx[static_cast<std::size_t>(i)]) * s.x(idx[static_cast<std::size_t>(i)]);
    CHECK_THAT(s.x(t), WithinAbs(direct, 1e-7 * std::max(1.0, direct)));
    CHECK_THAT(direct, WithinRel(q.dot(lo.cwiseProduct(lo)), 1e-6));
  }
}

TEST_CASE("program bookkeeping", "[conic]") {
  conic::ConicProgram p;
  const auto a = p.add_variable("a");
  p.add_lower_bound(a, 1.0);
  const auto b = p.add_variable("b");
  CHECK(p.index("b") == b);
  CHECK_THROWS_AS(p.index("zz"), InputError);
  CHECK_THROWS(p.add_variable("a"));
  CHECK(p.cones.front().c.size() == 2);
  p.check();
  VectorXd x(2);
  x << 0.5, 0.0;
  CHECK_THAT(p.max_violation(x), WithinAbs(0.5, 1e-15));
}

TEST_CASE("backend registry", "[conic]") {
  const auto names = conic::backend_names();
  CHECK(std::find(names.begin(), names.end(), "barrier") != names.end());
  CHECK(conic::make_backend("barrier")->name() == "barrier");
  CHECK_THROWS_AS(conic::make_backend("nope"), InputError);

  ::setenv("DRCC_CONIC_BACKEND", "nope", 1);
  CHECK_THROWS_AS(conic::make_backend(""), InputError);
  ::setenv("DRCC_CONIC_BACKEND", "barrier", 1);
  CHECK(conic::make_backend("")->name() == "barrier");
  ::unsetenv("DRCC_CONIC_BACKEND");
  CHECK(conic::make_backend("")->name() == "barrier");
}

TEST_CASE("solves are deterministic", "[conic]") {
  conic::ConicProgram p;
  const auto x = p.add_variable("x");
  const auto y = p.add_variable("y");
  p.cost(x) = 1.0;
  p.cost(y) = 2.0;
  cuts::SocCut c;
  c.M = MatrixXd::Identity(2, 2);
  c.m = VectorXd::Constant(2, -1.0);
  c.c = VectorXd::Zero(2);
  c.d = 0.5;
  p.add_cone(c);
  const auto s1 = conic::solve_conic(p);
  const auto s2 = conic::solve_conic(p);
  REQUIRE(s1.status == conic::Status::Optimal);
  CHECK((s1.x.array() == s2.x.array()).all());
  // minimum of x + 2y over the disc of radius 1/2 at (1, 1)
  CHECK_THAT(s1.objective, WithinRel(3.0 - 0.5 * std::sqrt(5.0), 1e-6));
}
