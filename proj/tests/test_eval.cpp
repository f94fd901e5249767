#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "drcc/error.hpp"
#include "drcc/eval.hpp"
#include "drcc/io.hpp"
#include "drcc/solve.hpp"

using namespace drcc;
using Catch::Matchers::WithinAbs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string data(const std::string& rel) { return std::string(DRCC_DATA_DIR) + "/" + rel; }

stats::SampleSet gaussian(Eigen::Index n, Eigen::Index l, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, sd);
  MatrixXd d(n, l);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < l; ++j) d(i, j) = N(rng);
  return stats::SampleSet(d);
}

const eval::MetricsRow& row(const std::vector<eval::MetricsRow>& t, const std::string& name) {
  for (const auto& r : t)
    if (r.method == name) return r;
  FAIL("missing row " << name);
  return t.front();
}

}  // namespace

TEST_CASE("unlimited network is always reliable", "[eval]") {
  auto c = opf::load_case(data("cases/three_bus.json"));
  for (auto& ln : c.lines) ln.limit = INFINITY;
  for (auto& g : c.generators) {
    g.pmin = -1e12;
    g.pmax = 1e12;
  }
  const solve::OpfModel m(c);
  opf::Decision d;
  d.pg = VectorXd{{60.0, 40.0}};
  d.rup = VectorXd::Constant(2, 1e9);
  d.rdn = VectorXd::Constant(2, 1e9);
  d.dist = VectorXd{{0.5, 0.5}};
  CHECK(eval::reliability(m.chance_constraints(), d.to_vector(), gaussian(500, 1, 20.0, 1)) == 100.0);
}

TEST_CASE("reliability counts scenarios satisfying every constraint", "[eval]") {
  // one scalar constraint xi <= x0 with x0 = 0.5 on a known sample
  cuts::AffineChanceConstraint cc;
  cc.A = MatrixXd::Zero(1, 1);
  cc.a0 = VectorXd::Constant(1, 1.0);
  cc.b = VectorXd::Constant(1, 1.0);
  cc.b0 = 0.0;
  MatrixXd d(4, 1);
  d << 0.0, 1.0, 0.5, -3.0;
  const stats::SampleSet s(d);
  CHECK(eval::reliability({cc}, VectorXd::Constant(1, 0.5), s) == 75.0);
  CHECK(eval::reliability({cc}, VectorXd::Constant(1, -10.0), s) == 0.0);
  CHECK(eval::reliability({cc}, VectorXd::Constant(1, 0.5 - 1e-8), s) == 75.0);  // within tol
  CHECK(eval::reliability({cc}, VectorXd::Constant(1, 0.5 - 1e-6), s) == 50.0);
}

TEST_CASE("OpenMP reliability equals the serial reference", "[eval]") {
  const solve::OpfModel m(opf::load_case(data("cases/three_bus.json")));
  const auto test = gaussian(20000, 1, 15.0, 9);
  const auto model = stats::UncertaintyModel::from_samples(gaussian(2000, 1, 15.0, 2), 15, 1.0, 0.05);
  const auto r = solve::solve_ar(m, model);
  REQUIRE(r.status == solve::Status::Optimal);
  const double par = eval::reliability(m.chance_constraints(), r.x, test);
  CHECK(par == eval::reliability_serial(m.chance_constraints(), r.x, test));
  CHECK(par == eval::reliability(m.network(), m.ptdf(), r.decision, test));
  CHECK(par > 50.0);
}

TEST_CASE("tightening limits never raises reliability", "[eval]") {
  auto c = opf::load_case(data("cases/three_bus.json"));
  const auto test = gaussian(5000, 1, 15.0, 4);
  opf::Decision d;
  d.pg = VectorXd{{90.0, 10.0}};
  d.rup = VectorXd{{10.0, 10.0}};
  d.rdn = VectorXd{{10.0, 10.0}};
  d.dist = VectorXd{{0.6, 0.4}};
  double prev = 101.0;
  for (double limit : {120.0, 80.0, 66.0, 60.0, 10.0}) {
    c.lines[1].limit = limit;
    const double rel = eval::reliability(c, opf::build_ptdf(c), d, test);
    CHECK(rel <= prev);
    prev = rel;
  }
  CHECK(prev == 0.0);
}

TEST_CASE("metrics against the published averages", "[eval]") {
  const std::vector<eval::MethodResult> in = {
      {"ar", 3310.0, 81.8, 0.0}, {"sc", 4937.0, 100.0, 0.0}, {"dr-u", 3343.0, 97.1, 0.0}};
  const auto t = eval::metrics_table(in);
  const auto& dru = row(t, "dr-u");
  REQUIRE(dru.cdiff);
  REQUIRE(dru.rdiff);
  CHECK(std::round(*dru.cdiff * 10.0) / 10.0 == 2.0);
  CHECK_THAT(*dru.rdiff, WithinAbs(84.2, 0.15));
  CHECK_THAT(*dru.rdiff, WithinAbs(100.0 * 15.3 / 18.2, 1e-9));
  REQUIRE(dru.improv);
  CHECK_THAT(*dru.improv, WithinAbs(*dru.rdiff / *dru.cdiff, 1e-12));

  const auto& ar = row(t, "ar");
  CHECK(*ar.cdiff == 0.0);
  CHECK(*ar.rdiff == 0.0);
  CHECK_FALSE(ar.improv);
  const auto& sc = row(t, "sc");
  CHECK(*sc.cdiff == 100.0);
}

TEST_CASE("metrics are invariant to cost scaling", "[eval]") {
  const std::vector<eval::MethodResult> in = {
      {"ar", 3310.0, 81.8, 0.0}, {"sc", 4937.0, 100.0, 0.0}, {"dr-m", 4100.0, 99.0, 0.0}};
  std::vector<eval::MethodResult> scaled = in;
  for (auto& r : scaled) r.cost *= 7.5;
  const auto a = row(eval::metrics_table(in), "dr-m");
  const auto b = row(eval::metrics_table(scaled), "dr-m");
  CHECK_THAT(*a.cdiff, WithinAbs(*b.cdiff, 1e-9));
  CHECK(*a.rdiff == *b.rdiff);
}

TEST_CASE("metrics edge cases", "[eval]") {
  CHECK_THROWS_AS(eval::metrics_table({{"ar", 1.0, 90.0, 0.0}}), InputError);
  const auto t = eval::metrics_table({{"ar", 1.0, 90.0, 0.0}, {"sc", 1.0, 90.0, 0.0}, {"x", 2.0, 95.0, 0.0}});
  CHECK_FALSE(row(t, "x").cdiff);
  CHECK_FALSE(row(t, "x").rdiff);
  CHECK_FALSE(row(t, "x").improv);
}

TEST_CASE("gap and summaries", "[eval]") {
  CHECK_THAT(eval::optimality_gap(105.0, 100.0), WithinAbs(5.0, 1e-12));
  CHECK(eval::optimality_gap(100.0, 100.0) == 0.0);
  const auto s = eval::summarize({3.0, 1.0, 2.0});
  CHECK(s.min == 1.0);
  CHECK(s.avg == 2.0);
  CHECK(s.max == 3.0);
  CHECK_THROWS_AS(eval::summarize({}), DomainError);
}
