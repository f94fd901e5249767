#include <catch_amalgamated.hpp>

#include <random>

#include "drcc/error.hpp"
#include "drcc/io.hpp"
#include "drcc/opf.hpp"

using namespace drcc;
using Catch::Matchers::WithinAbs;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string data(const std::string& rel) { return std::string(DRCC_DATA_DIR) + "/" + rel; }

opf::NetworkCase triangle() {
  opf::NetworkCase c;
  c.name = "tri";
  c.slack = 1;
  c.buses = {{1, 0.0}, {2, 0.0}, {3, 0.0}};
  c.lines = {{1, 2, 0.1, 100.0}, {1, 3, 0.1, 100.0}, {2, 3, 0.1, 100.0}};
  c.generators = {{1, 0.0, 100.0, 0.0, 1.0, 10.0}};
  return c;
}

// Line flows from a direct DC solve: reduced susceptance system, slack angle 0.
VectorXd dc_flows(const opf::NetworkCase& c, const VectorXd& injection) {
  const Index n = c.bus_count();
  MatrixXd B = MatrixXd::Zero(n, n);
  for (const auto& ln : c.lines) {
    const Index i = c.bus_index(ln.from), j = c.bus_index(ln.to);
    const double y = c.base_mva / ln.reactance;
    B(i, i) += y;
    B(j, j) += y;
    B(i, j) -= y;
    B(j, i) -= y;
  }
  const Index s = c.bus_index(c.slack);
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i)
    if (i != s) keep.push_back(i);
  MatrixXd Br(keep.size(), keep.size());
  VectorXd pr(keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    pr(static_cast<Index>(a)) = injection(keep[a]);
    for (std::size_t b = 0; b < keep.size(); ++b) Br(static_cast<Index>(a), static_cast<Index>(b)) = B(keep[a], keep[b]);
  }
  const VectorXd th_r = Br.fullPivLu().solve(pr);
  VectorXd th = VectorXd::Zero(n);
  for (std::size_t a = 0; a < keep.size(); ++a) th(keep[a]) = th_r(static_cast<Index>(a));
  VectorXd f(static_cast<Index>(c.lines.size()));
  for (std::size_t k = 0; k < c.lines.size(); ++k) {
    const auto& ln = c.lines[k];
    f(static_cast<Index>(k)) = c.base_mva / ln.reactance * (th(c.bus_index(ln.from)) - th(c.bus_index(ln.to)));
  }
  return f;
}

}  // namespace

TEST_CASE("PTDF of an equal-reactance triangle", "[opf]") {
  const auto c = triangle();
  const MatrixXd H = opf::build_ptdf(c);
  REQUIRE(H.rows() == 3);
  REQUIRE(H.cols() == 3);
  VectorXd inj(3);
  inj << 1.0, 0.0, -1.0;
  const VectorXd f = H * inj;
  CHECK_THAT(f(0), WithinAbs(1.0 / 3.0, 1e-10));
  CHECK_THAT(f(1), WithinAbs(2.0 / 3.0, 1e-10));
  CHECK_THAT(f(2), WithinAbs(1.0 / 3.0, 1e-10));
  CHECK(H.col(0).norm() == 0.0);

  const VectorXd direct = dc_flows(c, inj);
  CHECK((f - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("PTDF agrees with a direct DC solve on random injections", "[opf]") {
  auto c = opf::load_case(data("cases/three_bus.json"));
  c.lines[0].reactance = 0.07;
  c.lines[2].reactance = 0.23;
  const MatrixXd H = opf::build_ptdf(c);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0.0, 50.0);
  for (int t = 0; t < 20; ++t) {
    VectorXd inj(3);
    inj << N(rng), N(rng), N(rng);
    inj(0) = -(inj(1) + inj(2));
    CHECK((H * inj - dc_flows(c, inj)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("disconnected networks are rejected", "[opf]") {
  auto c = triangle();
  c.buses.push_back({4, 10.0});
  CHECK_THROWS_AS(opf::build_ptdf(c), NetworkError);
  CHECK_THROWS_AS(c.validate(), NetworkError);
}

TEST_CASE("objective arithmetic", "[opf]") {
  opf::NetworkCase c = triangle();
  c.generators = {{1, 0.0, 10.0, 1.0, 2.0, 20.0}};
  const auto obj = opf::objective(c);
  opf::Decision d;
  d.pg = VectorXd::Constant(1, 3.0);
  d.rup = VectorXd::Constant(1, 1.0);
  d.rdn = VectorXd::Zero(1);
  d.dist = VectorXd::Constant(1, 1.0);
  CHECK_THAT(obj(d.to_vector()), WithinAbs(35.0, 1e-12));

  c.generators[0].c1 = -1.0;
  CHECK_THROWS_AS(opf::objective(c), DomainError);
}

TEST_CASE("case loaders agree across formats", "[opf]") {
  const auto j = opf::load_case(data("cases/three_bus.json"));
  const auto m = opf::load_case(data("cases/three_bus.m"));
  REQUIRE(j.bus_count() == m.bus_count());
  REQUIRE(j.lines.size() == m.lines.size());
  REQUIRE(j.gen_count() == m.gen_count());
  REQUIRE(j.wind_count() == m.wind_count());
  CHECK(j.total_load() == m.total_load());
  CHECK(j.total_forecast() == m.total_forecast());
  for (std::size_t k = 0; k < j.lines.size(); ++k) {
    CHECK_THAT(j.lines[k].reactance, WithinAbs(m.lines[k].reactance, 1e-15));
    CHECK(j.lines[k].limit == m.lines[k].limit);
  }
  for (std::size_t g = 0; g < j.generators.size(); ++g) {
    CHECK(j.generators[g].c1 == m.generators[g].c1);
    CHECK(j.generators[g].c2 == m.generators[g].c2);
    CHECK(j.generators[g].cr == m.generators[g].cr);
    CHECK(j.generators[g].cr == opf::kReservePriceFactor * j.generators[g].c2);
  }
  CHECK((opf::build_ptdf(j) - opf::build_ptdf(m)).cwiseAbs().maxCoeff() < 1e-14);

  const auto back = opf::parse_case_json(opf::case_to_json(j));
  CHECK(opf::case_to_json(back) == opf::case_to_json(j));
}

TEST_CASE("malformed case files", "[opf]") {
  CHECK_THROWS_AS(opf::parse_case_json("{"), InputError);
  CHECK_THROWS_AS(opf::parse_case_json(R"({"buses":[]})"), InputError);
  CHECK_THROWS_AS(opf::load_case(data("cases/missing.json")), InputError);
  CHECK_THROWS_AS(opf::load_case(data("generators/triangular.json")), InputError);

  auto txt = io::read_text(data("cases/three_bus.json"));
  const auto pos = txt.find("\"x\": 0.1");
  REQUIRE(pos != std::string::npos);
  txt.replace(pos, 8, "\"x\": -0.1");
  CHECK_THROWS_AS(opf::parse_case_json(txt), InputError);

  CHECK_THROWS_AS(opf::parse_case_matpower("mpc.baseMVA = 100;\n"), InputError);
}

TEST_CASE("chance constraints reproduce realized flows and outputs", "[opf]") {
  auto c = opf::load_case(data("cases/three_bus.json"));
  opf::allocate_wind(c, {2, 3}, 80.0);
  const MatrixXd H = opf::build_ptdf(c);
  const auto ccs = opf::extract_chance_constraints(c, H);
  REQUIRE(ccs.size() == 2 * c.lines.size() + 4 * static_cast<std::size_t>(c.gen_count()));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 15.0);
  const opf::Layout L{c.gen_count()};
  for (int t = 0; t < 50; ++t) {
    opf::Decision d;
    d.pg = VectorXd(2);
    d.pg << 150.0 * U(rng), 150.0 * U(rng);
    d.rup = VectorXd(2);
    d.rup << 30.0 * U(rng), 30.0 * U(rng);
    d.rdn = VectorXd(2);
    d.rdn << 30.0 * U(rng), 30.0 * U(rng);
    const double s = U(rng);
    d.dist = VectorXd(2);
    d.dist << s, 1.0 - s;
    const VectorXd x = d.to_vector();
    const VectorXd xi = VectorXd{{N(rng), N(rng)}};
    const double total = xi.sum();

    VectorXd inj = VectorXd::Zero(c.bus_count());
    for (Index b = 0; b < c.bus_count(); ++b) inj(b) -= c.buses[static_cast<std::size_t>(b)].load;
    for (Index w = 0; w < c.wind_count(); ++w)
      inj(c.bus_index(c.wind[static_cast<std::size_t>(w)].bus)) += c.wind[static_cast<std::size_t>(w)].forecast + xi(w);
    VectorXd out(2);
    for (Index g = 0; g < 2; ++g) {
      out(g) = d.pg(g) - d.dist(g) * total;
      inj(c.bus_index(c.generators[static_cast<std::size_t>(g)].bus)) += out(g);
    }
    // the slack absorbs any nominal imbalance in the PTDF model; keep the oracle balanced too
    inj(c.bus_index(c.slack)) -= inj.sum();
    const VectorXd flows = dc_flows(c, inj);

    std::vector<double> expect;
    for (std::size_t k = 0; k < c.lines.size(); ++k) {
      expect.push_back(flows(static_cast<Index>(k)) - c.lines[k].limit);
      expect.push_back(-flows(static_cast<Index>(k)) - c.lines[k].limit);
    }
    for (Index g = 0; g < 2; ++g) {
      const auto& gen = c.generators[static_cast<std::size_t>(g)];
      expect.push_back(out(g) - gen.pmax);
      expect.push_back(gen.pmin - out(g));
      expect.push_back((out(g) - d.pg(g)) - d.rup(g));
      expect.push_back((d.pg(g) - out(g)) - d.rdn(g));
    }
    for (std::size_t k = 0; k < ccs.size(); ++k) {
      const double lhs = ccs[k].a_at(x).dot(xi) - ccs[k].b_at(x);
      CHECK_THAT(lhs, WithinAbs(expect[k], 1e-8));
    }
  }
}

TEST_CASE("deterministic rows", "[opf]") {
  const auto c = opf::load_case(data("cases/three_bus.json"));
  const auto rows = opf::deterministic_constraints(c);
  const opf::Layout L{c.gen_count()};
  opf::Decision d;
  d.pg = VectorXd{{60.0, 40.0}};
  d.rup = VectorXd::Zero(2);
  d.rdn = VectorXd::Zero(2);
  d.dist = VectorXd{{0.25, 0.75}};
  for (const auto& r : rows) CHECK(r.satisfied(d.to_vector(), 1e-12));
  d.dist(1) = 0.5;
  bool some_broken = false;
  for (const auto& r : rows) some_broken = some_broken || !r.satisfied(d.to_vector(), 1e-12);
  CHECK(some_broken);
}

TEST_CASE("wind allocation by installed capacity", "[opf]") {
  auto c = opf::load_case(data("cases/three_bus.json"));
  c.generators[1].pmax = 50.0;
  opf::allocate_wind(c, {1, 2}, 100.0);
  REQUIRE(c.wind_count() == 2);
  CHECK_THAT(c.wind[0].forecast, WithinAbs(75.0, 1e-12));
  CHECK_THAT(c.wind[1].forecast, WithinAbs(25.0, 1e-12));
  opf::allocate_wind(c, {3}, 40.0);
  REQUIRE(c.wind_count() == 1);
  CHECK(c.wind[0].forecast == 40.0);
  CHECK(c.total_forecast() == 40.0);
}
