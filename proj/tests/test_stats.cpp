#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "drcc/error.hpp"
#include "drcc/stats.hpp"

using namespace drcc;
using Catch::Matchers::WithinAbs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

stats::SampleSet column(std::initializer_list<double> v) {
  MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return stats::SampleSet(m);
}

MatrixXd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 3.0);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng) + j;
  return m;
}

}  // namespace

TEST_CASE("sample set rejects bad shapes and values", "[stats]") {
  MatrixXd one(1, 2);
  one << 1, 2;
  CHECK_THROWS_AS(stats::SampleSet(one), InputError);
  CHECK_THROWS_AS(stats::SampleSet(MatrixXd(3, 0)), InputError);
  MatrixXd bad(2, 1);
  bad << 1, std::nan("");
  CHECK_THROWS_AS(stats::SampleSet(bad), InputError);
}

TEST_CASE("moments of hand-checkable sample sets", "[stats]") {
  auto a = stats::estimate_moments(column({0, 0}));
  CHECK(a.mu(0) == 0.0);
  CHECK(a.sigma(0, 0) == 0.0);

  auto b = stats::estimate_moments(column({1, -1}));
  CHECK(b.mu(0) == 0.0);
  CHECK(b.sigma(0, 0) == 1.0);

  MatrixXd x(4, 2);
  x << 1, 0, 0, 1, -1, 0, 0, -1;
  auto c = stats::estimate_moments(stats::SampleSet(x));
  CHECK_THAT(c.mu.norm(), WithinAbs(0.0, 1e-15));
  CHECK_THAT(c.sigma(0, 0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(c.sigma(1, 1), WithinAbs(0.5, 1e-15));
  CHECK_THAT(c.sigma(0, 1), WithinAbs(0.0, 1e-15));
}

TEST_CASE("parallel moments match the serial kernel bit for bit", "[stats][openmp]") {
  const stats::SampleSet s(random_matrix(5003, 4, 7));
  const auto p = stats::estimate_moments(s);
  const auto q = stats::estimate_moments_serial(s);
  CHECK((p.mu.array() == q.mu.array()).all());
  CHECK((p.sigma.array() == q.sigma.array()).all());
  CHECK((p.sigma - p.sigma.transpose()).norm() == 0.0);
}

TEST_CASE("covariance from estimated moments is PSD", "[stats][property]") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const stats::SampleSet s(random_matrix(3 + static_cast<int>(seed), 3, seed));
    const auto m = stats::estimate_moments(s);
    const MatrixXd cov = m.sigma - m.mu * m.mu.transpose();
    const double floor = -1e-8 * std::max(1.0, cov.trace());
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(cov).eigenvalues().minCoeff() >= floor);
  }
}

TEST_CASE("histogram mode examples", "[stats]") {
  CHECK_THAT(stats::estimate_mode(column({1, 1, 1, 2, 3}), 3)(0), WithinAbs(4.0 / 3.0, 1e-12));
  CHECK_THAT(stats::estimate_mode(column({-1, 0, 0, 1}), 1)(0), WithinAbs(0.0, 1e-15));
  CHECK(stats::estimate_mode(column({5, 5, 5}), 4)(0) == 5.0);
  CHECK_THROWS_AS(stats::estimate_mode(column({1, 2}), 0), DomainError);
}

TEST_CASE("mode tie goes to the bin nearest the median", "[stats]") {
  // Three bins of width 4/3 hold two points each; the median 2 sits in the middle one.
  const auto s = column({0, 0, 2, 2, 4, 4});
  CHECK_THAT(stats::estimate_mode(s, 3)(0), WithinAbs(2.0, 1e-12));
}

TEST_CASE("mode is invariant under row permutation", "[stats][property]") {
  MatrixXd x = random_matrix(200, 2, 3);
  const VectorXd m0 = stats::estimate_mode(stats::SampleSet(x), 15);
  std::vector<Eigen::Index> idx(200);
  for (int i = 0; i < 200; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::mt19937 rng(11);
  for (int r = 0; r < 5; ++r) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const VectorXd m1 = stats::estimate_mode(stats::SampleSet(x).select(idx), 15);
    CHECK((m0.array() == m1.array()).all());
  }
}

TEST_CASE("symmetric samples give a mode within half a bin of the center", "[stats][property]") {
  const double c = 2.5;
  std::vector<double> v{c - 3, c - 1, c - 0.2, c, c, c + 0.2, c + 1, c + 3};
  MatrixXd x(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = v[i];
  for (int bins : {1, 3, 5, 7, 9}) {
    const double half = 0.5 * 6.0 / bins;
    const double m = stats::estimate_mode(stats::SampleSet(x), bins)(0);
    CHECK(std::abs(m - c) <= half + 1e-12);
  }
}

TEST_CASE("unimodal model validation examples", "[stats]") {
  {
    stats::UncertaintyModel m(VectorXd::Zero(1), MatrixXd::Ones(1, 1), VectorXd::Zero(1), 1.0, 0.05);
    const auto d = stats::validate_unimodal_model(m);
    CHECK(d.valid);
    CHECK_THAT(d.min_eigenvalue, WithinAbs(3.0, 1e-12));
  }
  {
    stats::UncertaintyModel m(VectorXd::Ones(1), MatrixXd::Ones(1, 1), VectorXd::Zero(1), 1.0, 0.05);
    const auto d = stats::validate_unimodal_model(m);
    CHECK_FALSE(d.valid);
    CHECK_THAT(d.min_eigenvalue, WithinAbs(-1.0, 1e-12));
    CHECK_THROWS_AS(d.throw_if_invalid(), NotPsdError);
  }
  {
    VectorXd mu(2);
    mu << 0.5, -1.0;
    const MatrixXd sigma = MatrixXd::Identity(2, 2) + mu * mu.transpose();
    stats::UncertaintyModel m(mu, sigma, mu, 1.0, 0.05);
    const auto d = stats::validate_unimodal_model(m);
    CHECK(d.valid);
    CHECK_THAT((d.inner - 3.0 * MatrixXd::Identity(2, 2)).norm(), WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("mode at the mean is always valid for PSD covariance", "[stats][property]") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const auto s = stats::SampleSet(random_matrix(50, 3, seed));
    const auto mom = stats::estimate_moments(s);
    for (double alpha : {0.5, 1.0, 4.0}) {
      stats::UncertaintyModel m(mom.mu, mom.sigma, mom.mu, alpha, 0.05);
      CHECK(stats::validate_unimodal_model(m).valid);
    }
  }
}

TEST_CASE("uncertainty model rejects invalid settings", "[stats]") {
  const VectorXd z = VectorXd::Zero(1);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  CHECK_THROWS_AS(stats::UncertaintyModel(z, one, z, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(stats::UncertaintyModel(z, one, z, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(stats::UncertaintyModel(z, one, z, 0.0, 0.05), DomainError);
  CHECK_THROWS_AS(stats::UncertaintyModel(z, -one, z, 1.0, 0.05), NotPsdError);
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS(stats::UncertaintyModel(VectorXd::Zero(2), asym, VectorXd::Zero(2), 1.0, 0.05));
  const stats::UncertaintyModel ok(z, one, z, 2.0, 0.05);
  CHECK_THAT(ok.tau0(), WithinAbs(std::pow(1.0 / 0.95, 0.5), 1e-15));
  CHECK(ok.tau0() >= 1.0);
}

TEST_CASE("synthetic generators are reproducible and unimodal", "[stats]") {
  stats::GeneratorSpec tri;
  tri.family = stats::GeneratorSpec::Family::Triangular;
  tri.count = 4;
  tri.lower = -1;
  tri.upper = 1;
  tri.peak = 0;
  const auto a = stats::synth_unimodal_samples(tri, 42);
  const auto b = stats::synth_unimodal_samples(tri, 42);
  CHECK(a.count() == 4);
  CHECK(a.dimension() == 1);
  CHECK((a.data().array() == b.data().array()).all());
  CHECK((a.data().array().abs() <= 1.0).all());
  const auto c = stats::synth_unimodal_samples(tri, 43);
  CHECK_FALSE((a.data().array() == c.data().array()).all());
}

TEST_CASE("truncated normal sample mean follows the law of large numbers", "[stats]") {
  stats::GeneratorSpec g;
  g.family = stats::GeneratorSpec::Family::TruncatedNormal;
  g.count = 10000;
  g.mean = 2.0;
  g.stddev = 1.5;
  g.lower = -4.0;  // symmetric about the mean, so the truncated mean is unchanged
  g.upper = 8.0;
  const auto s = stats::synth_unimodal_samples(g, 5);
  const double mean = s.data().col(0).mean();
  CHECK(std::abs(mean - g.mean) <= 3.0 * g.stddev / std::sqrt(10000.0));
}

TEST_CASE("correlated multi-dimensional draws", "[stats]") {
  stats::GeneratorSpec g;
  g.family = stats::GeneratorSpec::Family::Triangular;
  g.dimension = 3;
  g.count = 4000;
  g.correlation = 0.6;
  g.lower = -2;
  g.upper = 2;
  const auto s = stats::synth_unimodal_samples(g, 9);
  const auto m = stats::estimate_moments(s);
  const MatrixXd cov = m.sigma - m.mu * m.mu.transpose();
  const double r01 = cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1));
  CHECK(r01 > 0.4);
  CHECK(r01 < 0.75);
}

TEST_CASE("beta mixture marginal quantiles are monotone", "[stats]") {
  stats::GeneratorSpec g;
  g.family = stats::GeneratorSpec::Family::BetaMixture;
  g.components = {{0.9, 2, 2, -5, 5}, {0.1, 2, 2, -40, 40}};
  double prev = -1e300;
  for (int i = 1; i < 100; ++i) {
    const double q = stats::marginal_quantile(g, i / 100.0);
    CHECK(q > prev);
    prev = q;
  }
  CHECK_THAT(stats::marginal_quantile(g, 0.5), WithinAbs(0.0, 1e-9));
}

TEST_CASE("generator spec checks", "[stats]") {
  CHECK_THROWS_AS(stats::parse_family("cauchy"), InputError);
  CHECK(stats::parse_family("beta-mixture") == stats::GeneratorSpec::Family::BetaMixture);
  CHECK(stats::family_name(stats::GeneratorSpec::Family::TruncatedNormal) == "truncated-normal");

  stats::GeneratorSpec g;
  g.family = stats::GeneratorSpec::Family::Triangular;
  g.lower = 1;
  g.upper = -1;
  CHECK_THROWS_AS(stats::check_generator_spec(g), InputError);
  g.lower = -1;
  g.upper = 1;
  g.correlation = 1.0;
  CHECK_THROWS_AS(stats::check_generator_spec(g), InputError);
  g.correlation = 0.0;
  g.peak = 3.0;
  CHECK_THROWS_AS(stats::check_generator_spec(g), InputError);

  stats::GeneratorSpec bimodal;
  bimodal.family = stats::GeneratorSpec::Family::BetaMixture;
  bimodal.components = {{0.5, 5, 5, -10, -5}, {0.5, 5, 5, 5, 10}};
  CHECK_THROWS_AS(stats::check_generator_spec(bimodal), InputError);
}
