#include "drcc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "drcc/error.hpp"
#include "drcc/normal.hpp"

namespace drcc::stats {

SampleSet::SampleSet(Eigen::MatrixXd data) : data_(std::move(data)) {
  if (data_.cols() < 1) throw InputError("sample set needs at least one column");
  if (data_.rows() < 2) throw InputError("sample set needs at least two scenarios");
  if (!data_.allFinite()) throw InputError("sample set contains non-finite entries");
}

SampleSet SampleSet::head(Eigen::Index n) const {
  if (n < 2 || n > count()) throw InputError("head: requested row count out of range");
  return SampleSet(data_.topRows(n));
}

SampleSet SampleSet::select(const std::vector<Eigen::Index>& rows) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), dimension());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= count()) throw InputError("select: row index out of range");
    out.row(static_cast<Eigen::Index>(k)) = data_.row(rows[k]);
  }
  return SampleSet(std::move(out));
}

Moments estimate_moments_serial(const SampleSet& samples) {
  const auto& X = samples.data();
  const Eigen::Index n = X.rows(), l = X.cols();
  Moments m{Eigen::VectorXd::Zero(l), Eigen::MatrixXd::Zero(l, l)};
  for (Eigen::Index j = 0; j < l; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += X(i, j);
    m.mu(j) = s / static_cast<double>(n);
  }
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index k = 0; k <= j; ++k) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += X(i, j) * X(i, k);
      m.sigma(j, k) = m.sigma(k, j) = s / static_cast<double>(n);
    }
  }
  return m;
}

Moments estimate_moments(const SampleSet& samples) {
  const auto& X = samples.data();
  const Eigen::Index n = X.rows(), l = X.cols();
  const auto count = static_cast<double>(n);
  Moments m{Eigen::VectorXd::Zero(l), Eigen::MatrixXd::Zero(l, l)};

#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < l; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += X(i, j);
    m.mu(j) = s / count;
  }

  // Flattened lower triangle; one entry per task keeps the summation order fixed.
  const Eigen::Index pairs = l * (l + 1) / 2;
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index p = 0; p < pairs; ++p) {
    Eigen::Index j = 0;
    while ((j + 1) * (j + 2) / 2 <= p) ++j;
    const Eigen::Index k = p - j * (j + 1) / 2;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += X(i, j) * X(i, k);
    m.sigma(j, k) = m.sigma(k, j) = s / count;
  }
  return m;
}

namespace {

double column_median(const Eigen::MatrixXd& X, Eigen::Index col) {
  std::vector<double> v(X.col(col).data(), X.col(col).data() + X.rows());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

Eigen::VectorXd estimate_mode(const SampleSet& samples, int bins) {
  if (bins < 1) throw DomainError("estimate_mode: bins must be >= 1");
  const auto& X = samples.data();
  Eigen::VectorXd mode(X.cols());
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(bins));

  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double lo = X.col(j).minCoeff();
    const double hi = X.col(j).maxCoeff();
    if (!(hi > lo)) {
      mode(j) = lo;
      continue;
    }
    const double width = (hi - lo) / bins;
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      auto b = static_cast<int>(std::floor((X(i, j) - lo) / width));
      counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    const double median = column_median(X, j);
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int b = 0; b < bins; ++b) {
      const double center = lo + (b + 0.5) * width;
      const double dist = std::abs(center - median);
      const auto c = counts[static_cast<std::size_t>(b)];
      const auto cb = counts[static_cast<std::size_t>(best)];
      if (c > cb || (c == cb && dist < best_dist)) {
        best = b;
        best_dist = dist;
      }
    }
    mode(j) = lo + (best + 0.5) * width;
  }
  return mode;
}

UncertaintyModel::UncertaintyModel(Eigen::VectorXd mu, Eigen::MatrixXd sigma, Eigen::VectorXd mode,
                                   double alpha, double epsilon)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), mode_(std::move(mode)), alpha_(alpha),
      epsilon_(epsilon) {
  const Eigen::Index l = mu_.size();
  if (sigma_.rows() != l || sigma_.cols() != l || mode_.size() != l)
    throw DomainError("uncertainty model: inconsistent dimensions");
  if (!mu_.allFinite() || !sigma_.allFinite() || !mode_.allFinite())
    throw DomainError("uncertainty model: non-finite moments or mode");
  if (!(epsilon_ > 0.0 && epsilon_ < 0.5)) throw DomainError("epsilon must lie in (0, 0.5)");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw DomainError("alpha must be positive");

  if (l > 0) {
    const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw DomainError("second-moment matrix is not symmetric");
    sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();

    const Eigen::MatrixXd cov = covariance();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    const double min_ev = es.eigenvalues().minCoeff();
    const double tol = 1e-8 * std::abs(cov.trace()) + 1e-14 * std::abs(sigma_.trace());
    if (min_ev < -tol) {
      std::ostringstream os;
      os << "covariance Sigma - mu mu^T is not PSD (min eigenvalue " << min_ev << ")";
      throw NotPsdError(os.str(), min_ev);
    }
  }
  tau0_ = std::pow(1.0 / (1.0 - epsilon_), 1.0 / alpha_);
}

UncertaintyModel UncertaintyModel::from_samples(const SampleSet& samples, int bins, double alpha,
                                                double epsilon) {
  Moments m = estimate_moments(samples);
  return UncertaintyModel(std::move(m.mu), std::move(m.sigma), estimate_mode(samples, bins), alpha,
                          epsilon);
}

Eigen::MatrixXd UncertaintyModel::covariance() const { return sigma_ - mu_ * mu_.transpose(); }

Eigen::MatrixXd unimodal_inner_matrix(const UncertaintyModel& model) {
  const double a = model.alpha();
  const Eigen::VectorXd shift = model.mu() - model.mode();
  return ((a + 2.0) / a) * model.covariance() - (1.0 / (a * a)) * shift * shift.transpose();
}

void UnimodalDiagnostic::throw_if_invalid() const {
  if (!valid) throw NotPsdError(message, min_eigenvalue);
}

UnimodalDiagnostic validate_unimodal_model(const UncertaintyModel& model) {
  UnimodalDiagnostic d;
  d.inner = unimodal_inner_matrix(model);
  if (d.inner.rows() == 0) {
    d.valid = true;
    d.message = "validate_unimodal_model: empty uncertainty vector";
    return d;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.inner, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  const double a = model.alpha();
  d.tolerance = 1e-8 * std::abs(((a + 2.0) / a) * model.covariance().trace()) +
                1e-14 * std::abs(model.sigma().trace());
  d.valid = d.min_eigenvalue >= -d.tolerance;
  std::ostringstream os;
  if (d.valid) {
    os << "validate_unimodal_model: inner matrix PSD (min eigenvalue " << d.min_eigenvalue << ")";
  } else {
    os << "validate_unimodal_model: inner matrix indefinite, min eigenvalue " << d.min_eigenvalue
       << "; moments and mode are incompatible with alpha = " << a;
  }
  d.message = os.str();
  return d;
}

// ---------------------------------------------------------------------------
// Synthetic generators

GeneratorSpec::Family parse_family(const std::string& name) {
  if (name == "truncated-normal") return GeneratorSpec::Family::TruncatedNormal;
  if (name == "triangular") return GeneratorSpec::Family::Triangular;
  if (name == "beta-mixture") return GeneratorSpec::Family::BetaMixture;
  throw InputError("unsupported generator family '" + name + "'");
}

std::string family_name(GeneratorSpec::Family family) {
  switch (family) {
    case GeneratorSpec::Family::TruncatedNormal: return "truncated-normal";
    case GeneratorSpec::Family::Triangular: return "triangular";
    case GeneratorSpec::Family::BetaMixture: return "beta-mixture";
  }
  return "unknown";
}

namespace {

double mixture_density(const GeneratorSpec& spec, double x) {
  double f = 0.0;
  for (const auto& c : spec.components) {
    if (x < c.lower || x > c.upper) continue;
    const double w = c.upper - c.lower;
    const double u = (x - c.lower) / w;
    f += c.weight * boost::math::ibeta_derivative(c.a, c.b, u) / w;
  }
  return f;
}

double mixture_cdf(const GeneratorSpec& spec, double x) {
  double F = 0.0;
  for (const auto& c : spec.components) {
    if (x <= c.lower) continue;
    if (x >= c.upper) {
      F += c.weight;
      continue;
    }
    F += c.weight * boost::math::ibeta(c.a, c.b, (x - c.lower) / (c.upper - c.lower));
  }
  return F;
}

double total_weight(const GeneratorSpec& spec) {
  double w = 0.0;
  for (const auto& c : spec.components) w += c.weight;
  return w;
}

}  // namespace

void check_generator_spec(const GeneratorSpec& spec) {
  if (spec.dimension < 1) throw InputError("generator: dimension must be >= 1");
  if (spec.count < 2) throw InputError("generator: count must be >= 2");
  if (!(spec.correlation >= 0.0 && spec.correlation < 1.0))
    throw InputError("generator: correlation must lie in [0, 1)");
  switch (spec.family) {
    case GeneratorSpec::Family::TruncatedNormal:
      if (!(spec.stddev > 0.0)) throw InputError("truncated-normal: stddev must be positive");
      if (!(spec.lower < spec.upper)) throw InputError("truncated-normal: lower must be < upper");
      break;
    case GeneratorSpec::Family::Triangular:
      if (!(spec.lower < spec.upper) || spec.peak < spec.lower || spec.peak > spec.upper)
        throw InputError("triangular: need lower <= peak <= upper and lower < upper");
      break;
    case GeneratorSpec::Family::BetaMixture: {
      if (spec.components.empty()) throw InputError("beta-mixture: no components");
      for (const auto& c : spec.components) {
        if (!(c.weight > 0.0)) throw InputError("beta-mixture: weights must be positive");
        if (!(c.a >= 1.0 && c.b >= 1.0))
          throw InputError("beta-mixture: shape parameters must be >= 1");
        if (!(c.lower < c.upper)) throw InputError("beta-mixture: lower must be < upper");
      }
      // Single peak: the density may rise, then fall, never rise again.
      double lo = spec.components.front().lower, hi = spec.components.front().upper;
      for (const auto& c : spec.components) {
        lo = std::min(lo, c.lower);
        hi = std::max(hi, c.upper);
      }
      constexpr int grid = 4001;
      std::vector<double> f(grid);
      double fmax = 0.0;
      for (int i = 0; i < grid; ++i) {
        f[i] = mixture_density(spec, lo + (hi - lo) * i / (grid - 1));
        fmax = std::max(fmax, f[i]);
      }
      const double tol = 1e-9 * fmax;
      bool falling = false;
      for (int i = 1; i < grid; ++i) {
        const double df = f[i] - f[i - 1];
        if (df < -tol) falling = true;
        if (falling && df > tol) throw InputError("beta-mixture: marginal density is not unimodal");
      }
      break;
    }
  }
}

double marginal_quantile(const GeneratorSpec& spec, double u) {
  switch (spec.family) {
    case GeneratorSpec::Family::TruncatedNormal: {
      const double a = normal_cdf((spec.lower - spec.mean) / spec.stddev);
      const double b = normal_cdf((spec.upper - spec.mean) / spec.stddev);
      const double x = spec.mean + spec.stddev * normal_quantile(a + u * (b - a));
      return std::clamp(x, spec.lower, spec.upper);
    }
    case GeneratorSpec::Family::Triangular: {
      const double a = spec.lower, b = spec.upper, c = spec.peak;
      const double split = (c - a) / (b - a);
      if (u < split) return a + std::sqrt(u * (b - a) * (c - a));
      return b - std::sqrt((1.0 - u) * (b - a) * (b - c));
    }
    case GeneratorSpec::Family::BetaMixture: {
      if (spec.components.size() == 1) {
        const auto& c = spec.components.front();
        return c.lower + (c.upper - c.lower) * boost::math::ibeta_inv(c.a, c.b, u);
      }
      const double target = u * total_weight(spec);
      double lo = spec.components.front().lower, hi = spec.components.front().upper;
      for (const auto& c : spec.components) {
        lo = std::min(lo, c.lower);
        hi = std::max(hi, c.upper);
      }
      for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mixture_cdf(spec, mid) < target)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return 0.0;
}

SampleSet synth_unimodal_samples(const GeneratorSpec& spec, std::uint64_t seed) {
  check_generator_spec(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double shared = std::sqrt(spec.correlation);
  const double own = std::sqrt(1.0 - spec.correlation);
  constexpr double clip = 1e-15;

  Eigen::MatrixXd data(spec.count, spec.dimension);
  for (Eigen::Index i = 0; i < spec.count; ++i) {
    const double common = gauss(rng);
    for (int j = 0; j < spec.dimension; ++j) {
      const double z = shared * common + own * gauss(rng);
      const double u = std::clamp(normal_cdf(z), clip, 1.0 - clip);
      data(i, j) = marginal_quantile(spec, u);
    }
  }
  return SampleSet(std::move(data));
}

}  // namespace drcc::stats
