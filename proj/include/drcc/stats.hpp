#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace drcc::stats {

/// Forecast-error realizations: rows are scenarios, columns are uncertainty
/// dimensions (one per wind plant, MW).
class SampleSet {
 public:
  /// Throws InputError on non-finite entries, fewer than 2 rows, or zero columns.
  explicit SampleSet(Eigen::MatrixXd data);

  const Eigen::MatrixXd& data() const noexcept { return data_; }
  Eigen::Index dimension() const noexcept { return data_.cols(); }
  Eigen::Index count() const noexcept { return data_.rows(); }
  Eigen::RowVectorXd row(Eigen::Index i) const { return data_.row(i); }

  /// First `n` scenarios (n >= 2).
  SampleSet head(Eigen::Index n) const;
  /// Scenarios picked by index, duplicates allowed.
  SampleSet select(const std::vector<Eigen::Index>& rows) const;

 private:
  Eigen::MatrixXd data_;
};

struct Moments {
  Eigen::VectorXd mu;     ///< E[xi]
  Eigen::MatrixXd sigma;  ///< E[xi xi^T], 1/N normalization
};

/// OpenMP kernel: each entry of the second-moment matrix is accumulated by a
/// single thread in row order, so the result is bitwise independent of the
/// thread count.
Moments estimate_moments(const SampleSet& samples);

/// Serial reference used to check the OpenMP kernel.
Moments estimate_moments_serial(const SampleSet& samples);

/// Per-dimension histogram mode over [min, max] with `bins` equal-width bins.
/// Ties go to the bin whose center is nearest the column median, then to the
/// lower bin. A constant column yields that constant.
Eigen::VectorXd estimate_mode(const SampleSet& samples, int bins);

/// Moment, mode and shape information describing the ambiguity sets.
class UncertaintyModel {
 public:
  /// Validates symmetry of sigma, PSD of the covariance (floor -1e-8 * trace),
  /// epsilon in (0, 0.5) and alpha > 0. Throws DomainError / NotPsdError.
  UncertaintyModel(Eigen::VectorXd mu, Eigen::MatrixXd sigma, Eigen::VectorXd mode,
                   double alpha, double epsilon);

  static UncertaintyModel from_samples(const SampleSet& samples, int bins, double alpha,
                                       double epsilon);

  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const Eigen::VectorXd& mode() const noexcept { return mode_; }
  double alpha() const noexcept { return alpha_; }
  double epsilon() const noexcept { return epsilon_; }
  double tau0() const noexcept { return tau0_; }
  Eigen::Index dimension() const noexcept { return mu_.size(); }

  /// Sigma - mu mu^T.
  Eigen::MatrixXd covariance() const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd mode_;
  double alpha_;
  double epsilon_;
  double tau0_;
};

/// Outcome of checking ((a+2)/a)(Sigma - mu mu^T) - (1/a^2)(mu - m)(mu - m)^T.
struct UnimodalDiagnostic {
  bool valid = false;
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
  Eigen::MatrixXd inner;
  std::string message;

  /// Throws NotPsdError carrying min_eigenvalue when !valid.
  void throw_if_invalid() const;
};

/// Inner matrix of the unimodal norm factor.
Eigen::MatrixXd unimodal_inner_matrix(const UncertaintyModel& model);

UnimodalDiagnostic validate_unimodal_model(const UncertaintyModel& model);

/// Configuration of a synthetic unimodal forecast-error generator. Marginals
/// share one family; dependence comes from an equicorrelated Gaussian copula.
struct GeneratorSpec {
  enum class Family { TruncatedNormal, Triangular, BetaMixture };

  struct BetaComponent {
    double weight = 1.0;
    double a = 2.0;
    double b = 2.0;
    double lower = -1.0;
    double upper = 1.0;
  };

  Family family = Family::Triangular;
  int dimension = 1;
  Eigen::Index count = 1000;
  double correlation = 0.0;  ///< copula correlation in [0, 1)

  // truncated-normal
  double mean = 0.0;
  double stddev = 1.0;
  // truncated-normal bounds and triangular support
  double lower = -1.0;
  double upper = 1.0;
  // triangular
  double peak = 0.0;
  // beta-mixture
  std::vector<BetaComponent> components;
};

/// Parses a family name ("truncated-normal", "triangular", "beta-mixture").
GeneratorSpec::Family parse_family(const std::string& name);
std::string family_name(GeneratorSpec::Family family);

/// Checks parameters and marginal unimodality; throws InputError.
void check_generator_spec(const GeneratorSpec& spec);

/// Reproducible draw of spec.count scenarios.
SampleSet synth_unimodal_samples(const GeneratorSpec& spec, std::uint64_t seed);

/// Marginal quantile of the configured family at probability u.
double marginal_quantile(const GeneratorSpec& spec, double u);

}  // namespace drcc::stats
