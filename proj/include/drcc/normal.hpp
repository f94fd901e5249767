#pragma once

namespace drcc {

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal quantile Phi^{-1}(p) for p in (0, 1).
///
/// Rational starting approximation refined by one Halley step on erfc, which
/// brings the absolute error well below 1e-9 across (1e-300, 1 - 1e-16).
/// Returns -inf / +inf at p = 0 / p = 1 and throws DomainError outside [0, 1].
double normal_quantile(double p);

}  // namespace drcc
