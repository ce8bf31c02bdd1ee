#pragma once

namespace mixgp {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

double normal_pdf(double z);
double normal_cdf(double z);
// Throws std::domain_error unless 0 < p < 1.
double normal_quantile(double p);

/// log Phi(z), finite for every finite z.
double log_normal_cdf(double z);
/// phi(z) / Phi(z), stable in the lower tail.
double inverse_mills(double z);

double sigmoid(double z);
double logit(double p);
double softplus(double z);

}  // namespace mixgp
