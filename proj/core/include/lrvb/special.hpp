#pragma once

namespace lrvb {

double digamma(double x);
double trigamma(double x);
double log_gamma(double x);

// Multivariate versions over dimension p:
//   log Gamma_p(a) = p(p-1)/4 log(pi) + sum_{i=1}^p log Gamma(a + (1 - i)/2)
// and the matching sums of digamma / trigamma.
double multivariate_log_gamma(double a, int p);
double multivariate_digamma(double a, int p);
double multivariate_trigamma(double a, int p);

}  // namespace lrvb
