#include "lrvb/special.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace lrvb {

double digamma(double x) { return boost::math::digamma(x); }
double trigamma(double x) { return boost::math::trigamma(x); }
double log_gamma(double x) { return boost::math::lgamma(x); }

double multivariate_log_gamma(double a, int p) {
  double out = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
  for (int i = 1; i <= p; ++i) out += log_gamma(a + 0.5 * (1 - i));
  return out;
}

double multivariate_digamma(double a, int p) {
  double out = 0.0;
  for (int i = 1; i <= p; ++i) out += digamma(a + 0.5 * (1 - i));
  return out;
}

double multivariate_trigamma(double a, int p) {
  double out = 0.0;
  for (int i = 1; i <= p; ++i) out += trigamma(a + 0.5 * (1 - i));
  return out;
}

}  // namespace lrvb
