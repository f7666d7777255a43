#include "speclab/toy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace speclab {

namespace {

double checked_theta(const ToyRotatedModel& m, std::size_t index) {
  if (!m.theta_rule) throw ValidationError("toy model: missing theta rule");
  const double theta = m.theta_rule(index);
  if (!(theta >= 0.0 && theta < M_PI / 2.0)) {
    std::ostringstream os;
    os << "toy model: theta_" << index << " = " << theta
       << " outside [0, pi/2)";
    throw ValidationError(os.str());
  }
  return theta;
}

}  // namespace

DenseHermitian assemble_toy(const ToyRotatedModel& m) {
  if (m.truncation < 1)
    throw ValidationError("toy model: truncation must be at least 1");
  const std::size_t n = m.truncation;
  DenseHermitian a(2 * n - 1);

  // Pair block for level k in the rotated frame (f_k+, f_k-).  For the
  // bounded variant the operator acts as k on e_k+ and 0 on e_k-; for the
  // unbounded variant as +k on e_k+ and -k on e_k-.
  for (std::size_t k = 1; k + 1 <= n; ++k) {
    const double theta = checked_theta(m, k);
    const double c = std::cos(theta), s = std::sin(theta);
    const std::size_t row = 2 * (k - 1);
    const double kk = double(k);
    if (m.variant == ToyVariant::bounded_below) {
      a.at(row, row) = kk * c * c;
      a.at(row, row + 1) = -kk * c * s;
      a.at(row + 1, row) = -kk * c * s;
      a.at(row + 1, row + 1) = kk * s * s;
    } else {
      const double c2 = std::cos(2.0 * theta), s2 = std::sin(2.0 * theta);
      a.at(row, row) = kk * c2;
      a.at(row, row + 1) = -kk * s2;
      a.at(row + 1, row) = -kk * s2;
      a.at(row + 1, row + 1) = -kk * c2;
    }
  }

  // The last vector f_n- enters alone.
  const double theta_n = checked_theta(m, n);
  const std::size_t last = 2 * n - 2;
  const double nn = double(n);
  if (m.variant == ToyVariant::bounded_below) {
    const double s = std::sin(theta_n);
    a.at(last, last) = nn * s * s;
  } else {
    a.at(last, last) = -nn * std::cos(2.0 * theta_n);
  }
  return a;
}

std::vector<double> toy_exact_spectrum(const ToyRotatedModel& m) {
  if (m.truncation < 1)
    throw ValidationError("toy model: truncation must be at least 1");
  const std::size_t n = m.truncation;
  std::vector<double> vals;
  vals.reserve(2 * n - 1);
  const double theta_n = checked_theta(m, n);
  if (m.variant == ToyVariant::bounded_below) {
    for (std::size_t k = 1; k + 1 <= n; ++k) {
      checked_theta(m, k);  // validate the whole sequence
      vals.push_back(0.0);
      vals.push_back(double(k));
    }
    const double s = std::sin(theta_n);
    vals.push_back(double(n) * s * s);
  } else {
    for (std::size_t k = 1; k + 1 <= n; ++k) {
      checked_theta(m, k);
      vals.push_back(-double(k));
      vals.push_back(double(k));
    }
    vals.push_back(-double(n) * std::cos(2.0 * theta_n));
  }
  std::sort(vals.begin(), vals.end());
  return vals;
}

std::function<double(std::size_t)> theta_inv_sqrt_2n() {
  return [](std::size_t k) { return 1.0 / std::sqrt(2.0 * double(k)); };
}

std::function<double(std::size_t)> theta_power(double alpha) {
  return [alpha](std::size_t k) { return std::pow(double(k), -alpha); };
}

std::function<double(std::size_t)> theta_constant(double value) {
  return [value](std::size_t) { return value; };
}

}  // namespace speclab
