#include "speclab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace speclab {

namespace {

// Nodes of the Legendre polynomial P_n by Newton iteration from the
// Chebyshev-like initial guess; weights w_i = 2 / ((1 - x_i^2) P_n'(x_i)^2).
void compute_gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n(z) and P_n'(z) by the three-term recurrence.
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

void gauss_legendre(int points, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (points < 1) throw ValidationError("gauss_legendre: point count must be >= 1");
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(points);
  if (it == cache.end()) {
    std::vector<double> x, w;
    compute_gauss_legendre(points, x, w);
    it = cache.emplace(points, std::make_pair(std::move(x), std::move(w))).first;
  }
  nodes = it->second.first;
  weights = it->second.second;
}

QuadratureRule make_rule(const std::vector<double>& breakpoints,
                         int points_per_panel) {
  if (breakpoints.size() < 2)
    throw ValidationError("make_rule: need at least two breakpoints");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i] < breakpoints[i + 1]))
      throw ValidationError("make_rule: breakpoints must be strictly increasing");
  if (points_per_panel < 1)
    throw ValidationError("make_rule: points per panel must be >= 1");

  std::vector<double> xr, wr;
  gauss_legendre(points_per_panel, xr, wr);

  QuadratureRule rule;
  rule.points_per_panel = points_per_panel;
  rule.panels.reserve(breakpoints.size() - 1);
  for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
    QuadraturePanel panel;
    panel.a = breakpoints[p];
    panel.b = breakpoints[p + 1];
    const double mid = 0.5 * (panel.a + panel.b);
    const double hal = 0.5 * (panel.b - panel.a);
    panel.nodes.resize(xr.size());
    panel.weights.resize(wr.size());
    for (std::size_t i = 0; i < xr.size(); ++i) {
      panel.nodes[i] = mid + hal * xr[i];
      panel.weights[i] = hal * wr[i];
    }
    rule.panels.push_back(std::move(panel));
  }
  return rule;
}

double integrate(const QuadratureRule& rule, const RadialFunction& f) {
  if (!f.evaluator) throw ValidationError("integrate: empty evaluator");
  if (f.singularity_order > 1) {
    std::ostringstream os;
    os << "integrate: declared singularity order " << f.singularity_order
       << " is stronger than the Coulomb class (max 1)";
    throw ValidationError(os.str());
  }
  double sum = 0.0;
  for (const QuadraturePanel& panel : rule.panels) {
    for (std::size_t i = 0; i < panel.nodes.size(); ++i) {
      const double v = f.evaluator(panel.nodes[i]);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "integrand evaluated to a non-finite value at node r = "
           << panel.nodes[i];
        throw NumericalError(os.str());
      }
      sum += panel.weights[i] * v;
    }
  }
  return sum;
}

std::vector<double> uniform_breakpoints(double a, double b, std::size_t n_points) {
  if (n_points < 2 || !(a < b))
    throw ValidationError("uniform_breakpoints: need a < b and >= 2 points");
  std::vector<double> bp(n_points);
  for (std::size_t j = 0; j < n_points; ++j)
    bp[j] = a + (b - a) * double(j) / double(n_points - 1);
  bp.front() = a;
  bp.back() = b;
  return bp;
}

std::vector<double> geometric_breakpoints(double rmax, std::size_t n_points,
                                          double ratio) {
  if (n_points < 2 || !(rmax > 0.0))
    throw ValidationError("geometric_breakpoints: need rmax > 0 and >= 2 points");
  if (!(ratio > 1.0))
    throw ValidationError("geometric_breakpoints: ratio must exceed 1");
  const std::size_t n_int = n_points - 1;
  std::vector<double> bp(n_points);
  const double denom = std::pow(ratio, double(n_int)) - 1.0;
  for (std::size_t j = 0; j < n_points; ++j)
    bp[j] = rmax * (std::pow(ratio, double(j)) - 1.0) / denom;
  bp.front() = 0.0;
  bp.back() = rmax;
  for (std::size_t j = 0; j + 1 < n_points; ++j)
    if (!(bp[j] < bp[j + 1]))
      throw ValidationError("geometric_breakpoints: grid collapsed; ratio too small");
  return bp;
}

}  // namespace speclab
