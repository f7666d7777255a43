// Composite Gauss-Legendre quadrature over breakpoint panels, plus the
// scalar radial-function wrapper used to declare integrable singularities.
#pragma once

#include <functional>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab {

// Scalar map r -> value with a declared power-law behavior O(r^-s) at r -> 0.
// Assembled integrands always carry basis factors vanishing at the origin, so
// declared orders of at most 1 (Coulomb class) integrate cleanly.
struct RadialFunction {
  std::function<double(double)> evaluator;
  int singularity_order = 0;
};

struct QuadraturePanel {
  double a = 0.0, b = 0.0;
  std::vector<double> nodes;    // strictly inside (a, b)
  std::vector<double> weights;  // positive, summing to b - a
};

struct QuadratureRule {
  std::vector<QuadraturePanel> panels;
  int points_per_panel = 0;
};

// Gauss-Legendre nodes/weights on [-1, 1]; results are cached per point count.
void gauss_legendre(int points, std::vector<double>& nodes,
                    std::vector<double>& weights);

// One Gauss-Legendre panel per breakpoint interval.
QuadratureRule make_rule(const std::vector<double>& breakpoints,
                         int points_per_panel);

// Composite quadrature sum; throws NumericalError naming the node if the
// integrand evaluates to a non-finite value, and ValidationError for
// singularity declarations stronger than Coulomb (s > 1).
double integrate(const QuadratureRule& rule, const RadialFunction& f);

// Breakpoint builders: n_points counts breakpoints (so n_points - 1 panels).
std::vector<double> uniform_breakpoints(double a, double b, std::size_t n_points);
// Geometric grading toward 0 on [0, rmax]: r_j = rmax (q^j - 1)/(q^N - 1).
std::vector<double> geometric_breakpoints(double rmax, std::size_t n_points,
                                          double ratio);

}  // namespace speclab
