// B-spline radial bases with clamped knots and Dirichlet trimming at both
// endpoints, plus tabulated-assembly helpers for weighted product integrals.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/quadrature.hpp"

namespace speclab {

class BSplineBasis {
 public:
  // Clamped knot vector (endpoint multiplicity = order); the first and last
  // functions of the full basis are dropped so every retained function
  // vanishes at both endpoints.
  BSplineBasis(int order, std::vector<double> breakpoints);

  int order() const { return order_; }
  std::size_t count() const { return count_; }            // retained functions
  std::size_t full_count() const { return full_count_; }  // before trimming
  double domain_min() const { return breakpoints_.front(); }
  double domain_max() const { return breakpoints_.back(); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  // Retained index -> index in the untrimmed basis.
  std::size_t full_index(std::size_t retained) const { return retained + 1; }

  // Values (derivative orders 0..2) of the `order` full-basis functions that
  // can be nonzero at r: functions first_full .. first_full + order - 1.
  // out must hold `order` doubles.
  void eval_nonzero(double r, int derivative_order, std::size_t& first_full,
                    double* out) const;

  // Single retained basis function; derivative_order in {0, 1, 2}.
  double eval(std::size_t retained, double r, int derivative_order) const;

 private:
  std::size_t find_span(double r) const;

  int order_;
  std::vector<double> breakpoints_;
  std::vector<double> knots_;
  std::size_t full_count_ = 0;
  std::size_t count_ = 0;
};

// Precomputed basis values at every quadrature node, for repeated assembly
// against different weights.
struct BasisTable {
  std::size_t count = 0;  // retained basis size
  int order = 0;
  std::vector<double> node_r, node_w;
  std::vector<std::size_t> node_first;  // first full index per node
  // Flattened per-node blocks of `order` values for derivative orders 0..2.
  std::vector<double> val, d1, d2;
};

BasisTable tabulate(const BSplineBasis& basis, const QuadratureRule& rule);

// Retained-basis matrix a[i][j] = integral w(r) B_i^(p)(r) B_j^(q)(r) dr,
// row-major count x count.  p, q in {0, 1, 2}.
std::vector<double> assemble_weighted(const BasisTable& table,
                                      const std::function<double(double)>& weight,
                                      int p, int q);

// Vector b[i] = integral w(r) B_i^(p)(r) f(r) dr over the retained basis.
std::vector<double> assemble_moments(const BasisTable& table,
                                     const std::function<double(double)>& f,
                                     int p);

}  // namespace speclab
