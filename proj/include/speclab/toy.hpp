// Exactly solvable rotated-frame truncation models.  A diagonal operator is
// compressed onto a frame rotated pairwise by angles theta_n; the resulting
// matrices are closed-form 2x2 blocks and exhibit a controllable spurious
// eigenvalue inside the spectral gap.
#pragma once

#include <functional>
#include <vector>

#include "speclab/matrix.hpp"

namespace speclab {

enum class ToyVariant {
  bounded_below,   // operator with spectrum {0, 1, 2, ...}, gap (0, 1)
  unbounded_both,  // operator with spectrum {..., -2, -1, 1, 2, ...}, gap (-1, 1)
};

struct ToyRotatedModel {
  ToyVariant variant = ToyVariant::bounded_below;
  std::function<double(std::size_t)> theta_rule;  // 1-based index -> angle
  std::size_t truncation = 1;                     // n: dimension is 2n - 1
};

// Matrix of the operator in the spanning set (f_1+, f_1-, ..., f_{n-1}-, f_n-),
// written with exact 2x2 rotation blocks (no quadrature).
DenseHermitian assemble_toy(const ToyRotatedModel& m);

// Closed-form ascending spectrum of the same compression.
std::vector<double> toy_exact_spectrum(const ToyRotatedModel& m);

// Angle rules used by the laboratory configurations.
std::function<double(std::size_t)> theta_inv_sqrt_2n();        // 1/sqrt(2n)
std::function<double(std::size_t)> theta_power(double alpha);  // n^-alpha
std::function<double(std::size_t)> theta_constant(double value);

}  // namespace speclab
