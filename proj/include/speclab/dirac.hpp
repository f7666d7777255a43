// Radial-channel Dirac operator (units m = c = 1) on (0, R] with Dirichlet
// spline bases: potential descriptions, trial-family (splitting/balance)
// schemes, pencil assembly, the two-dimensional balance probe, the two-scale
// bump family, and the weighted Hardy-inequality checker.
//
// The channel Hamiltonian acts on pairs (g, f) as
//   H = [[ 1 + V,  -d/dr + kappa_d/r ],
//        [ d/dr + kappa_d/r,  -1 + V ]],
// and all first-order terms are assembled in the manifestly symmetric weak
// form using analytically evaluated (d/dr + kappa_d/r) factors.
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "speclab/bspline.hpp"
#include "speclab/eig.hpp"
#include "speclab/matrix.hpp"
#include "speclab/quadrature.hpp"

namespace speclab {

struct PotentialSpec {
  enum class Kind { zero, gaussian_bump, gaussian_well, coulomb, smeared_coulomb };

  Kind kind = Kind::zero;
  double v0 = 0.0;       // gaussian amplitude (positive number)
  double width = 1.0;    // gaussian width
  double kappa_c = 0.0;  // coulomb strength
  double r_cut = 1.0;    // smearing radius
  double sup_v = 0.0;    // cached essential bounds on (0, infinity)
  double inf_v = 0.0;

  double operator()(double r) const;

  static PotentialSpec zero();
  static PotentialSpec gaussian_bump(double v0, double width);
  static PotentialSpec gaussian_well(double v0, double width);
  static PotentialSpec coulomb(double kappa_c);  // requires 0 < kappa_c < sqrt(3)/2
  static PotentialSpec smeared_coulomb(double kappa_c, double r_cut);
};

struct SchemeSpec {
  enum class Kind {
    naive,
    upper_lower,
    dual,
    free_split,
    kinetic_balance,
    atomic_balance,
    dual_kinetic_balance,
  };

  Kind kind = Kind::upper_lower;
  double epsilon = 0.5;  // dual / dual_kinetic_balance, 0 < epsilon <= 1
  // naive only: component-mixing angles per 1-based index; default 1/sqrt(i+1).
  std::function<double(std::size_t)> mixing_angles;

  static SchemeSpec naive();
  static SchemeSpec upper_lower();
  static SchemeSpec dual(double epsilon);
  static SchemeSpec free_split();
  static SchemeSpec kinetic_balance();
  static SchemeSpec atomic_balance();
  static SchemeSpec dual_kinetic_balance(double epsilon);
};

struct DiracChannelModel {
  int kappa_d = -1;  // nonzero angular channel index
  PotentialSpec potential;
  BSplineBasis basis;
  QuadratureRule rule;
};

// Everything the free-splitting scheme reuses across sizes: the discretized
// free (V = 0) upper/lower modes and the full-basis pencil with the potential.
struct FreeSplitWorkspace {
  std::size_t basis_count = 0;     // M: spline functions per component
  std::vector<double> h_full;      // 2M x 2M upper/lower form with potential
  std::vector<double> s_full;      // 2M x 2M overlap
  std::vector<double> modes;       // 2M x 2M, columns = free modes, ascending value
  std::vector<double> free_values; // ascending free eigenvalues
};

FreeSplitWorkspace make_free_split_workspace(const DiracChannelModel& model);

// Galerkin pencil of the channel Hamiltonian for the requested scheme using
// the first `size` spline functions (or `size` modes per sign for free_split).
GeneralizedPencil assemble_dirac(const DiracChannelModel& model,
                                 const SchemeSpec& scheme, std::size_t size,
                                 const FreeSplitWorkspace* workspace = nullptr);

// Map a coefficient vector over the free-splitting trial family (2*size
// entries) back to upper/lower spline coefficients (2M entries).
std::vector<double> free_split_to_spline(const FreeSplitWorkspace& ws,
                                         std::size_t size,
                                         const std::vector<cplx>& coeffs);

// Sommerfeld reference eigenvalue E = [1 + kc^2/(n_r + gamma)^2]^(-1/2),
// gamma = sqrt(kd^2 - kc^2); requires 0 < kc < |kd|.
double dirac_coulomb_eigenvalue(double kappa_c, int kappa_d, int n_r);

// Ordered eigenvalues (mu1 <= mu2) of the channel form compressed to the
// two-dimensional space spanned by x = (phi-pair) and its balance partner Lx,
// for balance schemes (kinetic, atomic, dual-kinetic).  phi is a coefficient
// vector over the retained spline basis.
std::pair<double, double> mu2_probe(const DiracChannelModel& model,
                                    const SchemeSpec& scheme,
                                    const std::vector<double>& phi);

// Spline best-approximation coefficients of the radial two-scale test family
//   u_n(r) = r * [ n^(1/2) zeta(n r) + (delta n)^(1/2) zeta(delta n r) ],
// where zeta is a fixed C^2 annular bump supported in [1, 4], equal to 1 on
// [2, 3].  Throws ResolutionError when the knot grid cannot resolve the inner
// scale 1/(delta n).
std::vector<double> two_scale_bump(const BSplineBasis& basis, double n,
                                   double delta);

// Scalar radial channel function given by value and first derivative.
struct RadialChannelFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

// Left side minus right side of the weighted Hardy inequality
//   int |g' - g/r|^2 / (m + kappa/r) + m (1-s)/(1+s) int g^2 >= kappa int g^2/r,
// with s = sqrt(1 - kappa^2), evaluated by quadrature on the given rule.
// Nonnegative for admissible inputs; kappa must lie in [0, sqrt(3)/2).
double hardy_gap(const RadialChannelFunction& g, double kappa, double m_param,
                 const QuadratureRule& rule);

}  // namespace speclab
