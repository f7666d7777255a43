// One-dimensional periodic Schrodinger operator -d^2/dx^2 + V_per + W with a
// localized defect W: Bloch bands by plane-wave diagonalization, gauge-fixed
// (parallel-transport) composite-band Wannier functions on the quasimomentum
// torus, Wannier-translate Galerkin assembly, and an independent supercell
// reference for in-gap defect levels.
#pragma once

#include <cstddef>
#include <vector>

#include "speclab/matrix.hpp"

namespace speclab {

// Localized Gaussian defect W(x) = amplitude * exp(-(x/width)^2).
struct DefectSpec {
  double amplitude = 0.0;
  double width = 1.0;
};

struct PeriodicModel {
  double a = 1.0;                  // lattice constant
  std::vector<cplx> vper_coeffs;   // Fourier coefficients of V_per, index j + K
                                   // for j in [-K, K]; conjugate-symmetric
  DefectSpec defect;
  int planewave_cutoff = 8;        // G_max: plane waves j in [-G_max, G_max]

  double vper(double x) const;     // real periodic potential value
  double defect_value(double x) const;

  // Default single-gap laboratory model: a = 1, V_per = 4 cos(2 pi x), and a
  // Gaussian defect well placing one bound state near the middle of the first
  // gap.
  static PeriodicModel mathieu_default();
};

struct BandStructure {
  double a = 1.0;
  int g_max = 0;
  std::size_t n_pw = 0;     // 2 g_max + 1
  std::size_t n_xi = 0;
  std::size_t n_bands = 0;
  std::vector<double> xi;       // quasimomentum grid, length n_xi
  std::vector<double> bands;    // bands[k * n_xi + t]
  std::vector<cplx> vectors;    // vectors[(t * n_bands + k) * n_pw + r]

  // Diagnostics of the most recent gauge fix.
  std::vector<double> berry_phases;  // eigenphases of the transport loop
  double gauge_uniformity = 0.0;     // max per-step deviation from the
                                     // evenly spread loop factor

  const cplx* vec(std::size_t t, std::size_t k) const {
    return vectors.data() + (t * n_bands + k) * n_pw;
  }
  cplx* vec(std::size_t t, std::size_t k) {
    return vectors.data() + (t * n_bands + k) * n_pw;
  }
};

// Plane-wave Bloch diagonalization on an even quasimomentum grid of n_xi
// points covering [-pi/a, pi/a).  Keeps the lowest n_bands bands.  Throws
// ResolutionError when a requested band reaches energies the cutoff cannot
// represent (above half the squared top plane-wave momentum).
BandStructure bloch_bands(const PeriodicModel& m, std::size_t n_xi,
                          std::size_t n_bands);

// Parallel-transport gauge for an isolated group of band indices: successive
// composite frames are aligned by the unitary polar factor of their overlap,
// and the leftover loop unitary (whose eigenphases are reported as
// berry_phases) is spread evenly across the grid so the gauge closes
// periodically.  Throws ValidationError when the group is not isolated from
// the rest of the kept bands (separation < 1e-8).
BandStructure gauge_fix(BandStructure b, const std::vector<std::size_t>& group);

struct WannierSet {
  enum class Group { below_gap, above_gap };
  Group group = Group::below_gap;
  std::vector<std::size_t> band_indices;  // group members in the band structure
  std::size_t n_xi = 0;
  double a = 1.0;
  int g_max = 0;
  std::size_t n_pw = 0;
  int max_translate = 0;  // translates m in [-R, R] are available

  // Gauge-fixed frames: frames[(t * size + c) * n_pw + r] = coefficient r of
  // group column c at grid point t.
  std::vector<cplx> frames;

  // Real-space samples of the base (m = 0) Wannier functions on the torus of
  // length n_xi * a: grid x_p = -L/2 + p dx, dx = a / samples_per_cell.
  std::size_t samples_per_cell = 0;
  std::vector<double> grid_x;
  std::vector<cplx> base_values;  // base_values[c * n_points + p]

  double orthonormality_residual = 0.0;
  double decay_rate = 0.0;  // fitted exponential decay gamma > 0

  std::size_t size() const { return band_indices.size(); }
};

// Brillouin-zone average w(x) = (1/n_xi) sum_t e^{i xi_t x} u_t(x) / sqrt(a)
// of the gauge-fixed frame, with translates available by lattice-phase
// multiplication up to |m| <= max_translate.  Throws NumericalError when the
// translate orthonormality residual exceeds 1e-6 (gauge quality).
WannierSet wannier_build(const BandStructure& b,
                         const std::vector<std::size_t>& group,
                         WannierSet::Group which, int max_translate,
                         std::size_t samples_per_cell = 100);

// Galerkin pencil of -d^2/dx^2 + V_per + W on the trial space spanned by all
// translates within radius R of both Wannier families.  The periodic part is
// evaluated exactly through the Bloch fibers; the defect part by torus
// quadrature.  Requires R >= 2 and |W| <= 1e-12 at the torus boundary.
GeneralizedPencil assemble_periodic(const PeriodicModel& m,
                                    const WannierSet& below,
                                    const WannierSet& above, int radius);

// Independent reference: plane-wave diagonalization of the full defect
// Hamiltonian on a periodic supercell of `cells` lattice constants with
// per-cell cutoff `cutoff`; returns the eigenvalues strictly inside the first
// spectral gap (margin 1e-6).  Throws ValidationError when W is not
// negligible (1e-12) at the supercell boundary.
std::vector<double> supercell_reference(const PeriodicModel& m,
                                        std::size_t cells, int cutoff);

// Edges (a_gap, b_gap) of the first spectral gap of width > 0.5 between
// consecutive kept bands; ValidationError if none exists.
std::pair<double, double> find_first_gap(const BandStructure& b);

}  // namespace speclab
