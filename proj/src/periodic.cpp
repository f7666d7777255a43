#include "speclab/periodic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "speclab/eig.hpp"
#include "speclab/errors.hpp"

namespace speclab {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Checks the Fourier coefficient list of the periodic potential (odd length,
// conjugate-symmetric) and returns its half-width K.
int validate_vper(const std::vector<cplx>& coeffs) {
  if (coeffs.empty() || coeffs.size() % 2 == 0)
    throw ValidationError(
        "periodic potential coefficients must form an odd-length list "
        "indexed j = -K..K");
  const int K = static_cast<int>(coeffs.size() / 2);
  double scale = 0.0;
  for (const cplx& c : coeffs) scale = std::max(scale, std::abs(c));
  for (int j = 1; j <= K; ++j) {
    const cplx lo = coeffs[static_cast<std::size_t>(K - j)];
    const cplx hi = coeffs[static_cast<std::size_t>(K + j)];
    if (std::abs(lo - std::conj(hi)) > 1e-12 * std::max(1.0, scale))
      throw ValidationError(
          "periodic potential coefficients are not conjugate-symmetric at "
          "harmonic " +
          fmt(j));
  }
  if (std::abs(coeffs[static_cast<std::size_t>(K)].imag()) >
      1e-12 * std::max(1.0, scale))
    throw ValidationError(
        "periodic potential mean coefficient must be real");
  return K;
}

// Plane-wave fiber Hamiltonian (xi + 2 pi j / a)^2 + V_per convolution.
DenseHermitian build_fiber(const PeriodicModel& m, double xi, int K) {
  const int G = m.planewave_cutoff;
  const std::size_t n_pw = static_cast<std::size_t>(2 * G + 1);
  DenseHermitian h(n_pw);
  for (std::size_t r = 0; r < n_pw; ++r) {
    const int j = static_cast<int>(r) - G;
    const double k = xi + 2.0 * kPi * j / m.a;
    h.at(r, r) = k * k + m.vper_coeffs[static_cast<std::size_t>(K)];
    for (std::size_t r2 = 0; r2 < n_pw; ++r2) {
      const int d = j - (static_cast<int>(r2) - G);
      if (d == 0 || std::abs(d) > K) continue;
      h.at(r, r2) += m.vper_coeffs[static_cast<std::size_t>(d + K)];
    }
  }
  return h;
}

// --- small dense complex matrices (g x g, row-major) -----------------------

using Small = std::vector<cplx>;

Small small_mul(const Small& a, const Small& b, std::size_t g) {
  Small c(g * g, cplx(0.0));
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t k = 0; k < g; ++k) {
      const cplx aik = a[i * g + k];
      if (aik == cplx(0.0)) continue;
      for (std::size_t j = 0; j < g; ++j) c[i * g + j] += aik * b[k * g + j];
    }
  return c;
}

Small small_adjoint(const Small& a, std::size_t g) {
  Small c(g * g);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) c[i * g + j] = std::conj(a[j * g + i]);
  return c;
}

double small_max_abs_diff(const Small& a, const Small& b, std::size_t g) {
  double m = 0.0;
  for (std::size_t i = 0; i < g * g; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Frames are stored per grid point as n_pw x g row-major arrays F[r * g + c].
Small frame_overlap(const Small& fa, const Small& fb, std::size_t n_pw,
                    std::size_t g) {
  Small o(g * g, cplx(0.0));
  for (std::size_t r = 0; r < n_pw; ++r)
    for (std::size_t i = 0; i < g; ++i) {
      const cplx ai = std::conj(fa[r * g + i]);
      for (std::size_t j = 0; j < g; ++j) o[i * g + j] += ai * fb[r * g + j];
    }
  return o;
}

Small frame_right_mul(const Small& f, const Small& w, std::size_t n_pw,
                      std::size_t g) {
  Small out(n_pw * g, cplx(0.0));
  for (std::size_t r = 0; r < n_pw; ++r)
    for (std::size_t k = 0; k < g; ++k) {
      const cplx frk = f[r * g + k];
      if (frk == cplx(0.0)) continue;
      for (std::size_t c = 0; c < g; ++c) out[r * g + c] += frk * w[k * g + c];
    }
  return out;
}

// Unitary polar factor U = O (O^H O)^{-1/2} of a nearly unitary g x g matrix.
Small polar_unitary(const Small& o, std::size_t g) {
  DenseHermitian gram(g);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) {
      cplx s(0.0);
      for (std::size_t k = 0; k < g; ++k)
        s += std::conj(o[k * g + i]) * o[k * g + j];
      gram.at(i, j) = s;
    }
  gram.symmetrize();
  EigDecomposition ed = eig_hermitian(gram, true);
  if (ed.values.front() <= 1e-12)
    throw NumericalError(
        "frame overlap became numerically singular during parallel "
        "transport (smallest Gram eigenvalue " +
        fmt(ed.values.front()) + ")");
  const ColumnFamily& v = *ed.vectors;
  Small inv_sqrt(g * g, cplx(0.0));
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) {
      cplx s(0.0);
      for (std::size_t k = 0; k < g; ++k)
        s += v.at(i, k) * std::conj(v.at(j, k)) / std::sqrt(ed.values[k]);
      inv_sqrt[i * g + j] = s;
    }
  return small_mul(o, inv_sqrt, g);
}

// Eigen-decomposition U = V diag(e^{i theta}) V^H of a small unitary matrix,
// via a Hermitian combination of its real and imaginary parts.
void unitary_eig(const Small& u, std::size_t g, Small& v_out,
                 std::vector<double>& theta_out) {
  const std::array<double, 3> mixes = {0.5371, -0.1733, 0.9124};
  for (double alpha : mixes) {
    DenseHermitian m(g);
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j) {
        const cplx uij = u[i * g + j];
        const cplx uji = std::conj(u[j * g + i]);
        m.at(i, j) =
            0.5 * (uij + uji) + alpha * (uij - uji) / cplx(0.0, 2.0);
      }
    m.symmetrize();
    EigDecomposition ed = eig_hermitian(m, true);
    const ColumnFamily& v = *ed.vectors;
    // D = V^H U V must be diagonal when the eigenvectors of the Hermitian
    // combination also diagonalize the (normal) unitary itself.
    Small vb(g * g);
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j) vb[i * g + j] = v.at(i, j);
    Small d = small_mul(small_adjoint(vb, g), small_mul(u, vb, g), g);
    double off = 0.0;
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j)
        if (i != j) off = std::max(off, std::abs(d[i * g + j]));
    if (off <= 1e-9) {
      v_out = vb;
      theta_out.resize(g);
      for (std::size_t i = 0; i < g; ++i)
        theta_out[i] = std::arg(d[i * g + i]);
      return;
    }
  }
  throw NumericalError(
      "could not diagonalize the transport loop unitary (degenerate "
      "holonomy mixture)");
}

// Fractional unitary power V diag(e^{i theta s}) V^H.
Small unitary_power(const Small& v, const std::vector<double>& theta,
                    std::size_t g, double s) {
  Small out(g * g, cplx(0.0));
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) {
      cplx acc(0.0);
      for (std::size_t k = 0; k < g; ++k)
        acc += v[i * g + k] * std::polar(1.0, theta[k] * s) *
               std::conj(v[j * g + k]);
      out[i * g + j] = acc;
    }
  return out;
}

// Plane-wave index shift representing xi -> xi + 2 pi / a.
Small shifted_frame(const Small& f, std::size_t n_pw, std::size_t g) {
  Small out(n_pw * g, cplx(0.0));
  for (std::size_t r = 0; r + 1 < n_pw; ++r)
    for (std::size_t c = 0; c < g; ++c) out[r * g + c] = f[(r + 1) * g + c];
  return out;
}

void validate_group(const std::vector<std::size_t>& group,
                    std::size_t n_bands) {
  if (group.empty())
    throw ValidationError("band group must contain at least one band");
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] >= n_bands)
      throw ValidationError("band group index " + fmt(double(group[i])) +
                            " is outside the computed bands");
    if (i > 0 && group[i] <= group[i - 1])
      throw ValidationError("band group indices must be strictly increasing");
  }
}

std::vector<Small> extract_frames(const BandStructure& b,
                                  const std::vector<std::size_t>& group) {
  const std::size_t g = group.size();
  std::vector<Small> f(b.n_xi, Small(b.n_pw * g));
  for (std::size_t t = 0; t < b.n_xi; ++t)
    for (std::size_t c = 0; c < g; ++c) {
      const cplx* src = b.vec(t, group[c]);
      for (std::size_t r = 0; r < b.n_pw; ++r) f[t][r * g + c] = src[r];
    }
  return f;
}

long long wrap_index(long long p, long long n) {
  long long r = p % n;
  return r < 0 ? r + n : r;
}

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return 0.0;
  return (n * sxy - sx * sy) / den;
}

}  // namespace

double PeriodicModel::vper(double x) const {
  const int K = static_cast<int>(vper_coeffs.size() / 2);
  cplx s(0.0);
  for (int j = -K; j <= K; ++j)
    s += vper_coeffs[static_cast<std::size_t>(j + K)] *
         std::polar(1.0, 2.0 * kPi * j * x / a);
  return s.real();
}

double PeriodicModel::defect_value(double x) const {
  const double t = x / defect.width;
  return defect.amplitude * std::exp(-t * t);
}

PeriodicModel PeriodicModel::mathieu_default() {
  PeriodicModel m;
  m.a = 1.0;
  m.vper_coeffs = {cplx(2.0), cplx(0.0), cplx(2.0)};  // 4 cos(2 pi x)
  m.defect = DefectSpec{-8.0, 1.0};
  m.planewave_cutoff = 8;
  return m;
}

BandStructure bloch_bands(const PeriodicModel& m, std::size_t n_xi,
                          std::size_t n_bands) {
  if (m.a <= 0.0) throw ValidationError("lattice constant must be positive");
  if (m.planewave_cutoff < 1)
    throw ValidationError("plane-wave cutoff must be at least 1");
  if (n_xi < 8 || n_xi % 2 != 0)
    throw ValidationError(
        "quasimomentum grid must have an even number of points, at least 8");
  const int K = validate_vper(m.vper_coeffs);
  const std::size_t n_pw =
      static_cast<std::size_t>(2 * m.planewave_cutoff + 1);
  if (n_bands < 1 || n_bands > n_pw)
    throw ValidationError("requested band count must lie in [1, " +
                          fmt(double(n_pw)) + "]");

  BandStructure b;
  b.a = m.a;
  b.g_max = m.planewave_cutoff;
  b.n_pw = n_pw;
  b.n_xi = n_xi;
  b.n_bands = n_bands;
  b.xi.resize(n_xi);
  b.bands.resize(n_bands * n_xi);
  b.vectors.resize(n_xi * n_bands * n_pw);

  const double k_top = 2.0 * kPi * m.planewave_cutoff / m.a;
  const double resolvable = 0.5 * k_top * k_top;
  for (std::size_t t = 0; t < n_xi; ++t) {
    const double xi = -kPi / m.a + 2.0 * kPi * t / (m.a * n_xi);
    b.xi[t] = xi;
    DenseHermitian h = build_fiber(m, xi, K);
    EigDecomposition ed = eig_hermitian(h, true);
    if (ed.values[n_bands - 1] > resolvable)
      throw ResolutionError(
          "band " + fmt(double(n_bands - 1)) + " reaches energy " +
          fmt(ed.values[n_bands - 1]) +
          ", beyond what the plane-wave cutoff resolves (limit " +
          fmt(resolvable) + "); raise the cutoff");
    for (std::size_t k = 0; k < n_bands; ++k) {
      b.bands[k * n_xi + t] = ed.values[k];
      cplx* dst = b.vec(t, k);
      for (std::size_t r = 0; r < n_pw; ++r) dst[r] = ed.vectors->at(r, k);
    }
  }
  return b;
}

BandStructure gauge_fix(BandStructure b, const std::vector<std::size_t>& group) {
  validate_group(group, b.n_bands);
  const std::size_t g = group.size();
  const std::size_t n = b.n_xi;

  // The group must stay separated from every other kept band at every grid
  // point, otherwise the transported frame is not well defined.
  double isolation = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k < b.n_bands; ++k) {
      const bool in_group =
          std::find(group.begin(), group.end(), k) != group.end();
      if (in_group) continue;
      for (std::size_t kg : group)
        isolation = std::min(
            isolation, std::abs(b.bands[k * n + t] - b.bands[kg * n + t]));
    }
  if (isolation < 1e-8)
    throw ValidationError(
        "band crossing: the requested group is not isolated from the other "
        "kept bands (minimum separation " +
        fmt(isolation) + ")");

  std::vector<Small> f = extract_frames(b, group);

  // Parallel transport: align each frame with its predecessor through the
  // unitary polar factor of the overlap.
  for (std::size_t t = 1; t < n; ++t) {
    Small o = frame_overlap(f[t - 1], f[t], b.n_pw, g);
    Small u = polar_unitary(o, g);
    f[t] = frame_right_mul(f[t], small_adjoint(u, g), b.n_pw, g);
  }

  // Loop closure: compare the last frame against the first one continued
  // through the Brillouin-zone period (a plane-wave index shift).
  Small wrapped = shifted_frame(f[0], b.n_pw, g);
  Small o_loop = frame_overlap(f[n - 1], wrapped, b.n_pw, g);
  Small u_loop = polar_unitary(o_loop, g);
  Small v_loop;
  std::vector<double> theta;
  unitary_eig(u_loop, g, v_loop, theta);

  b.berry_phases = theta;
  std::sort(b.berry_phases.begin(), b.berry_phases.end());

  // Spread the leftover loop unitary evenly over the grid so the gauge
  // closes periodically up to a uniform per-step factor.
  for (std::size_t t = 1; t < n; ++t) {
    Small a_t = unitary_power(v_loop, theta, g,
                              static_cast<double>(t) / static_cast<double>(n));
    f[t] = frame_right_mul(f[t], a_t, b.n_pw, g);
  }

  // Diagnostic: after spreading, every step (including the wrap) should
  // carry exactly the same unitary factor.
  Small a_one = unitary_power(v_loop, theta, g, 1.0 / static_cast<double>(n));
  double uniformity = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    Small u = polar_unitary(frame_overlap(f[t - 1], f[t], b.n_pw, g), g);
    uniformity = std::max(uniformity, small_max_abs_diff(u, a_one, g));
  }
  {
    Small u = polar_unitary(
        frame_overlap(f[n - 1], shifted_frame(f[0], b.n_pw, g), b.n_pw, g), g);
    uniformity = std::max(uniformity, small_max_abs_diff(u, a_one, g));
  }
  b.gauge_uniformity = uniformity;

  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t c = 0; c < g; ++c) {
      cplx* dst = b.vec(t, group[c]);
      for (std::size_t r = 0; r < b.n_pw; ++r) dst[r] = f[t][r * g + c];
    }
  return b;
}

WannierSet wannier_build(const BandStructure& b,
                         const std::vector<std::size_t>& group,
                         WannierSet::Group which, int max_translate,
                         std::size_t samples_per_cell) {
  validate_group(group, b.n_bands);
  if (max_translate < 1)
    throw ValidationError("translate radius must be at least 1");
  if (static_cast<std::size_t>(2 * max_translate + 1) > b.n_xi)
    throw ValidationError(
        "translate radius exceeds the quasimomentum torus (need 2R+1 <= "
        "grid points)");
  if (samples_per_cell < static_cast<std::size_t>(4 * (b.g_max + 1)))
    throw ValidationError(
        "samples per cell too coarse for the plane-wave content (need at "
        "least 4 (g_max + 1))");

  WannierSet w;
  w.group = which;
  w.band_indices = group;
  w.n_xi = b.n_xi;
  w.a = b.a;
  w.g_max = b.g_max;
  w.n_pw = b.n_pw;
  w.max_translate = max_translate;
  w.samples_per_cell = samples_per_cell;

  const std::size_t g = group.size();
  const std::size_t n = b.n_xi;
  w.frames.resize(n * g * b.n_pw);
  {
    std::vector<Small> f = extract_frames(b, group);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t c = 0; c < g; ++c)
        for (std::size_t r = 0; r < b.n_pw; ++r)
          w.frames[(t * g + c) * b.n_pw + r] = f[t][r * g + c];
  }

  // Brillouin-zone average on the torus of length L = n_xi a.  Each frame
  // coefficient sits on one point of the fine reciprocal lattice
  // kappa_s = (2 pi / L)(s - n g_max - n/2), s = t + n (j + g_max), so the
  // base function is a single trigonometric polynomial evaluated by Horner
  // recursion in the unit-modulus ratio e^{i 2 pi x / L}.
  const double L = b.a * static_cast<double>(n);
  const std::size_t n_fine = n * b.n_pw;
  const std::size_t n_points = n * samples_per_cell;
  const double dx = b.a / static_cast<double>(samples_per_cell);
  std::vector<std::vector<cplx>> fine(g, std::vector<cplx>(n_fine, cplx(0.0)));
  const double norm = 1.0 / (static_cast<double>(n) * std::sqrt(b.a));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t c = 0; c < g; ++c)
      for (std::size_t r = 0; r < b.n_pw; ++r)
        fine[c][t + n * r] = w.frames[(t * g + c) * b.n_pw + r] * norm;

  w.grid_x.resize(n_points);
  w.base_values.assign(g * n_points, cplx(0.0));
  const double kappa0 =
      (2.0 * kPi / L) *
      (-static_cast<double>(n) * b.g_max - static_cast<double>(n) / 2.0);
  std::vector<cplx> acc(g);
  for (std::size_t p = 0; p < n_points; ++p) {
    const double x = -L / 2.0 + static_cast<double>(p) * dx;
    w.grid_x[p] = x;
    const cplx omega = std::polar(1.0, 2.0 * kPi * x / L);
    std::fill(acc.begin(), acc.end(), cplx(0.0));
    for (std::size_t s = n_fine; s-- > 0;) {
      for (std::size_t c = 0; c < g; ++c) acc[c] = acc[c] * omega + fine[c][s];
    }
    const cplx base = std::polar(1.0, kappa0 * x);
    for (std::size_t c = 0; c < g; ++c)
      w.base_values[c * n_points + p] = acc[c] * base;
  }

  // Translate orthonormality through the real-space samples (an honest check
  // of the whole synthesis pipeline, not of the frames alone).
  const long long P = static_cast<long long>(n_points);
  const long long S = static_cast<long long>(samples_per_cell);
  double residual = 0.0;
  const int d_max = std::min(max_translate, 3);
  for (int d = 0; d <= d_max; ++d)
    for (std::size_t c1 = 0; c1 < g; ++c1)
      for (std::size_t c2 = 0; c2 < g; ++c2) {
        cplx gram(0.0);
        for (std::size_t p = 0; p < n_points; ++p) {
          const long long q = wrap_index(static_cast<long long>(p) - d * S, P);
          gram += std::conj(w.base_values[c1 * n_points + p]) *
                  w.base_values[c2 * n_points + static_cast<std::size_t>(q)];
        }
        gram *= dx;
        const cplx expected = (d == 0 && c1 == c2) ? cplx(1.0) : cplx(0.0);
        residual = std::max(residual, std::abs(gram - expected));
      }
  w.orthonormality_residual = residual;
  if (residual > 1e-6)
    throw NumericalError(
        "wannier translate family lost orthonormality (residual " +
        fmt(residual) + "); the gauge is not usable");

  // Exponential decay rate: log-linear fit of per-cell peak amplitudes
  // against cell distance from the peak, stopping at the numerical floor.
  double decay = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < g; ++c) {
    std::vector<double> cell_max(n, 0.0);
    for (std::size_t p = 0; p < n_points; ++p)
      cell_max[p / samples_per_cell] =
          std::max(cell_max[p / samples_per_cell],
                   std::abs(w.base_values[c * n_points + p]));
    const std::size_t peak_cell = static_cast<std::size_t>(
        std::max_element(cell_max.begin(), cell_max.end()) -
        cell_max.begin());
    const double peak = cell_max[peak_cell];
    const std::size_t half = n / 2;
    std::vector<double> amp(half, 0.0);
    for (std::size_t cell = 0; cell < n; ++cell) {
      long long d = wrap_index(
          static_cast<long long>(cell) - static_cast<long long>(peak_cell),
          static_cast<long long>(n));
      if (d > static_cast<long long>(half)) d = static_cast<long long>(n) - d;
      if (d == 0 || d >= static_cast<long long>(half)) continue;
      amp[static_cast<std::size_t>(d)] =
          std::max(amp[static_cast<std::size_t>(d)], cell_max[cell]);
    }
    double plateau = peak;
    for (std::size_t d = 1; d < half; ++d)
      if (amp[d] > 0.0) plateau = std::min(plateau, amp[d]);
    const double floor_amp = std::max(10.0 * plateau, peak * 1e-13);
    std::vector<double> xs, ys;
    for (std::size_t d = 2; d < half; ++d) {
      if (amp[d] < floor_amp) break;
      xs.push_back(static_cast<double>(d) * b.a);
      ys.push_back(std::log(amp[d]));
    }
    double gamma = 0.0;
    if (xs.size() >= 3) gamma = -ls_slope(xs, ys);
    decay = std::min(decay, gamma);
  }
  w.decay_rate = std::isfinite(decay) ? decay : 0.0;
  return w;
}

GeneralizedPencil assemble_periodic(const PeriodicModel& m,
                                    const WannierSet& below,
                                    const WannierSet& above, int radius) {
  if (radius < 2) throw ValidationError("translate radius must be at least 2");
  if (radius > below.max_translate || radius > above.max_translate)
    throw ValidationError(
        "translate radius exceeds what the wannier sets provide");
  if (below.n_xi != above.n_xi || below.a != above.a ||
      below.g_max != above.g_max ||
      below.samples_per_cell != above.samples_per_cell)
    throw ValidationError(
        "the two wannier sets were built on different tori");
  if (below.g_max != m.planewave_cutoff || below.a != m.a)
    throw ValidationError(
        "wannier functions were built at a different plane-wave cutoff or "
        "lattice constant than the model");
  for (std::size_t kb : below.band_indices)
    for (std::size_t ka : above.band_indices)
      if (kb == ka)
        throw ValidationError("the two band groups overlap at band " +
                              fmt(double(kb)));
  const int K = validate_vper(m.vper_coeffs);

  const std::size_t n = below.n_xi;
  const double L = m.a * static_cast<double>(n);
  if (std::abs(m.defect_value(L / 2.0)) > 1e-12 ||
      std::abs(m.defect_value(-L / 2.0)) > 1e-12)
    throw ValidationError(
        "defect potential is not negligible at the torus boundary "
        "(|W(L/2)| = " +
        fmt(std::abs(m.defect_value(L / 2.0))) + " > 1e-12)");

  const std::array<const WannierSet*, 2> sets = {&below, &above};
  const std::size_t n_pw = below.n_pw;
  const int R = radius;
  const std::size_t per = static_cast<std::size_t>(2 * R + 1);
  const std::size_t gb = below.size();
  const std::size_t ga = above.size();
  const std::size_t total = (gb + ga) * per;
  const std::array<std::size_t, 2> offset = {0, gb * per};
  const std::array<std::size_t, 2> gsize = {gb, ga};

  // Exact periodic part through the Bloch fibers: the matrix element between
  // translates m and m' of frame columns alpha, beta is the discrete Fourier
  // coefficient at m - m' of the fiber form F_A^H H(xi) F_B.
  std::vector<std::vector<Small>> toeplitz_h(4), toeplitz_s(4);
  for (std::size_t sa = 0; sa < 2; ++sa)
    for (std::size_t sb = 0; sb < 2; ++sb) {
      const WannierSet& wa = *sets[sa];
      const WannierSet& wb = *sets[sb];
      const std::size_t qa = wa.size(), qb = wb.size();
      std::vector<Small> fib_h(n), fib_s(n);
      for (std::size_t t = 0; t < n; ++t) {
        const double xi = -kPi / m.a + 2.0 * kPi * t / (m.a * n);
        DenseHermitian h = build_fiber(m, xi, K);
        fib_h[t].assign(qa * qb, cplx(0.0));
        fib_s[t].assign(qa * qb, cplx(0.0));
        const cplx* fa = wa.frames.data() + t * qa * n_pw;
        const cplx* fb = wb.frames.data() + t * qb * n_pw;
        // tmp = H fb_col for each column
        for (std::size_t cb = 0; cb < qb; ++cb) {
          std::vector<cplx> hv(n_pw, cplx(0.0));
          for (std::size_t r = 0; r < n_pw; ++r) {
            cplx srow(0.0);
            for (std::size_t r2 = 0; r2 < n_pw; ++r2)
              srow += h.at(r, r2) * fb[cb * n_pw + r2];
            hv[r] = srow;
          }
          for (std::size_t ca = 0; ca < qa; ++ca) {
            cplx eh(0.0), es(0.0);
            for (std::size_t r = 0; r < n_pw; ++r) {
              const cplx a = std::conj(fa[ca * n_pw + r]);
              eh += a * hv[r];
              es += a * fb[cb * n_pw + r];
            }
            fib_h[t][ca * qb + cb] = eh;
            fib_s[t][ca * qb + cb] = es;
          }
        }
      }
      std::vector<Small>& th = toeplitz_h[sa * 2 + sb];
      std::vector<Small>& ts = toeplitz_s[sa * 2 + sb];
      th.assign(4 * R + 1, Small(qa * qb, cplx(0.0)));
      ts.assign(4 * R + 1, Small(qa * qb, cplx(0.0)));
      for (int delta = -2 * R; delta <= 2 * R; ++delta) {
        Small& eh = th[static_cast<std::size_t>(delta + 2 * R)];
        Small& es = ts[static_cast<std::size_t>(delta + 2 * R)];
        for (std::size_t t = 0; t < n; ++t) {
          const double xi = -kPi / m.a + 2.0 * kPi * t / (m.a * n);
          const cplx phase =
              std::polar(1.0 / static_cast<double>(n), xi * delta * m.a);
          for (std::size_t e = 0; e < qa * qb; ++e) {
            eh[e] += phase * fib_h[t][e];
            es[e] += phase * fib_s[t][e];
          }
        }
      }
    }

  GeneralizedPencil p{DenseHermitian(total), DenseHermitian(total)};
  auto trial_index = [&](std::size_t set, std::size_t c, int mm) {
    return offset[set] + c * per + static_cast<std::size_t>(mm + R);
  };
  for (std::size_t sa = 0; sa < 2; ++sa)
    for (std::size_t sb = 0; sb < 2; ++sb) {
      const std::vector<Small>& th = toeplitz_h[sa * 2 + sb];
      const std::vector<Small>& ts = toeplitz_s[sa * 2 + sb];
      const std::size_t qa = gsize[sa], qb = gsize[sb];
      for (std::size_t ca = 0; ca < qa; ++ca)
        for (std::size_t cb = 0; cb < qb; ++cb)
          for (int ma = -R; ma <= R; ++ma)
            for (int mb = -R; mb <= R; ++mb) {
              const std::size_t i = trial_index(sa, ca, ma);
              const std::size_t j = trial_index(sb, cb, mb);
              const std::size_t d = static_cast<std::size_t>(ma - mb + 2 * R);
              p.h.at(i, j) = th[d][ca * qb + cb];
              p.s.at(i, j) = ts[d][ca * qb + cb];
            }
    }

  // Defect part by torus quadrature over the window where W is significant.
  if (m.defect.amplitude != 0.0) {
    const std::size_t spc = below.samples_per_cell;
    const std::size_t n_points = n * spc;
    const double dx = m.a / static_cast<double>(spc);
    const double half_w =
        m.defect.width *
        std::sqrt(std::log(std::abs(m.defect.amplitude) / 1e-18));
    long long p_lo =
        static_cast<long long>(std::floor((-half_w + L / 2.0) / dx));
    long long p_hi =
        static_cast<long long>(std::ceil((half_w + L / 2.0) / dx));
    p_lo = std::max<long long>(p_lo, 0);
    p_hi = std::min<long long>(p_hi, static_cast<long long>(n_points) - 1);
    const std::size_t win = static_cast<std::size_t>(p_hi - p_lo + 1);
    std::vector<double> wdx(win);
    for (std::size_t q = 0; q < win; ++q) {
      const double x =
          -L / 2.0 + static_cast<double>(p_lo + static_cast<long long>(q)) * dx;
      wdx[q] = m.defect_value(x) * dx;
    }
    std::vector<std::vector<cplx>> slice(total, std::vector<cplx>(win));
    for (std::size_t set = 0; set < 2; ++set)
      for (std::size_t c = 0; c < gsize[set]; ++c)
        for (int mm = -R; mm <= R; ++mm) {
          std::vector<cplx>& sl = slice[trial_index(set, c, mm)];
          const cplx* base = sets[set]->base_values.data() + c * n_points;
          for (std::size_t q = 0; q < win; ++q) {
            const long long idx =
                wrap_index(p_lo + static_cast<long long>(q) -
                               static_cast<long long>(mm) *
                                   static_cast<long long>(spc),
                           static_cast<long long>(n_points));
            sl[q] = base[static_cast<std::size_t>(idx)];
          }
        }
    for (std::size_t i = 0; i < total; ++i)
      for (std::size_t j = i; j < total; ++j) {
        cplx acc(0.0);
        const std::vector<cplx>& si = slice[i];
        const std::vector<cplx>& sj = slice[j];
        for (std::size_t q = 0; q < win; ++q)
          acc += std::conj(si[q]) * wdx[q] * sj[q];
        p.h.at(i, j) += acc;
        if (i != j) p.h.at(j, i) += std::conj(acc);
      }
  }

  p.h.symmetrize();
  p.s.symmetrize();
  return p;
}

std::pair<double, double> find_first_gap(const BandStructure& b) {
  if (b.n_bands < 2)
    throw ValidationError("need at least two bands to locate a gap");
  for (std::size_t k = 0; k + 1 < b.n_bands; ++k) {
    double top = -std::numeric_limits<double>::infinity();
    double bottom = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < b.n_xi; ++t) {
      top = std::max(top, b.bands[k * b.n_xi + t]);
      bottom = std::min(bottom, b.bands[(k + 1) * b.n_xi + t]);
    }
    if (bottom - top > 0.5) return {top, bottom};
  }
  throw ValidationError(
      "no spectral gap of width > 0.5 between the kept bands");
}

std::vector<double> supercell_reference(const PeriodicModel& m,
                                        std::size_t cells, int cutoff) {
  if (cells < 4 || cells % 2 != 0)
    throw ValidationError("supercell must span an even number (>= 4) of cells");
  if (cutoff < 2)
    throw ValidationError("supercell cutoff must be at least 2");
  const int K = validate_vper(m.vper_coeffs);
  const double L = m.a * static_cast<double>(cells);
  if (std::abs(m.defect_value(L / 2.0)) > 1e-12 ||
      std::abs(m.defect_value(-L / 2.0)) > 1e-12)
    throw ValidationError(
        "defect potential is not negligible at the supercell boundary "
        "(|W(L/2)| = " +
        fmt(std::abs(m.defect_value(L / 2.0))) + " > 1e-12)");

  std::pair<double, double> gap;
  {
    const std::size_t probe_bands =
        std::min<std::size_t>(4, static_cast<std::size_t>(
                                     2 * m.planewave_cutoff + 1));
    BandStructure b = bloch_bands(m, 64, probe_bands);
    gap = find_first_gap(b);
  }

  const long long Q = static_cast<long long>(cells) * cutoff;
  const std::size_t dim = static_cast<std::size_t>(2 * Q + 1);
  DenseHermitian h(dim);
  // Gaussian defect in reciprocal space (images beyond the supercell are
  // negligible by the boundary precondition).
  const double sigma = m.defect.width;
  const double wpref = m.defect.amplitude * sigma * std::sqrt(kPi) / L;
  std::vector<double> wline(2 * dim - 1);
  for (long long o = -(static_cast<long long>(dim) - 1);
       o <= static_cast<long long>(dim) - 1; ++o) {
    const double dk = 2.0 * kPi * static_cast<double>(o) / L;
    wline[static_cast<std::size_t>(o + static_cast<long long>(dim) - 1)] =
        wpref * std::exp(-dk * dk * sigma * sigma / 4.0);
  }
  for (std::size_t r = 0; r < dim; ++r) {
    const double kq =
        2.0 * kPi * (static_cast<double>(r) - static_cast<double>(Q)) / L;
    for (std::size_t r2 = 0; r2 < dim; ++r2) {
      cplx v(0.0);
      const long long o = static_cast<long long>(r) - static_cast<long long>(r2);
      if (m.defect.amplitude != 0.0)
        v += wline[static_cast<std::size_t>(o + static_cast<long long>(dim) -
                                            1)];
      if (o % static_cast<long long>(cells) == 0) {
        const long long d = o / static_cast<long long>(cells);
        if (d >= -K && d <= K)
          v += m.vper_coeffs[static_cast<std::size_t>(d + K)];
      }
      h.at(r, r2) = v;
    }
    h.at(r, r) += kq * kq;
  }
  h.symmetrize();
  EigDecomposition ed = eig_hermitian(h, false);
  std::vector<double> in_gap;
  for (double v : ed.values)
    if (v > gap.first + 1e-6 && v < gap.second - 1e-6) in_gap.push_back(v);
  return in_gap;
}

}  // namespace speclab
