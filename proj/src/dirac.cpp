#include "speclab/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "speclab/errors.hpp"

namespace speclab {

namespace {

constexpr double kCoulombAdmissible = 0.8660254037844386;  // sqrt(3)/2

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// C^2 ramp from 0 at t <= 0 to 1 at t >= 1 (quintic smoothstep).
double smooth_ramp(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// Fixed C^2 annular bump: 0 outside [1, 4], 1 on [2, 3].
double annular_bump(double s) {
  if (s <= 1.0 || s >= 4.0) return 0.0;
  if (s < 2.0) return smooth_ramp(s - 1.0);
  if (s <= 3.0) return 1.0;
  return smooth_ramp(4.0 - s);
}

// One trial pair (upper, lower) sampled on a contiguous quadrature-node
// window; du holds the analytically evaluated (d/dr + kappa_d/r) image of the
// upper component, which is what the symmetric weak form of the off-diagonal
// block integrates against.
struct TrialFn {
  std::size_t lo = 0;      // first node of the window
  std::vector<double> u, l, du;
};

struct NodeData {
  std::vector<double> r, w, vplus, vminus;  // 1 + V and -1 + V at the nodes
};

NodeData node_data(const BasisTable& table, const PotentialSpec& v) {
  NodeData nd;
  const std::size_t n = table.node_r.size();
  nd.r = table.node_r;
  nd.w = table.node_w;
  nd.vplus.resize(n);
  nd.vminus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pv = v(nd.r[i]);
    nd.vplus[i] = 1.0 + pv;
    nd.vminus[i] = -1.0 + pv;
  }
  return nd;
}

// Node window [lo, hi) of each full-index spline function.
void support_windows(const BasisTable& table, std::vector<std::size_t>& lo,
                     std::vector<std::size_t>& hi) {
  const std::size_t nfull = static_cast<std::size_t>(table.count) + 2;
  const std::size_t nnode = table.node_r.size();
  lo.assign(nfull, nnode);
  hi.assign(nfull, 0);
  const std::size_t k = static_cast<std::size_t>(table.order);
  for (std::size_t nd = 0; nd < nnode; ++nd) {
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t fi = table.node_first[nd] + m;
      if (fi >= nfull) continue;
      lo[fi] = std::min(lo[fi], nd);
      hi[fi] = std::max(hi[fi], nd + 1);
    }
  }
}

// Raw spline samples over the support window of retained index `ret`.
struct SplineSamples {
  std::size_t lo = 0;
  std::vector<double> b, db, d2b;
};

SplineSamples sample_spline(const BasisTable& table, std::size_t ret,
                            std::size_t lo, std::size_t hi) {
  SplineSamples s;
  s.lo = lo;
  const std::size_t n = hi - lo;
  s.b.assign(n, 0.0);
  s.db.assign(n, 0.0);
  s.d2b.assign(n, 0.0);
  const std::size_t fi = ret + 1;
  const std::size_t k = static_cast<std::size_t>(table.order);
  for (std::size_t nd = lo; nd < hi; ++nd) {
    const std::size_t first = table.node_first[nd];
    if (fi < first || fi >= first + k) continue;
    const std::size_t idx = nd * k + (fi - first);
    s.b[nd - lo] = table.val[idx];
    s.db[nd - lo] = table.d1[idx];
    s.d2b[nd - lo] = table.d2[idx];
  }
  return s;
}

double default_mixing_angle(std::size_t i_one_based) {
  return 1.0 / std::sqrt(static_cast<double>(i_one_based) + 1.0);
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ValidationError(
        "splitting parameter epsilon must lie in (0, 1], got " + fmt(epsilon));
  }
}

void check_atomic_admissible(const PotentialSpec& v) {
  if (!(v.sup_v < 2.0)) {
    throw ValidationError(
        "atomic balance is inadmissible: sup V = " + fmt(v.sup_v) +
        " is not below the upper gap edge shift 2");
  }
}

// Build the trial family of a direct (non free-split) scheme.
std::vector<TrialFn> build_trials(const DiracChannelModel& model,
                                  const SchemeSpec& scheme, std::size_t size,
                                  const BasisTable& table,
                                  const NodeData& nd) {
  const double kappa = static_cast<double>(model.kappa_d);
  const double kk = kappa * kappa - kappa;  // coefficient of B/r^2 in D'DB
  std::vector<std::size_t> wlo, whi;
  support_windows(table, wlo, whi);

  std::vector<TrialFn> fns(2 * size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t fi = i + 1;
    const std::size_t lo = wlo[fi], hi = whi[fi];
    SplineSamples sp = sample_spline(table, i, lo, hi);
    const std::size_t n = hi - lo;
    std::vector<double> dstar(n), dplain(n), ddstar(n);
    for (std::size_t m = 0; m < n; ++m) {
      const double r = nd.r[lo + m];
      const double kb_r = kappa * sp.b[m] / r;
      dstar[m] = sp.db[m] + kb_r;
      dplain[m] = -sp.db[m] + kb_r;
      ddstar[m] = -sp.d2b[m] + kk * sp.b[m] / (r * r);
    }

    TrialFn& a = fns[i];            // first family block
    TrialFn& b = fns[size + i];     // second family block
    a.lo = b.lo = lo;
    a.u.assign(n, 0.0); a.l.assign(n, 0.0); a.du.assign(n, 0.0);
    b.u.assign(n, 0.0); b.l.assign(n, 0.0); b.du.assign(n, 0.0);

    switch (scheme.kind) {
      case SchemeSpec::Kind::upper_lower:
        for (std::size_t m = 0; m < n; ++m) {
          a.u[m] = sp.b[m];
          a.du[m] = dstar[m];
          b.l[m] = sp.b[m];
        }
        break;
      case SchemeSpec::Kind::kinetic_balance:
        for (std::size_t m = 0; m < n; ++m) {
          a.u[m] = sp.b[m];
          a.du[m] = dstar[m];
          b.l[m] = dstar[m];
        }
        break;
      case SchemeSpec::Kind::atomic_balance:
        for (std::size_t m = 0; m < n; ++m) {
          a.u[m] = sp.b[m];
          a.du[m] = dstar[m];
          b.l[m] = dstar[m] / (2.0 - (nd.vminus[lo + m] + 1.0));
        }
        break;
      case SchemeSpec::Kind::naive: {
        const double alpha = scheme.mixing_angles
                                 ? scheme.mixing_angles(i + 1)
                                 : default_mixing_angle(i + 1);
        if (!std::isfinite(alpha)) {
          throw ValidationError("mixing angle at index " + fmt(double(i + 1)) +
                                " is not finite");
        }
        const double c = std::cos(alpha), s = std::sin(alpha);
        for (std::size_t m = 0; m < n; ++m) {
          a.u[m] = c * sp.b[m];
          a.l[m] = s * sp.b[m];
          a.du[m] = c * dstar[m];
          b.u[m] = -s * sp.b[m];
          b.l[m] = c * sp.b[m];
          b.du[m] = -s * dstar[m];
        }
        break;
      }
      case SchemeSpec::Kind::dual: {
        const double eps = scheme.epsilon;
        for (std::size_t m = 0; m < n; ++m) {
          a.u[m] = sp.b[m];
          a.l[m] = eps * dstar[m];
          a.du[m] = dstar[m];
          b.u[m] = -eps * dplain[m];
          b.l[m] = sp.b[m];
          b.du[m] = -eps * ddstar[m];
        }
        break;
      }
      case SchemeSpec::Kind::dual_kinetic_balance: {
        const double eps = scheme.epsilon;
        for (std::size_t m = 0; m < n; ++m) {
          a.u[m] = sp.b[m];
          a.l[m] = eps * dstar[m];
          a.du[m] = dstar[m];
          b.u[m] = eps * dplain[m];
          b.l[m] = -sp.b[m];
          b.du[m] = eps * ddstar[m];
        }
        break;
      }
      case SchemeSpec::Kind::free_split:
        throw ValidationError("free splitting is assembled from free modes");
    }
  }
  return fns;
}

GeneralizedPencil assemble_from_trials(const std::vector<TrialFn>& fns,
                                       const NodeData& nd) {
  const std::size_t t = fns.size();
  GeneralizedPencil p{DenseHermitian(t), DenseHermitian(t)};
  for (std::size_t i = 0; i < t; ++i) {
    const TrialFn& fi = fns[i];
    const std::size_t ihi = fi.lo + fi.u.size();
    for (std::size_t j = i; j < t; ++j) {
      const TrialFn& fj = fns[j];
      const std::size_t lo = std::max(fi.lo, fj.lo);
      const std::size_t hi = std::min(ihi, fj.lo + fj.u.size());
      if (lo >= hi) continue;
      double hij = 0.0, sij = 0.0;
      for (std::size_t m = lo; m < hi; ++m) {
        const std::size_t mi = m - fi.lo, mj = m - fj.lo;
        const double w = nd.w[m];
        hij += w * (fi.u[mi] * nd.vplus[m] * fj.u[mj] +
                    fi.l[mi] * nd.vminus[m] * fj.l[mj] +
                    fi.du[mi] * fj.l[mj] + fi.l[mi] * fj.du[mj]);
        sij += w * (fi.u[mi] * fj.u[mj] + fi.l[mi] * fj.l[mj]);
      }
      p.h.at(i, j) = hij;
      p.h.at(j, i) = hij;
      p.s.at(i, j) = sij;
      p.s.at(j, i) = sij;
    }
  }
  p.h.symmetrize();
  p.s.symmetrize();
  return p;
}

std::vector<double> real_row_major(const DenseHermitian& m) {
  const std::size_t n = m.dim();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = m.at(i, j).real();
  return out;
}

// Congruence B = X^T A X for real row-major A (n x n) and X (n x t).
std::vector<double> congruence(const std::vector<double>& a,
                               const std::vector<double>& x, std::size_t n,
                               std::size_t t) {
  std::vector<double> y(n * t, 0.0);  // y = a x
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * n;
    double* yrow = y.data() + i * t;
    for (std::size_t j = 0; j < n; ++j) {
      const double aij = arow[j];
      if (aij == 0.0) continue;
      const double* xrow = x.data() + j * t;
      for (std::size_t c = 0; c < t; ++c) yrow[c] += aij * xrow[c];
    }
  }
  std::vector<double> b(t * t, 0.0);
  for (std::size_t c = 0; c < t; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double xic = x[i * t + c];
      if (xic == 0.0) continue;
      const double* yrow = y.data() + i * t;
      double* brow = b.data() + c * t;
      for (std::size_t d = 0; d < t; ++d) brow[d] += xic * yrow[d];
    }
  }
  return b;
}

// Selected free-mode columns, positives (ascending) then negatives
// (descending, i.e. nearest the gap first), packed as 2M x 2*size row-major.
std::vector<double> packed_selection(const FreeSplitWorkspace& ws,
                                     std::size_t size) {
  const std::size_t m = ws.basis_count;
  const std::size_t rows = 2 * m, t = 2 * size;
  std::vector<double> x(rows * t);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* mrow = ws.modes.data() + i * rows;
    double* xrow = x.data() + i * t;
    for (std::size_t c = 0; c < size; ++c) {
      xrow[c] = mrow[m + c];               // positive branch
      xrow[size + c] = mrow[m - 1 - c];    // negative branch
    }
  }
  return x;
}

GeneralizedPencil assemble_free_split(const FreeSplitWorkspace& ws,
                                      std::size_t size) {
  const std::size_t m = ws.basis_count;
  if (size == 0 || size > m) {
    throw ValidationError("free splitting size " + fmt(double(size)) +
                          " must lie in [1, " + fmt(double(m)) + "]");
  }
  const std::size_t rows = 2 * m, t = 2 * size;
  const std::vector<double> x = packed_selection(ws, size);
  const std::vector<double> hs = congruence(ws.h_full, x, rows, t);
  const std::vector<double> ss = congruence(ws.s_full, x, rows, t);
  GeneralizedPencil p{DenseHermitian(t), DenseHermitian(t)};
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j) {
      p.h.at(i, j) = hs[i * t + j];
      p.s.at(i, j) = ss[i * t + j];
    }
  p.h.symmetrize();
  p.s.symmetrize();
  return p;
}

void validate_model(const DiracChannelModel& model) {
  if (model.kappa_d == 0) {
    throw ValidationError("angular channel index kappa_d must be nonzero");
  }
  if (model.basis.count() == 0) {
    throw ValidationError("radial basis has no retained functions");
  }
  if (model.rule.panels.empty()) {
    throw ValidationError("quadrature rule has no panels");
  }
}

}  // namespace

double PotentialSpec::operator()(double r) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::gaussian_bump: {
      const double t = r / width;
      return v0 * std::exp(-t * t);
    }
    case Kind::gaussian_well: {
      const double t = r / width;
      return -v0 * std::exp(-t * t);
    }
    case Kind::coulomb:
      return -kappa_c / r;
    case Kind::smeared_coulomb:
      return -kappa_c / std::max(r, r_cut);
  }
  return 0.0;
}

PotentialSpec PotentialSpec::zero() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::gaussian_bump(double v0, double width) {
  if (!(v0 > 0.0) || !(width > 0.0)) {
    throw ValidationError("gaussian bump needs positive amplitude and width");
  }
  PotentialSpec p;
  p.kind = Kind::gaussian_bump;
  p.v0 = v0;
  p.width = width;
  p.sup_v = v0;
  p.inf_v = 0.0;
  return p;
}

PotentialSpec PotentialSpec::gaussian_well(double v0, double width) {
  if (!(v0 > 0.0) || !(width > 0.0)) {
    throw ValidationError("gaussian well needs positive depth and width");
  }
  PotentialSpec p;
  p.kind = Kind::gaussian_well;
  p.v0 = v0;
  p.width = width;
  p.sup_v = 0.0;
  p.inf_v = -v0;
  return p;
}

PotentialSpec PotentialSpec::coulomb(double kappa_c) {
  if (!(kappa_c > 0.0 && kappa_c < kCoulombAdmissible)) {
    throw ValidationError("coulomb strength must lie in (0, sqrt(3)/2), got " +
                          fmt(kappa_c));
  }
  PotentialSpec p;
  p.kind = Kind::coulomb;
  p.kappa_c = kappa_c;
  p.sup_v = 0.0;
  p.inf_v = -std::numeric_limits<double>::infinity();
  return p;
}

PotentialSpec PotentialSpec::smeared_coulomb(double kappa_c, double r_cut) {
  if (!(kappa_c > 0.0) || !(r_cut > 0.0)) {
    throw ValidationError(
        "smeared coulomb needs positive strength and smearing radius");
  }
  PotentialSpec p;
  p.kind = Kind::smeared_coulomb;
  p.kappa_c = kappa_c;
  p.r_cut = r_cut;
  p.sup_v = 0.0;
  p.inf_v = -kappa_c / r_cut;
  return p;
}

SchemeSpec SchemeSpec::naive() {
  SchemeSpec s;
  s.kind = Kind::naive;
  return s;
}

SchemeSpec SchemeSpec::upper_lower() {
  SchemeSpec s;
  s.kind = Kind::upper_lower;
  return s;
}

SchemeSpec SchemeSpec::dual(double epsilon) {
  check_epsilon(epsilon);
  SchemeSpec s;
  s.kind = Kind::dual;
  s.epsilon = epsilon;
  return s;
}

SchemeSpec SchemeSpec::free_split() {
  SchemeSpec s;
  s.kind = Kind::free_split;
  return s;
}

SchemeSpec SchemeSpec::kinetic_balance() {
  SchemeSpec s;
  s.kind = Kind::kinetic_balance;
  return s;
}

SchemeSpec SchemeSpec::atomic_balance() {
  SchemeSpec s;
  s.kind = Kind::atomic_balance;
  return s;
}

SchemeSpec SchemeSpec::dual_kinetic_balance(double epsilon) {
  check_epsilon(epsilon);
  SchemeSpec s;
  s.kind = Kind::dual_kinetic_balance;
  s.epsilon = epsilon;
  return s;
}

FreeSplitWorkspace make_free_split_workspace(const DiracChannelModel& model) {
  validate_model(model);
  const std::size_t m = model.basis.count();

  DiracChannelModel free_model = model;
  free_model.potential = PotentialSpec::zero();
  const GeneralizedPencil free_pencil =
      assemble_dirac(free_model, SchemeSpec::upper_lower(), m);
  EigDecomposition free_eig = eig_generalized(free_pencil, true);

  std::size_t negatives = 0;
  while (negatives < free_eig.values.size() && free_eig.values[negatives] < 0.0)
    ++negatives;
  if (negatives != m) {
    throw NumericalError(
        "free channel modes did not split evenly by sign: " +
        fmt(double(negatives)) + " negative of " + fmt(double(2 * m)));
  }

  FreeSplitWorkspace ws;
  ws.basis_count = m;
  ws.free_values = std::move(free_eig.values);
  const ColumnFamily& q = *free_eig.vectors;
  ws.modes.resize(4 * m * m);
  for (std::size_t i = 0; i < 2 * m; ++i)
    for (std::size_t j = 0; j < 2 * m; ++j)
      ws.modes[i * 2 * m + j] = q.at(i, j).real();

  const GeneralizedPencil full =
      assemble_dirac(model, SchemeSpec::upper_lower(), m);
  ws.h_full = real_row_major(full.h);
  ws.s_full = real_row_major(full.s);
  return ws;
}

GeneralizedPencil assemble_dirac(const DiracChannelModel& model,
                                 const SchemeSpec& scheme, std::size_t size,
                                 const FreeSplitWorkspace* workspace) {
  validate_model(model);
  if (size == 0) throw ValidationError("trial family size must be positive");
  if (size > model.basis.count()) {
    throw ValidationError("trial family size " + fmt(double(size)) +
                          " exceeds the basis size " +
                          fmt(double(model.basis.count())));
  }
  switch (scheme.kind) {
    case SchemeSpec::Kind::dual:
    case SchemeSpec::Kind::dual_kinetic_balance:
      check_epsilon(scheme.epsilon);
      break;
    case SchemeSpec::Kind::atomic_balance:
      check_atomic_admissible(model.potential);
      break;
    default:
      break;
  }

  if (scheme.kind == SchemeSpec::Kind::free_split) {
    if (workspace != nullptr) return assemble_free_split(*workspace, size);
    const FreeSplitWorkspace ws = make_free_split_workspace(model);
    return assemble_free_split(ws, size);
  }

  const BasisTable table = tabulate(model.basis, model.rule);
  const NodeData nd = node_data(table, model.potential);
  const std::vector<TrialFn> fns = build_trials(model, scheme, size, table, nd);
  return assemble_from_trials(fns, nd);
}

std::vector<double> free_split_to_spline(const FreeSplitWorkspace& ws,
                                         std::size_t size,
                                         const std::vector<cplx>& coeffs) {
  const std::size_t m = ws.basis_count;
  if (size == 0 || size > m) {
    throw ValidationError("free splitting size out of range");
  }
  if (coeffs.size() != 2 * size) {
    throw ValidationError("coefficient vector must have 2 * size entries");
  }
  const std::vector<double> x = packed_selection(ws, size);
  std::vector<double> out(2 * m, 0.0);
  for (std::size_t i = 0; i < 2 * m; ++i) {
    const double* xrow = x.data() + i * 2 * size;
    double acc = 0.0;
    for (std::size_t c = 0; c < 2 * size; ++c) acc += xrow[c] * coeffs[c].real();
    out[i] = acc;
  }
  return out;
}

double dirac_coulomb_eigenvalue(double kappa_c, int kappa_d, int n_r) {
  if (kappa_d == 0) throw ValidationError("kappa_d must be nonzero");
  if (n_r < 0) throw ValidationError("radial quantum number must be >= 0");
  const double kd = std::abs(static_cast<double>(kappa_d));
  if (!(kappa_c > 0.0 && kappa_c < kd)) {
    throw ValidationError("coulomb strength must lie in (0, |kappa_d|) for "
                          "the point-nucleus reference value");
  }
  const double gamma = std::sqrt(kd * kd - kappa_c * kappa_c);
  const double denom = static_cast<double>(n_r) + gamma;
  return 1.0 / std::sqrt(1.0 + (kappa_c * kappa_c) / (denom * denom));
}

std::pair<double, double> mu2_probe(const DiracChannelModel& model,
                                    const SchemeSpec& scheme,
                                    const std::vector<double>& phi) {
  validate_model(model);
  const bool balance = scheme.kind == SchemeSpec::Kind::kinetic_balance ||
                       scheme.kind == SchemeSpec::Kind::atomic_balance ||
                       scheme.kind == SchemeSpec::Kind::dual_kinetic_balance;
  if (!balance) {
    throw ValidationError(
        "the two-dimensional probe requires a balance scheme "
        "(kinetic, atomic, or dual-kinetic)");
  }
  if (scheme.kind == SchemeSpec::Kind::atomic_balance) {
    check_atomic_admissible(model.potential);
  }
  if (scheme.kind == SchemeSpec::Kind::dual_kinetic_balance) {
    check_epsilon(scheme.epsilon);
  }
  if (phi.size() != model.basis.count()) {
    throw ValidationError("probe coefficient vector must match the basis size");
  }

  const BasisTable table = tabulate(model.basis, model.rule);
  const NodeData nd = node_data(table, model.potential);
  const std::size_t nnode = nd.r.size();
  const double kappa = static_cast<double>(model.kappa_d);
  const double kk = kappa * kappa - kappa;

  // phi and its images at all nodes.
  std::vector<double> f(nnode, 0.0), d1(nnode, 0.0), d2(nnode, 0.0);
  const std::size_t k = static_cast<std::size_t>(table.order);
  for (std::size_t ndx = 0; ndx < nnode; ++ndx) {
    const std::size_t first = table.node_first[ndx];
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t fi = first + m;
      if (fi == 0 || fi > model.basis.count()) continue;  // trimmed ends
      const double c = phi[fi - 1];
      f[ndx] += c * table.val[ndx * k + m];
      d1[ndx] += c * table.d1[ndx * k + m];
      d2[ndx] += c * table.d2[ndx * k + m];
    }
  }

  std::vector<double> xu(nnode), xl(nnode, 0.0), xdu(nnode);
  std::vector<double> yu(nnode, 0.0), yl(nnode), ydu(nnode, 0.0);
  for (std::size_t m = 0; m < nnode; ++m) {
    const double r = nd.r[m];
    const double dstar = d1[m] + kappa * f[m] / r;
    const double dplain = -d1[m] + kappa * f[m] / r;
    const double ddstar = -d2[m] + kk * f[m] / (r * r);
    switch (scheme.kind) {
      case SchemeSpec::Kind::kinetic_balance:
        xu[m] = f[m];
        xdu[m] = dstar;
        yl[m] = dstar;
        break;
      case SchemeSpec::Kind::atomic_balance:
        xu[m] = f[m];
        xdu[m] = dstar;
        yl[m] = dstar / (2.0 - (nd.vminus[m] + 1.0));
        break;
      default:  // dual kinetic balance
        xu[m] = f[m];
        xl[m] = scheme.epsilon * dstar;
        xdu[m] = dstar;
        yu[m] = scheme.epsilon * dplain;
        yl[m] = -f[m];
        ydu[m] = scheme.epsilon * ddstar;
        break;
    }
  }

  auto form = [&](const std::vector<double>& au, const std::vector<double>& al,
                  const std::vector<double>& adu, const std::vector<double>& bu,
                  const std::vector<double>& bl,
                  const std::vector<double>& bdu) {
    double h = 0.0, s = 0.0;
    for (std::size_t m = 0; m < nnode; ++m) {
      const double w = nd.w[m];
      h += w * (au[m] * nd.vplus[m] * bu[m] + al[m] * nd.vminus[m] * bl[m] +
                adu[m] * bl[m] + al[m] * bdu[m]);
      s += w * (au[m] * bu[m] + al[m] * bl[m]);
    }
    return std::pair<double, double>(h, s);
  };

  const auto [mxx, sxx] = form(xu, xl, xdu, xu, xl, xdu);
  const auto [mxy, sxy] = form(xu, xl, xdu, yu, yl, ydu);
  const auto [myy, syy] = form(yu, yl, ydu, yu, yl, ydu);

  if (!(std::sqrt(std::max(sxx, 0.0)) > 1e-13)) {
    throw ValidationError("probe function is numerically zero");
  }
  if (!(std::sqrt(std::max(syy, 0.0)) > 1e-13)) {
    throw ValidationError(
        "degenerate balance direction: the balance image of the probe "
        "function has norm below 1e-13");
  }

  const double a = sxx * syy - sxy * sxy;
  const double b = -(mxx * syy + myy * sxx - 2.0 * mxy * sxy);
  const double c = mxx * myy - mxy * mxy;
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) disc = 0.0;
  const double root = std::sqrt(disc);
  const double mu1 = (-b - root) / (2.0 * a);
  const double mu2 = (-b + root) / (2.0 * a);
  return {std::min(mu1, mu2), std::max(mu1, mu2)};
}

std::vector<double> two_scale_bump(const BSplineBasis& basis, double n,
                                   double delta) {
  if (!(n > 0.0)) throw ValidationError("bump scale n must be positive");
  if (!(delta >= 4.0)) {
    throw ValidationError("scale separation delta must be at least 4, got " +
                          fmt(delta));
  }
  if (4.0 / n > basis.domain_max()) {
    throw ValidationError(
        "outer bump support [1/n, 4/n] does not fit inside the radial domain");
  }

  const double inner = 1.0 / (delta * n);         // inner support starts here
  const double inner_width = 3.0 / (delta * n);   // width of the inner bump
  const std::vector<double>& bp = basis.breakpoints();
  for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
    const bool touches = bp[p + 1] > inner && bp[p] < 4.0 * inner;
    if (touches && bp[p + 1] - bp[p] > inner_width) {
      throw ResolutionError(
          "knot spacing " + fmt(bp[p + 1] - bp[p]) + " near r = " + fmt(bp[p]) +
          " is coarser than the inner bump width " + fmt(inner_width));
    }
  }

  const double amp_outer = std::sqrt(n);
  const double amp_inner = std::sqrt(delta * n);
  auto u = [&](double r) {
    return r * (amp_outer * annular_bump(n * r) +
                amp_inner * annular_bump(delta * n * r));
  };

  // Mass matrix with a product-exact rule; moments with a refined rule since
  // the integrand oscillates on the inner scale (which the grid resolves).
  const QuadratureRule gram_rule = make_rule(bp, 2 * basis.order());
  const QuadratureRule fine_rule = make_rule(bp, 3 * basis.order());
  const BasisTable gram_table = tabulate(basis, gram_rule);
  const BasisTable fine_table = tabulate(basis, fine_rule);
  const std::vector<double> gram =
      assemble_weighted(gram_table, [](double) { return 1.0; }, 0, 0);
  std::vector<double> rhs = assemble_moments(fine_table, u, 0);

  const std::size_t m = basis.count();
  DenseHermitian g(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) g.at(i, j) = gram[i * m + j];
  detail::cholesky_lower(g);

  // Solve L L^T c = rhs in place.
  for (std::size_t i = 0; i < m; ++i) {
    double acc = rhs[i];
    for (std::size_t j = 0; j < i; ++j) acc -= g.at(i, j).real() * rhs[j];
    rhs[i] = acc / g.at(i, i).real();
  }
  for (std::size_t ii = m; ii-- > 0;) {
    double acc = rhs[ii];
    for (std::size_t j = ii + 1; j < m; ++j) acc -= g.at(j, ii).real() * rhs[j];
    rhs[ii] = acc / g.at(ii, ii).real();
  }
  return rhs;
}

double hardy_gap(const RadialChannelFunction& g, double kappa, double m_param,
                 const QuadratureRule& rule) {
  if (!g.value || !g.derivative) {
    throw ValidationError("channel function needs value and derivative");
  }
  if (!(kappa >= 0.0 && kappa < kCoulombAdmissible)) {
    throw ValidationError("hardy weight strength must lie in [0, sqrt(3)/2)");
  }
  if (!(m_param > 0.0)) {
    throw ValidationError("hardy mass parameter must be positive");
  }
  const double s = std::sqrt(1.0 - kappa * kappa);
  const double mass_coeff = m_param * (1.0 - s) / (1.0 + s);
  double lhs = 0.0, rhs = 0.0;
  for (const QuadraturePanel& panel : rule.panels) {
    for (std::size_t q = 0; q < panel.nodes.size(); ++q) {
      const double r = panel.nodes[q], w = panel.weights[q];
      const double gv = g.value(r);
      const double gd = g.derivative(r) - gv / r;  // (d/dr - 1/r) g
      if (!std::isfinite(gv) || !std::isfinite(gd)) {
        throw NumericalError(
            "channel function evaluated to a non-finite value at r = " +
            fmt(r));
      }
      lhs += w * (gd * gd / (m_param + kappa / r) + mass_coeff * gv * gv);
      rhs += w * kappa * gv * gv / r;
    }
  }
  return lhs - rhs;
}

}  // namespace speclab
