// Householder tridiagonalization + implicit-shift QL, and the Cholesky
// congruence reduction for generalized pencils.  The reduction is templated
// on the scalar so that purely real symmetric matrices (the common case for
// the models here) avoid complex arithmetic entirely.

#include "speclab/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace speclab {

// ---------------------------------------------------------------------------
// DenseHermitian members
// ---------------------------------------------------------------------------

double DenseHermitian::max_abs() const {
  double m = 0.0;
  for (const cplx& v : a_) m = std::max(m, std::abs(v));
  return m;
}

double DenseHermitian::frobenius() const {
  double s = 0.0;
  for (const cplx& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

double DenseHermitian::trace_real() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += at(i, i).real();
  return t;
}

void DenseHermitian::validate_hermitian() const {
  if (dim_ == 0) throw ValidationError("DenseHermitian: empty matrix");
  const double tol = 1e-12 * max_abs();
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const cplx diff = at(i, j) - std::conj(at(j, i));
      if (std::abs(diff) > tol) {
        std::ostringstream os;
        os << "matrix is not Hermitian: |a(" << i << "," << j << ") - conj(a("
           << j << "," << i << "))| = " << std::abs(diff) << " exceeds " << tol;
        throw ValidationError(os.str());
      }
    }
  }
}

bool DenseHermitian::is_real() const {
  for (const cplx& v : a_)
    if (v.imag() != 0.0) return false;
  return true;
}

void DenseHermitian::symmetrize() {
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const cplx m = 0.5 * (at(i, j) + std::conj(at(j, i)));
      at(i, j) = m;
      at(j, i) = std::conj(m);
    }
    at(i, i) = cplx(at(i, i).real(), 0.0);
  }
}

namespace {

// Scalar helpers shared by the real and complex instantiations.
inline double conj_of(double x) { return x; }
inline cplx conj_of(const cplx& x) { return std::conj(x); }
inline double abs_of(double x) { return std::fabs(x); }
inline double abs_of(const cplx& x) { return std::abs(x); }
// Unit scalar with the phase of f (sign for the real case).
inline double phase_of(double f) { return f >= 0.0 ? 1.0 : -1.0; }
inline cplx phase_of(const cplx& f) {
  const double m = std::abs(f);
  return m == 0.0 ? cplx(1.0, 0.0) : f / m;
}

// ---------------------------------------------------------------------------
// Householder reduction to tridiagonal form.
//
// Works on the lower triangle of the row-major n x n array `a`.  On return,
// d[i] is the diagonal, sub[i] (i = 0 .. n-2) the nonnegative subdiagonal of
// the unitarily equivalent real symmetric tridiagonal matrix, and, when
// `q` is non-null, q (n x n, row-major) satisfies  A = q T q^H.
// ---------------------------------------------------------------------------
template <class T>
void tridiag_impl(std::vector<T>& a, std::size_t n, std::vector<double>& d,
                  std::vector<double>& sub, std::vector<T>* q) {
  auto A = [&](std::size_t i, std::size_t j) -> T& { return a[i * n + j]; };

  std::vector<T> e_complex(n, T(0));  // e_complex[k]: subdiag (k, k-1) before phase absorption
  std::vector<double> tau(n, 0.0);
  std::vector<T> p(n), w(n);

  for (std::size_t k = n - 1; k >= 1; --k) {
    // Row slice to annihilate: A[k][0 .. k-1].
    double scale = 0.0;
    for (std::size_t j = 0; j < k; ++j) scale += abs_of(A(k, j));
    if (scale == 0.0) {
      e_complex[k] = T(0);
      tau[k] = 0.0;
      continue;
    }
    double h = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      A(k, j) = A(k, j) / scale;
      h += abs_of(A(k, j)) * abs_of(A(k, j));
    }
    const T f = A(k, k - 1);
    const double sigma = std::sqrt(h);
    const T alpha = phase_of(f);
    const T g = -alpha * sigma;           // scaled target subdiagonal (row side)
    e_complex[k] = g * scale;
    tau[k] = h + abs_of(f) * sigma;       // = h - Re(conj(f) g) > 0
    // The reflector annihilates column k of the leading block, i.e. the
    // conjugate of row k: u = conj(x) - conj(g) e_{k-1}.
    for (std::size_t j = 0; j < k; ++j) A(k, j) = conj_of(A(k, j));
    A(k, k - 1) = conj_of(f - g);         // u now lives in A[k][0 .. k-1]

    // p = A_sub u / tau over the leading k x k Hermitian block (lower triangle valid).
    for (std::size_t i = 0; i < k; ++i) {
      T acc = T(0);
      for (std::size_t j = 0; j <= i; ++j) acc += A(i, j) * A(k, j);
      for (std::size_t j = i + 1; j < k; ++j) acc += conj_of(A(j, i)) * A(k, j);
      p[i] = acc / tau[k];
    }
    // w = p - (u^H p / (2 tau)) u
    T up = T(0);
    for (std::size_t i = 0; i < k; ++i) up += conj_of(A(k, i)) * p[i];
    const T kk = up / (2.0 * tau[k]);
    for (std::size_t i = 0; i < k; ++i) w[i] = p[i] - kk * A(k, i);
    // Rank-two update of the lower triangle: A -= u w^H + w u^H.
    for (std::size_t i = 0; i < k; ++i) {
      const T ui = A(k, i);
      const T wi = w[i];
      T* row = &a[i * n];
      const T* urow = &a[k * n];
      for (std::size_t j = 0; j <= i; ++j)
        row[j] -= ui * conj_of(w[j]) + wi * conj_of(urow[j]);
    }
  }

  d.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // Diagonal entries of a Hermitian matrix are real up to roundoff.
    if constexpr (std::is_same_v<T, double>)
      d[i] = A(i, i);
    else
      d[i] = A(i, i).real();
  }

  // Absorb subdiagonal phases into a unitary diagonal: c_0 = 1,
  // c_k = c_{k-1} |e_k| / e_k, leaving a real nonnegative subdiagonal.
  sub.assign(n >= 1 ? n - 1 : 0, 0.0);
  std::vector<T> phase(n, T(1));
  for (std::size_t k = 1; k < n; ++k) {
    const double m = abs_of(e_complex[k]);
    sub[k - 1] = m;
    phase[k] = (m == 0.0) ? phase[k - 1] : phase[k - 1] * (m / e_complex[k]);
  }

  if (q != nullptr) {
    // Back-transform Q = (H_{n-1} ... H_1) * diag(conj(c)).  Each H_k is the
    // Hermitian reflector I - u u^H / tau with u stored in A[k][0 .. k-1].
    std::vector<T>& Q = *q;
    Q.assign(n * n, T(0));
    for (std::size_t i = 0; i < n; ++i) Q[i * n + i] = T(1);
    for (std::size_t k = 1; k < n; ++k) {
      if (tau[k] == 0.0) continue;
      const T* u = &a[k * n];
      for (std::size_t col = 0; col < n; ++col) {
        T acc = T(0);
        for (std::size_t i = 0; i < k; ++i) acc += conj_of(u[i]) * Q[i * n + col];
        acc = acc / tau[k];
        for (std::size_t i = 0; i < k; ++i) Q[i * n + col] -= u[i] * acc;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      const T c = conj_of(phase[j]);
      for (std::size_t i = 0; i < n; ++i) Q[i * n + j] = Q[i * n + j] * c;
    }
  }
}

// ---------------------------------------------------------------------------
// Implicit-shift QL on a real symmetric tridiagonal matrix, rotations
// accumulated into the (optionally complex) column family `z`.
// ---------------------------------------------------------------------------
template <class T>
void ql_impl(std::vector<double>& d, std::vector<double>& e, std::vector<T>* z,
             std::size_t zrows, int budget) {
  const std::size_t n = d.size();
  if (n == 0) return;
  if (e.size() < n) e.resize(n, 0.0);  // final slot used as a scratch zero
  const double eps = std::numeric_limits<double>::epsilon();
  auto Z = [&](std::size_t i, std::size_t j) -> T& { return (*z)[i * n + j]; };

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    for (;;) {
      std::size_t m = l;
      for (; m + 1 < n; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > budget) {
        std::ostringstream os;
        os << "tridiagonal QL did not converge for eigenvalue index " << l
           << " within " << budget << " sweeps";
        throw ConvergenceError(os.str());
      }
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::size_t i1 = m; i1-- > l;) {
        double f = s * e[i1];
        const double b = c * e[i1];
        r = std::hypot(f, g);
        e[i1 + 1] = r;
        if (r == 0.0) {
          d[i1 + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i1 + 1] - p;
        r = (d[i1] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i1 + 1] = g + p;
        g = c * r - b;
        if (z != nullptr) {
          for (std::size_t row = 0; row < zrows; ++row) {
            const T t = Z(row, i1 + 1);
            Z(row, i1 + 1) = s * Z(row, i1) + c * t;
            Z(row, i1) = c * Z(row, i1) - s * t;
          }
        }
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }
}

// Sort eigenvalues ascending, permuting the columns of z in step.
template <class T>
void sort_pairs(std::vector<double>& d, std::vector<T>* z, std::size_t zrows) {
  const std::size_t n = d.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  std::vector<double> ds(n);
  for (std::size_t j = 0; j < n; ++j) ds[j] = d[perm[j]];
  d = std::move(ds);
  if (z != nullptr) {
    std::vector<T> zs(zrows * n);
    for (std::size_t i = 0; i < zrows; ++i)
      for (std::size_t j = 0; j < n; ++j) zs[i * n + j] = (*z)[i * n + perm[j]];
    *z = std::move(zs);
  }
}

// Full standard solve for scalar type T; a is consumed.
template <class T>
void solve_standard(std::vector<T>& a, std::size_t n, bool want_vectors,
                    std::vector<double>& values, std::vector<T>* vectors) {
  std::vector<double> d, e;
  if (want_vectors) {
    tridiag_impl<T>(a, n, d, e, vectors);
    ql_impl<T>(d, e, vectors, n, 50);
    sort_pairs<T>(d, vectors, n);
  } else {
    tridiag_impl<T>(a, n, d, e, nullptr);
    ql_impl<T>(d, e, static_cast<std::vector<T>*>(nullptr), 0, 50);
    sort_pairs<T>(d, static_cast<std::vector<T>*>(nullptr), 0);
  }
  values = std::move(d);
}

// In-place lower Cholesky for scalar T; throws PencilError on a bad pivot.
template <class T>
void cholesky_impl(std::vector<T>& a, std::size_t n) {
  auto A = [&](std::size_t i, std::size_t j) -> T& { return a[i * n + j]; };
  for (std::size_t j = 0; j < n; ++j) {
    double diag;
    if constexpr (std::is_same_v<T, double>)
      diag = A(j, j);
    else
      diag = A(j, j).real();
    for (std::size_t k = 0; k < j; ++k) diag -= abs_of(A(j, k)) * abs_of(A(j, k));
    if (!(diag > 0.0)) {
      std::ostringstream os;
      os << "overlap matrix is not positive definite (Cholesky pivot " << j
         << " = " << diag << ")";
      throw PencilError(os.str());
    }
    const double ljj = std::sqrt(diag);
    A(j, j) = T(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      T acc = A(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= A(i, k) * conj_of(A(j, k));
      A(i, j) = acc / ljj;
    }
    for (std::size_t i = 0; i < j; ++i) A(i, j) = T(0);  // keep strict lower form
  }
}

// Generalized solve via the congruence C = L^-1 h L^-H.
template <class T>
void solve_generalized(std::vector<T> h, std::vector<T> s, std::size_t n,
                       bool want_vectors, std::vector<double>& values,
                       std::vector<T>* vectors) {
  cholesky_impl<T>(s, n);  // s now holds L
  auto L = [&](std::size_t i, std::size_t j) -> const T& { return s[i * n + j]; };

  // Y = L^-1 h: forward substitution on each column of h.
  auto forward_cols = [&](std::vector<T>& m) {
    for (std::size_t col = 0; col < n; ++col) {
      for (std::size_t i = 0; i < n; ++i) {
        T acc = m[i * n + col];
        for (std::size_t k = 0; k < i; ++k) acc -= L(i, k) * m[k * n + col];
        m[i * n + col] = acc / L(i, i);
      }
    }
  };
  forward_cols(h);  // h := L^-1 h
  // C = (L^-1 (L^-1 h)^H)^H: conjugate-transpose, forward substitute, transpose back.
  std::vector<T> c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = conj_of(h[j * n + i]);
  forward_cols(c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const T m = 0.5 * (c[i * n + j] + conj_of(c[j * n + i]));
      c[i * n + j] = m;
      c[j * n + i] = conj_of(m);
    }

  solve_standard<T>(c, n, want_vectors, values, vectors);

  if (want_vectors && vectors != nullptr) {
    // Back substitution z = L^-H q, column by column.
    std::vector<T>& q = *vectors;
    for (std::size_t col = 0; col < n; ++col) {
      for (std::size_t i = n; i-- > 0;) {
        T acc = q[i * n + col];
        for (std::size_t k = i + 1; k < n; ++k)
          acc -= conj_of(L(k, i)) * q[k * n + col];
        q[i * n + col] = acc / L(i, i);
      }
    }
  }
}

std::vector<double> real_parts(const DenseHermitian& m) {
  std::vector<double> a(m.dim() * m.dim());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = m.data()[i].real();
  return a;
}

ColumnFamily to_columns(const std::vector<double>& z, std::size_t n) {
  ColumnFamily f(n, n);
  for (std::size_t i = 0; i < n * n; ++i) f.a[i] = cplx(z[i], 0.0);
  return f;
}

ColumnFamily to_columns(std::vector<cplx>&& z, std::size_t n) {
  ColumnFamily f(n, n);
  f.a = std::move(z);
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public interface
// ---------------------------------------------------------------------------

EigDecomposition eig_hermitian(const DenseHermitian& m, bool want_vectors) {
  m.validate_hermitian();
  const std::size_t n = m.dim();
  EigDecomposition out;
  if (m.is_real()) {
    std::vector<double> a = real_parts(m);
    std::vector<double> z;
    solve_standard<double>(a, n, want_vectors, out.values,
                           want_vectors ? &z : nullptr);
    if (want_vectors) out.vectors = to_columns(z, n);
  } else {
    std::vector<cplx> a = m.data();
    std::vector<cplx> z;
    solve_standard<cplx>(a, n, want_vectors, out.values,
                         want_vectors ? &z : nullptr);
    if (want_vectors) out.vectors = to_columns(std::move(z), n);
  }
  return out;
}

double condition_estimate(const DenseHermitian& s) {
  const EigDecomposition d = eig_hermitian(s, false);
  const double lo = d.values.front();
  const double hi = d.values.back();
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << "matrix is not positive definite: smallest eigenvalue " << lo;
    throw PencilError(os.str());
  }
  return hi / lo;
}

EigDecomposition eig_generalized(const GeneralizedPencil& p, bool want_vectors,
                                 double cond_cap) {
  if (p.h.dim() != p.s.dim())
    throw ValidationError("pencil dimensions differ");
  p.h.validate_hermitian();
  p.s.validate_hermitian();
  const double cond = condition_estimate(p.s);  // also rejects indefinite s
  if (cond > cond_cap) {
    std::ostringstream os;
    os << "overlap condition estimate " << cond << " exceeds cap " << cond_cap
       << "; refusing to solve (no regularization is applied)";
    throw IllConditionedError(os.str());
  }

  const std::size_t n = p.h.dim();
  EigDecomposition out;
  if (p.h.is_real() && p.s.is_real()) {
    std::vector<double> z;
    solve_generalized<double>(real_parts(p.h), real_parts(p.s), n, want_vectors,
                              out.values, want_vectors ? &z : nullptr);
    if (want_vectors) out.vectors = to_columns(z, n);
  } else {
    std::vector<cplx> z;
    solve_generalized<cplx>(p.h.data(), p.s.data(), n, want_vectors, out.values,
                            want_vectors ? &z : nullptr);
    if (want_vectors) out.vectors = to_columns(std::move(z), n);
  }
  return out;
}

namespace detail {

void ql_implicit(std::vector<double>& d, std::vector<double>& e, ColumnFamily* z,
                 int max_iter_per_index) {
  if (z != nullptr)
    ql_impl<cplx>(d, e, &z->a, z->rows, max_iter_per_index);
  else
    ql_impl<cplx>(d, e, nullptr, 0, max_iter_per_index);
}

void householder_tridiag(const DenseHermitian& a, std::vector<double>& d,
                         std::vector<double>& e, ColumnFamily* q) {
  std::vector<cplx> work = a.data();
  if (q != nullptr) {
    q->rows = q->cols = a.dim();
    tridiag_impl<cplx>(work, a.dim(), d, e, &q->a);
  } else {
    tridiag_impl<cplx>(work, a.dim(), d, e, nullptr);
  }
}

void cholesky_lower(DenseHermitian& a) { cholesky_impl<cplx>(a.data(), a.dim()); }

}  // namespace detail

}  // namespace speclab
