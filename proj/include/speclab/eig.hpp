// Dense Hermitian and generalized-Hermitian eigensolver.
//
// Algorithm: Householder reduction to real symmetric tridiagonal form
// (complex phases absorbed into a unitary diagonal), then implicit-shift QL
// with a bounded sweep budget.  The generalized problem (h, s) is reduced by
// the Cholesky congruence s = L L^H, C = L^-1 h L^-H, which preserves the
// trial subspace exactly; the overlap is never filtered or regularized.
// Everything here is a pure function of its inputs and safe to call from
// concurrent workers.
#pragma once

#include <optional>
#include <vector>

#include "speclab/matrix.hpp"

namespace speclab {

struct EigDecomposition {
  std::vector<double> values;            // ascending, with multiplicity
  std::optional<ColumnFamily> vectors;   // orthonormal (s-orthonormal for pencils)
};

// Eigendecomposition of a Hermitian matrix.  Validates Hermiticity; throws
// ConvergenceError (naming the failing index) if the QL sweep budget of
// 50 * dim is exhausted.
EigDecomposition eig_hermitian(const DenseHermitian& m, bool want_vectors);

// Eigendecomposition of the pencil h x = lambda s x with s positive definite.
// Throws PencilError when s is not positive definite and IllConditionedError
// when the eigenvalue-ratio condition estimate of s exceeds cond_cap.
EigDecomposition eig_generalized(const GeneralizedPencil& p, bool want_vectors,
                                 double cond_cap = 1e12);

// Ratio of largest to smallest eigenvalue of a Hermitian positive definite
// matrix; throws PencilError when the smallest eigenvalue is <= 0.
double condition_estimate(const DenseHermitian& s);

namespace detail {

// Real symmetric tridiagonal eigensolver (implicit-shift QL).  d is the
// diagonal (length n), e the subdiagonal (length n-1).  If z is non-null it
// must hold an n-column family; the rotations are accumulated into it.
// max_iter_per_index bounds the QL iterations for each eigenvalue.
void ql_implicit(std::vector<double>& d, std::vector<double>& e,
                 ColumnFamily* z, int max_iter_per_index);

// Householder tridiagonalization of a Hermitian matrix.  On return d holds
// the diagonal and e the (real, nonnegative) subdiagonal of the unitarily
// equivalent real symmetric tridiagonal matrix.  If accumulate is true, q
// holds the unitary back-transformation: A = q T q^H.
void householder_tridiag(const DenseHermitian& a, std::vector<double>& d,
                         std::vector<double>& e, ColumnFamily* q);

// In-place lower Cholesky factor of a Hermitian positive definite matrix.
// Throws PencilError naming the failing pivot otherwise.
void cholesky_lower(DenseHermitian& a);

}  // namespace detail

}  // namespace speclab
