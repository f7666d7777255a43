// Dense Hermitian matrices and generalized pencils.
//
// Every Galerkin-restricted operator in the laboratory ends up in one of the
// two containers below: a dense Hermitian matrix (orthonormal trial family)
// or a pencil (h, s) with a positive definite overlap s (non-orthonormal
// family, e.g. balanced spinor bases).  Storage is row-major complex; most
// models produce purely real symmetric entries and the solver takes a real
// fast path in that case.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab {

using cplx = std::complex<double>;

class DenseHermitian {
 public:
  DenseHermitian() = default;
  explicit DenseHermitian(std::size_t dim) : dim_(dim), a_(dim * dim) {
    if (dim == 0) throw ValidationError("DenseHermitian: dim must be >= 1");
  }

  std::size_t dim() const { return dim_; }

  cplx& at(std::size_t i, std::size_t j) { return a_[i * dim_ + j]; }
  const cplx& at(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

  std::vector<cplx>& data() { return a_; }
  const std::vector<cplx>& data() const { return a_; }

  // Largest |entry|; used to scale the Hermiticity tolerance.
  double max_abs() const;
  double frobenius() const;
  double trace_real() const;

  // Throws ValidationError if entries[i][j] != conj(entries[j][i]) beyond
  // 1e-12 * max|entry|.
  void validate_hermitian() const;

  // True when every imaginary part is negligible against the matrix scale;
  // such matrices are solved in real symmetric arithmetic.
  bool is_real() const;

  // Force exact Hermitian symmetry by averaging m and its conjugate
  // transpose (used after floating-point assembly).
  void symmetrize();

 private:
  std::size_t dim_ = 0;
  std::vector<cplx> a_;
};

// Matrix pair (form matrix, overlap matrix) of a non-orthonormal trial family.
struct GeneralizedPencil {
  DenseHermitian h;
  DenseHermitian s;
};

// Dense column family, row-major storage like DenseHermitian.
struct ColumnFamily {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<cplx> a;

  ColumnFamily() = default;
  ColumnFamily(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}
  cplx& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const cplx& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

}  // namespace speclab
