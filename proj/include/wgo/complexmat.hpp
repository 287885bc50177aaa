#pragma once

// Complex matrices in two forms:
//  - CTensor: a (re, im) pair of Tensors participating in the autodiff tape.
//    Complex gradients are the independent real gradients of re and im.
//  - CMat: plain std::complex<double> storage for solver-side linear algebra,
//    with a Hermitian Jacobi eigensolver and a small Cholesky.

#include <complex>
#include <vector>

#include "wgo/tensor.hpp"

namespace wgo::num {

using cxd = std::complex<double>;

// ---- tape-attached complex tensor ---------------------------------------

struct CTensor {
  Tensor re, im;

  CTensor() = default;
  CTensor(Tensor r, Tensor i);
  const Shape& shape() const { return re.shape(); }
  cxd at(std::size_t i) const { return {re.at(i), im.at(i)}; }

  static CTensor zeros(Shape s) { return {Tensor::zeros(s), Tensor::zeros(s)}; }
};

CTensor ct_add(const CTensor& a, const CTensor& b);
CTensor ct_sub(const CTensor& a, const CTensor& b);
CTensor ct_mul(const CTensor& a, const CTensor& b);   // elementwise, broadcasts
CTensor ct_matmul(const CTensor& a, const CTensor& b);
CTensor ct_conj(const CTensor& a);
CTensor ct_scale(const CTensor& a, double c);
CTensor ct_scale(const CTensor& a, const Tensor& c);  // real scalar tensor
CTensor ct_transpose(const CTensor& a);
CTensor ct_adjoint(const CTensor& a);
CTensor ct_reshape(const CTensor& a, Shape s);
CTensor ct_sum(const CTensor& a, std::size_t axis);
Tensor ct_abs2(const CTensor& a);                     // |z|^2 elementwise
Tensor ct_frob2(const CTensor& a);                    // sum |z|^2, scalar
// z / |z| elementwise; caller guarantees no zero entries.
CTensor ct_unit_modulus(const CTensor& a);

// ---- plain complex matrices ----------------------------------------------

struct CMat {
  std::size_t rows = 0, cols = 0;
  std::vector<cxd> a;

  CMat() = default;
  CMat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, cxd{0, 0}) {}
  cxd& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const cxd& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

CMat cmul(const CMat& x, const CMat& y);
CMat cadd(const CMat& x, const CMat& y);
CMat csub(const CMat& x, const CMat& y);
CMat adjoint(const CMat& x);
CMat cscale(const CMat& x, cxd s);
double frob2(const CMat& x);
CMat identity(std::size_t n);

CTensor ct_constant(const CMat& m);
CMat to_cmat(const CTensor& t);  // 2-D only

// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
// Eigenvalues are returned in descending order with matching orthonormal
// eigenvector columns.
void eig_hermitian(const CMat& h, std::vector<double>& eigenvalues, CMat& eigenvectors);

// The k dominant right singular vectors of h (columns, orthonormal) and the
// corresponding singular values.
void top_right_singular(const CMat& h, std::size_t k, std::vector<double>& sigma, CMat& v);

// log2 det of a Hermitian positive definite matrix (via Cholesky).
double log2_det_hermitian_pd(const CMat& m);

}  // namespace wgo::num
