#include "wgo/complexmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wgo::num {

CTensor::CTensor(Tensor r, Tensor i) : re(std::move(r)), im(std::move(i)) {
  if (re.shape() != im.shape())
    throw std::invalid_argument("complex tensor: re shape " + shape_str(re.shape()) +
                                " != im shape " + shape_str(im.shape()));
}

CTensor ct_add(const CTensor& a, const CTensor& b) {
  return {add(a.re, b.re), add(a.im, b.im)};
}

CTensor ct_sub(const CTensor& a, const CTensor& b) {
  return {sub(a.re, b.re), sub(a.im, b.im)};
}

CTensor ct_mul(const CTensor& a, const CTensor& b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)),
          add(mul(a.re, b.im), mul(a.im, b.re))};
}

CTensor ct_matmul(const CTensor& a, const CTensor& b) {
  return {sub(matmul(a.re, b.re), matmul(a.im, b.im)),
          add(matmul(a.re, b.im), matmul(a.im, b.re))};
}

CTensor ct_conj(const CTensor& a) { return {a.re, neg(a.im)}; }

CTensor ct_scale(const CTensor& a, double c) { return {scale(a.re, c), scale(a.im, c)}; }

CTensor ct_scale(const CTensor& a, const Tensor& c) { return {mul(a.re, c), mul(a.im, c)}; }

CTensor ct_transpose(const CTensor& a) { return {transpose(a.re), transpose(a.im)}; }

CTensor ct_adjoint(const CTensor& a) { return {transpose(a.re), neg(transpose(a.im))}; }

CTensor ct_reshape(const CTensor& a, Shape s) {
  return {reshape(a.re, s), reshape(a.im, std::move(s))};
}

CTensor ct_sum(const CTensor& a, std::size_t axis) {
  return {sum(a.re, axis), sum(a.im, axis)};
}

Tensor ct_abs2(const CTensor& a) { return add(square(a.re), square(a.im)); }

Tensor ct_frob2(const CTensor& a) { return sum(ct_abs2(a)); }

CTensor ct_unit_modulus(const CTensor& a) {
  Tensor inv = reciprocal(sqrt(ct_abs2(a)));
  return {mul(a.re, inv), mul(a.im, inv)};
}

// ---- plain complex matrices ----------------------------------------------

CMat cmul(const CMat& x, const CMat& y) {
  if (x.cols != y.rows)
    throw std::invalid_argument("cmul: inner dimensions " + std::to_string(x.cols) +
                                " vs " + std::to_string(y.rows));
  CMat out(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t p = 0; p < x.cols; ++p) {
      cxd xv = x(i, p);
      if (xv == cxd{0, 0}) continue;
      for (std::size_t j = 0; j < y.cols; ++j) out.a[i * y.cols + j] += xv * y(p, j);
    }
  return out;
}

CMat cadd(const CMat& x, const CMat& y) {
  CMat out = x;
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
  return out;
}

CMat csub(const CMat& x, const CMat& y) {
  CMat out = x;
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= y.a[i];
  return out;
}

CMat adjoint(const CMat& x) {
  CMat out(x.cols, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) out(j, i) = std::conj(x(i, j));
  return out;
}

CMat cscale(const CMat& x, cxd s) {
  CMat out = x;
  for (auto& v : out.a) v *= s;
  return out;
}

double frob2(const CMat& x) {
  double s = 0;
  for (const auto& v : x.a) s += std::norm(v);
  return s;
}

CMat identity(std::size_t n) {
  CMat out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

CTensor ct_constant(const CMat& m) {
  std::vector<double> re(m.a.size()), im(m.a.size());
  for (std::size_t i = 0; i < m.a.size(); ++i) {
    re[i] = m.a[i].real();
    im[i] = m.a[i].imag();
  }
  Shape s{m.rows, m.cols};
  return {Tensor(s, std::move(re)), Tensor(s, std::move(im))};
}

CMat to_cmat(const CTensor& t) {
  if (t.re.rank() != 2) throw std::invalid_argument("to_cmat: expects a 2-D tensor");
  CMat out(t.re.shape()[0], t.re.shape()[1]);
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] = {t.re.at(i), t.im.at(i)};
  return out;
}

void eig_hermitian(const CMat& h, std::vector<double>& eigenvalues, CMat& eigenvectors) {
  if (h.rows != h.cols) throw std::invalid_argument("eig_hermitian: matrix not square");
  std::size_t n = h.rows;
  CMat a = h;
  CMat v = identity(n);

  auto offdiag2 = [&]() {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += std::norm(a(i, j));
    return s;
  };

  double scale = 0;
  for (const auto& x : h.a) scale = std::max(scale, std::abs(x));
  if (scale == 0) scale = 1;
  const double tol = 1e-30 * scale * scale * static_cast<double>(n);

  for (int sweep = 0; sweep < 60 && offdiag2() > tol; ++sweep) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        cxd apq = a(p, q);
        double m = std::abs(apq);
        if (m < 1e-300) continue;
        cxd phase = apq / m;  // a(p,q) = m * phase
        double alpha = a(p, p).real(), beta = a(q, q).real();
        double tau = (beta - alpha) / (2.0 * m);
        double t = (tau >= 0 ? -1.0 : 1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        // Columns p, q rotate by [[c, -s],[s, c]] after the phase twist that
        // makes a(p,q) real.
        cxd sp = s * phase;  // complex s applied on the p side
        for (std::size_t i = 0; i < n; ++i) {
          cxd aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip + std::conj(sp) * aiq;
          a(i, q) = -sp * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          cxd apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj + sp * aqj;
          a(q, j) = -std::conj(sp) * apj + c * aqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          cxd vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip + std::conj(sp) * viq;
          v(i, q) = -sp * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i).real();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

  eigenvalues.resize(n);
  eigenvectors = CMat(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    eigenvalues[k] = diag[order[k]];
    for (std::size_t i = 0; i < n; ++i) eigenvectors(i, k) = v(i, order[k]);
  }
}

void top_right_singular(const CMat& h, std::size_t k, std::vector<double>& sigma, CMat& v) {
  std::size_t nr = h.rows, nt = h.cols;
  if (k > std::min(nr, nt))
    throw std::invalid_argument("top_right_singular: k exceeds min dimension");
  CMat hh = adjoint(h);
  std::vector<double> lam;
  CMat vecs;
  if (nr <= nt) {
    // Eigenvectors of H H^H are the left singular vectors; map to right ones.
    eig_hermitian(cmul(h, hh), lam, vecs);
    sigma.resize(k);
    v = CMat(nt, k);
    for (std::size_t c = 0; c < k; ++c) {
      sigma[c] = std::sqrt(std::max(lam[c], 0.0));
      CMat u(nr, 1);
      for (std::size_t i = 0; i < nr; ++i) u(i, 0) = vecs(i, c);
      CMat vc = cmul(hh, u);
      double nrm = std::sqrt(frob2(vc));
      for (std::size_t i = 0; i < nt; ++i) v(i, c) = vc(i, 0) / nrm;
    }
  } else {
    eig_hermitian(cmul(hh, h), lam, vecs);
    sigma.resize(k);
    v = CMat(nt, k);
    for (std::size_t c = 0; c < k; ++c) {
      sigma[c] = std::sqrt(std::max(lam[c], 0.0));
      for (std::size_t i = 0; i < nt; ++i) v(i, c) = vecs(i, c);
    }
  }
}

double log2_det_hermitian_pd(const CMat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("log2_det: matrix not square");
  std::size_t n = m.rows;
  CMat l(n, n);
  double log2det = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j).real();
    for (std::size_t p = 0; p < j; ++p) d -= std::norm(l(j, p));
    if (d <= 0) throw std::domain_error("log2_det: matrix not positive definite");
    double ljj = std::sqrt(d);
    l(j, j) = ljj;
    log2det += 2.0 * std::log2(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      cxd s = m(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * std::conj(l(j, p));
      l(i, j) = s / ljj;
    }
  }
  return log2det;
}

}  // namespace wgo::num
