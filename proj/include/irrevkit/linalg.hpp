#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

namespace irrevkit {

template <class Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <class Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using cplx = std::complex<double>;
using Mat = CMatrix<double>;
using Vec = CVector<double>;
using RVec = RVector<double>;

namespace linalg {

template <class Real>
CMatrix<Real> hermitize(const CMatrix<Real>& a) {
  return (a + a.adjoint()) * Real(0.5);
}

template <class Real>
Real max_abs(const CMatrix<Real>& a) {
  return a.size() == 0 ? Real(0) : a.cwiseAbs().maxCoeff();
}

template <class Real>
Real hermiticity_gap(const CMatrix<Real>& a) {
  return max_abs<Real>(a - a.adjoint());
}

// Eigenpairs of the Hermitian part, eigenvalues ascending.
template <class Real>
struct HermEig {
  RVector<Real> values;
  CMatrix<Real> vectors;
};

template <class Real>
HermEig<Real> eigh(const CMatrix<Real>& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(hermitize<Real>(h));
  return {es.eigenvalues(), es.eigenvectors()};
}

template <class Real, class F>
CMatrix<Real> apply_spectral(const HermEig<Real>& e, F f) {
  CMatrix<Real> d = e.vectors;
  for (Eigen::Index k = 0; k < e.values.size(); ++k) d.col(k) *= f(e.values(k));
  return d * e.vectors.adjoint();
}

template <class Real, class F>
CMatrix<Real> func_herm(const CMatrix<Real>& h, F f) {
  return apply_spectral<Real>(eigh<Real>(h), f);
}

// Square root of a PSD matrix; negative eigenvalues are treated as zero.
template <class Real>
CMatrix<Real> sqrtm_psd(const CMatrix<Real>& a) {
  return func_herm<Real>(a, [](Real x) -> std::complex<Real> {
    return x > 0 ? std::sqrt(x) : Real(0);
  });
}

// exp(-i t h) for Hermitian h.
template <class Real>
CMatrix<Real> expi_herm(const CMatrix<Real>& h, Real t) {
  return func_herm<Real>(h, [t](Real x) { return std::polar(Real(1), -t * x); });
}

template <class Real>
CMatrix<Real> kron(const CMatrix<Real>& a, const CMatrix<Real>& b) {
  CMatrix<Real> r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

inline int product(const std::vector<int>& dims, std::size_t first = 0,
                   std::size_t last = std::size_t(-1)) {
  if (last > dims.size()) last = dims.size();
  int p = 1;
  for (std::size_t i = first; i < last; ++i) p *= dims[i];
  return p;
}

// Maps a flat index under `dims` to the flat index after reordering
// subsystems so that new position p holds old subsystem perm[p].
inline std::vector<Eigen::Index> permutation_map(const std::vector<int>& dims,
                                                 const std::vector<int>& perm) {
  const std::size_t n = dims.size();
  const int total = product(dims);
  std::vector<int> new_dims(n);
  for (std::size_t p = 0; p < n; ++p) new_dims[p] = dims[perm[p]];
  std::vector<int> old_stride(n), new_stride(n);
  int s = 1;
  for (std::size_t i = n; i-- > 0;) { old_stride[i] = s; s *= dims[i]; }
  s = 1;
  for (std::size_t i = n; i-- > 0;) { new_stride[i] = s; s *= new_dims[i]; }
  std::vector<Eigen::Index> map(total);
  for (int idx = 0; idx < total; ++idx) {
    Eigen::Index out = 0;
    for (std::size_t p = 0; p < n; ++p) {
      int digit = (idx / old_stride[perm[p]]) % dims[perm[p]];
      out += Eigen::Index(digit) * new_stride[p];
    }
    map[idx] = out;
  }
  return map;
}

// Reorders tensor factors of an operator whose rows factor as row_dims and
// columns as col_dims.
template <class Real>
CMatrix<Real> permute(const CMatrix<Real>& m, const std::vector<int>& row_dims,
                      const std::vector<int>& col_dims, const std::vector<int>& perm) {
  auto rmap = permutation_map(row_dims, perm);
  auto cmap = permutation_map(col_dims, perm);
  CMatrix<Real> r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(rmap[i], cmap[j]) = m(i, j);
  return r;
}

template <class Real>
CMatrix<Real> permute(const CMatrix<Real>& m, const std::vector<int>& dims,
                      const std::vector<int>& perm) {
  return permute<Real>(m, dims, dims, perm);
}

// Traces out every subsystem whose keep flag is false; kept factors stay in order.
template <class Real>
CMatrix<Real> partial_trace(const CMatrix<Real>& m, const std::vector<int>& dims,
                            const std::vector<bool>& keep) {
  std::vector<int> perm;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (keep[i]) perm.push_back(int(i));
  const std::size_t nkeep = perm.size();
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (!keep[i]) perm.push_back(int(i));
  CMatrix<Real> p = permute<Real>(m, dims, perm);
  int dk = 1;
  for (std::size_t i = 0; i < nkeep; ++i) dk *= dims[perm[i]];
  const int dt = int(m.rows()) / dk;
  CMatrix<Real> r = CMatrix<Real>::Zero(dk, dk);
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j) {
      std::complex<Real> acc = 0;
      for (int a = 0; a < dt; ++a) acc += p(i * dt + a, j * dt + a);
      r(i, j) = acc;
    }
  return r;
}

// Trace over the trailing factor of dimension `dt`.
template <class Real>
CMatrix<Real> trace_out_last(const CMatrix<Real>& m, int dt) {
  const Eigen::Index dk = m.rows() / dt;
  CMatrix<Real> r = CMatrix<Real>::Zero(dk, dk);
  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index j = 0; j < dk; ++j)
      for (int a = 0; a < dt; ++a) r(i, j) += m(i * dt + a, j * dt + a);
  return r;
}

// Q factor of a thin QR with a positive real diagonal in R.
template <class Real>
CMatrix<Real> qf(const CMatrix<Real>& a) {
  Eigen::HouseholderQR<CMatrix<Real>> qr(a);
  CMatrix<Real> q = qr.householderQ() * CMatrix<Real>::Identity(a.rows(), a.cols());
  const CMatrix<Real>& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    std::complex<Real> d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

// Isometry closest to `a` in Frobenius norm.
template <class Real>
CMatrix<Real> polar_isometry(const CMatrix<Real>& a) {
  Eigen::JacobiSVD<CMatrix<Real>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

inline Mat pauli(char c) {
  Mat p(2, 2);
  switch (c) {
    case 'I': p << 1, 0, 0, 1; break;
    case 'X': p << 0, 1, 1, 0; break;
    case 'Y': p << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': p << 1, 0, 0, -1; break;
    default: p.setZero();
  }
  return p;
}

inline Mat pauli_string(const std::string& s) {
  Mat r = Mat::Identity(1, 1);
  for (char c : s) r = kron<double>(r, pauli(c));
  return r;
}

inline Mat ket_bra(const Vec& a, const Vec& b) { return a * b.adjoint(); }

inline Vec basis(int d, int i) {
  Vec v = Vec::Zero(d);
  v(i) = 1;
  return v;
}

}  // namespace linalg
}  // namespace irrevkit
