#include "pgfcs/dense.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pgfcs {

void Budget::check(std::size_t entries, const std::string& what) const {
  if (entries > max_entries) {
    throw ResourceError("budget exceeded in " + what + ": " + std::to_string(entries) +
                        " entries > " + std::to_string(max_entries));
  }
}

CMat kron(const CMat& a, const CMat& b) {
  const long long rows = static_cast<long long>(a.rows()) * b.rows();
  const long long cols = static_cast<long long>(a.cols()) * b.cols();
  if (rows <= 0 || cols <= 0 || rows > (1LL << 31) || cols > (1LL << 31))
    throw DimensionError("kron: dimension product overflow");
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMat partial_trace(const CMat& x, const std::vector<int>& dims, const std::vector<int>& keep) {
  if (x.rows() != x.cols()) throw DimensionError("partial_trace: matrix not square");
  long long total = 1;
  for (int d : dims) {
    if (d <= 0) throw DimensionError("partial_trace: nonpositive factor dimension");
    total *= d;
  }
  if (total != x.rows()) throw DimensionError("partial_trace: dims product != matrix dimension");
  std::vector<char> kept(dims.size(), 0);
  for (int k : keep) {
    if (k < 0 || k >= static_cast<int>(dims.size())) throw DimensionError("partial_trace: keep index out of range");
    kept[static_cast<std::size_t>(k)] = 1;
  }

  long long dk = 1, dt = 1;
  for (std::size_t f = 0; f < dims.size(); ++f) (kept[f] ? dk : dt) *= dims[f];

  // strides of each factor in the composite index (factor 0 most significant)
  std::vector<long long> stride(dims.size());
  long long s = 1;
  for (std::size_t f = dims.size(); f-- > 0;) {
    stride[f] = s;
    s *= dims[f];
  }
  // map (kept multi-index, traced multi-index) -> composite index
  std::vector<std::size_t> kept_f, traced_f;
  for (std::size_t f = 0; f < dims.size(); ++f) (kept[f] ? kept_f : traced_f).push_back(f);

  auto offsets = [&](const std::vector<std::size_t>& fs) {
    std::vector<long long> off(1, 0);
    for (std::size_t f : fs) {
      std::vector<long long> next;
      next.reserve(off.size() * static_cast<std::size_t>(dims[f]));
      for (long long o : off)
        for (int v = 0; v < dims[f]; ++v) next.push_back(o + v * stride[f]);
      off = std::move(next);
    }
    return off;
  };
  const std::vector<long long> kept_off = offsets(kept_f);
  const std::vector<long long> traced_off = offsets(traced_f);

  CMat out = CMat::Zero(dk, dk);
  for (long long r = 0; r < dk; ++r)
    for (long long c = 0; c < dk; ++c) {
      Complex acc = 0;
      for (long long t : traced_off) acc += x(kept_off[static_cast<std::size_t>(r)] + t, kept_off[static_cast<std::size_t>(c)] + t);
      out(r, c) = acc;
    }
  return out;
}

CVec vec(const CMat& x) {
  CVec v(x.rows() * x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
  return v;
}

CMat unvec(const CVec& v, int d) {
  if (static_cast<long long>(d) * d != v.size()) throw DimensionError("unvec: length is not d^2");
  CMat x(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = v(i * d + j);
  return x;
}

Svd svd(const CMat& x) {
  Eigen::JacobiSVD<CMat> solver(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return Svd{solver.singularValues(), solver.matrixU(), solver.matrixV()};
}

Norms norms(const CMat& x) {
  Eigen::JacobiSVD<CMat> solver(x);
  const RVec s = solver.singularValues();
  return Norms{s.sum(), s.size() ? s(0) : 0.0, x.norm()};
}

double op_norm(const CMat& x) {
  Eigen::JacobiSVD<CMat> solver(x);
  return solver.singularValues().size() ? solver.singularValues()(0) : 0.0;
}

double trace_norm(const CMat& x) {
  Eigen::JacobiSVD<CMat> solver(x);
  return solver.singularValues().sum();
}

double trace_norm_hermitian(const CMat& x) {
  Eigen::SelfAdjointEigenSolver<CMat> es(x, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

HermEig eig_hermitian(const CMat& x, double herm_tol) {
  if (x.rows() != x.cols()) throw DimensionError("eig_hermitian: matrix not square");
  const double scale = std::max(1.0, x.norm());
  if ((x - x.adjoint()).norm() > herm_tol * scale)
    throw NumericalError("eig_hermitian: matrix not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<CMat> es((x + x.adjoint()) / 2.0);
  if (es.info() != Eigen::Success) throw NumericalError("eig_hermitian: solver failed");
  return HermEig{es.eigenvalues(), es.eigenvectors()};
}

CMat psd_sqrt(const CMat& x, double tol) {
  HermEig e = eig_hermitian(x, tol);
  const double scale = std::max(1.0, e.eigenvalues.size() ? e.eigenvalues.cwiseAbs().maxCoeff() : 0.0);
  RVec s = e.eigenvalues;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < -tol * scale) throw NotPsdError("psd_sqrt: negative eigenvalue " + std::to_string(s(i)));
    s(i) = std::sqrt(std::max(0.0, s(i)));
  }
  return e.eigenvectors * s.asDiagonal() * e.eigenvectors.adjoint();
}

CMat pinv_sqrt(const CMat& x, double cutoff, double tol) {
  HermEig e = eig_hermitian(x, tol);
  const double scale = std::max(1.0, e.eigenvalues.size() ? e.eigenvalues.cwiseAbs().maxCoeff() : 0.0);
  RVec s = e.eigenvalues;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < -tol * scale) throw NotPsdError("pinv_sqrt: negative eigenvalue " + std::to_string(s(i)));
    s(i) = s(i) > cutoff ? 1.0 / std::sqrt(s(i)) : 0.0;
  }
  return e.eigenvectors * s.asDiagonal() * e.eigenvectors.adjoint();
}

namespace {

// Right eigenvectors of an upper triangular matrix by guarded back-substitution.
CMat triangular_eigenvectors(const CMat& t) {
  const Eigen::Index n = t.rows();
  const double unfl = 1e-300;
  const double small = std::numeric_limits<double>::epsilon() * std::max(1.0, t.norm());
  CMat y = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, i) = 1.0;
    for (Eigen::Index k = i - 1; k >= 0; --k) {
      Complex rhs = 0;
      for (Eigen::Index j = k + 1; j <= i; ++j) rhs += t(k, j) * y(j, i);
      Complex den = t(k, k) - t(i, i);
      if (std::abs(den) < small) den = (small > unfl ? small : unfl);
      y(k, i) = -rhs / den;
    }
    const double nrm = y.col(i).norm();
    if (nrm > 0) y.col(i) /= nrm;
  }
  return y;
}

}  // namespace

Spectrum eig_general(const CMat& x, double tol) {
  if (x.rows() != x.cols()) throw DimensionError("eig_general: matrix not square");
  const Eigen::Index n = x.rows();
  Spectrum out;
  if (n == 0) {
    out.diagonalizable = true;
    return out;
  }
  Eigen::ComplexSchur<CMat> schur(x, true);
  if (schur.info() != Eigen::Success) throw NumericalError("eig_general: Schur iteration failed");
  const CMat& t = schur.matrixT();
  const CMat& u = schur.matrixU();

  CMat right = u * triangular_eigenvectors(t);
  CVec vals(n);
  for (Eigen::Index i = 0; i < n; ++i) vals(i) = t(i, i);

  // sort by modulus descending; deterministic tie-break
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(vals(a)), mb = std::abs(vals(b));
    if (ma != mb) return ma > mb;
    if (vals(a).real() != vals(b).real()) return vals(a).real() > vals(b).real();
    return vals(a).imag() > vals(b).imag();
  });
  CVec sv(n);
  CMat sr(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sv(i) = vals(order[static_cast<std::size_t>(i)]);
    sr.col(i) = right.col(order[static_cast<std::size_t>(i)]);
  }
  out.eigenvalues = sv;
  out.right_eigvecs = sr;

  Eigen::JacobiSVD<CMat> rsvd(sr);
  const double smax = rsvd.singularValues()(0);
  const double smin = rsvd.singularValues()(n - 1);
  out.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  out.diagonalizable = std::isfinite(out.condition) && out.condition <= 1.0 / tol;

  if (out.diagonalizable) {
    // rows of sr^{-1} are the bi-orthogonal left eigenvectors
    CMat inv = Eigen::PartialPivLU<CMat>(sr).inverse();
    out.left_eigvecs = inv.adjoint();
  } else {
    out.left_eigvecs = CMat::Zero(n, n);
  }
  return out;
}

double trace_norm_diff_factored(const CMat& f, const CMat& g) {
  if (f.rows() != g.rows()) throw DimensionError("trace_norm_diff_factored: row mismatch");
  const Eigen::Index rf = f.cols(), rg = g.cols();
  CMat h(f.rows(), rf + rg);
  h.leftCols(rf) = f;
  h.rightCols(rg) = g;
  // H = QR; the nonzero spectrum of H J H^+ is that of R J R^+, a small
  // Hermitian matrix. Going through R instead of sqrt(H^+ H) keeps full
  // precision when the difference is near zero.
  Eigen::HouseholderQR<CMat> qr(h);
  CMat r = qr.matrixQR()
               .topRows(std::min<Eigen::Index>(h.rows(), rf + rg))
               .triangularView<Eigen::Upper>();
  if (r.rows() < rf + rg) {
    CMat padded = CMat::Zero(rf + rg, rf + rg);
    padded.topRows(r.rows()) = r;
    r = std::move(padded);
  }
  CMat j = CMat::Identity(rf + rg, rf + rg);
  j.bottomRightCorner(rg, rg) *= -1.0;
  return trace_norm_hermitian(r * j * r.adjoint());
}

StateFactor partial_trace_factored(const StateFactor& s, const std::vector<int>& keep, const Budget& budget) {
  long long total = 1;
  for (int d : s.dims) total *= d;
  if (total != s.f.rows()) throw DimensionError("partial_trace_factored: dims mismatch");
  std::vector<char> kept(s.dims.size(), 0);
  for (int k : keep) kept.at(static_cast<std::size_t>(k)) = 1;

  long long dk = 1, dt = 1;
  for (std::size_t f = 0; f < s.dims.size(); ++f) (kept[f] ? dk : dt) *= s.dims[f];
  budget.check(static_cast<std::size_t>(dk) * static_cast<std::size_t>(dt) * static_cast<std::size_t>(s.f.cols()),
               "partial_trace_factored");

  std::vector<long long> stride(s.dims.size());
  long long acc = 1;
  for (std::size_t f = s.dims.size(); f-- > 0;) {
    stride[f] = acc;
    acc *= s.dims[f];
  }
  std::vector<std::size_t> kept_f, traced_f;
  for (std::size_t f = 0; f < s.dims.size(); ++f) (kept[f] ? kept_f : traced_f).push_back(f);
  auto offsets = [&](const std::vector<std::size_t>& fs) {
    std::vector<long long> off(1, 0);
    for (std::size_t f : fs) {
      std::vector<long long> next;
      next.reserve(off.size() * static_cast<std::size_t>(s.dims[f]));
      for (long long o : off)
        for (int v = 0; v < s.dims[f]; ++v) next.push_back(o + v * stride[f]);
      off = std::move(next);
    }
    return off;
  };
  const auto kept_off = offsets(kept_f);
  const auto traced_off = offsets(traced_f);

  StateFactor out;
  for (std::size_t f : kept_f) out.dims.push_back(s.dims[f]);
  out.f = CMat(dk, s.f.cols() * static_cast<Eigen::Index>(traced_off.size()));
  for (std::size_t t = 0; t < traced_off.size(); ++t)
    for (long long r = 0; r < dk; ++r)
      out.f.block(r, static_cast<Eigen::Index>(t) * s.f.cols(), 1, s.f.cols()) =
          s.f.row(kept_off[static_cast<std::size_t>(r)] + traced_off[t]);
  return out;
}

RVec factored_eigenvalues(const CMat& f) {
  CMat gram = f.adjoint() * f;
  Eigen::SelfAdjointEigenSolver<CMat> es((gram + gram.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  RVec v = es.eigenvalues();
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::max(0.0, v(i));
  return v;
}

}  // namespace pgfcs
