#include "pgfcs/channel.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace pgfcs {

CMat transfer_matrix(const CMat& v, int d_s, int d_M) {
  if (v.rows() != static_cast<Eigen::Index>(d_s) * d_M || v.cols() != d_M)
    throw DimensionError("transfer_matrix: V must be (d_s*d_M) x d_M");
  // E = sum_s M^s (x) conj(M^s)
  CMat e = CMat::Zero(d_M * d_M, d_M * d_M);
  for (int s = 0; s < d_s; ++s) {
    const CMat m = v.block(static_cast<Eigen::Index>(s) * d_M, 0, d_M, d_M);
    e += kron(m, m.conjugate());
  }
  return e;
}

namespace {

void classify_spectrum(TransferOperator& t) {
  t.nu_gap = 0.0;
  t.peripheral_count = 0;
  for (Eigen::Index i = 0; i < t.spectrum.eigenvalues.size(); ++i) {
    const double m = std::abs(t.spectrum.eigenvalues(i));
    if (m >= 1.0 - t.tol_peripheral)
      ++t.peripheral_count;
    else
      t.nu_gap = std::max(t.nu_gap, m);
  }
}

}  // namespace

CMat choi_matrix(const CMat& e, int d) {
  // Choi[(m,i),(n,j)] = E[(m,n),(i,j)]
  CMat c(d * d, d * d);
  for (int m = 0; m < d; ++m)
    for (int i = 0; i < d; ++i)
      for (int n = 0; n < d; ++n)
        for (int j = 0; j < d; ++j) c(m * d + i, n * d + j) = e(m * d + n, i * d + j);
  return c;
}

double choi_min_eigenvalue(const CMat& e, int d) {
  CMat c = choi_matrix(e, d);
  Eigen::SelfAdjointEigenSolver<CMat> es((c + c.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_trace_preserving(const CMat& e, int d, double tol) {
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Complex acc = 0;
      for (int m = 0; m < d; ++m) acc += e(m * d + m, i * d + j);
      const Complex want = (i == j) ? Complex(1, 0) : Complex(0, 0);
      if (std::abs(acc - want) > tol) return false;
    }
  return true;
}

TransferOperator transfer_from_isometry(const CMat& v, int d_s, int d_M, double tol,
                                        double tol_peripheral) {
  if (v.rows() != static_cast<Eigen::Index>(d_s) * d_M || v.cols() != d_M)
    throw DimensionError("transfer_from_isometry: V must be (d_s*d_M) x d_M");
  const double iso_res = (v.adjoint() * v - CMat::Identity(d_M, d_M)).norm();
  if (iso_res > tol * std::sqrt(static_cast<double>(d_M)))
    throw ValidationError("transfer_from_isometry: V is not an isometry, residual " +
                          std::to_string(iso_res));
  TransferOperator t;
  t.dim_memory = d_M;
  t.tol_peripheral = tol_peripheral;
  t.matrix = transfer_matrix(v, d_s, d_M);
  if (!is_trace_preserving(t.matrix, d_M, 1e-9))
    throw ValidationError("transfer_from_isometry: induced map is not trace-preserving");
  t.spectrum = eig_general(t.matrix);
  const double radius = std::abs(t.spectrum.eigenvalues(0));
  if (std::abs(radius - 1.0) > 1e-9)
    throw ValidationError("transfer_from_isometry: spectral radius " + std::to_string(radius));
  classify_spectrum(t);
  return t;
}

TransferOperator transfer_from_matrix(const CMat& e, double tol_peripheral, double tol) {
  if (e.rows() != e.cols()) throw DimensionError("transfer_from_matrix: not square");
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(e.rows()))));
  if (static_cast<Eigen::Index>(d) * d != e.rows())
    throw DimensionError("transfer_from_matrix: dimension is not a perfect square");
  TransferOperator t;
  t.dim_memory = d;
  t.tol_peripheral = tol_peripheral;
  t.matrix = e;
  if (!is_trace_preserving(e, d, tol))
    throw ValidationError("transfer_from_matrix: map is not trace-preserving");
  t.spectrum = eig_general(t.matrix);
  if (std::abs(std::abs(t.spectrum.eigenvalues(0)) - 1.0) > 1e-9)
    throw ValidationError("transfer_from_matrix: spectral radius != 1");
  classify_spectrum(t);
  return t;
}

CMat apply_channel_matrix(const CMat& e, const CMat& x, long n) {
  const int d = static_cast<int>(x.rows());
  if (x.rows() != x.cols() || e.rows() != static_cast<Eigen::Index>(d) * d)
    throw DimensionError("apply_channel_matrix: dimension mismatch");
  CVec v = vec(x);
  for (long k = 0; k < n; ++k) v = e * v;
  return unvec(v, d);
}

CMat apply_channel(const TransferOperator& t, const CMat& x, long n) {
  if (x.rows() != t.dim_memory || x.cols() != t.dim_memory)
    throw DimensionError("apply_channel: X must be d_M x d_M");
  return apply_channel_matrix(t.matrix, x, n);
}

CMat apply_channel(const CMat& v, int d_s, int d_M, const CMat& x, long n) {
  if (v.rows() != static_cast<Eigen::Index>(d_s) * d_M || v.cols() != d_M ||
      x.rows() != d_M || x.cols() != d_M)
    throw DimensionError("apply_channel: dimension mismatch");
  CMat cur = x;
  for (long k = 0; k < n; ++k) {
    CMat next = CMat::Zero(d_M, d_M);
    for (int s = 0; s < d_s; ++s) {
      const CMat ms = v.block(static_cast<Eigen::Index>(s) * d_M, 0, d_M, d_M);
      next += ms * cur * ms.adjoint();
    }
    cur = std::move(next);
  }
  return cur;
}

TransferOperator tilde_channel(const TransferOperator& t, double tol_peripheral) {
  const Eigen::Index n = t.spectrum.eigenvalues.size();
  std::vector<Eigen::Index> per;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(t.spectrum.eigenvalues(i)) >= 1.0 - tol_peripheral) per.push_back(i);
  if (per.empty()) throw UnsupportedModelError("tilde_channel: empty peripheral spectrum");

  // Bi-orthogonalize right/left peripheral clusters directly; this stays
  // well-conditioned even if sub-peripheral blocks are defective.
  const Eigen::Index p = static_cast<Eigen::Index>(per.size());
  CMat rp(n, p);
  for (Eigen::Index k = 0; k < p; ++k) rp.col(k) = t.spectrum.right_eigvecs.col(per[static_cast<std::size_t>(k)]);

  Spectrum adj = eig_general(t.matrix.adjoint());
  std::vector<Eigen::Index> per_adj;
  for (Eigen::Index i = 0; i < adj.eigenvalues.size(); ++i)
    if (std::abs(adj.eigenvalues(i)) >= 1.0 - tol_peripheral) per_adj.push_back(i);
  if (per_adj.size() != per.size())
    throw UnsupportedModelError("tilde_channel: peripheral multiplicity mismatch between E and E^+");
  CMat lp(n, p);
  for (Eigen::Index k = 0; k < p; ++k) lp.col(k) = adj.right_eigvecs.col(per_adj[static_cast<std::size_t>(k)]);

  CMat overlap = lp.adjoint() * rp;  // p x p
  Eigen::PartialPivLU<CMat> lu(overlap);
  const double det_mag = std::abs(lu.determinant());
  if (!(det_mag > 1e-12))
    throw UnsupportedModelError("tilde_channel: defective peripheral block (cluster overlap singular)");
  CMat dual = (lu.solve(lp.adjoint())).adjoint();  // columns dual to rp: dual^+ rp = I

  CMat lambda = CMat::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) lambda(k, k) = t.spectrum.eigenvalues(per[static_cast<std::size_t>(k)]);
  CMat e_tilde = rp * lambda * dual.adjoint();

  CMat proj = rp * dual.adjoint();
  if ((proj * proj - proj).norm() > 1e-8 * std::max(1.0, proj.norm()))
    throw UnsupportedModelError("tilde_channel: peripheral projector fails P^2 = P");

  TransferOperator out;
  out.dim_memory = t.dim_memory;
  out.tol_peripheral = tol_peripheral;
  out.matrix = e_tilde;
  if (!is_trace_preserving(e_tilde, t.dim_memory, 1e-8))
    throw UnsupportedModelError("tilde_channel: result is not trace-preserving");
  const double choi_min = choi_min_eigenvalue(e_tilde, t.dim_memory);
  if (choi_min < -1e-9)
    throw UnsupportedModelError("tilde_channel: result fails complete positivity, Choi min " +
                                std::to_string(choi_min));
  out.spectrum = eig_general(e_tilde);
  classify_spectrum(out);
  return out;
}

DecayFit fit_decay(const std::vector<long>& n, const std::vector<double>& values, double floor) {
  DecayFit fit;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (values[i] > floor) {
      xs.push_back(static_cast<double>(n[i]));
      ys.push_back(std::log(values[i]));
    }
  }
  fit.points = static_cast<int>(xs.size());
  if (fit.points < 2) {
    fit.skipped = true;
    fit.c = 0.0;
    fit.nu = 0.0;
    return fit;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double m = static_cast<double>(xs.size());
  const double det = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / det;
  const double inter = (sxx * sy - sx * sxy) / det;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (inter + slope * xs[i]);
    ss += r * r;
  }
  const double var = m > 2 ? ss / (m - 2) : 0.0;
  fit.nu = std::exp(slope);
  fit.c = std::exp(inter);
  fit.log_nu_stderr = std::sqrt(var * m / det);
  fit.log_c_stderr = std::sqrt(var * sxx / det);
  return fit;
}

namespace {

// nu from the least-squares fit; c raised so c nu^n dominates every sampled
// point, keeping the reported pair a valid bound on the tested range
DecayFit enclosing_fit(const std::vector<long>& ns, const std::vector<double>& values) {
  DecayFit fit = fit_decay(ns, values);
  if (fit.skipped || !(fit.nu > 0.0)) return fit;
  double scale = 1.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (values[i] <= 1e-14) continue;
    scale = std::max(scale, values[i] / (fit.c * std::pow(fit.nu, static_cast<double>(ns[i]))));
  }
  fit.c *= scale;
  return fit;
}

}  // namespace

std::vector<ChannelDistanceReport> channel_distance(const TransferOperator& t,
                                                    const std::vector<long>& n_range,
                                                    double tol_peripheral) {
  TransferOperator tilde = tilde_channel(t, tol_peripheral);
  std::vector<ChannelDistanceReport> out;
  std::vector<double> norms22;
  CMat en = CMat::Identity(t.matrix.rows(), t.matrix.cols());
  CMat tn = en;
  long cur = 0;
  for (long n : n_range) {
    if (n < cur) {
      en = CMat::Identity(t.matrix.rows(), t.matrix.cols());
      tn = en;
      cur = 0;
    }
    for (; cur < n; ++cur) {
      en = t.matrix * en;
      tn = tilde.matrix * tn;
    }
    ChannelDistanceReport r;
    r.n = n;
    r.norm22 = op_norm(en - tn);
    r.diamond_upper = t.dim_memory * r.norm22;
    out.push_back(r);
    norms22.push_back(r.norm22);
  }
  DecayFit fit = enclosing_fit(n_range, norms22);
  for (auto& r : out) {
    r.fitted_c = fit.c;
    r.fitted_nu = fit.nu;
  }
  return out;
}

DecayFit convergence_fit(const TransferOperator& t, const std::vector<long>& n_range,
                    double tol_peripheral) {
  TransferOperator tilde = tilde_channel(t, tol_peripheral);
  std::vector<double> norms22;
  for (long n : n_range) {
    CMat en = CMat::Identity(t.matrix.rows(), t.matrix.cols());
    CMat tn = en;
    for (long k = 0; k < n; ++k) {
      en = t.matrix * en;
      tn = tilde.matrix * tn;
    }
    norms22.push_back(op_norm(en - tn));
  }
  return enclosing_fit(n_range, norms22);
}

MixedPeripheral mixed_transfer_peripheral(const CMat& v_a, const CMat& v_b, int d_s, int d_M) {
  if (v_a.rows() != static_cast<Eigen::Index>(d_s) * d_M || v_a.cols() != d_M ||
      v_b.rows() != v_a.rows() || v_b.cols() != v_a.cols())
    throw DimensionError("mixed_transfer_peripheral: dimension mismatch");
  // X -> tr_s(V_a X V_b^+) = sum_s M_a^s X M_b^{s+}
  CMat e = CMat::Zero(d_M * d_M, d_M * d_M);
  for (int s = 0; s < d_s; ++s) {
    const CMat ma = v_a.block(static_cast<Eigen::Index>(s) * d_M, 0, d_M, d_M);
    const CMat mb = v_b.block(static_cast<Eigen::Index>(s) * d_M, 0, d_M, d_M);
    e += kron(ma, mb.conjugate());
  }
  Spectrum sp = eig_general(e);
  MixedPeripheral out;
  out.max_abs_eigenvalue = sp.eigenvalues.size() ? std::abs(sp.eigenvalues(0)) : 0.0;
  return out;
}

}  // namespace pgfcs
