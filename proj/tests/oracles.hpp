#pragma once

// Test-side oracles, kept independent of the library code paths they check.

#include "pgfcs/dense.hpp"
#include "pgfcs/model.hpp"

#include <complex>
#include <random>
#include <vector>

namespace oracle {

using pgfcs::CMat;
using pgfcs::Complex;
using pgfcs::CVec;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline CMat random_matrix(int rows, int cols, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  CMat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Complex(n(g), n(g));
  return m;
}

inline CMat random_unitary(int d, std::mt19937_64& g) {
  CMat a = random_matrix(d, d, g);
  Eigen::HouseholderQR<CMat> qr(a);
  CMat q = qr.householderQ();
  CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
  return q;
}

inline CMat random_psd(int d, std::mt19937_64& g) {
  CMat a = random_matrix(d, d, g);
  return a * a.adjoint();
}

inline CMat random_state(int d, std::mt19937_64& g) {
  CMat rho = random_psd(d, g);
  return rho / rho.trace();
}

// independent index-loop partial trace: keep factors listed in `keep`
inline CMat partial_trace_loops(const CMat& x, const std::vector<int>& dims,
                                const std::vector<int>& keep) {
  const int nf = static_cast<int>(dims.size());
  std::vector<char> kept(static_cast<std::size_t>(nf), 0);
  for (int k : keep) kept[static_cast<std::size_t>(k)] = 1;
  long long dk = 1;
  for (int f = 0; f < nf; ++f)
    if (kept[static_cast<std::size_t>(f)]) dk *= dims[static_cast<std::size_t>(f)];
  long long total = 1;
  for (int d : dims) total *= d;

  auto digits = [&](long long idx) {
    std::vector<int> out(static_cast<std::size_t>(nf));
    for (int f = nf - 1; f >= 0; --f) {
      out[static_cast<std::size_t>(f)] = static_cast<int>(idx % dims[static_cast<std::size_t>(f)]);
      idx /= dims[static_cast<std::size_t>(f)];
    }
    return out;
  };
  auto kept_index = [&](const std::vector<int>& dig) {
    long long idx = 0;
    for (int f = 0; f < nf; ++f)
      if (kept[static_cast<std::size_t>(f)])
        idx = idx * dims[static_cast<std::size_t>(f)] + dig[static_cast<std::size_t>(f)];
    return idx;
  };
  auto traced_match = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (int f = 0; f < nf; ++f)
      if (!kept[static_cast<std::size_t>(f)] &&
          a[static_cast<std::size_t>(f)] != b[static_cast<std::size_t>(f)])
        return false;
    return true;
  };
  CMat out = CMat::Zero(dk, dk);
  for (long long r = 0; r < total; ++r) {
    const auto dr = digits(r);
    for (long long c = 0; c < total; ++c) {
      const auto dc = digits(c);
      if (!traced_match(dr, dc)) continue;
      out(kept_index(dr), kept_index(dc)) += x(r, c);
    }
  }
  return out;
}

// characteristic polynomial coefficients by the Faddeev-LeVerrier recursion:
// p(z) = z^n + c[1] z^{n-1} + ... + c[n]
inline std::vector<Complex> char_poly(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<Complex> c(static_cast<std::size_t>(n) + 1);
  c[0] = 1.0;
  CMat m = CMat::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(k - 1)] * CMat::Identity(n, n);
    c[static_cast<std::size_t>(k)] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

// n-fold channel application by explicit Kraus loops
inline CMat channel_power_loops(const pgfcs::PgfcsModel& m, const CMat& x, int n) {
  CMat cur = x;
  for (int step = 0; step < n; ++step) {
    CMat next = CMat::Zero(m.d_M, m.d_M);
    for (int s = 0; s < m.d_s; ++s) {
      const CMat ms = m.v.block(static_cast<Eigen::Index>(s) * m.d_M, 0, m.d_M, m.d_M);
      next += ms * cur * ms.adjoint();
    }
    cur = next;
  }
  return cur;
}

// reference n-fold product isometry via explicit kron with the identity
inline CMat isometry_product_kron(const pgfcs::PgfcsModel& m, int n) {
  CMat w = CMat::Identity(m.d_M, m.d_M);
  long long dspin = 1;
  for (int k = 0; k < n; ++k) {
    w = pgfcs::kron(CMat::Identity(dspin, dspin), m.v) * w;
    dspin *= m.d_s;
  }
  return w;
}

// dense rho on |A|+|B|+|C| spins via the reference product isometry
inline CMat dense_chain_state(const pgfcs::PgfcsModel& m, int n_spins) {
  const CMat w = isometry_product_kron(m, n_spins);
  const CMat full = w * m.sigma * w.adjoint();
  long long dspin = 1;
  for (int k = 0; k < n_spins; ++k) dspin *= m.d_s;
  std::vector<int> dims{static_cast<int>(dspin), m.d_M};
  return partial_trace_loops(full, dims, {0});
}

}  // namespace oracle
