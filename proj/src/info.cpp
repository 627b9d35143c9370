#include "pgfcs/info.hpp"

#include <cmath>
#include <limits>

namespace pgfcs {

double entropy_of_eigenvalues(const RVec& eigs, double tol) {
  const double scale = std::max(1.0, eigs.size() ? eigs.cwiseAbs().maxCoeff() : 0.0);
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double l = eigs(i);
    if (l < -tol * scale)
      throw NotPsdError("entropy: eigenvalue " + std::to_string(l) + " below -tolerance");
    if (l > 0.0) s -= l * std::log(l);
  }
  return s;
}

double von_neumann(const CMat& rho, double tol) {
  if (rho.rows() != rho.cols()) throw DimensionError("von_neumann: matrix not square");
  const double tr_res = std::abs(rho.trace() - Complex(1, 0));
  if (tr_res > tol * rho.rows())
    throw ValidationError("von_neumann: trace deviates from 1 by " + std::to_string(tr_res));
  HermEig e = eig_hermitian(rho, tol);
  return entropy_of_eigenvalues(e.eigenvalues, std::max(tol, 1e-9));
}

namespace {

double entropy_psd(const CMat& rho) {
  Eigen::SelfAdjointEigenSolver<CMat> es((rho + rho.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return entropy_of_eigenvalues(es.eigenvalues());
}

// Marginal entropies of the purified chain state. The kept pattern selects
// which regions stay as spin factors; the complement view means the entropy
// returned is that of (R, kept spins, M).
double complement_entropy(const PgfcsModel& m, const CMat& e, const CVec& psi,
                          const Tripartition& part, bool keep_a, bool keep_b, bool keep_c,
                          const Budget& budget) {
  CMat cur = psi * psi.adjoint();  // on R (x) M
  auto section = [&](bool keep, int n) {
    if (keep) {
      for (int k = 0; k < n; ++k) {
        budget.check(static_cast<std::size_t>(cur.rows()) * m.d_s *
                         static_cast<std::size_t>(cur.rows()) * m.d_s,
                     "transfer engine");
        cur = grow_spin(cur, m.v, m.d_s, m.d_M);
      }
    } else {
      for (int k = 0; k < n; ++k) cur = transfer_step(cur, e, m.d_M);
    }
  };
  section(keep_a, part.n_a);
  section(keep_b, part.n_b);
  section(keep_c, part.n_c);
  return entropy_psd(cur);
}

CVec purification(const PgfcsModel& m) {
  HermEig e = eig_hermitian(m.sigma, 1e-9);
  CVec psi = CVec::Zero(static_cast<Eigen::Index>(m.d_M) * m.d_M);
  for (int r = 0; r < m.d_M; ++r) {
    const double l = std::max(0.0, e.eigenvalues(r));
    for (int j = 0; j < m.d_M; ++j)
      psi(static_cast<Eigen::Index>(r) * m.d_M + j) += std::sqrt(l) * e.eigenvectors(j, r);
  }
  return psi;
}

}  // namespace

double qcmi_of_state(const CMat& rho, int dim_a, int dim_b, int dim_c) {
  const std::vector<int> dims{dim_a, dim_b, dim_c};
  const double s_abc = entropy_psd(rho);
  const double s_ab = entropy_psd(partial_trace(rho, dims, {0, 1}));
  const double s_bc = entropy_psd(partial_trace(rho, dims, {1, 2}));
  const double s_b = entropy_psd(partial_trace(rho, dims, {1}));
  return s_ab + s_bc - s_abc - s_b;
}

double qmi_of_state(const CMat& rho_ac, int dim_a, int dim_c) {
  const std::vector<int> dims{dim_a, dim_c};
  return entropy_psd(partial_trace(rho_ac, dims, {0})) +
         entropy_psd(partial_trace(rho_ac, dims, {1})) - entropy_psd(rho_ac);
}

InfoReport qcmi(const PgfcsModel& m, const Tripartition& part, Engine engine,
                const Budget& budget) {
  InfoReport rep;
  rep.part = part;
  if (engine == Engine::dense) {
    const CMat rho = reduced_state(m, part, {Region::A, Region::B, Region::C}, budget);
    const long long da = static_cast<long long>(std::llround(std::pow(m.d_s, part.n_a)));
    const long long db = static_cast<long long>(std::llround(std::pow(m.d_s, part.n_b)));
    const long long dc = static_cast<long long>(std::llround(std::pow(m.d_s, part.n_c)));
    const std::vector<int> dims{static_cast<int>(da), static_cast<int>(db), static_cast<int>(dc)};
    rep.S_ABC = entropy_psd(rho);
    rep.S_AB = entropy_psd(partial_trace(rho, dims, {0, 1}));
    rep.S_BC = entropy_psd(partial_trace(rho, dims, {1, 2}));
    rep.S_B = entropy_psd(partial_trace(rho, dims, {1}));
  } else {
    const CMat e = transfer_matrix(m.v, m.d_s, m.d_M);
    const CVec psi = purification(m);
    rep.S_ABC = complement_entropy(m, e, psi, part, false, false, false, budget);
    rep.S_AB = complement_entropy(m, e, psi, part, false, false, true, budget);
    rep.S_BC = complement_entropy(m, e, psi, part, true, false, false, budget);
    rep.S_B = complement_entropy(m, e, psi, part, true, false, true, budget);
  }
  rep.qcmi = rep.S_AB + rep.S_BC - rep.S_ABC - rep.S_B;
  rep.qmi = qmi(m, part, engine, budget);
  return rep;
}

double qmi(const PgfcsModel& m, const Tripartition& part, Engine engine, const Budget& budget) {
  const long long da = static_cast<long long>(std::llround(std::pow(m.d_s, part.n_a)));
  const long long dc = static_cast<long long>(std::llround(std::pow(m.d_s, part.n_c)));
  CMat rho_ac;
  if (engine == Engine::dense) {
    const CMat rho = reduced_state(m, part, {Region::A, Region::B, Region::C}, budget);
    const long long db = static_cast<long long>(std::llround(std::pow(m.d_s, part.n_b)));
    rho_ac = partial_trace(rho, {static_cast<int>(da), static_cast<int>(db), static_cast<int>(dc)},
                           {0, 2});
  } else {
    rho_ac = reduced_state(m, part, {Region::A, Region::C}, budget);
  }
  return qmi_of_state(rho_ac, static_cast<int>(da), static_cast<int>(dc));
}

AfBound af_bound(double epsilon, int n_a, int d_s) {
  if (epsilon < 0.0 || epsilon > 2.0)
    throw DimensionError("af_bound: epsilon must lie in [0, 2]");
  AfBound out;
  if (epsilon == 0.0) return out;
  auto h = [](double p) {
    double s = 0.0;
    if (p > 0.0) s -= p * std::log(p);
    if (p < 1.0) s -= (1.0 - p) * std::log(1.0 - p);
    return s;
  };
  const double lna = n_a * std::log(static_cast<double>(d_s));
  out.full = 0.5 * epsilon * lna + (1.0 + 0.5 * epsilon) * h(epsilon / (2.0 + epsilon));
  out.simplified = epsilon * (0.5 * lna + 1.0 - 0.5 * std::log(epsilon / 2.0));
  return out;
}

double relative_entropy(const CMat& rho, const CMat& sigma, double tol) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols() || rho.rows() != rho.cols())
    throw DimensionError("relative_entropy: dimension mismatch");
  HermEig er = eig_hermitian(rho, 1e-8);
  HermEig es = eig_hermitian(sigma, 1e-8);
  const double smax = std::max(1e-300, es.eigenvalues.maxCoeff());
  // support check: weight of rho outside supp(sigma)
  double leak = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
    if (es.eigenvalues(k) > tol * smax) continue;
    const CVec u = es.eigenvectors.col(k);
    leak += std::max(0.0, (u.adjoint() * rho * u)(0, 0).real());
  }
  if (leak > tol) return std::numeric_limits<double>::infinity();
  double d = -entropy_of_eigenvalues(er.eigenvalues, 1e-8);
  for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
    if (es.eigenvalues(k) <= tol * smax) continue;
    const CVec u = es.eigenvectors.col(k);
    const double w = std::max(0.0, (u.adjoint() * rho * u)(0, 0).real());
    d -= w * std::log(es.eigenvalues(k));
  }
  return d;
}

}  // namespace pgfcs
