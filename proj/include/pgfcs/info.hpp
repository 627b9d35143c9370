#pragma once

#include "pgfcs/model.hpp"

#include <map>

namespace pgfcs {

enum class Engine { dense, transfer };

struct InfoReport {
  Tripartition part;
  double S_ABC = 0.0;
  double S_AB = 0.0;
  double S_BC = 0.0;
  double S_B = 0.0;
  double qcmi = 0.0;
  double qmi = 0.0;
  std::map<std::string, double> recovery_errors;
  double af_bound = 0.0;          // filled where an epsilon is available
  double lower_bound_note = 0.0;  // eps^2 / (4 ln 2), informational only
};

// -sum lambda ln lambda in nats; eigenvalues clipped at zero.
double von_neumann(const CMat& rho, double tol = 1e-8);
double entropy_of_eigenvalues(const RVec& eigs, double tol = 1e-9);

// Entropies and QCMI for the chain state on the tripartition. The transfer
// engine computes every marginal entropy from the complement of the purified
// chain (reference R of dimension d_M purifying sigma), so its cost is
// d_M^2 * d_s^(|A|+|C|) regardless of |B|. The dense engine materializes
// rho_ABC and is the oracle.
InfoReport qcmi(const PgfcsModel& m, const Tripartition& part, Engine engine,
                const Budget& budget = {});

double qmi(const PgfcsModel& m, const Tripartition& part, Engine engine,
           const Budget& budget = {});

struct AfBound {
  double full = 0.0;        // eps/2 |A| ln d_s + (1 + eps/2) h(eps/(2+eps))
  double simplified = 0.0;  // eps (|A| ln d_s / 2 + 1 - ln(eps/2)/2)
};
AfBound af_bound(double epsilon, int n_a, int d_s);

// D(rho||sigma); +infinity when supp(rho) leaks out of supp(sigma).
double relative_entropy(const CMat& rho, const CMat& sigma, double tol = 1e-9);

// QCMI of an explicit tripartite density matrix with the given factor dims.
double qcmi_of_state(const CMat& rho, int dim_a, int dim_b, int dim_c);
double qmi_of_state(const CMat& rho_ac, int dim_a, int dim_c);

}  // namespace pgfcs
