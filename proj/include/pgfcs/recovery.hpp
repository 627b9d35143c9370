#pragma once

#include "pgfcs/markov.hpp"

namespace pgfcs {

enum class RecoveryKind { petz, structural };

// Channels are stored by their action closures (marginal matrices and the xi
// isomorphism), not Kraus decompositions; a Choi check exists for small dims.
struct RecoveryChannel {
  RecoveryKind kind = RecoveryKind::petz;
  int dim_b = 0, dim_c = 0;
  double cutoff = 0.0;
  // petz closure, spectral form: rho_B = U diag(e) U^+ on its support
  CMat b_basis;     // D_B x k support basis of rho_B
  RVec b_inv_sqrt;  // e^{-1/2} on the support
  CMat bc_basis;    // D_B*D_C x k'
  RVec bc_sqrt;
  // structural closure
  CMat iso;  // K x D_B, rows <xi_t|
  struct Block {
    std::vector<int> j_modes, i_modes;     // b^l and b^r mode labels
    std::vector<std::vector<int>> t_grid;  // t index at (j_pos, i_pos)
    double weight = 0.0;
    CMat marg_factor;  // (|i| * D_C) x r with rho_{b^r C} = M M^+
  };
  std::vector<Block> blocks;
  // off-support embedding: complement of supp(rho_B) tensored with tau_c
  CMat tau_c_factor;  // D_C x r
};

RecoveryChannel make_petz(const CMat& rho_b, const CMat& rho_bc, int dim_b, int dim_c,
                          double cutoff_rel = 1e-12, const CMat* tau_c = nullptr);
RecoveryChannel make_petz_factored(const CMat& f_b, const CMat& f_bc, int dim_b, int dim_c,
                                   double cutoff_rel = 1e-12, const CMat* tau_c = nullptr);
// Petz channel from the QMC state's own marginals.
RecoveryChannel petz_from_qmc(const QmcApproximation& qmc, const Budget& budget = {},
                              const CMat* tau_c = nullptr);
// Structural channel from the xi-label isomorphism of a tilde isometry.
RecoveryChannel make_structural(const BufferContext& ctx, const TildeIsometry& t,
                                const Tripartition& part, const Budget& budget = {},
                                const CMat* tau_c = nullptr);

// validate_input rejects inputs that are not PSD within tolerance; the Choi
// construction turns it off to probe the linear action on matrix units.
CMat petz_apply(const RecoveryChannel& rc, const CMat& x_ab, bool validate_input = true);
CMat structural_apply(const RecoveryChannel& rc, const CMat& x_ab, bool validate_input = true);
CMat recover(const RecoveryChannel& rc, const CMat& x_ab, bool validate_input = true);

// Factored application for PSD inputs (x = F F^+ on A (x) B).
CMat recover_factored(const RecoveryChannel& rc, const CMat& f_ab, int dim_a,
                      const Budget& budget = {});

double recovery_error(const CMat& rho_abc, const CMat& recovered);

// Choi matrix of the B -> BC channel (small dimensions only).
CMat recovery_choi(const RecoveryChannel& rc, const Budget& budget = {});

}  // namespace pgfcs
