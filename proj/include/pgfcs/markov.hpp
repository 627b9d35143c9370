#pragma once

#include "pgfcs/channel.hpp"
#include "pgfcs/model.hpp"

#include <optional>

namespace pgfcs {

// A sigma eigenmode tagged with its ergodic component and cyclic block.
struct MemoryMode {
  int comp = 0;
  int cyc = 0;
  double sigma_hat = 0.0;     // eigenvalue of the normalized component state
  double sigma_global = 0.0;  // eigenvalue of the global sigma
};

struct ModeBasis {
  std::vector<MemoryMode> modes;    // d_M entries
  CMat basis;                       // d_M x d_M unitary, columns = mode vectors
  std::vector<int> comp_period;     // p_alpha
  std::vector<double> comp_weight;  // lambda_alpha
};
ModeBasis mode_basis(const PgfcsModel& m, const std::vector<ErgodicComponent>& comps);

// Everything about V_B a tilde construction needs, at cost polynomial in d_M:
// the Gram matrix Q of the buffer vectors w_ij = (1 (x) <i|) V_B |j> comes
// from |B| applications of the adjoint transfer matrix, the head components
// from products of the MPS tensors. w_dense is only filled when the buffer
// dimension fits the budget.
struct BufferContext {
  int d_s = 0, d_M = 0, n_b = 0;
  long long dim_b = 0;  // -1 when d_s^n_b does not fit a long long
  ModeBasis modes;
  CMat q;       // d_M^2 x d_M^2, indexed (i*d_M + j)
  CMat w_head;  // n_head x d_M^2
  int n_head = 0;
  std::optional<CMat> w_dense;  // D_B x d_M^2
  DecayFit fit;                 // || E^n - Etilde^n || decay fit for this model
  PgfcsModel model;
};
BufferContext make_buffer_context(const PgfcsModel& m, int n_b, const Budget& budget = {},
                                  bool materialize_dense = false);

enum class TildeVariant { canonical, gram, aligned };

struct XiLabel {
  int comp = 0, cyc = 0, i = 0, j = 0;  // i, j index the mode list
};

struct XiEmbedding {
  std::optional<CMat> explicit_xi;  // D_B x K orthonormal columns
};

struct GramCutoffPolicy {
  enum class Kind { fitted, rank_target, value };
  Kind kind = Kind::fitted;
  double value = 0.0;
};

// Tilde isometry in label/coefficient form. xi vectors are linear
// combinations of the generator family [first n_head computational basis
// vectors of H_B, then the d_M^2 buffer vectors w_ij]; this keeps every
// inner product computable without materializing d_s^|B| objects.
struct TildeIsometry {
  TildeVariant variant = TildeVariant::canonical;
  int d_s = 0, d_M = 0, n_b = 0;
  std::vector<XiLabel> labels;  // K entries
  RVec coeff;                   // sqrt(p_alpha * sigma_hat_i)
  int n_head = 0;
  CMat xi_coeff;                    // (n_head + d_M^2) x K
  std::optional<CMat> xi_dense;     // D_B x K, explicit embeddings only
  std::vector<std::string> warnings;
  double gram_cutoff = 0.0;
  int k() const { return static_cast<int>(labels.size()); }
};

TildeIsometry tilde_isometry_period1(const BufferContext& ctx, const XiEmbedding& xi = {});
TildeIsometry tilde_isometry_general(const BufferContext& ctx, const XiEmbedding& xi = {});
TildeIsometry tilde_isometry_gram(const BufferContext& ctx, const GramCutoffPolicy& policy = {});

struct AlignReport {
  double hs_before = 0.0, hs_after = 0.0;
  double op_before = 0.0, op_after = 0.0;
};
TildeIsometry align_isometry(const BufferContext& ctx, const TildeIsometry& base,
                             AlignReport* report = nullptr);

// ||V_B - Vtilde_B|| in operator / Hilbert-Schmidt norm, any |B|.
double iso_op_error(const BufferContext& ctx, const TildeIsometry& t);
double iso_hs_error(const BufferContext& ctx, const TildeIsometry& t);
// Gram matrix of the xi family (K x K), for orthonormality audits.
CMat xi_gram(const BufferContext& ctx, const TildeIsometry& t);

// Dense realizations (buffer dimension within budget).
CMat materialize_xi(const BufferContext& ctx, const TildeIsometry& t, const Budget& budget = {});
CMat tilde_dense(const BufferContext& ctx, const TildeIsometry& t, const Budget& budget = {});
// Map H_M -> C^K (x) H_M with xi replaced by unit vectors; isometric image of
// Vtilde_B on its xi span, used for exact QMC checks at any |B|.
CMat compressed_tilde_map(const BufferContext& ctx, const TildeIsometry& t);

struct BoundEstimate {
  double c = 0.0, nu = 0.0, q = 0.0;
  double K = 0.0, K_tilde = 0.0;
  double predicted_trace_error = 0.0;
  double predicted_recovery_error = 0.0;
  double predicted_qcmi = 0.0;
  bool meaningful = false;  // 4 sqrt(d_M c) nu^{|B|/2} <= 2 and fit valid
};
BoundEstimate bound_estimate(const DecayFit& fit, int d_M, int d_s, int n_a, int n_b);

// rho = F F^+ factors of the chain state with optional tilde replacements.
struct Segment {
  int n_spins = 0;
  const TildeIsometry* tilde = nullptr;  // replaces the whole segment when set
  bool compressed = false;               // use the K-dimensional xi image
};
StateFactor chain_factor(const PgfcsModel& m, const std::vector<Segment>& segments,
                         const BufferContext* ctx = nullptr, const Budget& budget = {});

struct QmcApproximation {
  Tripartition part;
  TildeIsometry tilde;
  CMat tilde_rho;  // dense rho_tilde when within budget, else empty
  StateFactor rho_factor;
  StateFactor tilde_factor;
  double iso_error = 0.0;
  double trace_error = 0.0;
  double qmc_qcmi = 0.0;  // QCMI of rho_tilde, computed in the xi compression
  BoundEstimate bound;
};
QmcApproximation build_qmc(const PgfcsModel& m, const Tripartition& part,
                           const BufferContext& ctx, const TildeIsometry& tilde,
                           const Budget& budget = {});

// QCMI of rho_tilde alone, computed in the xi compression; cheap at any |B|.
double qmc_qcmi_compressed(const PgfcsModel& m, const Tripartition& part,
                           const BufferContext& ctx, const TildeIsometry& tilde,
                           const Budget& budget = {});

struct DisconnectedParts {
  int n_a1 = 1, n_b1 = 1, n_c = 1, n_b2 = 1, n_a2 = 1;
};
struct DisconnectedQmc {
  DisconnectedParts parts;
  double iso_error_1 = 0.0, iso_error_2 = 0.0;
  double trace_error = 0.0;
  double qmc_qcmi = 0.0;
  double predicted_error = 0.0;  // 8 sqrt(d_M c) nu^{min(|B1|,|B2|)/2}
};
DisconnectedQmc build_qmc_disconnected(const PgfcsModel& m, const DisconnectedParts& parts,
                                       const BufferContext& ctx1, const TildeIsometry& t1,
                                       const BufferContext& ctx2, const TildeIsometry& t2,
                                       const Budget& budget = {});

// QCMI of a state given factor dims and the A/B/C factor index sets.
double qcmi_of_partition(const CMat& rho, const std::vector<int>& dims,
                         const std::vector<int>& set_a, const std::vector<int>& set_b,
                         const std::vector<int>& set_c);

}  // namespace pgfcs
