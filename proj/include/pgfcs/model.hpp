#pragma once

#include "pgfcs/channel.hpp"
#include "pgfcs/dense.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace pgfcs {

// The generating pair (V, sigma): V an isometry H_M -> H_s (x) H_M stored as a
// (d_s*d_M) x d_M matrix, sigma a full-rank memory state with tr_s(V sigma V^+) = sigma.
struct PgfcsModel {
  int d_s = 0;
  int d_M = 0;
  CMat v;
  CMat sigma;
  std::string label;
};

struct ValidationIssue {
  std::string check;
  double residual = 0.0;
  bool pass = false;
  std::string detail;
};
struct ValidationReport {
  bool pass = false;
  std::vector<ValidationIssue> issues;
  std::string summary() const;
};
ValidationReport validate(const PgfcsModel& m, double tol = 1e-10);
void validate_or_throw(const PgfcsModel& m, double tol = 1e-10);

struct Tripartition {
  int n_a = 1;
  int n_b = 1;
  int n_c = 1;
  bool buffer_feasible(int d_s, int d_M) const;  // d_s^n_b >= d_M^2
  int total() const { return n_a + n_b + n_c; }
};

enum class Region { A, B, C };

// n-fold product isometry V_n : H_M -> H_s^{(x)n} (x) H_M.
CMat isometry_power(const PgfcsModel& m, int n, const Budget& budget = {});

// rho on the kept regions; traced spins are contracted through the transfer
// channel instead of being materialized (left-to-right A -> B -> C).
CMat reduced_state(const PgfcsModel& m, const Tripartition& part,
                   const std::set<Region>& keep, const Budget& budget = {});

// One spin appended on the right of the kept block: X on K (x) M -> (1 (x) V) X (..)^+.
CMat grow_spin(const CMat& x, const CMat& v, int d_s, int d_M);
// Transfer step on the trailing memory factor.
CMat transfer_step(const CMat& x, const CMat& e, int d_M);

struct PeriodStructure {
  int period = 1;
  std::vector<CMat> cyclic_projectors;  // Pi_k, k = 0..p-1, in the model's basis
};
// Period and cyclic projectors of an ergodic model (eigenvalue 1 ungenerate).
PeriodStructure period_structure(const PgfcsModel& ergodic, double tol_peripheral = 1e-7);

struct ErgodicComponent {
  CMat projector;    // global d_M x d_M orthogonal projector
  CMat block_basis;  // d_M x m isometry onto the block
  double weight = 0.0;
  PgfcsModel sub;  // (V_alpha, sigma_alpha) on the block
  int period = 1;
  std::vector<CMat> cyclic_projectors;  // block-local m x m
};
std::vector<ErgodicComponent> ergodic_decompose(const PgfcsModel& m, double tol = 1e-8);

bool equivalence_check(const ErgodicComponent& a, const ErgodicComponent& b, double tol = 1e-8);

std::vector<CMat> to_mps_tensor(const PgfcsModel& m);
PgfcsModel from_mps_tensor(const std::vector<CMat>& tensors, const CMat& sigma,
                           const std::string& label = "");

// Model file I/O (JSON schema "pgfcs-model/1", [re, im] pairs row-major).
PgfcsModel load_model(const std::string& path);
PgfcsModel parse_model(const std::string& text, const std::string& origin = "<string>");
std::string model_to_json(const PgfcsModel& m);
void save_model(const PgfcsModel& m, const std::string& path);

// Builtin models: aklt, aklt-v2, two-component, period2, product.
PgfcsModel builtin_model(const std::string& name);
std::vector<std::string> builtin_names();
// Resolves "builtin:NAME" or a file path.
PgfcsModel resolve_model(const std::string& source);

// Random valid model: Haar-style isometry, sigma = its full-rank fixed point.
PgfcsModel random_model(int d_s, int d_M, std::uint64_t seed);

}  // namespace pgfcs
