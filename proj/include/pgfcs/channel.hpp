#pragma once

#include "pgfcs/dense.hpp"

#include <optional>
#include <vector>

namespace pgfcs {

// A V-induced memory channel E(X) = tr_s(V X V^+) in matrix form, together
// with its spectrum and peripheral structure.
struct TransferOperator {
  int dim_memory = 0;
  CMat matrix;  // d_M^2 x d_M^2, element ((m,n),(i,j)) = <m| E(|i><j|) |n>
  Spectrum spectrum;
  double nu_gap = 0.0;       // largest sub-peripheral eigenvalue modulus (0 if none)
  int peripheral_count = 0;  // eigenvalues with |nu| >= 1 - tol_peripheral
  double tol_peripheral = 1e-7;
};

// Superoperator matrix of X -> tr_s(V X V^+) without channel verification.
CMat transfer_matrix(const CMat& v, int d_s, int d_M);

TransferOperator transfer_from_isometry(const CMat& v, int d_s, int d_M,
                                        double tol = 1e-10, double tol_peripheral = 1e-7);

// Wraps a precomputed superoperator matrix (must be a channel within tol).
TransferOperator transfer_from_matrix(const CMat& e, double tol_peripheral = 1e-7,
                                      double tol = 1e-9);

CMat apply_channel(const TransferOperator& t, const CMat& x, long n);
CMat apply_channel(const CMat& v, int d_s, int d_M, const CMat& x, long n);
CMat apply_channel_matrix(const CMat& e, const CMat& x, long n);

// Channel keeping only the peripheral spectral components, built from the
// bi-orthogonalized peripheral eigenvector cluster. Verified CPTP.
TransferOperator tilde_channel(const TransferOperator& t, double tol_peripheral = 1e-7);

struct ChannelDistanceReport {
  long n = 0;
  double norm22 = 0.0;
  double diamond_upper = 0.0;  // d_M * norm22
  double fitted_c = 0.0;
  double fitted_nu = 0.0;
};

// Least-squares fit of log(norm22) ~ log c + n log nu.
struct DecayFit {
  double c = 0.0;
  double nu = 0.0;
  double log_c_stderr = 0.0;
  double log_nu_stderr = 0.0;
  int points = 0;
  bool skipped = false;  // all norms below the floor
};

std::vector<ChannelDistanceReport> channel_distance(const TransferOperator& t,
                                                    const std::vector<long>& n_range,
                                                    double tol_peripheral = 1e-7);
DecayFit convergence_fit(const TransferOperator& t, const std::vector<long>& n_range,
                    double tol_peripheral = 1e-7);
DecayFit fit_decay(const std::vector<long>& n, const std::vector<double>& values,
                   double floor = 1e-14);

struct MixedPeripheral {
  double max_abs_eigenvalue = 0.0;
};
// Largest eigenvalue modulus of X -> tr_s(V_a X V_b^+).
MixedPeripheral mixed_transfer_peripheral(const CMat& v_a, const CMat& v_b, int d_s, int d_M);

// Choi matrix of the channel with superoperator matrix e.
CMat choi_matrix(const CMat& e, int d);
double choi_min_eigenvalue(const CMat& e, int d);
bool is_trace_preserving(const CMat& e, int d, double tol = 1e-9);

}  // namespace pgfcs
