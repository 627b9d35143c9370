#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgfcs {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Index convention used throughout: factor 0 is the leftmost tensor slot and
// the most significant part of a composite index, i.e. row-major flattening.
// vec follows the same convention, vec(|i><j|) = e_{i*d+j}.

// default visibility keeps exception typeinfo shared across translation
// units when the build hides symbols (required by the python module)
#if defined(__GNUC__)
#define PGFCS_EXPORT __attribute__((visibility("default")))
#else
#define PGFCS_EXPORT
#endif

struct PGFCS_EXPORT DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PGFCS_EXPORT NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT UnsupportedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT DecompositionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PGFCS_EXPORT CutoffError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Memory guard for the dense paths. max_entries counts complex scalars of the
// largest single allocation an operation is allowed to make.
struct Budget {
  std::size_t max_entries = 50'000'000;
  void check(std::size_t entries, const std::string& what) const;
};

CMat kron(const CMat& a, const CMat& b);

// Reduced matrix on the kept factors (original order). dims are the factor
// dimensions left to right; their product must equal the matrix dimension.
CMat partial_trace(const CMat& x, const std::vector<int>& dims,
                   const std::vector<int>& keep);

CVec vec(const CMat& x);
CMat unvec(const CVec& v, int d);

struct Norms {
  double trace_norm;
  double op_norm;
  double hs_norm;
};
Norms norms(const CMat& x);
double op_norm(const CMat& x);
double trace_norm(const CMat& x);
// Trace norm of a Hermitian matrix via its eigenvalues (cheaper and exact for
// the differences of states this library mostly deals with).
double trace_norm_hermitian(const CMat& x);

struct HermEig {
  RVec eigenvalues;   // ascending
  CMat eigenvectors;  // columns
};
HermEig eig_hermitian(const CMat& x, double herm_tol = 1e-10);

CMat psd_sqrt(const CMat& x, double tol = 1e-10);
// Inverts sqrt(x) on eigenvalues > cutoff, zero below.
CMat pinv_sqrt(const CMat& x, double cutoff, double tol = 1e-10);

struct Spectrum {
  CVec eigenvalues;   // sorted by modulus, descending
  CMat right_eigvecs; // columns, unit norm
  CMat left_eigvecs;  // columns; left.col(i).adjoint()*right.col(j) = delta_ij
  bool diagonalizable = false;
  double condition = 0.0;  // condition number of the right eigenvector matrix
};

// Schur-based general eigendecomposition with explicit bi-orthogonal left
// eigenvectors. Jordan chains are not computed; defective inputs are flagged
// via diagonalizable = false (eigenvector matrix condition > 1/tol).
Spectrum eig_general(const CMat& x, double tol = 1e-8);

struct Svd {
  RVec singular_values;  // descending
  CMat u;
  CMat v;  // x = u * diag(s) * v.adjoint()
};
Svd svd(const CMat& x);

// rho = f * f.adjoint() held in factored form; dims lists the row factors.
struct StateFactor {
  std::vector<int> dims;
  CMat f;
  Eigen::Index rows() const { return f.rows(); }
  Eigen::Index rank_bound() const { return f.cols(); }
  CMat dense() const { return f * f.adjoint(); }
};

// || F F^+ - G G^+ ||_1 from the signed Gram matrix of [F G].
double trace_norm_diff_factored(const CMat& f, const CMat& g);

// Collapse traced factors of a factored state into extra columns. keep lists
// the retained factor indices in their original order.
StateFactor partial_trace_factored(const StateFactor& s, const std::vector<int>& keep,
                                   const Budget& budget = {});

// Nonzero eigenvalues of f f^+ (via the column Gram), clipped at zero.
RVec factored_eigenvalues(const CMat& f);

}  // namespace pgfcs
