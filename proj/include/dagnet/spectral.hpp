#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dagnet/linalg.hpp"

namespace dagnet {

/// Symmetric linear operator known only through its action on vectors.
struct SymOperator {
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;

  std::size_t dimension = 0;
  Apply apply;
};

/// Wraps an action, spot-checking |u'Av - v'Au| <= 1e-8 |u||v| on a few
/// random pairs unless check_symmetry is false. Throws Error on failure.
SymOperator make_sym_operator(std::size_t dimension, SymOperator::Apply apply,
                              bool check_symmetry = true, std::uint64_t seed = 0x5eed);

/// Operator view of a dense matrix (the matrix must outlive the operator).
SymOperator dense_operator(const DenseMatrix& matrix, bool check_symmetry = true);

struct SpectralOptions {
  std::uint64_t seed = 0;
  double tol = 1e-6;
  std::size_t max_iter = 200;
};

struct SpectralEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double residual = 0.0;         // relative change at stop
  std::vector<double> history;   // estimate after each iteration
  std::vector<double> vector;    // last unit iterate: dominant eigenvector estimate
};

/// Power iteration with estimate sqrt(v'A^2 v) = |Av| for unit v. Each
/// iteration applies A once; the estimate sequence is that of power
/// iteration on A^2 and is non-decreasing. Throws Error on non-finite output.
SpectralEstimate spectral_norm_matfree(const SymOperator& op, const SpectralOptions& options = {});

/// Cyclic Jacobi; eigenvalues ascending. Throws Error if the matrix is not
/// symmetric within 1e-8 (relative to its largest entry, floor 1).
std::vector<double> dense_sym_eig(const DenseMatrix& matrix);

/// Smallest eigenvalue; no positive semidefiniteness is assumed.
double min_eig_psd(const DenseMatrix& matrix);

/// max |eigenvalue| via dense_sym_eig.
double dense_spectral_norm(const DenseMatrix& matrix);

}  // namespace dagnet
