#include "dagnet/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/random.hpp"

namespace dagnet {

SymOperator make_sym_operator(std::size_t dimension, SymOperator::Apply apply,
                              bool check_symmetry, std::uint64_t seed) {
  SymOperator op{dimension, std::move(apply)};
  if (!check_symmetry || dimension == 0) return op;
  SeededStream rng(seed);
  std::vector<double> u(dimension), v(dimension), au(dimension), av(dimension);
  for (int trial = 0; trial < 3; ++trial) {
    for (std::size_t i = 0; i < dimension; ++i) {
      u[i] = rng.normal();
      v[i] = rng.normal();
    }
    op.apply(u, au);
    op.apply(v, av);
    const double defect = std::abs(dot(u, av) - dot(v, au));
    if (defect > 1e-8 * norm2(u) * norm2(v)) {
      throw Error(fmt::format("operator is not symmetric: |u'Av - v'Au| = {:.3e}", defect));
    }
  }
  return op;
}

SymOperator dense_operator(const DenseMatrix& matrix, bool check_symmetry) {
  return make_sym_operator(
      matrix.size(),
      [&matrix](std::span<const double> x, std::span<double> y) { matrix.multiply(x, y); },
      check_symmetry);
}

SpectralEstimate spectral_norm_matfree(const SymOperator& op, const SpectralOptions& options) {
  if (op.dimension == 0) throw Error("spectral norm of an empty operator");
  SeededStream rng(options.seed);
  std::vector<double> v(op.dimension), w(op.dimension);
  for (double& x : v) x = rng.normal();
  scale_in_place(1.0 / norm2(v), v);

  SpectralEstimate est;
  double previous = 0.0;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    op.apply(v, w);
    const double value = norm2(w);
    if (!std::isfinite(value)) throw Error("operator produced a non-finite value");
    est.iterations = it;
    est.history.push_back(value);
    est.value = value;
    if (value == 0.0) {
      // A v = 0 for a generic start: the operator is zero.
      est.residual = 0.0;
      est.converged = true;
      est.vector = std::move(v);
      return est;
    }
    est.residual = it > 1 ? std::abs(value - previous) / value : 1.0;
    if (it > 1 && est.residual < options.tol) {
      est.converged = true;
      est.vector = std::move(v);
      return est;
    }
    previous = value;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / value;
  }
  est.vector = std::move(v);
  return est;
}

namespace {

void require_symmetric(const DenseMatrix& a) {
  double biggest = 1.0;
  for (double x : a.data()) biggest = std::max(biggest, std::abs(x));
  if (a.asymmetry() > 1e-8 * biggest) {
    throw Error(fmt::format("matrix is not symmetric (defect {:.3e})", a.asymmetry()));
  }
}

double off_diagonal_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<double> dense_sym_eig(const DenseMatrix& matrix) {
  require_symmetric(matrix);
  const std::size_t n = matrix.size();
  DenseMatrix a = matrix;
  // Symmetrize exactly so rotations act on a symmetric matrix.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  }
  const double threshold = 1e-12 * a.frobenius_norm();
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a) > threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double min_eig_psd(const DenseMatrix& matrix) {
  if (matrix.size() == 0) throw Error("empty matrix has no eigenvalues");
  return dense_sym_eig(matrix).front();
}

double dense_spectral_norm(const DenseMatrix& matrix) {
  if (matrix.size() == 0) return 0.0;
  const auto eig = dense_sym_eig(matrix);
  return std::max(std::abs(eig.front()), std::abs(eig.back()));
}

}  // namespace dagnet
