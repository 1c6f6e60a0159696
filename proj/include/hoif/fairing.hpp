#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hoif/graph.hpp"
#include "hoif/linalg.hpp"

namespace hoif {

/// Fairing strength, expressed either as s > 0 or as alpha = 1 / (1 + s).
class FairingConfig {
 public:
  static FairingConfig from_s(double s, double tol = 1e-10, std::size_t max_iter = 10000);
  static FairingConfig from_alpha(double alpha, double tol = 1e-10, std::size_t max_iter = 10000);

  double s() const { return s_; }
  double alpha() const { return alpha_; }
  double tol() const { return tol_; }
  std::size_t max_iter() const { return max_iter_; }

 private:
  FairingConfig(double s, double alpha, double tol, std::size_t max_iter);
  double s_;
  double alpha_;
  double tol_;
  std::size_t max_iter_;
};

struct JacobiResult {
  Matrix result;
  std::size_t iterations = 0;
  /// Max-norm of the last iterate difference (the stopping quantity).
  double final_residual = 0.0;
  /// Frobenius norm of every iterate difference, in order.
  std::vector<double> step_norms;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double final_residual)
      : std::runtime_error(what), final_residual_(final_residual) {}
  double final_residual() const { return final_residual_; }

 private:
  double final_residual_;
};

/// H = U h_s(Λ) Uᵀ X with h_s(λ) = 1 / (1 + sλ), using the eigendecomposition of L.
Matrix fair_spectral(const GraphOperators& ops, double s, const Matrix& x);

/// Solves (I + sL) H = X by Cholesky.
Matrix fair_direct(const GraphOperators& ops, double s, const Matrix& x);

/// Jacobi iteration H ← (1 - α) S H + α X starting from H = X, stopping when the
/// max-norm of the iterate difference drops below cfg.tol().
JacobiResult fair_jacobi(const GraphOperators& ops, const FairingConfig& cfg, const Matrix& x);

}  // namespace hoif
