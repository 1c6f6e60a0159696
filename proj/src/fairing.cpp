#include "hoif/fairing.hpp"

#include <cmath>
#include <sstream>

namespace hoif {

FairingConfig::FairingConfig(double s, double alpha, double tol, std::size_t max_iter)
    : s_(s), alpha_(alpha), tol_(tol), max_iter_(max_iter) {
  if (!(tol_ > 0.0)) throw std::invalid_argument("FairingConfig: tol must be positive");
  if (max_iter_ < 1) throw std::invalid_argument("FairingConfig: max_iter must be >= 1");
}

FairingConfig FairingConfig::from_s(double s, double tol, std::size_t max_iter) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("FairingConfig: s must be finite and >= 0");
  return FairingConfig(s, 1.0 / (1.0 + s), tol, max_iter);
}

FairingConfig FairingConfig::from_alpha(double alpha, double tol, std::size_t max_iter) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("FairingConfig: alpha must lie in (0, 1]");
  return FairingConfig((1.0 - alpha) / alpha, alpha, tol, max_iter);
}

namespace {

void check_signal(const GraphOperators& ops, const Matrix& x, const char* who) {
  if (x.rows() != ops.num_nodes()) {
    throw DimensionError(std::string(who) + ": signal " + x.shape_string() + " does not match graph with " +
                         std::to_string(ops.num_nodes()) + " nodes");
  }
}

void check_strength(double s, const char* who) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument(std::string(who) + ": s must be finite and >= 0");
}

}  // namespace

Matrix fair_spectral(const GraphOperators& ops, double s, const Matrix& x) {
  check_signal(ops, x, "fair_spectral");
  check_strength(s, "fair_spectral");
  const auto eig = sym_eigen(ops.laplacian);
  Matrix coeffs = matmul_tn(eig.vectors, x);  // Uᵀ X
  for (std::size_t i = 0; i < coeffs.rows(); ++i) {
    const double gain = 1.0 / (1.0 + s * eig.values[i]);
    for (double& v : coeffs.row(i)) v *= gain;
  }
  return matmul(eig.vectors, coeffs);
}

Matrix fair_direct(const GraphOperators& ops, double s, const Matrix& x) {
  check_signal(ops, x, "fair_direct");
  check_strength(s, "fair_direct");
  Matrix system = Matrix::identity(ops.num_nodes());
  system.add_scaled(ops.laplacian, s);
  return solve_spd(system, x);
}

JacobiResult fair_jacobi(const GraphOperators& ops, const FairingConfig& cfg, const Matrix& x) {
  check_signal(ops, x, "fair_jacobi");
  const double alpha = cfg.alpha();
  JacobiResult out;
  Matrix h = x;
  double diff = 0.0;
  for (std::size_t t = 1; t <= cfg.max_iter(); ++t) {
    Matrix next = matmul(ops.s_norm, h);
    next *= (1.0 - alpha);
    next.add_scaled(x, alpha);
    diff = max_abs_diff(next, h);
    Matrix delta = next - h;
    out.step_norms.push_back(delta.frobenius_norm());
    h = std::move(next);
    if (diff < cfg.tol()) {
      out.result = std::move(h);
      out.iterations = t;
      out.final_residual = diff;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "fair_jacobi: no convergence within " << cfg.max_iter() << " iterations (last difference " << diff
      << ")";
  throw ConvergenceError(msg.str(), diff);
}

}  // namespace hoif
