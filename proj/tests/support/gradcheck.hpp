#pragma once
// Central finite-difference check of Network::backward against the scalar
// objective sum(y ∘ R) for a fixed random R.

#include <cmath>
#include <random>
#include <string>

#include "hoif/model.hpp"
#include "support/oracles.hpp"

namespace gradcheck {

struct Result {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

/// Entries with |analytic| + |numeric| below this are compared absolutely; the
/// central difference at step 1e-5 carries roughly 1e-10 of rounding noise.
constexpr double kRelFloor = 1e-6;

inline double objective(const hoif::Network& net, const hoif::NetworkParams& p, const hoif::Matrix& x,
                        const hoif::Matrix& r, hoif::Mode mode) {
  const hoif::Matrix y = net.forward(p, x, mode).y;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
  return s;
}

inline Result check_network(const hoif::Network& net, hoif::NetworkParams params, std::size_t batch, hoif::Mode mode,
                            std::uint64_t seed, double step = 1e-5) {
  std::mt19937_64 rng(seed);
  const std::size_t n = net.num_nodes();
  const hoif::Matrix x = oracle::random_matrix(batch * n, 2, rng);
  const hoif::Matrix r = oracle::random_matrix(batch * n, 3, rng);
  const auto fw = net.forward(params, x, mode);
  const hoif::NetworkParams grads = net.backward(params, fw.cache, r);

  Result res;
  auto views = hoif::tensors(params);
  const auto gviews = hoif::tensors(grads);
  for (std::size_t t = 0; t < views.size(); ++t) {
    if (!views[t].learnable) continue;
    hoif::Matrix& m = *views[t].tensor;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + step;
      const double up = objective(net, params, x, r, mode);
      m.data()[i] = orig - step;
      const double down = objective(net, params, x, r, mode);
      m.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = gviews[t].tensor->data()[i];
      const double rel = std::abs(numeric - analytic) / std::max(std::abs(numeric) + std::abs(analytic), kRelFloor);
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_tensor = views[t].name;
      }
      ++res.checked;
    }
  }
  return res;
}

}  // namespace gradcheck
