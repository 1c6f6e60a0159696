#include "hoif/model.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

namespace hoif {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::gcn_baseline: return "gcn_baseline";
    case LayerKind::ifnet: return "ifnet";
    case LayerKind::hoifnet: return "hoifnet";
  }
  return "unknown";
}

LayerKind parse_layer_kind(const std::string& text) {
  if (text == "gcn_baseline" || text == "gcn") return LayerKind::gcn_baseline;
  if (text == "ifnet") return LayerKind::ifnet;
  if (text == "hoifnet") return LayerKind::hoifnet;
  throw std::invalid_argument("unknown layer kind '" + text + "' (expected gcn_baseline, ifnet or hoifnet)");
}

void NetworkConfig::validate() const {
  if (num_layers < 2) throw std::invalid_argument("NetworkConfig: num_layers must be >= 2");
  if (hidden_width < 1) throw std::invalid_argument("NetworkConfig: hidden_width must be >= 1");
  if (hops < 1) throw std::invalid_argument("NetworkConfig: hops must be >= 1");
  if (layer_kind == LayerKind::hoifnet && hidden_width % hops != 0) {
    throw std::invalid_argument("NetworkConfig: hidden_width " + std::to_string(hidden_width) +
                                " is not divisible by hops " + std::to_string(hops));
  }
  // alpha == 1 is the degenerate pure-residual limit; alpha == 0 removes the residual.
  if (layer_kind != LayerKind::gcn_baseline && !(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("NetworkConfig: alpha must lie in [0, 1]");
  }
  if (layer_kind != LayerKind::gcn_baseline && !(beta > 0.0)) {
    throw std::invalid_argument("NetworkConfig: beta must be > 0");
  }
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("NetworkConfig: dims must be >= 1");
  if (!(bn_eps > 0.0) || !(bn_momentum >= 0.0 && bn_momentum <= 1.0)) {
    throw std::invalid_argument("NetworkConfig: invalid batch-norm eps/momentum");
  }
}

std::size_t NetworkConfig::effective_hops() const {
  return layer_kind == LayerKind::hoifnet ? hops : 1;
}

double scale_factor(double beta, std::size_t layer_index) {
  return std::log1p(beta / (1.0 + static_cast<double>(layer_index)));
}

std::vector<TensorView> tensors(NetworkParams& params) {
  std::vector<TensorView> out;
  out.push_back({"input_embed", &params.input_embed, true});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t k = 0; k < layer.weights.size(); ++k)
      out.push_back({prefix + "w" + std::to_string(k + 1), &layer.weights[k], true});
    if (layer.has_batchnorm()) {
      out.push_back({prefix + "bn_gain", &layer.bn_gain, true});
      out.push_back({prefix + "bn_shift", &layer.bn_shift, true});
      out.push_back({prefix + "bn_running_mean", &layer.bn_running_mean, false});
      out.push_back({prefix + "bn_running_var", &layer.bn_running_var, false});
    }
  }
  out.push_back({"output_proj", &params.output_proj, true});
  return out;
}

std::vector<ConstTensorView> tensors(const NetworkParams& params) {
  std::vector<ConstTensorView> out;
  for (const auto& t : tensors(const_cast<NetworkParams&>(params))) out.push_back({t.name, t.tensor, t.learnable});
  return out;
}

std::size_t params_count(const NetworkParams& params) {
  std::size_t n = 0;
  for (const auto& t : tensors(params))
    if (t.learnable) n += t.tensor->size();
  return n;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams out = params;
  for (auto& t : tensors(out)) t.tensor->fill(0.0);
  return out;
}

NetworkParams params_init(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  auto glorot = [&](std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(fan_in, fan_out);
    for (double& v : m.data()) v = dist(rng);
    return m;
  };
  const std::size_t f = cfg.hidden_width;
  NetworkParams p;
  p.input_embed = glorot(cfg.input_dim, f);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    LayerParams layer;
    for (std::size_t k = 0; k < cfg.effective_hops(); ++k) layer.weights.push_back(glorot(f, cfg.block_width()));
    if (cfg.use_batchnorm && cfg.activates(l)) {
      layer.bn_gain = Matrix(1, f, 1.0);
      layer.bn_shift = Matrix(1, f, 0.0);
      layer.bn_running_mean = Matrix(1, f, 0.0);
      layer.bn_running_var = Matrix(1, f, 1.0);
    }
    p.layers.push_back(std::move(layer));
  }
  p.output_proj = glorot(f, cfg.output_dim);
  return p;
}

Matrix propagate(const Matrix& op, const Matrix& h, std::size_t n) {
  if (op.rows() != n || op.cols() != n || h.rows() % n != 0) {
    throw DimensionError("propagate: operator " + op.shape_string() + " incompatible with features " +
                         h.shape_string());
  }
  const std::size_t f = h.cols();
  Matrix out(h.rows(), f);
  for (std::size_t base = 0; base < h.rows(); base += n) {
    for (std::size_t i = 0; i < n; ++i) {
      double* oi = out.row(base + i).data();
      for (std::size_t j = 0; j < n; ++j) {
        const double w = op(i, j);
        if (w == 0.0) continue;
        const double* hj = h.row(base + j).data();
        for (std::size_t c = 0; c < f; ++c) oi[c] += w * hj[c];
      }
    }
  }
  return out;
}

namespace {

void relu_inplace(Matrix& m) {
  for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

// (1 - α) S^k H + α X0
Matrix mix_hop(const Matrix& sk, const Matrix& h, const Matrix& x0, double alpha, std::size_t n) {
  Matrix mixed = propagate(sk, h, n);
  if (alpha != 0.0) {
    mixed *= (1.0 - alpha);
    mixed.add_scaled(x0, alpha);
  }
  return mixed;
}

}  // namespace

Matrix gcn_layer_forward(const Matrix& s_norm, const Matrix& h, const Matrix& w, bool activate) {
  if (h.cols() != w.rows()) {
    throw DimensionError("gcn_layer_forward: features " + h.shape_string() + " vs weight " + w.shape_string());
  }
  Matrix out = matmul(propagate(s_norm, h, s_norm.rows()), w);
  if (activate) relu_inplace(out);
  return out;
}

Matrix hoif_layer_forward(const GraphOperators& ops, const Matrix& h, const Matrix& x0,
                          const std::vector<Matrix>& weights, double alpha, double beta_ell, bool activate) {
  const std::size_t hops = weights.size();
  if (hops == 0 || hops > ops.max_hop()) {
    throw DimensionError("hoif_layer_forward: " + std::to_string(hops) + " hop weights but operators provide " +
                         std::to_string(ops.max_hop()) + " powers");
  }
  if (!h.same_shape(x0)) {
    throw DimensionError("hoif_layer_forward: features " + h.shape_string() + " vs initial features " +
                         x0.shape_string());
  }
  std::size_t out_cols = 0;
  for (const auto& w : weights) {
    if (w.rows() != h.cols()) {
      throw DimensionError("hoif_layer_forward: weight " + w.shape_string() + " vs features " + h.shape_string());
    }
    out_cols += w.cols();
  }
  Matrix out(h.rows(), out_cols);
  std::size_t col = 0;
  for (std::size_t k = 0; k < hops; ++k) {
    Matrix block = matmul(mix_hop(ops.power(k + 1), h, x0, alpha, ops.num_nodes()), weights[k]);
    block *= beta_ell;
    out.set_col_block(col, block);
    col += block.cols();
  }
  if (activate) relu_inplace(out);
  return out;
}

std::uint64_t fingerprint(const NetworkParams& params) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (const auto& t : tensors(params)) {
    for (double v : t.tensor->data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      hash ^= bits;
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

Network::Network(NetworkConfig cfg, const SkeletonGraph& skeleton) : cfg_(cfg) {
  cfg_.validate();
  ops_ = build_operators(skeleton, cfg_.effective_hops());
}

void Network::check_params(const NetworkParams& params) const {
  const std::size_t f = cfg_.hidden_width;
  auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const std::string& what) {
    if (m.rows() != r || m.cols() != c) {
      throw std::invalid_argument("network params: " + what + " has shape " + m.shape_string() + ", expected (" +
                                  std::to_string(r) + "x" + std::to_string(c) + ")");
    }
  };
  expect(params.input_embed, cfg_.input_dim, f, "input_embed");
  expect(params.output_proj, f, cfg_.output_dim, "output_proj");
  if (params.layers.size() != cfg_.num_layers) {
    throw std::invalid_argument("network params: " + std::to_string(params.layers.size()) + " layers, expected " +
                                std::to_string(cfg_.num_layers));
  }
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const auto& layer = params.layers[l];
    if (layer.weights.size() != cfg_.effective_hops()) {
      throw std::invalid_argument("network params: layer " + std::to_string(l) + " has wrong hop count");
    }
    for (const auto& w : layer.weights) expect(w, f, cfg_.block_width(), "layer " + std::to_string(l) + " weight");
    const bool want_bn = cfg_.use_batchnorm && cfg_.activates(l);
    if (want_bn != layer.has_batchnorm()) {
      throw std::invalid_argument("network params: layer " + std::to_string(l) + " batch-norm presence mismatch");
    }
    if (want_bn) {
      expect(layer.bn_gain, 1, f, "bn_gain");
      expect(layer.bn_shift, 1, f, "bn_shift");
      expect(layer.bn_running_mean, 1, f, "bn_running_mean");
      expect(layer.bn_running_var, 1, f, "bn_running_var");
    }
  }
}

ForwardResult Network::forward(const NetworkParams& params, const Matrix& x2d, Mode mode) const {
  check_params(params);
  const std::size_t n = num_nodes();
  if (x2d.cols() != cfg_.input_dim || x2d.rows() == 0 || x2d.rows() % n != 0) {
    throw DimensionError("network forward: input " + x2d.shape_string() + " is not a stack of " +
                         std::to_string(n) + "x" + std::to_string(cfg_.input_dim) + " poses");
  }
  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.mode = mode;
  cache.batch = x2d.rows() / n;
  cache.params_fingerprint = fingerprint(params);
  cache.x2d = x2d;
  cache.x0 = matmul(x2d, params.input_embed);

  const std::size_t f = cfg_.hidden_width;
  const double rows = static_cast<double>(x2d.rows());
  Matrix h = cache.x0;
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const auto& lp = params.layers[l];
    cache.layer_inputs.push_back(h);
    LayerCache lc;
    lc.pre_norm = Matrix(h.rows(), f);
    if (cfg_.layer_kind == LayerKind::gcn_baseline) {
      lc.mixed.push_back(propagate(ops_.s_norm, h, n));
      lc.pre_norm = matmul(lc.mixed[0], lp.weights[0]);
    } else {
      const double beta_ell = scale_factor(cfg_.beta, l);
      std::size_t col = 0;
      for (std::size_t k = 0; k < lp.weights.size(); ++k) {
        lc.mixed.push_back(mix_hop(ops_.power(k + 1), h, cache.x0, cfg_.alpha, n));
        Matrix block = matmul(lc.mixed.back(), lp.weights[k]);
        block *= beta_ell;
        lc.pre_norm.set_col_block(col, block);
        col += block.cols();
      }
    }

    if (!cfg_.activates(l)) {
      lc.output = lc.pre_norm;
    } else if (lp.has_batchnorm()) {
      const Matrix& z = lc.pre_norm;
      std::vector<double> mean(f, 0.0), var(f, 0.0);
      if (mode == Mode::train) {
        for (std::size_t r = 0; r < z.rows(); ++r)
          for (std::size_t c = 0; c < f; ++c) mean[c] += z(r, c);
        for (double& m : mean) m /= rows;
        for (std::size_t r = 0; r < z.rows(); ++r)
          for (std::size_t c = 0; c < f; ++c) {
            const double d = z(r, c) - mean[c];
            var[c] += d * d;
          }
        BatchNormUpdate upd{l, mean, std::vector<double>(f)};
        for (std::size_t c = 0; c < f; ++c) {
          upd.var_unbiased[c] = rows > 1.0 ? var[c] / (rows - 1.0) : 0.0;
          var[c] /= rows;
        }
        cache.bn_updates.push_back(std::move(upd));
      } else {
        for (std::size_t c = 0; c < f; ++c) {
          mean[c] = lp.bn_running_mean(0, c);
          var[c] = lp.bn_running_var(0, c);
        }
      }
      lc.inv_std.resize(f);
      for (std::size_t c = 0; c < f; ++c) lc.inv_std[c] = 1.0 / std::sqrt(var[c] + cfg_.bn_eps);
      lc.normalized = Matrix(z.rows(), f);
      lc.activated = Matrix(z.rows(), f);
      for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < f; ++c) {
          const double xhat = (z(r, c) - mean[c]) * lc.inv_std[c];
          lc.normalized(r, c) = xhat;
          lc.activated(r, c) = lp.bn_gain(0, c) * xhat + lp.bn_shift(0, c);
        }
      lc.output = lc.activated;
      relu_inplace(lc.output);
    } else {
      lc.output = lc.pre_norm;
      relu_inplace(lc.output);
    }
    h = lc.output;
    cache.layers.push_back(std::move(lc));
  }
  res.y = matmul(h, params.output_proj);
  cache.valid = true;
  return res;
}

NetworkParams Network::backward(const NetworkParams& params, const ForwardCache& cache, const Matrix& grad_y) const {
  if (!cache.valid) throw StaleCacheError("network backward: no forward cache");
  if (cache.params_fingerprint != fingerprint(params)) {
    throw StaleCacheError("network backward: cache was produced with different parameters");
  }
  const std::size_t n = num_nodes();
  const std::size_t f = cfg_.hidden_width;
  if (grad_y.rows() != cache.x2d.rows() || grad_y.cols() != cfg_.output_dim) {
    throw DimensionError("network backward: grad " + grad_y.shape_string() + " does not match output (" +
                         std::to_string(cache.x2d.rows()) + "x" + std::to_string(cfg_.output_dim) + ")");
  }
  NetworkParams g = zeros_like(params);
  const Matrix& h_last = cache.layers.back().output;
  g.output_proj = matmul_tn(h_last, grad_y);
  Matrix dh = matmul_nt(grad_y, params.output_proj);
  Matrix dx0(cache.x0.rows(), f);
  const double rows = static_cast<double>(cache.x2d.rows());

  for (std::size_t l = cfg_.num_layers; l-- > 0;) {
    const auto& lp = params.layers[l];
    const auto& lc = cache.layers[l];
    auto& gl = g.layers[l];

    Matrix dz;
    if (!cfg_.activates(l)) {
      dz = std::move(dh);
    } else if (lp.has_batchnorm()) {
      Matrix da = std::move(dh);
      for (std::size_t i = 0; i < da.size(); ++i)
        if (!(lc.activated.data()[i] > 0.0)) da.data()[i] = 0.0;
      std::vector<double> sum_da(f, 0.0), sum_da_xhat(f, 0.0);
      for (std::size_t r = 0; r < da.rows(); ++r)
        for (std::size_t c = 0; c < f; ++c) {
          sum_da[c] += da(r, c);
          sum_da_xhat[c] += da(r, c) * lc.normalized(r, c);
        }
      for (std::size_t c = 0; c < f; ++c) {
        gl.bn_gain(0, c) = sum_da_xhat[c];
        gl.bn_shift(0, c) = sum_da[c];
      }
      dz = Matrix(da.rows(), f);
      if (cache.mode == Mode::train) {
        // dx̂ = γ dA; dz = inv_std / R * (R dx̂ - Σ dx̂ - x̂ Σ dx̂ x̂)
        for (std::size_t r = 0; r < da.rows(); ++r)
          for (std::size_t c = 0; c < f; ++c) {
            const double gamma = lp.bn_gain(0, c);
            dz(r, c) = gamma * lc.inv_std[c] / rows *
                       (rows * da(r, c) - sum_da[c] - lc.normalized(r, c) * sum_da_xhat[c]);
          }
      } else {
        for (std::size_t r = 0; r < da.rows(); ++r)
          for (std::size_t c = 0; c < f; ++c) dz(r, c) = lp.bn_gain(0, c) * lc.inv_std[c] * da(r, c);
      }
    } else {
      dz = std::move(dh);
      for (std::size_t i = 0; i < dz.size(); ++i)
        if (!(lc.output.data()[i] > 0.0)) dz.data()[i] = 0.0;
    }

    const Matrix& h_in = cache.layer_inputs[l];
    dh = Matrix(h_in.rows(), f);
    if (cfg_.layer_kind == LayerKind::gcn_baseline) {
      gl.weights[0] = matmul_tn(lc.mixed[0], dz);
      dh = propagate(ops_.s_norm, matmul_nt(dz, lp.weights[0]), n);
    } else {
      const double beta_ell = scale_factor(cfg_.beta, l);
      const std::size_t bw = cfg_.block_width();
      for (std::size_t k = 0; k < lp.weights.size(); ++k) {
        Matrix dzk = dz.col_block(k * bw, bw);
        dzk *= beta_ell;
        gl.weights[k] = matmul_tn(lc.mixed[k], dzk);
        const Matrix dmixed = matmul_nt(dzk, lp.weights[k]);
        // S^k is symmetric, so its transpose is itself.
        dh.add_scaled(propagate(ops_.power(k + 1), dmixed, n), 1.0 - cfg_.alpha);
        if (cfg_.alpha != 0.0) dx0.add_scaled(dmixed, cfg_.alpha);
      }
    }
  }
  dx0 += dh;  // the first layer's input is X0 itself
  g.input_embed = matmul_tn(cache.x2d, dx0);
  for (const auto& t : tensors(g)) require_finite(*t.tensor, "network backward (" + t.name + ")");
  return g;
}

void Network::apply_batchnorm_updates(NetworkParams& params, const std::vector<BatchNormUpdate>& updates) const {
  const double m = cfg_.bn_momentum;
  for (const auto& u : updates) {
    auto& layer = params.layers.at(u.layer);
    for (std::size_t c = 0; c < u.mean.size(); ++c) {
      layer.bn_running_mean(0, c) = (1.0 - m) * layer.bn_running_mean(0, c) + m * u.mean[c];
      layer.bn_running_var(0, c) = (1.0 - m) * layer.bn_running_var(0, c) + m * u.var_unbiased[c];
    }
  }
}

double mean_pairwise_distance(const Matrix& h, std::size_t n) {
  if (n < 2 || h.rows() % n != 0) throw DimensionError("mean_pairwise_distance: bad block size");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t base = 0; base < h.rows(); base += n)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < h.cols(); ++c) {
          const double d = h(base + i, c) - h(base + j, c);
          d2 += d * d;
        }
        total += std::sqrt(d2);
        ++count;
      }
  return total / static_cast<double>(count);
}

std::vector<double> oversmoothing_profile(const GraphOperators& ops, LayerKind kind, double alpha, const Matrix& x0,
                                          std::size_t depth) {
  const std::size_t n = ops.num_nodes();
  const std::size_t hops = kind == LayerKind::hoifnet ? ops.max_hop() : 1;
  if (x0.cols() % hops != 0) throw DimensionError("oversmoothing_profile: width not divisible by hop count");
  const std::size_t bw = x0.cols() / hops;
  std::vector<double> out;
  Matrix h = x0;
  for (std::size_t d = 0; d < depth; ++d) {
    Matrix next(h.rows(), h.cols());
    for (std::size_t k = 0; k < hops; ++k) {
      const Matrix mixed = kind == LayerKind::gcn_baseline ? propagate(ops.s_norm, h, n)
                                                           : mix_hop(ops.power(k + 1), h, x0, alpha, n);
      next.set_col_block(k * bw, mixed.col_block(k * bw, bw));
    }
    h = std::move(next);
    out.push_back(mean_pairwise_distance(h, n));
  }
  return out;
}

}  // namespace hoif
