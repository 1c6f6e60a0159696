#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hoif/graph.hpp"
#include "hoif/linalg.hpp"

namespace hoif {

enum class LayerKind { gcn_baseline, ifnet, hoifnet };

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& text);

enum class Mode { train, eval };

struct NetworkConfig {
  std::size_t num_layers = 10;
  std::size_t hidden_width = 96;
  std::size_t hops = 3;
  double alpha = 0.2;
  double beta = 0.5;
  std::size_t input_dim = 2;
  std::size_t output_dim = 3;
  bool use_batchnorm = true;
  LayerKind layer_kind = LayerKind::hoifnet;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  /// Hop count actually used by the layer rule (1 unless hoifnet).
  std::size_t effective_hops() const;
  std::size_t block_width() const { return hidden_width / effective_hops(); }
  /// Whether hidden layer `index` is followed by batch normalization and ReLU.
  bool activates(std::size_t index) const { return index + 1 < num_layers; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// log(1 + beta / (1 + layer_index)).
double scale_factor(double beta, std::size_t layer_index);

struct LayerParams {
  std::vector<Matrix> weights;  // one F x F/K block per hop
  // 1 x F rows; empty when the layer has no batch normalization.
  Matrix bn_gain;
  Matrix bn_shift;
  Matrix bn_running_mean;
  Matrix bn_running_var;

  bool has_batchnorm() const { return !bn_gain.empty(); }
};

struct NetworkParams {
  Matrix input_embed;  // input_dim x F
  std::vector<LayerParams> layers;
  Matrix output_proj;  // F x output_dim
};

struct TensorView {
  std::string name;
  Matrix* tensor;
  bool learnable;
};

struct ConstTensorView {
  std::string name;
  const Matrix* tensor;
  bool learnable;
};

/// All tensors in declaration order: input_embed, then per layer the hop
/// weights followed by bn gain/shift/running mean/running var, then output_proj.
std::vector<TensorView> tensors(NetworkParams& params);
std::vector<ConstTensorView> tensors(const NetworkParams& params);

/// Number of learnable scalars.
std::size_t params_count(const NetworkParams& params);

/// Same structure with every entry zero.
NetworkParams zeros_like(const NetworkParams& params);

/// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), BN gain 1, shift 0,
/// running mean 0, running variance 1.
NetworkParams params_init(const NetworkConfig& cfg, std::uint64_t seed);

/// Rows of `h` hold `h.rows() / n` stacked n-node blocks; returns op * block for each.
Matrix propagate(const Matrix& op, const Matrix& h, std::size_t n);

/// σ(S H W) with σ = ReLU when `activate`.
Matrix gcn_layer_forward(const Matrix& s_norm, const Matrix& h, const Matrix& w, bool activate);

/// ∥_k ((1 - α) S^k H + α X0) (β_ℓ W_k), ReLU applied when `activate`.
/// The number of hops is weights.size(). Batch normalization is not part of this
/// primitive; the network inserts it between the concatenation and the ReLU.
Matrix hoif_layer_forward(const GraphOperators& ops, const Matrix& h, const Matrix& x0,
                          const std::vector<Matrix>& weights, double alpha, double beta_ell, bool activate);

/// Per-channel batch-normalization statistics produced by a train-mode pass.
struct BatchNormUpdate {
  std::size_t layer = 0;
  std::vector<double> mean;
  std::vector<double> var_unbiased;
};

struct LayerCache {
  std::vector<Matrix> mixed;  // per hop: the matrix multiplied by the hop weight
  Matrix pre_norm;            // concatenated layer output before BN
  Matrix normalized;          // x̂ (BN layers only)
  std::vector<double> inv_std;
  Matrix activated;           // BN output before ReLU (BN layers only)
  Matrix output;
};

struct ForwardCache {
  bool valid = false;
  Mode mode = Mode::eval;
  std::size_t batch = 0;
  std::uint64_t params_fingerprint = 0;
  Matrix x2d;
  Matrix x0;
  std::vector<Matrix> layer_inputs;
  std::vector<LayerCache> layers;
  std::vector<BatchNormUpdate> bn_updates;
};

struct ForwardResult {
  Matrix y;
  ForwardCache cache;
};

/// Thrown by backward when the cache is absent or was produced with other parameters.
class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

std::uint64_t fingerprint(const NetworkParams& params);

/// The lifting network bound to a skeleton: input embedding, num_layers graph
/// layers, linear output projection. Inputs are batches of poses stacked row-wise
/// ((B*N) x input_dim).
class Network {
 public:
  Network(NetworkConfig cfg, const SkeletonGraph& skeleton);

  const NetworkConfig& config() const { return cfg_; }
  const GraphOperators& operators() const { return ops_; }
  std::size_t num_nodes() const { return ops_.num_nodes(); }

  ForwardResult forward(const NetworkParams& params, const Matrix& x2d, Mode mode) const;
  NetworkParams backward(const NetworkParams& params, const ForwardCache& cache, const Matrix& grad_y) const;

  /// Folds the running-statistic updates of a train-mode pass into params.
  void apply_batchnorm_updates(NetworkParams& params, const std::vector<BatchNormUpdate>& updates) const;

  /// Throws std::invalid_argument if params do not match the configuration.
  void check_params(const NetworkParams& params) const;

 private:
  NetworkConfig cfg_;
  GraphOperators ops_;
};

/// Mean Euclidean distance over all node pairs of each n-node block, averaged over blocks.
double mean_pairwise_distance(const Matrix& h, std::size_t n);

/// Mean pairwise node distance after each of `depth` linear layers applied to x0
/// with identity-like effective weights (hop k keeps its own column block) and no
/// normalization or activation. Entry d - 1 is the distance after d layers.
std::vector<double> oversmoothing_profile(const GraphOperators& ops, LayerKind kind, double alpha,
                                          const Matrix& x0, std::size_t depth);

}  // namespace hoif
