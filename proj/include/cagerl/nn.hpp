#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cagerl/rng.hpp"

// Small fixed-topology networks with hand-written backpropagation.
//
// Batches are column-major: a matrix of shape (features x batch). For a
// network containing a memory (LSTM) layer the columns of one call are
// consecutive time steps of a single sequence, and the layer carries a
// RecurrentState across them. Dense layers treat every column alike.
namespace cagerl::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kLinear, kRelu, kTanh, kSigmoid };
enum class LayerKind { kDense, kLstm };

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int width = 0;
  Activation activation = Activation::kRelu;  // ignored for LSTM layers
  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  int input_dim = 0;
  std::vector<LayerSpec> hidden;
  int output_dim = 1;
  Activation output_activation = Activation::kLinear;

  void validate() const;  // throws ShapeError
  bool has_memory() const;
  int memory_width() const;  // 0 when there is no memory layer

  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& j);
  bool operator==(const NetworkSpec&) const = default;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Adaptive-moment sidecar kept next to the parameters it updates.
struct OptimizerMoments {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::int64_t steps = 0;
};

// Named parameter tensors with gradients. Shapes are fixed once added.
// Every mutation through this interface bumps version(), which is how
// forward caches detect that they went stale.
class ParameterSet {
 public:
  ParameterSet();
  ParameterSet(const ParameterSet& other);
  ParameterSet& operator=(const ParameterSet& other);
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  // Adds a zero-initialized tensor. Throws ShapeError on duplicate names.
  Parameter& add(std::string name, Eigen::Index rows, Eigen::Index cols);

  std::size_t size() const { return params_.size(); }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  const Parameter* find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // throws ShapeError

  Matrix& mutable_value(std::size_t i);
  Matrix& grad(std::size_t i) { return params_[i].grad; }
  void zero_grad();

  std::size_t scalar_count() const;
  bool all_finite() const;
  // Throws ShapeError unless names and shapes match `other` entry by entry.
  void check_same_layout(const ParameterSet& other) const;
  // Copies values from a same-layout set.
  void assign_values(const ParameterSet& other);

  std::uint64_t id() const { return id_; }
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  OptimizerMoments& moments() { return moments_; }
  const OptimizerMoments& moments() const { return moments_; }

 private:
  std::vector<Parameter> params_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
  OptimizerMoments moments_;
};

struct RecurrentState {
  Vector cell;
  Vector hidden;
  static RecurrentState zeros(int width);
};

// Layer l reads ForwardPass::input (l == 0) or layers[l - 1].output.
struct LayerCache {
  Matrix output;  // post-activation output
  // LSTM only.
  Matrix gates;        // (4H x T): input, forget, candidate, output gates
  Matrix cells;        // (H x T+1), column 0 is the initial cell
  Matrix hiddens;      // (H x T+1), column 0 is the initial hidden
  Matrix tanh_cells;   // (H x T)
};

struct ForwardPass {
  Matrix input;
  std::vector<LayerCache> layers;  // hidden layers then the output layer
  std::uint64_t params_id = 0;
  std::uint64_t params_version = 0;

  const Matrix& output() const { return layers.back().output; }
};

class Network {
 public:
  Network() = default;
  // Uniform fan-in initialization; the output layer is scaled by
  // `output_scale`.
  Network(NetworkSpec spec, Rng& init_rng, double output_scale = 1.0);
  // Adopts existing parameters after checking their layout against `spec`.
  Network(NetworkSpec spec, ParameterSet params);

  // `state` must be given iff the network has a memory layer; it is advanced
  // through all columns of `input`.
  ForwardPass forward(const Matrix& input, RecurrentState* state = nullptr) const;

  // Backpropagates `output_grad` (output_dim x T). Accumulates parameter
  // gradients unless `accumulate_param_grads` is false, and returns the
  // gradient with respect to the input. Throws UsageError for a cache that
  // does not belong to the current parameter values.
  Matrix backward(const ForwardPass& pass, const Matrix& output_grad,
                  bool accumulate_param_grads = true);

  RecurrentState initial_state() const;

  const NetworkSpec& spec() const { return spec_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Builds the parameter layout (zero values) for `spec`.
  static ParameterSet make_layout(const NetworkSpec& spec);

 private:
  struct LayerSlots {
    std::size_t first = 0;  // index of the first parameter of the layer
  };
  void index_layers();

  NetworkSpec spec_;
  ParameterSet params_;
  std::vector<LayerSlots> slots_;  // hidden layers then the output layer
};

double global_grad_norm(const ParameterSet& params);

// Scales all gradients so the global L2 norm is at most `max_norm`.
// Returns the factor applied (1.0 when untouched).
double clip_global_norm(ParameterSet& params, double max_norm);

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One update from the current gradients. Throws NonFiniteError naming the
// first parameter that stops being finite.
void optimizer_step(ParameterSet& params, double learning_rate,
                    const OptimizerConfig& config = {});

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
  ParameterSet params;
  std::optional<NetworkSpec> spec;
};

// Binary layout: 8-byte magic "CAGERLCK", u32 format version, u64 manifest
// length, JSON manifest {format_version, spec?, entries[{name, shape,
// offset}], payload_bytes}, then row-major little-endian float64 payload.
void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path,
                     const std::optional<NetworkSpec>& spec = std::nullopt);
void save_checkpoint(const Network& net, const std::filesystem::path& path);

// Throws CorruptCheckpoint on malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Requires a spec in the manifest.
Network load_network(const std::filesystem::path& path);
// Loads values into `net`; throws ShapeError on a layout mismatch.
void load_into(Network& net, const std::filesystem::path& path);

}  // namespace cagerl::nn
