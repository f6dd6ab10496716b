#include "cagerl/nn.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cagerl/errors.hpp"

namespace cagerl::nn {

namespace {

std::uint64_t next_param_set_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "linear";
}

Activation parse_activation(const std::string& s) {
  if (s == "linear") return Activation::kLinear;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw ShapeError("unknown activation '" + s + "'");
}

void apply_activation(Matrix& z, Activation a) {
  switch (a) {
    case Activation::kLinear: break;
    case Activation::kRelu: z = z.cwiseMax(0.0); break;
    case Activation::kTanh: z = z.array().tanh().matrix(); break;
    case Activation::kSigmoid: z = (1.0 / (1.0 + (-z.array()).exp())).matrix(); break;
  }
}

// d(loss)/d(pre-activation) from d(loss)/d(output) and the output itself.
Matrix activation_backward(const Matrix& grad_out, const Matrix& out, Activation a) {
  switch (a) {
    case Activation::kLinear: return grad_out;
    case Activation::kRelu: return (out.array() > 0.0).select(grad_out, 0.0);
    case Activation::kTanh: return (grad_out.array() * (1.0 - out.array().square())).matrix();
    case Activation::kSigmoid:
      return (grad_out.array() * out.array() * (1.0 - out.array())).matrix();
  }
  return grad_out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string layer_prefix(std::size_t index, LayerKind kind) {
  return (kind == LayerKind::kLstm ? "lstm" : "dense") + std::to_string(index);
}

}  // namespace

// ---------------------------------------------------------------------------
// NetworkSpec

void NetworkSpec::validate() const {
  if (input_dim <= 0) throw ShapeError("network input_dim must be > 0");
  if (output_dim <= 0) throw ShapeError("network output_dim must be > 0");
  int memory_layers = 0;
  for (const auto& layer : hidden) {
    if (layer.width <= 0) throw ShapeError("network layer widths must be > 0");
    if (layer.kind == LayerKind::kLstm) ++memory_layers;
  }
  if (memory_layers > 1) throw ShapeError("at most one memory layer is supported");
}

bool NetworkSpec::has_memory() const { return memory_width() > 0; }

int NetworkSpec::memory_width() const {
  for (const auto& layer : hidden) {
    if (layer.kind == LayerKind::kLstm) return layer.width;
  }
  return 0;
}

nlohmann::json NetworkSpec::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : hidden) {
    nlohmann::json l;
    l["kind"] = layer.kind == LayerKind::kLstm ? "lstm" : "dense";
    l["width"] = layer.width;
    if (layer.kind == LayerKind::kDense) l["activation"] = activation_name(layer.activation);
    layers.push_back(std::move(l));
  }
  return {{"input_dim", input_dim},
          {"hidden", std::move(layers)},
          {"output_dim", output_dim},
          {"output_activation", activation_name(output_activation)}};
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  try {
    spec.input_dim = j.at("input_dim").get<int>();
    spec.output_dim = j.at("output_dim").get<int>();
    spec.output_activation = parse_activation(j.at("output_activation").get<std::string>());
    for (const auto& l : j.at("hidden")) {
      LayerSpec layer;
      const auto kind = l.at("kind").get<std::string>();
      if (kind == "lstm") {
        layer.kind = LayerKind::kLstm;
      } else if (kind == "dense") {
        layer.activation = parse_activation(l.at("activation").get<std::string>());
      } else {
        throw ShapeError("unknown layer kind '" + kind + "'");
      }
      layer.width = l.at("width").get<int>();
      spec.hidden.push_back(layer);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("malformed network spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// ParameterSet

ParameterSet::ParameterSet() : id_(next_param_set_id()) {}

ParameterSet::ParameterSet(const ParameterSet& other)
    : params_(other.params_), id_(next_param_set_id()), moments_(other.moments_) {}

ParameterSet& ParameterSet::operator=(const ParameterSet& other) {
  if (this != &other) {
    params_ = other.params_;
    moments_ = other.moments_;
    id_ = next_param_set_id();
    version_ = 0;
  }
  return *this;
}

Parameter& ParameterSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (find(name)) throw ShapeError("duplicate parameter name '" + name + "'");
  if (rows < 0 || cols < 0) throw ShapeError("negative parameter shape for '" + name + "'");
  params_.push_back({std::move(name), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)});
  moments_ = {};
  ++version_;
  return params_.back();
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ShapeError("no parameter named '" + name + "'");
}

Matrix& ParameterSet::mutable_value(std::size_t i) {
  ++version_;
  return params_[i].value;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParameterSet::all_finite() const {
  for (const auto& p : params_) {
    if (!p.value.allFinite()) return false;
  }
  return true;
}

void ParameterSet::check_same_layout(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) {
    throw ShapeError("parameter count mismatch: " + std::to_string(params_.size()) + " vs " +
                     std::to_string(other.params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      throw ShapeError("parameter layout mismatch at '" + a.name + "' (" +
                       std::to_string(a.value.rows()) + "x" + std::to_string(a.value.cols()) +
                       ") vs '" + b.name + "' (" + std::to_string(b.value.rows()) + "x" +
                       std::to_string(b.value.cols()) + ")");
    }
  }
}

void ParameterSet::assign_values(const ParameterSet& other) {
  check_same_layout(other);
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = other.params_[i].value;
  ++version_;
}

RecurrentState RecurrentState::zeros(int width) {
  return {Vector::Zero(width), Vector::Zero(width)};
}

// ---------------------------------------------------------------------------
// Network

ParameterSet Network::make_layout(const NetworkSpec& spec) {
  spec.validate();
  ParameterSet params;
  int in = spec.input_dim;
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    const auto& layer = spec.hidden[l];
    const std::string prefix = layer_prefix(l, layer.kind);
    if (layer.kind == LayerKind::kDense) {
      params.add(prefix + ".weight", layer.width, in);
      params.add(prefix + ".bias", layer.width, 1);
    } else {
      params.add(prefix + ".weight_input", 4 * layer.width, in);
      params.add(prefix + ".weight_recurrent", 4 * layer.width, layer.width);
      params.add(prefix + ".bias", 4 * layer.width, 1);
    }
    in = layer.width;
  }
  params.add("output.weight", spec.output_dim, in);
  params.add("output.bias", spec.output_dim, 1);
  return params;
}

Network::Network(NetworkSpec spec, Rng& init_rng, double output_scale)
    : spec_(std::move(spec)), params_(make_layout(spec_)) {
  index_layers();
  const std::size_t n_layers = spec_.hidden.size() + 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t first = slots_[l].first;
    const bool lstm = l < spec_.hidden.size() && spec_.hidden[l].kind == LayerKind::kLstm;
    const std::size_t count = lstm ? 3 : 2;
    // Fan-in counts every input feeding a unit (recurrent inputs included).
    Eigen::Index fan_in = params_[first].value.cols();
    if (lstm) fan_in += params_[first + 1].value.cols();
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const double scale = l + 1 == n_layers ? output_scale : 1.0;
    for (std::size_t k = 0; k < count; ++k) {
      Matrix& m = params_.mutable_value(first + k);
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          m(r, c) = scale * init_rng.uniform(-bound, bound);
        }
      }
    }
  }
}

Network::Network(NetworkSpec spec, ParameterSet params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  make_layout(spec_).check_same_layout(params_);
  index_layers();
}

void Network::index_layers() {
  slots_.clear();
  std::size_t idx = 0;
  for (const auto& layer : spec_.hidden) {
    slots_.push_back({idx});
    idx += layer.kind == LayerKind::kLstm ? 3 : 2;
  }
  slots_.push_back({idx});
}

RecurrentState Network::initial_state() const {
  return RecurrentState::zeros(spec_.memory_width());
}

ForwardPass Network::forward(const Matrix& input, RecurrentState* state) const {
  if (input.rows() != spec_.input_dim) {
    throw ShapeError("forward: expected " + std::to_string(spec_.input_dim) +
                     " input rows, got " + std::to_string(input.rows()));
  }
  if (spec_.has_memory() != (state != nullptr)) {
    throw UsageError(spec_.has_memory() ? "forward: recurrent state required"
                                        : "forward: network has no memory layer");
  }
  if (state) {
    const Eigen::Index h = spec_.memory_width();
    if (state->cell.size() != h || state->hidden.size() != h) {
      throw ShapeError("forward: recurrent state width mismatch");
    }
  }

  ForwardPass pass;
  pass.input = input;
  pass.params_id = params_.id();
  pass.params_version = params_.version();
  pass.layers.resize(spec_.hidden.size() + 1);
  const Eigen::Index steps = input.cols();

  for (std::size_t l = 0; l <= spec_.hidden.size(); ++l) {
    const Matrix& x = l == 0 ? pass.input : pass.layers[l - 1].output;
    LayerCache& cache = pass.layers[l];
    const std::size_t first = slots_[l].first;
    const bool is_output = l == spec_.hidden.size();

    if (is_output || spec_.hidden[l].kind == LayerKind::kDense) {
      const Matrix& w = params_[first].value;
      const Matrix& b = params_[first + 1].value;
      cache.output.noalias() = w * x;
      cache.output.colwise() += b.col(0);
      apply_activation(cache.output,
                       is_output ? spec_.output_activation : spec_.hidden[l].activation);
      continue;
    }

    // LSTM, gate order: input, forget, candidate, output.
    const Eigen::Index h = spec_.hidden[l].width;
    const Matrix& w_in = params_[first].value;
    const Matrix& w_rec = params_[first + 1].value;
    const Matrix& b = params_[first + 2].value;
    Matrix pre = w_in * x;
    pre.colwise() += b.col(0);
    cache.gates.resize(4 * h, steps);
    cache.cells.resize(h, steps + 1);
    cache.hiddens.resize(h, steps + 1);
    cache.tanh_cells.resize(h, steps);
    cache.cells.col(0) = state->cell;
    cache.hiddens.col(0) = state->hidden;
    Vector g(4 * h);
    for (Eigen::Index t = 0; t < steps; ++t) {
      g.noalias() = pre.col(t) + w_rec * cache.hiddens.col(t);
      for (Eigen::Index k = 0; k < h; ++k) {
        g(k) = sigmoid(g(k));
        g(h + k) = sigmoid(g(h + k));
        g(2 * h + k) = std::tanh(g(2 * h + k));
        g(3 * h + k) = sigmoid(g(3 * h + k));
      }
      cache.gates.col(t) = g;
      auto c = cache.cells.col(t + 1);
      c = g.segment(h, h).cwiseProduct(cache.cells.col(t)) +
          g.segment(0, h).cwiseProduct(g.segment(2 * h, h));
      cache.tanh_cells.col(t) = c.array().tanh().matrix();
      cache.hiddens.col(t + 1) = g.segment(3 * h, h).cwiseProduct(cache.tanh_cells.col(t));
    }
    cache.output = cache.hiddens.rightCols(steps);
    state->cell = cache.cells.col(steps);
    state->hidden = cache.hiddens.col(steps);
  }
  return pass;
}

Matrix Network::backward(const ForwardPass& pass, const Matrix& output_grad,
                         bool accumulate_param_grads) {
  if (pass.params_id != params_.id() || pass.params_version != params_.version()) {
    throw UsageError("backward: forward cache is stale or belongs to another network");
  }
  if (pass.layers.size() != spec_.hidden.size() + 1) {
    throw UsageError("backward: forward cache does not match this network");
  }
  const Matrix& out = pass.output();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw ShapeError("backward: output gradient shape mismatch");
  }
  const Eigen::Index steps = out.cols();

  Matrix grad = output_grad;
  for (std::size_t l = spec_.hidden.size() + 1; l-- > 0;) {
    const Matrix& x = l == 0 ? pass.input : pass.layers[l - 1].output;
    const LayerCache& cache = pass.layers[l];
    const std::size_t first = slots_[l].first;
    const bool is_output = l == spec_.hidden.size();

    if (is_output || spec_.hidden[l].kind == LayerKind::kDense) {
      const Matrix dz = activation_backward(
          grad, cache.output, is_output ? spec_.output_activation : spec_.hidden[l].activation);
      if (accumulate_param_grads) {
        params_.grad(first).noalias() += dz * x.transpose();
        params_.grad(first + 1) += dz.rowwise().sum();
      }
      grad.noalias() = params_[first].value.transpose() * dz;
      continue;
    }

    const Eigen::Index h = spec_.hidden[l].width;
    const Matrix& w_in = params_[first].value;
    const Matrix& w_rec = params_[first + 1].value;
    Matrix d_pre(4 * h, steps);
    Vector dh_next = Vector::Zero(h);
    Vector dc_next = Vector::Zero(h);
    Vector dh(h), dc(h);
    for (Eigen::Index t = steps; t-- > 0;) {
      const auto gates = cache.gates.col(t);
      const auto i_gate = gates.segment(0, h).array();
      const auto f_gate = gates.segment(h, h).array();
      const auto cand = gates.segment(2 * h, h).array();
      const auto o_gate = gates.segment(3 * h, h).array();
      const auto tanh_c = cache.tanh_cells.col(t).array();
      dh = grad.col(t) + dh_next;
      dc = (dh.array() * o_gate * (1.0 - tanh_c.square())).matrix() + dc_next;
      auto col = d_pre.col(t);
      col.segment(0, h) = (dc.array() * cand * i_gate * (1.0 - i_gate)).matrix();
      col.segment(h, h) =
          (dc.array() * cache.cells.col(t).array() * f_gate * (1.0 - f_gate)).matrix();
      col.segment(2 * h, h) = (dc.array() * i_gate * (1.0 - cand.square())).matrix();
      col.segment(3 * h, h) = (dh.array() * tanh_c * o_gate * (1.0 - o_gate)).matrix();
      dc_next = (dc.array() * f_gate).matrix();
      dh_next.noalias() = w_rec.transpose() * col;
    }
    if (accumulate_param_grads) {
      params_.grad(first).noalias() += d_pre * x.transpose();
      params_.grad(first + 1).noalias() += d_pre * cache.hiddens.leftCols(steps).transpose();
      params_.grad(first + 2) += d_pre.rowwise().sum();
    }
    grad.noalias() = w_in.transpose() * d_pre;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Gradient utilities and optimizers

double global_grad_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) sq += params[i].grad.squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(ParameterSet& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) throw NonFiniteError("clip_global_norm: non-finite gradient norm");
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (std::size_t i = 0; i < params.size(); ++i) params.grad(i) *= scale;
  return scale;
}

void optimizer_step(ParameterSet& params, double learning_rate, const OptimizerConfig& config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].grad.allFinite()) {
      throw NonFiniteError("optimizer_step: non-finite gradient in '" + params[i].name + "'");
    }
  }
  if (config.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params.mutable_value(i) -= learning_rate * params[i].grad;
    }
  } else {
    OptimizerMoments& mom = params.moments();
    if (mom.first.size() != params.size()) {
      mom.first.clear();
      mom.second.clear();
      for (std::size_t i = 0; i < params.size(); ++i) {
        mom.first.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
        mom.second.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
      }
      mom.steps = 0;
    }
    ++mom.steps;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(mom.steps));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(mom.steps));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix& g = params[i].grad;
      mom.first[i] = config.beta1 * mom.first[i] + (1.0 - config.beta1) * g;
      mom.second[i] = config.beta2 * mom.second[i] + (1.0 - config.beta2) * g.cwiseAbs2();
      params.mutable_value(i).array() -=
          learning_rate * (mom.first[i].array() / c1) /
          ((mom.second[i].array() / c2).sqrt() + config.epsilon);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value.allFinite()) {
      throw NonFiniteError("optimizer_step: parameter '" + params[i].name +
                           "' became non-finite");
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'C', 'A', 'G', 'E', 'R', 'L', 'C', 'K'};

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path,
                     const std::optional<NetworkSpec>& spec) {
  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  if (spec) manifest["spec"] = spec->to_json();
  nlohmann::json entries = nlohmann::json::array();
  std::string payload;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& m = params[i].value;
    entries.push_back({{"name", params[i].name},
                       {"shape", {m.rows(), m.cols()}},
                       {"offset", payload.size()}});
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        put_le(payload, std::bit_cast<std::uint64_t>(m(r, c)), 8);
      }
    }
  }
  manifest["entries"] = std::move(entries);
  manifest["payload_bytes"] = payload.size();
  const std::string text = manifest.dump();

  std::string blob(kMagic, sizeof(kMagic));
  put_le(blob, kCheckpointFormatVersion, 4);
  put_le(blob, text.size(), 8);
  blob += text;
  blob += payload;

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw std::runtime_error("short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  save_checkpoint(net.params(), path, net.spec());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string blob = buf.str();
  const std::string where = " in " + path.string();

  constexpr std::size_t kHeader = sizeof(kMagic) + 4 + 8;
  if (blob.size() < kHeader || blob.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptCheckpoint("bad checkpoint header" + where);
  }
  const auto version = get_le(blob, sizeof(kMagic), 4);
  if (version != kCheckpointFormatVersion) {
    throw CorruptCheckpoint("unsupported checkpoint format version " + std::to_string(version) +
                            where);
  }
  const auto manifest_len = get_le(blob, sizeof(kMagic) + 4, 8);
  if (manifest_len > blob.size() - kHeader) throw CorruptCheckpoint("truncated manifest" + where);

  Checkpoint ckpt;
  const std::size_t payload_start = kHeader + manifest_len;
  const std::size_t payload_size = blob.size() - payload_start;
  try {
    const auto manifest = nlohmann::json::parse(blob.substr(kHeader, manifest_len));
    if (manifest.at("format_version").get<std::uint32_t>() != version) {
      throw CorruptCheckpoint("manifest/header version disagreement" + where);
    }
    if (manifest.at("payload_bytes").get<std::size_t>() != payload_size) {
      throw CorruptCheckpoint("payload size mismatch (truncated?)" + where);
    }
    if (manifest.contains("spec")) ckpt.spec = NetworkSpec::from_json(manifest["spec"]);
    std::size_t expected_offset = 0;
    for (const auto& e : manifest.at("entries")) {
      const auto name = e.at("name").get<std::string>();
      const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = e.at("offset").get<std::size_t>();
      if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) {
        throw CorruptCheckpoint("bad shape for '" + name + "'" + where);
      }
      const std::size_t bytes = static_cast<std::size_t>(shape[0] * shape[1]) * 8;
      if (offset != expected_offset || offset + bytes > payload_size) {
        throw CorruptCheckpoint("bad offset for '" + name + "'" + where);
      }
      expected_offset += bytes;
      Parameter& p = ckpt.params.add(name, shape[0], shape[1]);
      std::size_t pos = payload_start + offset;
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.value.cols(); ++c, pos += 8) {
          p.value(r, c) = std::bit_cast<double>(get_le(blob, pos, 8));
        }
      }
    }
    if (expected_offset != payload_size) {
      throw CorruptCheckpoint("payload has trailing bytes" + where);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed manifest: ") + e.what() + where);
  } catch (const ShapeError& e) {
    throw CorruptCheckpoint(std::string("malformed manifest: ") + e.what() + where);
  }
  return ckpt;
}

Network load_network(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!ckpt.spec) throw CorruptCheckpoint("checkpoint has no network spec: " + path.string());
  return Network(*ckpt.spec, std::move(ckpt.params));
}

void load_into(Network& net, const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.spec && !(*ckpt.spec == net.spec())) {
    throw ShapeError("checkpoint network spec differs from the target network: " +
                     path.string());
  }
  net.params().assign_values(ckpt.params);
}

}  // namespace cagerl::nn
