#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "lulc/core/random.hpp"
#include "lulc/core/text.hpp"
#include "lulc/nn/layers.hpp"
#include "lulc/nn/loss.hpp"

namespace lulc::nn {

enum class BlockType { basic, bottleneck };

struct NetworkConfig {
  std::size_t in_channels = 3;
  std::size_t stem_channels = 16;
  std::vector<std::size_t> stage_blocks = {2, 2, 2};
  std::vector<std::size_t> stage_channels = {16, 32, 64};
  std::size_t num_classes = 10;
  std::size_t input_size = 224;
  BlockType block = BlockType::basic;

  bool operator==(const NetworkConfig&) const = default;

  void validate() const {
    if (stage_blocks.size() != stage_channels.size() || stage_blocks.empty())
      throw InvalidArgument("stage_blocks and stage_channels must be non-empty and of equal length");
    for (auto v : stage_blocks)
      if (v < 1) throw InvalidArgument("every stage needs at least one block");
    for (auto v : stage_channels)
      if (v < 1) throw InvalidArgument("stage channel counts must be >= 1");
    if (stem_channels < 1 || in_channels < 1) throw InvalidArgument("channel counts must be >= 1");
    if (num_classes != 10) throw InvalidArgument("num_classes must be 10");
    if (input_size < 1) throw InvalidArgument("input_size must be >= 1");
  }

  /// `key=value` lines; stored verbatim in checkpoints.
  std::string to_text() const {
    auto list = [](const std::vector<std::size_t>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    std::string s;
    s += "in_channels=" + std::to_string(in_channels) + "\n";
    s += "stem_channels=" + std::to_string(stem_channels) + "\n";
    s += "stage_blocks=" + list(stage_blocks) + "\n";
    s += "stage_channels=" + list(stage_channels) + "\n";
    s += "num_classes=" + std::to_string(num_classes) + "\n";
    s += "input_size=" + std::to_string(input_size) + "\n";
    s += std::string("block=") + (block == BlockType::basic ? "basic" : "bottleneck") + "\n";
    return s;
  }

  static NetworkConfig from_text(std::string_view text) {
    NetworkConfig cfg;
    auto list = [](std::string_view v) {
      std::vector<std::size_t> out;
      std::size_t pos = 0;
      while (pos <= v.size()) {
        auto comma = v.find(',', pos);
        if (comma == std::string_view::npos) comma = v.size();
        out.push_back(static_cast<std::size_t>(parse_int(v.substr(pos, comma - pos), "list item")));
        pos = comma + 1;
      }
      return out;
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      auto line = trim(text.substr(pos, nl - pos));
      pos = nl + 1;
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw FormatError("network config line without '='");
      const auto key = line.substr(0, eq);
      const auto val = line.substr(eq + 1);
      if (key == "in_channels") cfg.in_channels = static_cast<std::size_t>(parse_int(val, key));
      else if (key == "stem_channels") cfg.stem_channels = static_cast<std::size_t>(parse_int(val, key));
      else if (key == "stage_blocks") cfg.stage_blocks = list(val);
      else if (key == "stage_channels") cfg.stage_channels = list(val);
      else if (key == "num_classes") cfg.num_classes = static_cast<std::size_t>(parse_int(val, key));
      else if (key == "input_size") cfg.input_size = static_cast<std::size_t>(parse_int(val, key));
      else if (key == "block") {
        if (val == "basic") cfg.block = BlockType::basic;
        else if (val == "bottleneck") cfg.block = BlockType::bottleneck;
        else throw FormatError("unknown block type '" + std::string(val) + "'");
      } else {
        throw FormatError("unknown network config key '" + std::string(key) + "'");
      }
    }
    return cfg;
  }
};

/// conv → batchnorm → optional relu.
struct ConvUnit {
  std::string name;
  std::size_t cin = 0, cout = 0, kernel = 3, stride = 1, pad = 1;
  bool relu = true;
};

/// y = relu(main(x) + shortcut(x)); shortcut is identity when absent.
struct BlockPlan {
  std::string name;
  std::vector<ConvUnit> main;
  std::optional<ConvUnit> shortcut;
};

/// Basic residual block: two 3×3 units. With `downsample` the first unit and a
/// 1×1 projection shortcut both use `stride`; otherwise the shortcut is identity.
inline BlockPlan make_basic_block(const std::string& name, std::size_t cin, std::size_t cout, bool downsample,
                                  std::size_t stride = 2) {
  if (cin != cout && !downsample)
    throw ShapeError("block " + name + " maps " + std::to_string(cin) + " to " + std::to_string(cout) +
                     " channels but has no projection shortcut");
  if (!downsample) stride = 1;
  BlockPlan b{name, {}, std::nullopt};
  b.main.push_back({name + ".conv1", cin, cout, 3, stride, 1, true});
  b.main.push_back({name + ".conv2", cout, cout, 3, 1, 1, false});
  if (downsample) b.shortcut = ConvUnit{name + ".shortcut", cin, cout, 1, stride, 0, false};
  return b;
}

struct NetworkPlan {
  ConvUnit stem;
  std::vector<BlockPlan> blocks;
  std::size_t feature_channels = 0;
};

/// Stem 3×3 conv, stages of residual blocks (first block of every stage after
/// the first halves the resolution), global average pool, linear head.
inline NetworkPlan plan_network(const NetworkConfig& cfg) {
  cfg.validate();
  NetworkPlan plan;
  plan.stem = {"stem", cfg.in_channels, cfg.stem_channels, 3, 1, 1, true};
  std::size_t channels = cfg.stem_channels;
  for (std::size_t s = 0; s < cfg.stage_blocks.size(); ++s) {
    for (std::size_t b = 0; b < cfg.stage_blocks[s]; ++b) {
      const std::string name = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      if (cfg.block == BlockType::basic) {
        const std::size_t out = cfg.stage_channels[s];
        BlockPlan bp{name, {}, std::nullopt};
        bp.main.push_back({name + ".conv1", channels, out, 3, stride, 1, true});
        bp.main.push_back({name + ".conv2", out, out, 3, 1, 1, false});
        if (stride != 1 || channels != out) bp.shortcut = ConvUnit{name + ".shortcut", channels, out, 1, stride, 0, false};
        plan.blocks.push_back(std::move(bp));
        channels = out;
      } else {
        const std::size_t width = cfg.stage_channels[s];
        const std::size_t out = width * 4;
        BlockPlan bp{name, {}, std::nullopt};
        bp.main.push_back({name + ".conv1", channels, width, 1, 1, 0, true});
        bp.main.push_back({name + ".conv2", width, width, 3, stride, 1, true});
        bp.main.push_back({name + ".conv3", width, out, 1, 1, 0, false});
        if (stride != 1 || channels != out) bp.shortcut = ConvUnit{name + ".shortcut", channels, out, 1, stride, 0, false};
        plan.blocks.push_back(std::move(bp));
        channels = out;
      }
    }
  }
  plan.feature_channels = channels;
  return plan;
}

template <typename T>
using ParamMap = std::map<std::string, Tensor<T>>;

/// Trainable parameters plus normalisation running statistics.
template <typename T = float>
struct Model {
  NetworkConfig config;
  ParamMap<T> params;
  ParamMap<T> buffers;
};

namespace detail {

template <typename T>
const Tensor<T>& lookup(const ParamMap<T>& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw ShapeError("missing tensor '" + name + "'");
  return it->second;
}

template <typename T>
Tensor<T>& lookup(ParamMap<T>& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw ShapeError("missing tensor '" + name + "'");
  return it->second;
}

inline void for_each_unit(const NetworkPlan& plan, const auto& fn) {
  fn(plan.stem);
  for (const auto& b : plan.blocks) {
    for (const auto& u : b.main) fn(u);
    if (b.shortcut) fn(*b.shortcut);
  }
}

}  // namespace detail

/// Expected shapes of every parameter and buffer for a configuration.
inline std::pair<std::map<std::string, Shape>, std::map<std::string, Shape>> expected_shapes(const NetworkConfig& cfg) {
  const auto plan = plan_network(cfg);
  std::map<std::string, Shape> params, buffers;
  detail::for_each_unit(plan, [&](const ConvUnit& u) {
    params[u.name + ".weight"] = {u.cout, u.cin, u.kernel, u.kernel};
    params[u.name + ".bn.scale"] = {u.cout};
    params[u.name + ".bn.shift"] = {u.cout};
    buffers[u.name + ".bn.running_mean"] = {u.cout};
    buffers[u.name + ".bn.running_var"] = {u.cout};
  });
  params["head.weight"] = {cfg.num_classes, plan.feature_channels};
  params["head.bias"] = {cfg.num_classes};
  return {params, buffers};
}

/// Throws ShapeError naming the first tensor whose presence or shape disagrees with the config.
template <typename T>
void check_model(const Model<T>& model) {
  const auto [params, buffers] = expected_shapes(model.config);
  auto check = [](const std::map<std::string, Shape>& want, const ParamMap<T>& have, const char* kind) {
    for (const auto& [name, shape] : want) {
      auto it = have.find(name);
      if (it == have.end()) throw ShapeError(std::string(kind) + " '" + name + "' is missing");
      if (it->second.shape() != shape)
        throw ShapeError(std::string(kind) + " '" + name + "' has shape " + shape_string(it->second.shape()) +
                         ", config expects " + shape_string(shape));
    }
    for (const auto& [name, t] : have)
      if (!want.count(name)) throw ShapeError(std::string(kind) + " '" + name + "' is not part of the config");
  };
  check(params, model.params, "parameter");
  check(buffers, model.buffers, "buffer");
}

/// Kaiming-uniform (fan-in, relu gain) conv kernels, unit norm scale, zero norm
/// shift, head weights uniform in ±1/sqrt(fan_in) and zero head bias.
template <typename T = float>
Model<T> init_model(const NetworkConfig& cfg, std::uint64_t seed) {
  const auto plan = plan_network(cfg);
  Model<T> m;
  m.config = cfg;
  Rng rng = make_rng(seed, "init");
  detail::for_each_unit(plan, [&](const ConvUnit& u) {
    Tensor<T> w({u.cout, u.cin, u.kernel, u.kernel});
    const double bound = std::sqrt(6.0 / static_cast<double>(u.cin * u.kernel * u.kernel));
    for (auto& v : w.values()) v = static_cast<T>(uniform(rng, -bound, bound));
    m.params[u.name + ".weight"] = std::move(w);
    m.params[u.name + ".bn.scale"] = Tensor<T>({u.cout}, T{1});
    m.params[u.name + ".bn.shift"] = Tensor<T>({u.cout}, T{0});
    m.buffers[u.name + ".bn.running_mean"] = Tensor<T>({u.cout}, T{0});
    m.buffers[u.name + ".bn.running_var"] = Tensor<T>({u.cout}, T{1});
  });
  Tensor<T> hw({cfg.num_classes, plan.feature_channels});
  const double hb = 1.0 / std::sqrt(static_cast<double>(plan.feature_channels));
  for (auto& v : hw.values()) v = static_cast<T>(uniform(rng, -hb, hb));
  m.params["head.weight"] = std::move(hw);
  m.params["head.bias"] = Tensor<T>({cfg.num_classes}, T{0});
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward.
// ---------------------------------------------------------------------------

template <typename T>
struct UnitCache {
  Tensor<T> input;
  BatchNormCache<T> bn;
  Tensor<T> output;
};

template <typename T>
struct BlockCache {
  std::vector<UnitCache<T>> main;
  std::optional<UnitCache<T>> shortcut;
  Tensor<T> output;
};

template <typename T>
struct ForwardCache {
  UnitCache<T> stem;
  std::vector<BlockCache<T>> blocks;
  Shape feature_shape;
  Tensor<T> pooled;
};

template <typename T>
Tensor<T> conv_unit_forward(const ConvUnit& u, const ParamMap<T>& params, ParamMap<T>& buffers, const Tensor<T>& x,
                            Mode mode, UnitCache<T>* cache) {
  Tensor<T> z = conv2d_forward(x, detail::lookup(params, u.name + ".weight"), u.stride, u.pad);
  Tensor<T> y = batchnorm_forward(z, detail::lookup(params, u.name + ".bn.scale"),
                                  detail::lookup(params, u.name + ".bn.shift"),
                                  detail::lookup(buffers, u.name + ".bn.running_mean"),
                                  detail::lookup(buffers, u.name + ".bn.running_var"), mode, cache ? &cache->bn : nullptr);
  if (u.relu) y = relu_forward(std::move(y));
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

template <typename T>
void accumulate_grad(ParamMap<T>& grads, const std::string& name, Tensor<T> g) {
  auto it = grads.find(name);
  if (it == grads.end()) {
    grads.emplace(name, std::move(g));
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
  }
}

template <typename T>
Tensor<T> conv_unit_backward(const ConvUnit& u, const ParamMap<T>& params, const UnitCache<T>& cache,
                             Tensor<T> grad_out, ParamMap<T>& grads) {
  if (u.relu) grad_out = relu_backward(cache.output, std::move(grad_out));
  auto bn = batchnorm_backward(cache.bn, detail::lookup(params, u.name + ".bn.scale"), grad_out);
  auto conv = conv2d_backward(cache.input, detail::lookup(params, u.name + ".weight"), bn.grad_input, u.stride, u.pad);
  accumulate_grad(grads, u.name + ".bn.scale", std::move(bn.grad_scale));
  accumulate_grad(grads, u.name + ".bn.shift", std::move(bn.grad_shift));
  accumulate_grad(grads, u.name + ".weight", std::move(conv.grad_kernel));
  return std::move(conv.grad_input);
}

template <typename T>
Tensor<T> residual_block_forward(const BlockPlan& block, const ParamMap<T>& params, ParamMap<T>& buffers,
                                 const Tensor<T>& x, Mode mode,
                                 std::type_identity_t<BlockCache<T>>* cache = nullptr) {
  if (cache) {
    cache->main.assign(block.main.size(), {});
    cache->shortcut.reset();
  }
  Tensor<T> h = x;
  for (std::size_t i = 0; i < block.main.size(); ++i)
    h = conv_unit_forward(block.main[i], params, buffers, h, mode, cache ? &cache->main[i] : nullptr);
  Tensor<T> s;
  if (block.shortcut) {
    if (cache) cache->shortcut.emplace();
    s = conv_unit_forward(*block.shortcut, params, buffers, x, mode, cache ? &*cache->shortcut : nullptr);
  } else {
    s = x;
  }
  if (h.shape() != s.shape())
    throw ShapeError("block " + block.name + ": residual branch " + shape_string(h.shape()) +
                     " does not match shortcut " + shape_string(s.shape()));
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += s[i];
  h = relu_forward(std::move(h));
  if (cache) cache->output = h;
  return h;
}

template <typename T>
Tensor<T> residual_block_backward(const BlockPlan& block, const ParamMap<T>& params, const BlockCache<T>& cache,
                                  const Tensor<T>& grad_out, ParamMap<T>& grads) {
  Tensor<T> g = relu_backward(cache.output, grad_out);
  Tensor<T> gm = g;
  for (std::size_t i = block.main.size(); i-- > 0;)
    gm = conv_unit_backward(block.main[i], params, cache.main[i], std::move(gm), grads);
  Tensor<T> gs = block.shortcut ? conv_unit_backward(*block.shortcut, params, *cache.shortcut, std::move(g), grads)
                                : std::move(g);
  for (std::size_t i = 0; i < gm.size(); ++i) gm[i] += gs[i];
  return gm;
}

/// Logits (N×classes). Train mode folds batch statistics into `buffers`.
template <typename T>
Tensor<T> forward(const NetworkConfig& cfg, const ParamMap<T>& params, ParamMap<T>& buffers, const Tensor<T>& batch,
                  Mode mode, std::type_identity_t<ForwardCache<T>>* cache = nullptr) {
  expect_rank(batch, 4, "network input");
  if (batch.dim(1) != cfg.in_channels || batch.dim(2) != cfg.input_size || batch.dim(3) != cfg.input_size)
    throw ShapeError("network expects N x " + std::to_string(cfg.in_channels) + " x " + std::to_string(cfg.input_size) +
                     " x " + std::to_string(cfg.input_size) + " input, got " + shape_string(batch.shape()));
  const auto plan = plan_network(cfg);
  Tensor<T> h = conv_unit_forward(plan.stem, params, buffers, batch, mode, cache ? &cache->stem : nullptr);
  if (cache) cache->blocks.assign(plan.blocks.size(), {});
  for (std::size_t b = 0; b < plan.blocks.size(); ++b)
    h = residual_block_forward(plan.blocks[b], params, buffers, h, mode, cache ? &cache->blocks[b] : nullptr);
  Tensor<T> pooled = global_avg_pool_forward(h);
  Tensor<T> logits = linear_forward(pooled, detail::lookup(params, std::string("head.weight")),
                                    detail::lookup(params, std::string("head.bias")));
  if (cache) {
    cache->feature_shape = h.shape();
    cache->pooled = std::move(pooled);
  }
  return logits;
}

template <typename T>
Tensor<T> forward(Model<T>& model, const Tensor<T>& batch, Mode mode,
                  std::type_identity_t<ForwardCache<T>>* cache = nullptr) {
  return forward(model.config, model.params, model.buffers, batch, mode, cache);
}

/// Eval-mode logits; never mutates the model.
template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& batch) {
  ParamMap<T> buffers = model.buffers;
  return forward(model.config, model.params, buffers, batch, Mode::eval, nullptr);
}

template <typename T>
Tensor<T> predict(const Model<T>& model, const Tensor<T>& batch) {
  return softmax(forward(model, batch));
}

/// Parameter gradients given dLoss/dLogits and the cache of a forward pass.
template <typename T>
ParamMap<T> backward(const Model<T>& model, const ForwardCache<T>& cache, const Tensor<T>& grad_logits) {
  const auto plan = plan_network(model.config);
  ParamMap<T> grads;
  auto head = linear_backward(cache.pooled, detail::lookup(model.params, std::string("head.weight")), grad_logits);
  grads["head.weight"] = std::move(head.grad_weight);
  grads["head.bias"] = std::move(head.grad_bias);
  Tensor<T> g = global_avg_pool_backward(cache.feature_shape, head.grad_input);
  for (std::size_t b = plan.blocks.size(); b-- > 0;)
    g = residual_block_backward(plan.blocks[b], model.params, cache.blocks[b], g, grads);
  conv_unit_backward(plan.stem, model.params, cache.stem, std::move(g), grads);
  return grads;
}

}  // namespace lulc::nn
