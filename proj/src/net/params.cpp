#include "dcnn/params.hpp"

#include <cmath>
#include <cstring>
#include <unordered_map>

#include "dcnn/rng.hpp"

namespace dcnn {

std::vector<std::string> required_param_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::Conv2d:
      case LayerKind::Dense:
        names.push_back(l.name + ".w");
        names.push_back(l.name + ".b");
        break;
      case LayerKind::BatchNorm:
        names.push_back(l.name + ".gamma");
        names.push_back(l.name + ".beta");
        break;
      default:
        break;
    }
  }
  return names;
}

template <class T>
void init_params(const ModelSpec& spec, std::uint64_t seed, ParamStoreT<T>& params,
                 BnStatsT<T>& stats) {
  auto shapes = spec.infer_shapes(1);
  Rng64 rng(splitmix64(seed));
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::Conv2d: {
        const int in_c = shapes.at(l.inputs[0])[1];
        TensorT<T> w({l.out_channels, in_c, l.kernel, l.kernel});
        const double std = std::sqrt(2.0 / (static_cast<double>(in_c) * l.kernel * l.kernel));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(rng.normal() * std);
        params.insert(l.name + ".w", std::move(w));
        params.insert(l.name + ".b", TensorT<T>({l.out_channels}));
        break;
      }
      case LayerKind::Dense: {
        const int f = shapes.at(l.inputs[0])[1];
        TensorT<T> w({f, l.units});
        const double std = std::sqrt(2.0 / static_cast<double>(f));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(rng.normal() * std);
        params.insert(l.name + ".w", std::move(w));
        params.insert(l.name + ".b", TensorT<T>({l.units}));
        break;
      }
      case LayerKind::BatchNorm: {
        const int c = shapes.at(l.inputs[0])[1];
        params.insert(l.name + ".gamma", TensorT<T>::full({c}, T(1)));
        params.insert(l.name + ".beta", TensorT<T>({c}));
        stats[l.name] = BnStateT<T>{TensorT<T>({c}), TensorT<T>::full({c}, T(1))};
        break;
      }
      default:
        break;
    }
  }
}

template <class T>
int set_trainable(ParamStoreT<T>& params, const std::vector<std::string>& prefixes, bool flag) {
  int matched = 0;
  for (auto& [name, e] : params.entries()) {
    for (const auto& p : prefixes) {
      if (name.rfind(p, 0) == 0) {
        e.trainable = flag;
        e.var->requires_grad = flag;
        ++matched;
        break;
      }
    }
  }
  if (matched == 0) throw ModelError("trainable selector matched no parameters");
  return matched;
}

FreezePreset freeze_preset_from(const std::string& s) {
  if (s == "head_only") return FreezePreset::HeadOnly;
  if (s == "all") return FreezePreset::All;
  if (s == "last_block") return FreezePreset::LastBlock;
  throw ModelError("unknown freeze preset: " + s);
}

std::vector<std::string> preset_trainable_prefixes(const ModelSpec& spec, FreezePreset preset) {
  switch (preset) {
    case FreezePreset::All:
      return {""};
    case FreezePreset::HeadOnly:
      return {spec.logits_layer + "."};
    case FreezePreset::LastBlock: {
      // Deepest residual block plus the classifier layer.
      for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
        if (it->kind == LayerKind::Add) {
          auto dot = it->name.rfind('.');
          const std::string block = it->name.substr(0, dot + 1);
          return {block, spec.logits_layer + "."};
        }
      }
      throw ModelError("last_block preset needs a model with residual blocks");
    }
  }
  throw ModelError("unknown freeze preset");
}

template <class T>
void apply_freeze_preset(ParamStoreT<T>& params, const ModelSpec& spec, FreezePreset preset) {
  set_trainable(params, {std::string()}, false);
  set_trainable(params, preset_trainable_prefixes(spec, preset), true);
}

template <class T>
std::uint64_t param_checksum(const ParamStoreT<T>& params, const std::vector<std::string>& exclude) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [name, e] : params.entries()) {
    bool skip = false;
    for (const auto& p : exclude)
      if (name.rfind(p, 0) == 0) skip = true;
    if (skip) continue;
    mix(name.data(), name.size());
    const unsigned char sep = 0;
    mix(&sep, 1);
    mix(e.var->value.data(), e.var->value.size() * sizeof(T));
  }
  return h;
}

template <class T>
ParamStoreT<double> to_double(const ParamStoreT<T>& params) {
  ParamStoreT<double> out;
  for (const auto& [name, e] : params.entries())
    out.insert(name, e.var->value.template cast<double>(), e.trainable);
  return out;
}

template <class T>
BnStatsT<double> stats_to_double(const BnStatsT<T>& stats) {
  BnStatsT<double> out;
  for (const auto& [name, s] : stats)
    out[name] = BnStateT<double>{s.running_mean.template cast<double>(),
                                 s.running_var.template cast<double>()};
  return out;
}

template <class T>
ForwardResultT<T> forward(const ModelSpec& spec, ParamStoreT<T>& params, BnStatsT<T>& stats,
                          const TensorT<T>& batch, BnMode mode) {
  if (batch.rank() != 4 || batch.dim(1) != spec.input_shape[0] ||
      batch.dim(2) != spec.input_shape[1] || batch.dim(3) != spec.input_shape[2])
    throw ShapeError("forward: batch " + shape_str(batch.shape()) + " does not match model input " +
                     shape_str(spec.input_shape));

  std::unordered_map<std::string, VarT<T>> vals;
  vals.reserve(spec.layers.size());
  auto in = [&vals](const std::string& name) -> const VarT<T>& { return vals.at(name); };

  for (const auto& l : spec.layers) {
    VarT<T> out;
    switch (l.kind) {
      case LayerKind::Input:
        out = make_leaf(batch, false);
        break;
      case LayerKind::Conv2d:
        out = conv2d(in(l.inputs[0]), params.var(l.name + ".w"), params.var(l.name + ".b"),
                     l.stride, l.padding);
        break;
      case LayerKind::BatchNorm: {
        auto& st = stats[l.name];
        const int c = in(l.inputs[0])->value.dim(1);
        if (mode == BnMode::Train && st.running_mean.size() != static_cast<std::size_t>(c)) {
          st.running_mean = TensorT<T>({c});
          st.running_var = TensorT<T>::full({c}, T(1));
        }
        out = batch_norm(in(l.inputs[0]), params.var(l.name + ".gamma"),
                         params.var(l.name + ".beta"), &st, mode);
        break;
      }
      case LayerKind::Relu:
        out = relu(in(l.inputs[0]));
        break;
      case LayerKind::MaxPool:
        out = maxpool2d(in(l.inputs[0]), l.window, l.stride, l.padding);
        break;
      case LayerKind::AvgPool:
        out = avgpool2d(in(l.inputs[0]), l.window, l.stride);
        break;
      case LayerKind::GlobalAvgPool:
        out = global_avg_pool(in(l.inputs[0]));
        break;
      case LayerKind::Dense:
        out = fully_connected(in(l.inputs[0]), params.var(l.name + ".w"), params.var(l.name + ".b"));
        break;
      case LayerKind::Add:
        out = add(in(l.inputs[0]), in(l.inputs[1]));
        break;
      case LayerKind::ConcatChannels: {
        std::vector<VarT<T>> parts;
        for (const auto& ref : l.inputs) parts.push_back(in(ref));
        out = concat_channels(parts);
        break;
      }
      case LayerKind::Flatten:
        out = flatten(in(l.inputs[0]));
        break;
      case LayerKind::Softmax:
        out = softmax(in(l.inputs[0]));
        break;
    }
    vals[l.name] = std::move(out);
  }

  ForwardResultT<T> r;
  r.logits = vals.at(spec.logits_layer);
  r.probs = vals.at(spec.output_layer);
  r.features = vals.at(spec.feature_layer);
  if (!spec.aux_logits_layer.empty()) r.aux_logits = vals.at(spec.aux_logits_layer);
  return r;
}

#define DCNN_INSTANTIATE_PARAMS(T)                                                            \
  template void init_params<T>(const ModelSpec&, std::uint64_t, ParamStoreT<T>&, BnStatsT<T>&); \
  template int set_trainable<T>(ParamStoreT<T>&, const std::vector<std::string>&, bool);      \
  template void apply_freeze_preset<T>(ParamStoreT<T>&, const ModelSpec&, FreezePreset);      \
  template std::uint64_t param_checksum<T>(const ParamStoreT<T>&, const std::vector<std::string>&); \
  template ParamStoreT<double> to_double<T>(const ParamStoreT<T>&);                           \
  template BnStatsT<double> stats_to_double<T>(const BnStatsT<T>&);                           \
  template ForwardResultT<T> forward<T>(const ModelSpec&, ParamStoreT<T>&, BnStatsT<T>&,      \
                                        const TensorT<T>&, BnMode)

DCNN_INSTANTIATE_PARAMS(float);
DCNN_INSTANTIATE_PARAMS(double);

}  // namespace dcnn
