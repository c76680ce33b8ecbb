#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dcnn/autodiff.hpp"
#include "dcnn/model.hpp"
#include "dcnn/ops.hpp"

namespace dcnn {

template <class T>
struct ParamEntryT {
  VarT<T> var;
  bool trainable = true;
};

/// Named trainable arrays (conv/dense weights and biases, batch-norm
/// gamma/beta), keyed "layer.kind" in a sorted map so iteration order is
/// deterministic. Running batch-norm statistics live in BnStatsT instead:
/// they are forward-pass state, not optimizer-owned parameters.
template <class T>
class ParamStoreT {
 public:
  using Map = std::map<std::string, ParamEntryT<T>>;

  void insert(const std::string& name, TensorT<T> tensor, bool trainable = true) {
    auto var = make_leaf(std::move(tensor), trainable);
    map_[name] = ParamEntryT<T>{std::move(var), trainable};
  }

  bool contains(const std::string& name) const { return map_.count(name) != 0; }

  const VarT<T>& var(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw ModelError("missing parameter: " + name);
    return it->second.var;
  }

  ParamEntryT<T>& entry(const std::string& name) {
    auto it = map_.find(name);
    if (it == map_.end()) throw ModelError("missing parameter: " + name);
    return it->second;
  }

  Map& entries() { return map_; }
  const Map& entries() const { return map_; }
  std::size_t size() const { return map_.size(); }

  void zero_grad() {
    for (auto& [name, e] : map_) e.var->zero_grad();
  }

  std::int64_t scalar_count(bool trainable_only = false) const {
    std::int64_t n = 0;
    for (const auto& [name, e] : map_)
      if (!trainable_only || e.trainable) n += static_cast<std::int64_t>(e.var->value.size());
    return n;
  }

  /// Deep copy with fresh leaf nodes (gradients are not copied).
  ParamStoreT clone() const {
    ParamStoreT out;
    for (const auto& [name, e] : map_) out.insert(name, e.var->value, e.trainable);
    return out;
  }

 private:
  Map map_;
};

template <class T>
using BnStatsT = std::map<std::string, BnStateT<T>>;

using ParamStore = ParamStoreT<float>;
using BnStats = BnStatsT<float>;

/// Parameter names a layer owns: "<name>.w"/".b" for conv and dense,
/// "<name>.gamma"/".beta" for batch norm.
std::vector<std::string> required_param_names(const ModelSpec& spec);

/// Kaiming-normal conv/dense weights, zero biases, gamma=1/beta=0,
/// running stats (0, 1); draw order follows the layer list.
template <class T>
void init_params(const ModelSpec& spec, std::uint64_t seed, ParamStoreT<T>& params,
                 BnStatsT<T>& stats);

/// Flip trainable flags (and requires_grad) on every parameter whose name
/// starts with one of the prefixes. Throws if nothing matches.
template <class T>
int set_trainable(ParamStoreT<T>& params, const std::vector<std::string>& prefixes, bool flag);

enum class FreezePreset { HeadOnly, All, LastBlock };

FreezePreset freeze_preset_from(const std::string& s);

/// Prefixes a preset trains; HeadOnly is the final classifier layer,
/// LastBlock additionally unfreezes the deepest residual block.
std::vector<std::string> preset_trainable_prefixes(const ModelSpec& spec, FreezePreset preset);

/// Freeze everything, then unfreeze the preset's prefixes.
template <class T>
void apply_freeze_preset(ParamStoreT<T>& params, const ModelSpec& spec, FreezePreset preset);

/// FNV-1a over names and raw tensor bytes, in map order. `exclude`
/// prefixes are skipped (e.g. the classifier head when checksumming the
/// backbone).
template <class T>
std::uint64_t param_checksum(const ParamStoreT<T>& params,
                             const std::vector<std::string>& exclude = {});

template <class T>
ParamStoreT<double> to_double(const ParamStoreT<T>& params);
template <class T>
BnStatsT<double> stats_to_double(const BnStatsT<T>& stats);

/// Forward pass over the model graph.
template <class T>
struct ForwardResultT {
  VarT<T> logits;
  VarT<T> probs;
  VarT<T> features;
  VarT<T> aux_logits;  // null when the model has no auxiliary head
};

using ForwardResult = ForwardResultT<float>;

template <class T>
ForwardResultT<T> forward(const ModelSpec& spec, ParamStoreT<T>& params, BnStatsT<T>& stats,
                          const TensorT<T>& batch, BnMode mode);

}  // namespace dcnn
