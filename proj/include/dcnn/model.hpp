#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcnn/ops.hpp"

namespace dcnn {

class ModelError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LayerKind {
  Input,
  Conv2d,
  BatchNorm,
  Relu,
  MaxPool,
  AvgPool,
  GlobalAvgPool,
  Dense,
  Add,
  ConcatChannels,
  Flatten,
  Softmax,
};

std::string layer_kind_name(LayerKind k);
LayerKind layer_kind_from(const std::string& s);

struct LayerDesc {
  std::string name;
  LayerKind kind = LayerKind::Input;
  std::vector<std::string> inputs;
  int out_channels = 0;            // Conv2d
  int kernel = 0;                  // Conv2d
  int window = 0;                  // MaxPool / AvgPool
  int stride = 1;                  // Conv2d / pools
  int units = 0;                   // Dense
  Padding padding = Padding::Same; // Conv2d / MaxPool
};

/// Declarative architecture graph: an ordered list of named layers where
/// every input reference points at an earlier layer.
struct ModelSpec {
  std::string preset;
  Shape input_shape;  // {C, H, W}
  int num_classes = 0;
  std::vector<LayerDesc> layers;
  std::string logits_layer;
  std::string output_layer;      // softmax probabilities
  std::string feature_layer;     // penultimate features tap
  std::string aux_logits_layer;  // empty when the net has no auxiliary head

  const LayerDesc* find(const std::string& name) const;
  LayerDesc& add(LayerDesc desc);

  /// Structural checks plus full shape inference for a probe batch.
  void validate() const;
  std::map<std::string, Shape> infer_shapes(int batch) const;

  /// Weighted layers per the conventional count: convolutions (projection
  /// shortcuts excluded) plus dense layers.
  int weighted_layer_count() const;

  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);
};

}  // namespace dcnn
