#include "dcnn/model.hpp"

#include <set>

#include <json.hpp>

namespace dcnn {

namespace {

const std::pair<LayerKind, const char*> kKindNames[] = {
    {LayerKind::Input, "input"},
    {LayerKind::Conv2d, "conv2d"},
    {LayerKind::BatchNorm, "batch_norm"},
    {LayerKind::Relu, "relu"},
    {LayerKind::MaxPool, "max_pool"},
    {LayerKind::AvgPool, "avg_pool"},
    {LayerKind::GlobalAvgPool, "global_avg_pool"},
    {LayerKind::Dense, "dense"},
    {LayerKind::Add, "add"},
    {LayerKind::ConcatChannels, "concat_channels"},
    {LayerKind::Flatten, "flatten"},
    {LayerKind::Softmax, "softmax"},
};

int expected_inputs(LayerKind k) {
  switch (k) {
    case LayerKind::Input:
      return 0;
    case LayerKind::Add:
      return 2;
    case LayerKind::ConcatChannels:
      return -1;  // one or more
    default:
      return 1;
  }
}

}  // namespace

std::string layer_kind_name(LayerKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  throw ModelError("unknown layer kind");
}

LayerKind layer_kind_from(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  throw ModelError("unknown layer kind: " + s);
}

const LayerDesc* ModelSpec::find(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

LayerDesc& ModelSpec::add(LayerDesc desc) {
  if (find(desc.name)) throw ModelError("duplicate layer name: " + desc.name);
  layers.push_back(std::move(desc));
  return layers.back();
}

std::map<std::string, Shape> ModelSpec::infer_shapes(int batch) const {
  if (input_shape.size() != 3) throw ModelError("input_shape must be CxHxW");
  std::map<std::string, Shape> shapes;
  std::set<std::string> seen;
  for (const auto& l : layers) {
    if (!seen.insert(l.name).second) throw ModelError("duplicate layer name: " + l.name);
    const int want = expected_inputs(l.kind);
    if (want >= 0 && static_cast<int>(l.inputs.size()) != want)
      throw ModelError("layer " + l.name + " expects " + std::to_string(want) + " inputs");
    if (l.kind == LayerKind::ConcatChannels && l.inputs.empty())
      throw ModelError("layer " + l.name + " needs at least one input");
    std::vector<Shape> in;
    for (const auto& ref : l.inputs) {
      auto it = shapes.find(ref);
      if (it == shapes.end())
        throw ModelError("layer " + l.name + " references unknown or later layer " + ref);
      in.push_back(it->second);
    }
    Shape out;
    switch (l.kind) {
      case LayerKind::Input:
        out = {batch, input_shape[0], input_shape[1], input_shape[2]};
        break;
      case LayerKind::Conv2d: {
        auto d = conv_dims(in[0], {l.out_channels, in[0][1], l.kernel, l.kernel}, l.stride,
                           l.padding);
        out = {d.n, d.out_c, d.out_h, d.out_w};
        break;
      }
      case LayerKind::BatchNorm:
      case LayerKind::Relu:
        out = in[0];
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool: {
        auto d = pool_dims(in[0], l.window, l.stride,
                           l.kind == LayerKind::MaxPool ? l.padding : Padding::Valid);
        out = {d.n, d.c, d.out_h, d.out_w};
        break;
      }
      case LayerKind::GlobalAvgPool:
        if (in[0].size() != 4) throw ModelError("layer " + l.name + " needs an NCHW input");
        out = {in[0][0], in[0][1]};
        break;
      case LayerKind::Dense:
        if (in[0].size() != 2) throw ModelError("layer " + l.name + " needs a flat NxF input");
        out = {in[0][0], l.units};
        break;
      case LayerKind::Add:
        if (in[0] != in[1])
          throw ModelError("layer " + l.name + " input shapes differ: " + shape_str(in[0]) +
                           " vs " + shape_str(in[1]));
        out = in[0];
        break;
      case LayerKind::ConcatChannels: {
        out = in[0];
        if (out.size() != 4) throw ModelError("layer " + l.name + " needs NCHW inputs");
        for (std::size_t i = 1; i < in.size(); ++i) {
          if (in[i].size() != 4 || in[i][0] != out[0] || in[i][2] != out[2] || in[i][3] != out[3])
            throw ModelError("layer " + l.name + " spatial mismatch: " + shape_str(out) + " vs " +
                             shape_str(in[i]));
          out[1] += in[i][1];
        }
        break;
      }
      case LayerKind::Flatten: {
        int rest = 1;
        for (std::size_t i = 1; i < in[0].size(); ++i) rest *= in[0][i];
        out = {in[0][0], rest};
        break;
      }
      case LayerKind::Softmax:
        if (in[0].size() != 2) throw ModelError("layer " + l.name + " needs an NxK input");
        out = in[0];
        break;
    }
    shapes[l.name] = std::move(out);
  }
  return shapes;
}

void ModelSpec::validate() const {
  if (layers.empty() || layers.front().kind != LayerKind::Input)
    throw ModelError("model must start with an input layer");
  if (num_classes < 1) throw ModelError("num_classes must be positive");
  auto shapes = infer_shapes(2);
  for (const std::string* name : {&logits_layer, &output_layer, &feature_layer}) {
    if (name->empty() || !shapes.count(*name))
      throw ModelError("model is missing a designated layer: '" + *name + "'");
  }
  if (!aux_logits_layer.empty() && !shapes.count(aux_logits_layer))
    throw ModelError("unknown aux logits layer: " + aux_logits_layer);
  const Shape& logits = shapes.at(logits_layer);
  if (logits.size() != 2 || logits[1] != num_classes)
    throw ModelError("logits layer must produce NxK with K = num_classes");
}

int ModelSpec::weighted_layer_count() const {
  int n = 0;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::Dense) ++n;
    if (l.kind == LayerKind::Conv2d && l.name.find(".proj.") == std::string::npos) ++n;
  }
  return n;
}

std::string ModelSpec::to_json() const {
  nlohmann::json j;
  j["preset"] = preset;
  j["input_shape"] = input_shape;
  j["num_classes"] = num_classes;
  j["logits"] = logits_layer;
  j["output"] = output_layer;
  j["features"] = feature_layer;
  if (!aux_logits_layer.empty()) j["aux_logits"] = aux_logits_layer;
  auto& arr = j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json e;
    e["name"] = l.name;
    e["kind"] = layer_kind_name(l.kind);
    if (!l.inputs.empty()) e["inputs"] = l.inputs;
    switch (l.kind) {
      case LayerKind::Conv2d:
        e["out_channels"] = l.out_channels;
        e["kernel"] = l.kernel;
        e["stride"] = l.stride;
        e["padding"] = l.padding == Padding::Same ? "same" : "valid";
        break;
      case LayerKind::MaxPool:
        e["window"] = l.window;
        e["stride"] = l.stride;
        e["padding"] = l.padding == Padding::Same ? "same" : "valid";
        break;
      case LayerKind::AvgPool:
        e["window"] = l.window;
        e["stride"] = l.stride;
        break;
      case LayerKind::Dense:
        e["units"] = l.units;
        break;
      default:
        break;
    }
    arr.push_back(std::move(e));
  }
  return j.dump(2);
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("bad architecture descriptor: ") + e.what());
  }
  try {
    ModelSpec spec;
    spec.preset = j.value("preset", "");
    spec.input_shape = j.at("input_shape").get<Shape>();
    spec.num_classes = j.at("num_classes").get<int>();
    spec.logits_layer = j.at("logits").get<std::string>();
    spec.output_layer = j.at("output").get<std::string>();
    spec.feature_layer = j.at("features").get<std::string>();
    spec.aux_logits_layer = j.value("aux_logits", "");
    for (const auto& e : j.at("layers")) {
      LayerDesc l;
      l.name = e.at("name").get<std::string>();
      l.kind = layer_kind_from(e.at("kind").get<std::string>());
      if (e.contains("inputs")) l.inputs = e.at("inputs").get<std::vector<std::string>>();
      l.out_channels = e.value("out_channels", 0);
      l.kernel = e.value("kernel", 0);
      l.window = e.value("window", 0);
      l.stride = e.value("stride", 1);
      l.units = e.value("units", 0);
      l.padding = e.value("padding", std::string("same")) == "valid" ? Padding::Valid : Padding::Same;
      spec.layers.push_back(std::move(l));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("bad architecture descriptor: ") + e.what());
  }
}

}  // namespace dcnn
