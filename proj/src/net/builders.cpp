#include "dcnn/builders.hpp"

namespace dcnn {

namespace {

std::string conv_bn_relu(ModelSpec& spec, const std::string& prefix, const std::string& input,
                         int out_channels, int kernel, int stride = 1) {
  spec.add({.name = prefix + ".conv",
            .kind = LayerKind::Conv2d,
            .inputs = {input},
            .out_channels = out_channels,
            .kernel = kernel,
            .stride = stride});
  spec.add({.name = prefix + ".bn", .kind = LayerKind::BatchNorm, .inputs = {prefix + ".conv"}});
  spec.add({.name = prefix + ".relu", .kind = LayerKind::Relu, .inputs = {prefix + ".bn"}});
  return prefix + ".relu";
}

std::string head(ModelSpec& spec, const std::string& input, int num_classes) {
  spec.add({.name = "head.gap", .kind = LayerKind::GlobalAvgPool, .inputs = {input}});
  spec.add({.name = "head.fc", .kind = LayerKind::Dense, .inputs = {"head.gap"}, .units = num_classes});
  spec.add({.name = "head.softmax", .kind = LayerKind::Softmax, .inputs = {"head.fc"}});
  spec.logits_layer = "head.fc";
  spec.output_layer = "head.softmax";
  spec.feature_layer = "head.gap";
  return "head.softmax";
}

}  // namespace

ModelSpec build_diacnn(int net_width, int num_classes, int input_h, int input_w) {
  if (net_width < 1) throw ModelError("net_width must be >= 1");
  if (num_classes < 2) throw ModelError("num_classes must be >= 2");
  ModelSpec spec;
  spec.preset = "diacnn";
  spec.input_shape = {3, input_h, input_w};
  spec.num_classes = num_classes;
  spec.add({.name = "input", .kind = LayerKind::Input});

  std::string prev = conv_bn_relu(spec, "stem", "input", net_width, 3);
  for (int stage = 1; stage <= 3; ++stage) {
    const int width = net_width << (stage - 1);
    for (int block = 1; block <= 3; ++block) {
      const std::string p =
          "stage" + std::to_string(stage) + ".block" + std::to_string(block);
      const int stride = (block == 1 && stage > 1) ? 2 : 1;
      spec.add({.name = p + ".conv1",
                .kind = LayerKind::Conv2d,
                .inputs = {prev},
                .out_channels = width,
                .kernel = 3,
                .stride = stride});
      spec.add({.name = p + ".bn1", .kind = LayerKind::BatchNorm, .inputs = {p + ".conv1"}});
      spec.add({.name = p + ".relu1", .kind = LayerKind::Relu, .inputs = {p + ".bn1"}});
      spec.add({.name = p + ".conv2",
                .kind = LayerKind::Conv2d,
                .inputs = {p + ".relu1"},
                .out_channels = width,
                .kernel = 3,
                .stride = 1});
      spec.add({.name = p + ".bn2", .kind = LayerKind::BatchNorm, .inputs = {p + ".conv2"}});
      std::string skip = prev;
      if (stride != 1) {
        // Shape changes at stage entry: bypass through 1x1 conv + BN.
        spec.add({.name = p + ".proj.conv",
                  .kind = LayerKind::Conv2d,
                  .inputs = {prev},
                  .out_channels = width,
                  .kernel = 1,
                  .stride = stride});
        spec.add({.name = p + ".proj.bn", .kind = LayerKind::BatchNorm, .inputs = {p + ".proj.conv"}});
        skip = p + ".proj.bn";
      }
      spec.add({.name = p + ".add", .kind = LayerKind::Add, .inputs = {p + ".bn2", skip}});
      spec.add({.name = p + ".relu2", .kind = LayerKind::Relu, .inputs = {p + ".add"}});
      prev = p + ".relu2";
    }
  }
  head(spec, prev, num_classes);
  spec.validate();
  return spec;
}

ModelSpec build_baseline_cnn(int num_classes, int input_h, int input_w) {
  if (num_classes < 2) throw ModelError("num_classes must be >= 2");
  ModelSpec spec;
  spec.preset = "baseline_cnn";
  spec.input_shape = {3, input_h, input_w};
  spec.num_classes = num_classes;
  spec.add({.name = "input", .kind = LayerKind::Input});

  const int filters[5] = {8, 16, 32, 64, 128};
  std::string prev = "input";
  for (int i = 0; i < 5; ++i) {
    const std::string p = "stage" + std::to_string(i + 1);
    prev = conv_bn_relu(spec, p, prev, filters[i], 3);
    spec.add({.name = p + ".pool",
              .kind = LayerKind::MaxPool,
              .inputs = {prev},
              .window = 2,
              .stride = 2,
              .padding = Padding::Valid});
    prev = p + ".pool";
  }
  spec.add({.name = "flatten", .kind = LayerKind::Flatten, .inputs = {prev}});
  prev = "flatten";
  const int fc_units[3] = {64, 32, 16};
  for (int i = 0; i < 3; ++i) {
    const std::string p = "fc" + std::to_string(i + 1);
    spec.add({.name = p, .kind = LayerKind::Dense, .inputs = {prev}, .units = fc_units[i]});
    spec.add({.name = p + ".relu", .kind = LayerKind::Relu, .inputs = {p}});
    prev = p + ".relu";
  }
  spec.add({.name = "fc4", .kind = LayerKind::Dense, .inputs = {prev}, .units = num_classes});
  spec.add({.name = "output", .kind = LayerKind::Softmax, .inputs = {"fc4"}});
  spec.logits_layer = "fc4";
  spec.output_layer = "output";
  spec.feature_layer = "fc3.relu";
  try {
    spec.validate();
  } catch (const ShapeError& e) {
    throw ModelError(std::string("input too small for five poolings: ") + e.what());
  }
  return spec;
}

std::string append_inception_module(ModelSpec& spec, const std::string& prefix,
                                    const std::string& input, InceptionWidths widths,
                                    int out_channels, bool final_bn) {
  if (widths.b1 < 1 || widths.b3 < 1 || widths.b5 < 1 || out_channels < 1)
    throw ModelError("inception module widths must be positive");
  const std::string c1 = conv_bn_relu(spec, prefix + ".b1", input, widths.b1, 1);
  const std::string c3 = conv_bn_relu(spec, prefix + ".b3", input, widths.b3, 3);
  const std::string c5 = conv_bn_relu(spec, prefix + ".b5", input, widths.b5, 5);
  spec.add({.name = prefix + ".pool",
            .kind = LayerKind::MaxPool,
            .inputs = {input},
            .window = 3,
            .stride = 1,
            .padding = Padding::Same});
  spec.add({.name = prefix + ".concat",
            .kind = LayerKind::ConcatChannels,
            .inputs = {c1, c3, c5, prefix + ".pool"}});
  spec.add({.name = prefix + ".out.conv",
            .kind = LayerKind::Conv2d,
            .inputs = {prefix + ".concat"},
            .out_channels = out_channels,
            .kernel = 1,
            .stride = 1});
  if (!final_bn) return prefix + ".out.conv";
  spec.add({.name = prefix + ".out.bn", .kind = LayerKind::BatchNorm, .inputs = {prefix + ".out.conv"}});
  return prefix + ".out.bn";
}

std::string append_residual_inception_block(ModelSpec& spec, const std::string& prefix,
                                            const std::string& input, InceptionWidths widths) {
  auto shapes = spec.infer_shapes(1);
  auto it = shapes.find(input);
  if (it == shapes.end()) throw ModelError("unknown input layer: " + input);
  const int in_channels = it->second.at(1);
  const std::string branch =
      append_inception_module(spec, prefix, input, widths, in_channels, /*final_bn=*/true);
  spec.add({.name = prefix + ".add", .kind = LayerKind::Add, .inputs = {input, branch}});
  return prefix + ".add";
}

std::string append_stem(ModelSpec& spec, const std::string& prefix, const std::string& input,
                        int k1, int c1, int k2, int c2) {
  if (c1 != c2)
    throw ModelError("stem branches must produce identical shapes, got " + std::to_string(c1) +
                     " vs " + std::to_string(c2) + " channels");
  spec.add({.name = prefix + ".a.conv",
            .kind = LayerKind::Conv2d,
            .inputs = {input},
            .out_channels = c1,
            .kernel = k1,
            .stride = 1});
  spec.add({.name = prefix + ".a.pool",
            .kind = LayerKind::MaxPool,
            .inputs = {prefix + ".a.conv"},
            .window = 2,
            .stride = 2,
            .padding = Padding::Valid});
  spec.add({.name = prefix + ".b.conv",
            .kind = LayerKind::Conv2d,
            .inputs = {input},
            .out_channels = c2,
            .kernel = k2,
            .stride = 1});
  spec.add({.name = prefix + ".b.pool",
            .kind = LayerKind::MaxPool,
            .inputs = {prefix + ".b.conv"},
            .window = 2,
            .stride = 2,
            .padding = Padding::Valid});
  spec.add({.name = prefix + ".add",
            .kind = LayerKind::Add,
            .inputs = {prefix + ".a.pool", prefix + ".b.pool"}});
  return prefix + ".add";
}

std::string append_reduction(ModelSpec& spec, const std::string& prefix, const std::string& input,
                             InceptionWidths widths, int out_channels) {
  if (widths.b1 < 1 || widths.b3 < 1 || widths.b5 < 1 || out_channels < 1)
    throw ModelError("reduction widths must be positive");
  spec.add({.name = prefix + ".pool",
            .kind = LayerKind::MaxPool,
            .inputs = {input},
            .window = 3,
            .stride = 1,
            .padding = Padding::Same});
  const std::string c1 = conv_bn_relu(spec, prefix + ".b1", input, widths.b1, 1);
  const std::string c3 = conv_bn_relu(spec, prefix + ".b3", input, widths.b3, 3);
  const std::string c5 = conv_bn_relu(spec, prefix + ".b5", input, widths.b5, 5);
  spec.add({.name = prefix + ".concat",
            .kind = LayerKind::ConcatChannels,
            .inputs = {prefix + ".pool", c1, c3, c5}});
  spec.add({.name = prefix + ".out.conv",
            .kind = LayerKind::Conv2d,
            .inputs = {prefix + ".concat"},
            .out_channels = out_channels,
            .kernel = 1,
            .stride = 1});
  return prefix + ".out.conv";
}

std::string append_aux_classifier(ModelSpec& spec, const std::string& prefix,
                                  const std::string& input, int conv_channels, int num_classes) {
  spec.add({.name = prefix + ".conv",
            .kind = LayerKind::Conv2d,
            .inputs = {input},
            .out_channels = conv_channels,
            .kernel = 3,
            .stride = 1});
  spec.add({.name = prefix + ".gap", .kind = LayerKind::GlobalAvgPool, .inputs = {prefix + ".conv"}});
  spec.add({.name = prefix + ".fc",
            .kind = LayerKind::Dense,
            .inputs = {prefix + ".gap"},
            .units = num_classes});
  return prefix + ".fc";
}

ModelSpec build_mini_inception(int num_classes, int input_h, int input_w) {
  if (num_classes < 2) throw ModelError("num_classes must be >= 2");
  ModelSpec spec;
  spec.preset = "mini_inception";
  spec.input_shape = {3, input_h, input_w};
  spec.num_classes = num_classes;
  spec.add({.name = "input", .kind = LayerKind::Input});

  std::string prev = append_stem(spec, "stem", "input", 3, 16, 5, 16);
  spec.add({.name = "stem.post.bn", .kind = LayerKind::BatchNorm, .inputs = {prev}});
  spec.add({.name = "stem.post.relu", .kind = LayerKind::Relu, .inputs = {"stem.post.bn"}});
  prev = "stem.post.relu";

  prev = append_residual_inception_block(spec, "block1", prev, {.b1 = 8, .b3 = 8, .b5 = 8});
  prev = append_residual_inception_block(spec, "block2", prev, {.b1 = 8, .b3 = 8, .b5 = 8});

  prev = append_reduction(spec, "reduce", prev, {.b1 = 8, .b3 = 8, .b5 = 8}, 32);
  spec.add({.name = "reduce.post.bn", .kind = LayerKind::BatchNorm, .inputs = {prev}});
  spec.add({.name = "reduce.post.relu", .kind = LayerKind::Relu, .inputs = {"reduce.post.bn"}});
  prev = "reduce.post.relu";

  spec.aux_logits_layer = append_aux_classifier(spec, "aux", prev, 16, num_classes);
  head(spec, prev, num_classes);
  spec.validate();
  return spec;
}

ModelSpec build_preset(const std::string& preset, int net_width, int num_classes, int input_h,
                       int input_w) {
  if (preset == "diacnn") return build_diacnn(net_width, num_classes, input_h, input_w);
  if (preset == "baseline_cnn") return build_baseline_cnn(num_classes, input_h, input_w);
  if (preset == "mini_inception") return build_mini_inception(num_classes, input_h, input_w);
  throw ModelError("unknown model preset: " + preset);
}

}  // namespace dcnn
