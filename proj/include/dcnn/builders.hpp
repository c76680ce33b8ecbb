#pragma once

#include "dcnn/model.hpp"

namespace dcnn {

/// Residual classifier: 3x3 stem conv with `net_width` filters, three
/// stages of three residual blocks at widths {1,2,4}*net_width (stage
/// entries 2 and 3 downsample with stride 2 and a 1x1 projection skip),
/// global average pooling and a dense head. 20 weighted layers.
ModelSpec build_diacnn(int net_width, int num_classes, int input_h = 32, int input_w = 32);

/// Plain CNN: five conv-BN-ReLU stages with 8,16,32,64,128 filters of
/// window 3, each followed by 2x2 stride-2 max pooling, then four dense
/// layers tapering to the class count.
ModelSpec build_baseline_cnn(int num_classes, int input_h, int input_w);

/// Desk-scale network exercising the whole block family: stem, two
/// residual inception blocks, a reduction stage, and both a main and an
/// auxiliary classifier head.
ModelSpec build_mini_inception(int num_classes, int input_h = 32, int input_w = 32);

ModelSpec build_preset(const std::string& preset, int net_width, int num_classes, int input_h,
                       int input_w);

// Fragment builders: append layers under `prefix` reading from layer
// `input`, returning the fragment's output layer name. Branch convolutions
// are conv-BN-ReLU; the trailing 1x1 projection is linear, with a batch
// norm when `final_bn` is set (the residual variant needs it so a
// zero-initialized branch is exactly the identity).

struct InceptionWidths {
  int b1 = 0, b3 = 0, b5 = 0;
};

std::string append_inception_module(ModelSpec& spec, const std::string& prefix,
                                    const std::string& input, InceptionWidths widths,
                                    int out_channels, bool final_bn = false);

/// y = x + module(x); module output channels must equal the input's.
std::string append_residual_inception_block(ModelSpec& spec, const std::string& prefix,
                                            const std::string& input, InceptionWidths widths);

/// y = maxpool(conv_k1(x)) + maxpool(conv_k2(x)); 2x2 stride-2 pools.
std::string append_stem(ModelSpec& spec, const std::string& prefix, const std::string& input,
                        int k1, int c1, int k2, int c2);

/// y = conv1x1(concat(maxpool(x), conv1(x), conv3(x), conv5(x))).
std::string append_reduction(ModelSpec& spec, const std::string& prefix, const std::string& input,
                             InceptionWidths widths, int out_channels);

/// y = fc(global_avg_pool(conv(x))).
std::string append_aux_classifier(ModelSpec& spec, const std::string& prefix,
                                  const std::string& input, int conv_channels, int num_classes);

}  // namespace dcnn
