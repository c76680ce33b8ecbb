#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "dcnn/dataset.hpp"
#include "dcnn/preprocess.hpp"
#include "dcnn/train.hpp"

namespace dcnn {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TaskConfig {
  enum class Type { Multiclass, Binary };
  Type type = Type::Multiclass;
  std::vector<std::string> positive, negative;  // binary only

  int num_classes() const { return type == Type::Binary ? 2 : 8; }
};

struct DatasetConfig {
  std::string manifest;
  TaskConfig task;
  SplitRatios ratios;
  std::uint64_t seed = 7;
  bool stratify = true;
  enum class SplitSource { Ratios, Manifest };
  SplitSource split_source = SplitSource::Ratios;
};

struct ModelConfig {
  std::string preset = "diacnn";
  int net_width = 16;
  int num_classes = 2;
};

struct OutputConfig {
  std::string dir;
};

/// The run configuration document. Parsing is strict: unknown keys are
/// errors, every field has a default except dataset.manifest and
/// output.dir.
struct RunConfig {
  DatasetConfig dataset;
  PreprocessConfig preprocess;
  ModelConfig model;
  TrainConfig train;
  OutputConfig output;

  void validate() const;

  static RunConfig from_json_text(const std::string& text);
  /// Parse + check that referenced files exist.
  static RunConfig load(const std::string& path);
};

/// Applies the configured task/split handling to a freshly loaded
/// manifest: binary filtering and either ratio-based splitting or the
/// manifest's own split column.
Dataset prepare_dataset(const RunConfig& cfg);

}  // namespace dcnn
