#pragma once

#include <iostream>
#include <string>

#include "dcnn/dataset.hpp"
#include "dcnn/runconfig.hpp"

namespace dcnn::cli {

// Exit codes shared by every subcommand: 0 success, 2 usage/input error,
// 3 numeric failure (divergence).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

int cmd_prepare(const std::string& manifest_path, SplitRatios ratios, std::uint64_t seed,
                bool stratify, const std::string& out_path, std::ostream& err = std::cerr);

int cmd_train(const std::string& config_path, std::ostream& out = std::cout,
              std::ostream& err = std::cerr);

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& split, const std::string& out_dir,
                 std::ostream& err = std::cerr);

int cmd_finetune(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& freeze_selector, std::ostream& out = std::cout,
                 std::ostream& err = std::cerr);

int cmd_report(const std::string& run_dir, std::ostream& err = std::cerr);

}  // namespace dcnn::cli
