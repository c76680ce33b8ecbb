// Generates the synthetic two-class dataset (disk vs ring) used by the
// desk-scale experiments and the acceptance suite.

#include <iostream>

#include <CLI11.hpp>

#include "dcnn/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dcnn-synth - write a synthetic two-class image dataset"};
  std::string out_dir = "synth";
  dcnn::SynthConfig cfg;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--train", cfg.n_train, "training images");
  app.add_option("--test", cfg.n_test, "test images");
  app.add_option("--size", cfg.height, "image height/width")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "generator seed");
  app.add_option("--noise", cfg.noise_sigma, "pixel noise sigma");
  CLI11_PARSE(app, argc, argv);
  cfg.width = cfg.height;

  try {
    const std::string manifest = dcnn::write_synthetic_dataset(out_dir, cfg);
    std::cout << manifest << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
