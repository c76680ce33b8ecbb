// Times the serial reference kernels against the OpenMP backend at
// DiaCNN-like sizes and reports the speedup. The two backends are
// contracted to produce bitwise-identical results (see tests), so this
// is purely a throughput comparison.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dcnn/kernels.hpp"
#include "dcnn/rng.hpp"
#include "dcnn/tensor.hpp"

using namespace dcnn;
using kernels::Backend;

namespace {

Tensor random_tensor(Shape shape, Rng64& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.normal());
  return t;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

struct Case {
  std::string name;
  std::function<void()> run;
  int reps;
};

}  // namespace

int main() {
  Rng64 rng(1234);

  const int n = 32;
  kernels::ConvDims conv{n, 16, 32, 32, 32, 3, 3, 1, 1, 1, 32, 32};
  Tensor x = random_tensor({n, 16, 32, 32}, rng);
  Tensor w = random_tensor({32, 16, 3, 3}, rng);
  Tensor b = random_tensor({32}, rng);
  Tensor y({n, 32, 32, 32});
  Tensor dy = random_tensor({n, 32, 32, 32}, rng);
  Tensor dx({n, 16, 32, 32});
  Tensor dw({32, 16, 3, 3});

  kernels::BnDims bn{n, 32, 32, 32};
  Tensor gamma = random_tensor({32}, rng);
  Tensor beta = random_tensor({32}, rng);
  Tensor mean({32}), var({32}), xhat({n, 32, 32, 32});

  const int fc_n = 256, fc_f = 512, fc_k = 256;
  Tensor fx = random_tensor({fc_n, fc_f}, rng);
  Tensor fw = random_tensor({fc_f, fc_k}, rng);
  Tensor fb = random_tensor({fc_k}, rng);
  Tensor fy({fc_n, fc_k});

  kernels::PoolDims pool{n, 32, 32, 32, 2, 2, 0, 0, 16, 16};
  Tensor py({n, 32, 16, 16});
  std::vector<std::int64_t> argmax(py.size());

  std::vector<Case> cases = {
      {"conv2d forward 32x16x32x32 -> 32ch",
       [&] { kernels::conv2d_forward(conv, x.data(), w.data(), b.data(), y.data()); }, 5},
      {"conv2d backward weight",
       [&] { kernels::conv2d_backward_weight(conv, x.data(), dy.data(), dw.data()); }, 5},
      {"conv2d backward input",
       [&] { kernels::conv2d_backward_input(conv, dy.data(), w.data(), dx.data()); }, 5},
      {"batch norm stats+forward",
       [&] {
         kernels::bn_batch_stats(bn, y.data(), mean.data(), var.data());
         kernels::bn_forward(bn, y.data(), mean.data(), var.data(), gamma.data(), beta.data(),
                             1e-5f, xhat.data(), static_cast<float*>(nullptr));
       },
       10},
      {"dense 256x512x256",
       [&] { kernels::fc_forward(fc_n, fc_f, fc_k, fx.data(), fw.data(), fb.data(), fy.data()); },
       10},
      {"maxpool 2x2/2",
       [&] { kernels::maxpool_forward(pool, y.data(), py.data(), argmax.data()); }, 20},
  };

  std::printf("%-38s %12s %12s %9s\n", "kernel", "serial (ms)", "openmp (ms)", "speedup");
  std::printf("%s\n", std::string(75, '-').c_str());
  for (auto& c : cases) {
    kernels::set_backend(Backend::Serial);
    const double serial_ms = time_ms(c.run, c.reps);
    double omp_ms = serial_ms;
    if (kernels::parallel_available()) {
      kernels::set_backend(Backend::Parallel);
      omp_ms = time_ms(c.run, c.reps);
    }
    std::printf("%-38s %12.3f %12.3f %8.2fx\n", c.name.c_str(), serial_ms, omp_ms,
                serial_ms / omp_ms);
  }
  kernels::set_backend(Backend::Parallel);
  std::printf("\nthreads available: %d\n", kernels::thread_count());
  return 0;
}
