#include "fft.hpp"

#include "zoomspec/errors.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace zoomspec::detail {

namespace {

class PlanCache {
public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> a(n), b(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                                      reinterpret_cast<fftw_complex*>(b.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw InvariantError("FFTW failed to create a plan of size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, int sign) {
  if (in.size() != out.size()) throw InvariantError("fft: input and output sizes differ");
  if (in.empty()) return;
  fftw_plan plan = cache().get(in.size(), sign);
  // FFTW takes a non-const input pointer but does not modify it for
  // out-of-place complex transforms.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  if (src == dst) {
    std::vector<std::complex<double>> tmp(in.begin(), in.end());
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()), dst);
  } else {
    fftw_execute_dft(plan, src, dst);
  }
}

} // namespace

void fft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
  run(in, out, FFTW_FORWARD);
}

void ifft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
  run(in, out, FFTW_BACKWARD);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

} // namespace zoomspec::detail
