#pragma once

// Thin FFTW wrapper. Plans are created once per (size, direction) under a
// lock and executed through the new-array interface, which FFTW documents as
// thread-safe.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace zoomspec::detail {

// Unnormalized forward transform, out[k] = sum_n in[n] e^{-j 2 pi k n / N}.
void fft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);
// Unnormalized inverse transform (no 1/N).
void ifft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

inline std::vector<std::complex<double>> fft(std::span<const std::complex<double>> in) {
  std::vector<std::complex<double>> out(in.size());
  fft(in, out);
  return out;
}

std::size_t next_pow2(std::size_t n);

} // namespace zoomspec::detail
