#pragma once

#include "oracles.hpp"

#include "zoomspec/specfront.hpp"

#include <cmath>

namespace oracle {

// Linear interpolation at f by scanning the axis; wraps past the last bin.
inline cd interp_ref(const zoomspec::ComplexSpectrogram& x, std::size_t l, double f) {
  const double df = x.freq_axis_hz[1] - x.freq_axis_hz[0];
  for (std::size_t m = 0; m < x.n_bins; ++m) {
    const double a = x.freq_axis_hz[m], b = a + df;
    if (f >= a && f <= b) {
      const double w = (f - a) / df;
      const cd hi = x.at(l, (m + 1) % x.n_bins);
      return (1.0 - w) * x.at(l, m) + w * hi;
    }
  }
  return cd(std::nan(""), 0.0);
}

// Largest |warped - log(|interp| + eps)| over the whole matrix.
inline double warp_error(const zoomspec::ComplexSpectrogram& x, const zoomspec::WarpGrid& g,
                         const zoomspec::Spectrogram& s, double eps) {
  double worst = 0.0;
  for (std::size_t l = 0; l < x.n_frames; ++l)
    for (std::size_t j = 0; j < g.size(); ++j)
      worst = std::max(worst, std::abs(s.at(l, j) - std::log(std::abs(interp_ref(x, l, g.points_hz[j])) + eps)));
  return worst;
}

}  // namespace oracle
