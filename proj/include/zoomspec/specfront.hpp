#pragma once

#include "zoomspec/iqcore.hpp"

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace zoomspec {

enum class WindowKind { Hann, Hamming, Rect };

std::string_view to_string(WindowKind w);
WindowKind window_from_string(std::string_view name);

// Periodic taper of length n (Hann/Hamming repeat with period n), as used for
// spectral analysis frames.
std::vector<double> analysis_window(WindowKind kind, std::size_t n);

struct StftParams {
  WindowKind window = WindowKind::Hann;
  std::size_t n_window = 1024;
  std::size_t hop = 256;
  std::size_t n_fft = 1024;
  double eps = 1e-10;

  // hop <= n_window <= n_fft, n_fft a power of two, eps > 0.
  void validate() const;
};

enum class AxisKind { Linear, Warped };

// Frames x bins matrix stored row-major by frame.
template <typename T>
struct TfMatrix {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<T> values;
  std::vector<double> frame_times_s;  // start time of each analysis frame
  std::vector<double> freq_axis_hz;   // ascending
  AxisKind kind = AxisKind::Linear;
  double sample_rate_hz = 0.0;
  std::size_t n_window = 0;
  std::size_t hop = 0;
  WindowKind window = WindowKind::Hann;
  // Expected log-magnitude of white noise at each bin relative to a plain
  // DFT bin (natural log). Empty means flat.
  std::vector<double> noise_shape;

  T& at(std::size_t frame, std::size_t bin) { return values[frame * n_bins + bin]; }
  const T& at(std::size_t frame, std::size_t bin) const { return values[frame * n_bins + bin]; }
  std::span<const T> frame(std::size_t l) const { return {values.data() + l * n_bins, n_bins}; }

  // Center time of frame l.
  double frame_center_s(std::size_t l) const {
    return frame_times_s[l] + 0.5 * static_cast<double>(n_window) / sample_rate_hz;
  }
  double hop_s() const { return static_cast<double>(hop) / sample_rate_hz; }
};

using ComplexSpectrogram = TfMatrix<std::complex<double>>;
using Spectrogram = TfMatrix<double>;

// R[q] = N^{-1/2} sum_n r[n] e^{-j 2 pi q n / N}.
std::vector<cf64> unitary_dft(std::span<const cf64> r);

// Frames start at l*hop; frequency axis fft-shifted to [-fs/2, fs/2).
ComplexSpectrogram stft(const IqRecording& r, const StftParams& p);

// S = log(|X| + eps), natural log of the magnitude.
Spectrogram log_magnitude(const ComplexSpectrogram& x, double eps);

// Template shapes for the subband grid. EdgeDense is the log template built
// directly from the base coordinates (dense next to the subband edges);
// CenterDense is its mirror image (dense at the subband center); Uniform
// reproduces a linear axis of m_sub bins per subband.
enum class WarpOrientation { EdgeDense, CenterDense, Uniform };

std::string_view to_string(WarpOrientation o);
WarpOrientation orientation_from_string(std::string_view name);

struct WarpGrid {
  std::size_t n_sub = 0;
  std::size_t m_sub = 0;
  double b_sub_hz = 0.0;
  double alpha1 = 1.0;
  double alpha2 = 4.0;
  double f_min_hz = 0.0;
  WarpOrientation orientation = WarpOrientation::EdgeDense;
  std::vector<double> base;       // b_i, i < m_sub/2 (empty for Uniform)
  std::vector<double> unit;       // unit-interval template, length m_sub
  std::vector<double> points_hz;  // n_sub * m_sub physical frequencies

  std::size_t size() const { return points_hz.size(); }
  double f_max_hz() const { return f_min_hz + static_cast<double>(n_sub) * b_sub_hz; }
  // Log-step factor of the base coordinates.
  double delta() const { return (alpha2 - alpha1) / (static_cast<double>(m_sub) / 2.0 - 1.0); }
};

// Log-space subband grid. Throws ValidationError for odd m_sub, m_sub < 4,
// alpha2 <= alpha1, or n_sub == 0.
WarpGrid build_warp_grid(double f_min_hz, double b_obs_hz, std::size_t n_sub, std::size_t m_sub,
                         double alpha1, double alpha2,
                         WarpOrientation orientation = WarpOrientation::EdgeDense);

// Grid whose points coincide with the bins of an n_sub*m_sub point linear
// axis starting at f_min.
WarpGrid uniform_grid(double f_min_hz, double b_obs_hz, std::size_t n_sub, std::size_t m_sub);

// Piecewise-linear maps between fractional grid index and Hz. Throw
// ValidationError when the argument is outside the grid.
double warp_to_hz(const WarpGrid& grid, double warped_bin);
double hz_to_warp(const WarpGrid& grid, double f_hz);

enum class WarpInterp { Complex, Magnitude };

// Resamples each frame of a linear STFT at the grid points (1-D linear
// interpolation along frequency) and applies log(|.| + eps). A linear axis
// covering a full DFT period is treated as periodic, so the grid may reach
// +fs/2.
Spectrogram warp_spectrogram(const ComplexSpectrogram& x, const WarpGrid& grid, double eps,
                             WarpInterp interp = WarpInterp::Complex);

// Binary PGM (P5): rows are bins with the highest frequency on top, columns
// are frames. Boxes are drawn as 255-valued outlines.
void render_spectrogram(const Spectrogram& s, const std::filesystem::path& path,
                        std::span<const TfBox> boxes = {});

// Debug dump: `<prefix>.f32` raw float32 LE row-major matrix and
// `<prefix>.json` header with dimensions and axes.
void write_spectrogram_dump(const Spectrogram& s, const std::filesystem::path& prefix);

} // namespace zoomspec
