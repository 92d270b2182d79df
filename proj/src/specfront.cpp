#include "zoomspec/specfront.hpp"

#include "fft.hpp"
#include "json_util.hpp"
#include "zoomspec/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

namespace zoomspec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Snap values that are integral up to rounding noise.
double snap_integral(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? r : x;
}

} // namespace

std::string_view to_string(WindowKind w) {
  switch (w) {
  case WindowKind::Hann: return "hann";
  case WindowKind::Hamming: return "hamming";
  case WindowKind::Rect: return "rect";
  }
  return "hann";
}

WindowKind window_from_string(std::string_view name) {
  if (name == "hann") return WindowKind::Hann;
  if (name == "hamming") return WindowKind::Hamming;
  if (name == "rect") return WindowKind::Rect;
  throw ValidationError("unknown window '" + std::string(name) + "' (expected hann|hamming|rect)");
}

std::vector<double> analysis_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(kTwoPi * static_cast<double>(i) / dn);
    switch (kind) {
    case WindowKind::Hann: w[i] = 0.5 - 0.5 * c; break;
    case WindowKind::Hamming: w[i] = 0.54 - 0.46 * c; break;
    case WindowKind::Rect: break;
    }
  }
  return w;
}

void StftParams::validate() const {
  if (n_window == 0 || hop == 0 || n_fft == 0) throw ValidationError("stft: n_window, hop and n_fft must be positive");
  if (hop > n_window) throw ValidationError("stft: hop must not exceed n_window");
  if (n_fft < n_window) throw ValidationError("stft: n_fft must be >= n_window");
  if (!is_pow2(n_fft)) throw ValidationError("stft: n_fft must be a power of two");
  if (!(eps > 0.0)) throw ValidationError("stft: eps must be positive");
}

std::vector<cf64> unitary_dft(std::span<const cf64> r) {
  if (r.empty()) throw ValidationError("unitary_dft: empty input");
  std::vector<cf64> out(r.size());
  detail::fft(r, out);
  const double scale = 1.0 / std::sqrt(static_cast<double>(r.size()));
  for (auto& v : out) v *= scale;
  return out;
}

ComplexSpectrogram stft(const IqRecording& r, const StftParams& p) {
  p.validate();
  r.require_nonempty();
  const std::size_t ns = r.size();
  if (ns < p.n_window)
    throw ValidationError("stft: recording of " + std::to_string(ns) + " samples is shorter than one window (" +
                          std::to_string(p.n_window) + ")");

  const std::size_t n_frames = (ns - p.n_window) / p.hop + 1;
  const std::size_t m = p.n_fft;
  const double fs = r.sample_rate_hz();

  ComplexSpectrogram x;
  x.n_frames = n_frames;
  x.n_bins = m;
  x.values.resize(n_frames * m);
  x.kind = AxisKind::Linear;
  x.sample_rate_hz = fs;
  x.n_window = p.n_window;
  x.hop = p.hop;
  x.window = p.window;
  x.frame_times_s.resize(n_frames);
  x.freq_axis_hz.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    x.freq_axis_hz[k] = (static_cast<double>(k) - static_cast<double>(m / 2)) * fs / static_cast<double>(m);

  const auto g = analysis_window(p.window, p.n_window);
  const auto& s = r.samples();
  std::vector<cf64> buf(m), spec(m);
  for (std::size_t l = 0; l < n_frames; ++l) {
    x.frame_times_s[l] = r.start_time_s() + static_cast<double>(l * p.hop) / fs;
    std::fill(buf.begin(), buf.end(), cf64{});
    const std::size_t off = l * p.hop;
    for (std::size_t t = 0; t < p.n_window; ++t) {
      buf[t] = cf64(s[off + t].real(), s[off + t].imag()) * g[t];
    }
    detail::fft(buf, spec);
    cf64* row = x.values.data() + l * m;
    for (std::size_t k = 0; k < m; ++k) row[k] = spec[(k + m / 2) % m];
  }
  return x;
}

Spectrogram log_magnitude(const ComplexSpectrogram& x, double eps) {
  if (!(eps > 0.0)) throw ValidationError("log_magnitude: eps must be positive");
  Spectrogram s;
  s.n_frames = x.n_frames;
  s.n_bins = x.n_bins;
  s.frame_times_s = x.frame_times_s;
  s.freq_axis_hz = x.freq_axis_hz;
  s.kind = x.kind;
  s.sample_rate_hz = x.sample_rate_hz;
  s.n_window = x.n_window;
  s.hop = x.hop;
  s.window = x.window;
  s.noise_shape = x.noise_shape;
  s.values.resize(x.values.size());
  for (std::size_t i = 0; i < x.values.size(); ++i) s.values[i] = std::log(std::abs(x.values[i]) + eps);
  return s;
}

// ---------------------------------------------------------------------------

std::string_view to_string(WarpOrientation o) {
  switch (o) {
  case WarpOrientation::EdgeDense: return "edge_dense";
  case WarpOrientation::CenterDense: return "center_dense";
  case WarpOrientation::Uniform: return "uniform";
  }
  return "edge_dense";
}

WarpOrientation orientation_from_string(std::string_view name) {
  if (name == "edge_dense") return WarpOrientation::EdgeDense;
  if (name == "center_dense") return WarpOrientation::CenterDense;
  if (name == "uniform") return WarpOrientation::Uniform;
  throw ValidationError("unknown warp orientation '" + std::string(name) +
                        "' (expected edge_dense|center_dense|uniform)");
}

namespace {

void fill_points(WarpGrid& g) {
  g.points_hz.resize(g.n_sub * g.m_sub);
  for (std::size_t k = 0; k < g.n_sub; ++k) {
    const double band_lo = g.f_min_hz + static_cast<double>(k) * g.b_sub_hz;
    for (std::size_t j = 0; j < g.m_sub; ++j) g.points_hz[k * g.m_sub + j] = band_lo + g.unit[j] * g.b_sub_hz;
  }
}

} // namespace

WarpGrid build_warp_grid(double f_min_hz, double b_obs_hz, std::size_t n_sub, std::size_t m_sub, double alpha1,
                         double alpha2, WarpOrientation orientation) {
  if (orientation == WarpOrientation::Uniform) return uniform_grid(f_min_hz, b_obs_hz, n_sub, m_sub);
  if (n_sub == 0) throw ValidationError("warp grid: n_sub must be >= 1");
  if (m_sub % 2 != 0) throw ValidationError("warp grid: m_sub must be even");
  if (m_sub < 4) throw ValidationError("warp grid: m_sub must be >= 4");
  if (!(alpha2 > alpha1)) throw ValidationError("warp grid: alpha2 must exceed alpha1");
  if (!(b_obs_hz > 0.0)) throw ValidationError("warp grid: observed bandwidth must be positive");

  WarpGrid g;
  g.n_sub = n_sub;
  g.m_sub = m_sub;
  g.b_sub_hz = b_obs_hz / static_cast<double>(n_sub);
  g.alpha1 = alpha1;
  g.alpha2 = alpha2;
  g.f_min_hz = f_min_hz;
  g.orientation = orientation;

  const std::size_t half = m_sub / 2;
  const double delta = g.delta();
  const double lo = std::pow(10.0, alpha1);
  const double span = std::pow(10.0, alpha2) - lo;
  g.base.resize(half);
  for (std::size_t i = 0; i < half; ++i) {
    // The last exponent is pinned to alpha2 so the endpoint is exactly 1.
    const double expo = (i + 1 == half) ? alpha2 : alpha1 + static_cast<double>(i) * delta;
    g.base[i] = (i == 0) ? 0.0 : (std::pow(10.0, expo) - lo) / span;
  }
  g.base[half - 1] = 1.0;

  g.unit.resize(m_sub);
  for (std::size_t j = 0; j < m_sub; ++j) {
    if (orientation == WarpOrientation::EdgeDense) {
      g.unit[j] = (j < half) ? 0.5 * g.base[j] : 1.0 - 0.5 * g.base[m_sub - 1 - j];
    } else {
      g.unit[j] = (j < half) ? 0.5 * (1.0 - g.base[half - 1 - j]) : 0.5 + 0.5 * g.base[j - half];
    }
  }
  fill_points(g);
  return g;
}

WarpGrid uniform_grid(double f_min_hz, double b_obs_hz, std::size_t n_sub, std::size_t m_sub) {
  if (n_sub == 0 || m_sub == 0) throw ValidationError("uniform grid: n_sub and m_sub must be positive");
  if (!(b_obs_hz > 0.0)) throw ValidationError("uniform grid: observed bandwidth must be positive");
  WarpGrid g;
  g.n_sub = n_sub;
  g.m_sub = m_sub;
  g.b_sub_hz = b_obs_hz / static_cast<double>(n_sub);
  g.f_min_hz = f_min_hz;
  g.orientation = WarpOrientation::Uniform;
  g.unit.resize(m_sub);
  for (std::size_t j = 0; j < m_sub; ++j) g.unit[j] = static_cast<double>(j) / static_cast<double>(m_sub);
  fill_points(g);
  return g;
}

double warp_to_hz(const WarpGrid& grid, double warped_bin) {
  const double last = static_cast<double>(grid.size()) - 1.0;
  if (!(warped_bin >= 0.0 && warped_bin <= last))
    throw ValidationError("warp_to_hz: index " + std::to_string(warped_bin) + " outside [0, " + std::to_string(last) + "]");
  const auto i = static_cast<std::size_t>(std::floor(warped_bin));
  if (i + 1 >= grid.size()) return grid.points_hz.back();
  const double frac = warped_bin - static_cast<double>(i);
  return grid.points_hz[i] + frac * (grid.points_hz[i + 1] - grid.points_hz[i]);
}

double hz_to_warp(const WarpGrid& grid, double f_hz) {
  const auto& p = grid.points_hz;
  const double tol = 1e-9 * std::max(1.0, grid.b_sub_hz);
  if (!(f_hz >= p.front() - tol && f_hz <= p.back() + tol))
    throw ValidationError("hz_to_warp: " + std::to_string(f_hz) + " Hz outside grid range [" +
                          std::to_string(p.front()) + ", " + std::to_string(p.back()) + "]");
  f_hz = std::clamp(f_hz, p.front(), p.back());
  // Last point <= f; the following point is then strictly greater, so
  // duplicated ordinates resolve to the later index.
  auto it = std::upper_bound(p.begin(), p.end(), f_hz);
  if (it == p.end()) return static_cast<double>(p.size() - 1);
  const auto i = static_cast<std::size_t>(it - p.begin()) - 1;
  return static_cast<double>(i) + (f_hz - p[i]) / (p[i + 1] - p[i]);
}

Spectrogram warp_spectrogram(const ComplexSpectrogram& x, const WarpGrid& grid, double eps, WarpInterp interp) {
  if (!(eps > 0.0)) throw ValidationError("warp_spectrogram: eps must be positive");
  if (x.kind != AxisKind::Linear) throw ValidationError("warp_spectrogram: input must be a linear spectrogram");
  if (x.n_bins < 2) throw ValidationError("warp_spectrogram: need at least two linear bins");
  const double f0 = x.freq_axis_hz.front();
  const double df = x.freq_axis_hz[1] - x.freq_axis_hz[0];
  const bool periodic = x.sample_rate_hz > 0.0 &&
                        std::abs(df * static_cast<double>(x.n_bins) - x.sample_rate_hz) <= 1e-9 * x.sample_rate_hz;
  const double max_pos = static_cast<double>(x.n_bins - 1) + (periodic ? 1.0 : 0.0);

  const std::size_t m = grid.size();
  std::vector<std::size_t> lo(m), hi(m);
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) {
    double pos = snap_integral((grid.points_hz[j] - f0) / df);
    if (pos < -1e-9 || pos > max_pos + 1e-9)
      throw ValidationError("warp_spectrogram: grid point " + std::to_string(grid.points_hz[j]) +
                            " Hz outside the linear axis");
    pos = std::clamp(pos, 0.0, max_pos);
    auto i = static_cast<std::size_t>(std::floor(pos));
    double frac = pos - static_cast<double>(i);
    if (i >= x.n_bins) {  // exactly on the wrapped edge
      i = x.n_bins - 1;
      frac = 1.0;
    }
    lo[j] = i;
    hi[j] = (i + 1 < x.n_bins) ? i + 1 : (periodic ? 0 : i);
    w[j] = frac;
  }

  Spectrogram s;
  s.n_frames = x.n_frames;
  s.n_bins = m;
  s.values.resize(x.n_frames * m);
  s.frame_times_s = x.frame_times_s;
  s.freq_axis_hz = grid.points_hz;
  s.kind = AxisKind::Warped;
  s.sample_rate_hz = x.sample_rate_hz;
  s.n_window = x.n_window;
  s.hop = x.hop;
  s.window = x.window;

  // Complex interpolation between correlated neighbouring bins changes the
  // noise power: |(1-w) a + w b|^2 has mean (1-w)^2 + w^2 + 2 w (1-w) Re(rho).
  s.noise_shape.assign(m, 0.0);
  if (interp == WarpInterp::Complex && x.n_window > 0) {
    const auto g = analysis_window(x.window, x.n_window);
    cf64 num{};
    double den = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double g2 = g[n] * g[n];
      num += g2 * std::polar(1.0, kTwoPi * static_cast<double>(n) / static_cast<double>(x.n_bins));
      den += g2;
    }
    const double rho = den > 0.0 ? num.real() / den : 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double a = 1.0 - w[j];
      const double gain = a * a + w[j] * w[j] + 2.0 * a * w[j] * rho;
      s.noise_shape[j] = 0.5 * std::log(std::max(gain, 1e-12));
    }
  }

  for (std::size_t l = 0; l < x.n_frames; ++l) {
    const cf64* row = x.values.data() + l * x.n_bins;
    double* out = s.values.data() + l * m;
    for (std::size_t j = 0; j < m; ++j) {
      double mag;
      if (w[j] == 0.0) {
        mag = std::abs(row[lo[j]]);
      } else if (interp == WarpInterp::Complex) {
        mag = std::abs((1.0 - w[j]) * row[lo[j]] + w[j] * row[hi[j]]);
      } else {
        mag = (1.0 - w[j]) * std::abs(row[lo[j]]) + w[j] * std::abs(row[hi[j]]);
      }
      out[j] = std::log(mag + eps);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t nearest_index(const std::vector<double>& axis, double v) {
  auto it = std::lower_bound(axis.begin(), axis.end(), v);
  if (it == axis.begin()) return 0;
  if (it == axis.end()) return axis.size() - 1;
  const auto i = static_cast<std::size_t>(it - axis.begin());
  return (v - axis[i - 1] <= axis[i] - v) ? i - 1 : i;
}

} // namespace

void render_spectrogram(const Spectrogram& s, const std::filesystem::path& path, std::span<const TfBox> boxes) {
  const std::size_t width = s.n_frames;
  const std::size_t height = s.n_bins;
  if (width == 0 || height == 0) throw ValidationError("render_spectrogram: empty spectrogram");
  const auto [mn_it, mx_it] = std::minmax_element(s.values.begin(), s.values.end());
  const double mn = *mn_it, mx = *mx_it;

  std::vector<unsigned char> img(width * height);
  for (std::size_t l = 0; l < width; ++l) {
    for (std::size_t b = 0; b < height; ++b) {
      const double v = s.at(l, b);
      const unsigned char px =
          (mx > mn) ? static_cast<unsigned char>(std::lround(255.0 * (v - mn) / (mx - mn))) : 128;
      img[(height - 1 - b) * width + l] = px;
    }
  }

  if (!boxes.empty()) {
    std::vector<double> centers(width);
    for (std::size_t l = 0; l < width; ++l) centers[l] = s.n_window ? s.frame_center_s(l) : s.frame_times_s[l];
    for (const auto& box : boxes) {
      const std::size_t c0 = nearest_index(centers, box.t_start_s);
      const std::size_t c1 = nearest_index(centers, box.t_end_s);
      const std::size_t b0 = nearest_index(s.freq_axis_hz, box.f_start_hz);
      const std::size_t b1 = nearest_index(s.freq_axis_hz, box.f_end_hz);
      const std::size_t r0 = height - 1 - b1, r1 = height - 1 - b0;
      for (std::size_t c = c0; c <= c1; ++c) {
        img[r0 * width + c] = 255;
        img[r1 * width + c] = 255;
      }
      for (std::size_t r = r0; r <= r1; ++r) {
        img[r * width + c0] = 255;
        img[r * width + c1] = 255;
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_spectrogram_dump(const Spectrogram& s, const std::filesystem::path& prefix) {
  std::filesystem::path data = prefix;
  data += ".f32";
  std::filesystem::path header = prefix;
  header += ".json";

  std::vector<std::uint32_t> words(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    std::uint32_t w = std::bit_cast<std::uint32_t>(static_cast<float>(s.values[i]));
    if constexpr (std::endian::native == std::endian::big)
      w = ((w & 0xffu) << 24) | ((w & 0xff00u) << 8) | ((w & 0xff0000u) >> 8) | (w >> 24);
    words[i] = w;
  }
  std::ofstream out(data, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + data.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!out) throw IoError("write failed for '" + data.string() + "'");

  detail::json doc = {{"n_frames", s.n_frames},
                      {"n_bins", s.n_bins},
                      {"dtype", "float32"},
                      {"byte_order", "little"},
                      {"layout", "row-major [frame][bin]"},
                      {"kind", s.kind == AxisKind::Linear ? "linear" : "warped"},
                      {"sample_rate_hz", s.sample_rate_hz},
                      {"frame_times_s", s.frame_times_s},
                      {"freq_axis_hz", s.freq_axis_hz}};
  detail::write_json_file(doc, header);
}

} // namespace zoomspec
