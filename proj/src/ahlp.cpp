#include "zoomspec/ahlp.hpp"

#include "fft.hpp"
#include "zoomspec/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace zoomspec {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Normalized transition width of a Hamming-windowed sinc.
constexpr double kHammingTransition = 3.3;
constexpr std::size_t kMinSegment = 8;

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? r : x;
}

std::vector<double> symmetric_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2 || kind == WindowKind::Rect) return w;
  const double a0 = kind == WindowKind::Hamming ? 0.54 : 0.5;
  for (std::size_t k = 0; k < n; ++k)
    w[k] = a0 - (1.0 - a0) * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n - 1));
  return w;
}

std::size_t tap_cap(std::size_t max_taps) { return max_taps % 2 == 1 ? max_taps : max_taps - 1; }

} // namespace

void AhlpParams::validate() const {
  if (!(kappa >= 0.1 && kappa <= 0.3)) throw ValidationError("ahlp: kappa must lie in [0.1, 0.3]");
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("ahlp: eta must lie in (0, 1)");
  if (max_taps < 1) throw ValidationError("ahlp: max_taps must be positive");
}

SegmentIndices segment_indices(double t_start_s, double t_end_s, double fs) {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw ValidationError("segment_indices: sample rate must be positive");
  if (!std::isfinite(t_start_s) || !std::isfinite(t_end_s) || !(t_end_s > t_start_s))
    throw ValidationError("segment_indices: need t_end > t_start");
  if (t_start_s < 0.0) throw ValidationError("segment_indices: t_start before the first sample");
  const double a = std::ceil(snap(t_start_s * fs));
  const double b = std::floor(snap(t_end_s * fs));
  if (b - a + 1.0 < static_cast<double>(kMinSegment))
    throw ValidationError("degenerate segment: " + std::to_string(static_cast<long long>(b - a + 1.0)) +
                          " samples (minimum 8)");
  SegmentIndices s;
  s.n_start = static_cast<std::size_t>(a);
  s.n_end = static_cast<std::size_t>(b);
  s.n_seg = s.n_end - s.n_start + 1;
  return s;
}

std::vector<cf64> heterodyne(const IqRecording& r, std::size_t n_start, std::size_t n_seg, double f_c_hz) {
  const double fs = r.sample_rate_hz();
  if (!std::isfinite(f_c_hz) || std::abs(f_c_hz) > 0.5 * fs)
    throw ValidationError("heterodyne: |f_c| exceeds fs/2");
  if (n_start + n_seg > r.size()) throw ValidationError("heterodyne: segment extends past the recording");
  const auto& s = r.samples();
  const double step = f_c_hz / fs;
  std::vector<cf64> y(n_seg);
  for (std::size_t n = 0; n < n_seg; ++n) {
    const double cycles = -step * static_cast<double>(n_start + n);
    const double frac = cycles - std::floor(cycles);
    const cf64 x(s[n_start + n].real(), s[n_start + n].imag());
    y[n] = f_c_hz == 0.0 ? x : x * std::polar(1.0, kTwoPi * frac);
  }
  return y;
}

double cutoff_frequency(double bandwidth_hz, double conf, double kappa) {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
    throw ValidationError("cutoff_frequency: bandwidth must be positive");
  if (!(conf >= 0.0 && conf <= 1.0)) throw ValidationError("cutoff_frequency: conf must lie in [0,1]");
  const double beta = 1.0 + kappa * (1.0 - conf);
  return beta * bandwidth_hz / 2.0;
}

std::size_t lowpass_tap_count(double f_lp_hz, double fs, const AhlpParams& p) {
  const double dtr = p.eta * f_lp_hz;
  auto n = static_cast<std::size_t>(std::ceil(snap(kHammingTransition * fs / dtr)));
  if (n % 2 == 0) ++n;
  return n;
}

std::vector<double> design_lowpass(double f_lp_hz, double fs, const AhlpParams& p) {
  p.validate();
  if (!(fs > 0.0)) throw ValidationError("design_lowpass: sample rate must be positive");
  if (!(f_lp_hz > 0.0)) throw ValidationError("design_lowpass: cutoff must be positive");
  const double limit = 0.5 * fs * (1.0 - p.eta);
  if (!(f_lp_hz < limit))
    throw ValidationError("design_lowpass: cutoff " + std::to_string(f_lp_hz) +
                          " Hz violates the transition-band margin f_LP < fs/2 (1 - eta) = " + std::to_string(limit) +
                          " Hz");
  const std::size_t n = std::min(tap_cap(p.max_taps), lowpass_tap_count(f_lp_hz, fs, p));
  const double fc = (f_lp_hz + 0.5 * p.eta * f_lp_hz) / fs;  // cycles per sample
  const auto w = symmetric_window(p.window, n);
  const std::size_t mid = (n - 1) / 2;
  std::vector<double> h(n);
  for (std::size_t k = 0; k <= mid; ++k) {
    const double t = static_cast<double>(mid - k);
    const double sinc = t == 0.0 ? 2.0 * fc : std::sin(kTwoPi * fc * t) / (kPi * t);
    h[k] = sinc * w[k];
    h[n - 1 - k] = h[k];
  }
  // Pairwise sum keeps the normalization symmetric.
  double sum = h[mid];
  for (std::size_t k = 0; k < mid; ++k) sum += 2.0 * h[k];
  for (auto& v : h) v /= sum;
  return h;
}

std::vector<cf64> lowpass_filter(std::span<const cf64> y, std::span<const double> h, ConvMethod method) {
  const std::size_t len = y.size();
  const std::size_t nt = h.size();
  if (nt == 0 || nt % 2 == 0) throw ValidationError("lowpass_filter: taps must have odd length");
  std::vector<cf64> z(len, cf64{});
  if (len == 0) return z;
  const std::size_t delay = (nt - 1) / 2;

  if (method == ConvMethod::Auto)
    method = (nt <= 64 || static_cast<double>(nt) * static_cast<double>(len) < 4e6) ? ConvMethod::Direct : ConvMethod::Fft;

  if (method == ConvMethod::Direct) {
    // z[n] = sum_k h[k] y[n + delay - k]
    for (std::size_t n = 0; n < len; ++n) {
      const long long base = static_cast<long long>(n + delay);
      const long long k_lo = std::max(0LL, base - static_cast<long long>(len) + 1);
      const long long k_hi = std::min(static_cast<long long>(nt) - 1, base);
      cf64 acc{};
      for (long long k = k_lo; k <= k_hi; ++k) acc += h[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(base - k)];
      z[n] = acc;
    }
    return z;
  }

  const std::size_t m = detail::next_pow2(len + nt - 1);
  std::vector<cf64> a(m, cf64{}), b(m, cf64{}), fa(m), fb(m);
  std::copy(y.begin(), y.end(), a.begin());
  for (std::size_t k = 0; k < nt; ++k) b[k] = h[k];
  detail::fft(a, fa);
  detail::fft(b, fb);
  for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
  detail::ifft(fa, a);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t n = 0; n < len; ++n) z[n] = a[n + delay] * scale;
  return z;
}

std::size_t safe_decim_factor(double fs, double f_lp_hz) {
  if (!(f_lp_hz > 0.0) || !std::isfinite(f_lp_hz)) throw ValidationError("safe_decim_factor: f_LP must be positive");
  if (!(fs > 0.0)) throw ValidationError("safe_decim_factor: sample rate must be positive");
  const double ratio = fs / (2.0 * f_lp_hz);
  std::size_t d = ratio >= 1.0 ? static_cast<std::size_t>(std::floor(ratio)) : 1;
  while (d > 1 && fs / static_cast<double>(d) < 2.0 * f_lp_hz) --d;
  return std::max<std::size_t>(1, d);
}

std::vector<cf64> decimate(std::span<const cf64> z, std::size_t d) {
  if (d == 0) throw ValidationError("decimate: factor must be at least 1");
  std::vector<cf64> u;
  if (z.empty()) return u;
  u.reserve((z.size() - 1) / d + 1);
  for (std::size_t i = 0; i < z.size(); i += d) u.push_back(z[i]);
  return u;
}

SegmentMeta PurifiedSegment::meta() const {
  return SegmentMeta{decim_factor, f_c_hz, f_lp_hz, n_start, source_conf};
}

IqRecording PurifiedSegment::to_recording() const {
  std::vector<cf32> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out[i] = cf32(static_cast<float>(samples[i].real()), static_cast<float>(samples[i].imag()));
  return IqRecording(std::move(out), out_rate_hz, record_start_s + static_cast<double>(n_start) / sample_rate_hz);
}

PurifiedSegment ahlp_purify(const IqRecording& r, const Proposal& prop, const AhlpParams& p) {
  p.validate();
  prop.validate();
  r.require_nonempty();
  const double fs = r.sample_rate_hz();
  const double t0 = r.start_time_s();
  const double tol = 1.0 / fs;
  if (prop.t_start_s < t0 - tol || prop.t_end_s > r.end_time_s() + tol)
    throw ValidationError("ahlp: proposal time span lies outside the recording");
  if (prop.f_start_hz < -0.5 * fs * (1.0 + 1e-9) || prop.f_end_hz > 0.5 * fs * (1.0 + 1e-9))
    throw ValidationError("ahlp: proposal frequency span lies outside [-fs/2, fs/2]");

  SegmentIndices idx = segment_indices(std::max(0.0, prop.t_start_s - t0), prop.t_end_s - t0, fs);
  if (idx.n_start >= r.size()) throw ValidationError("degenerate segment: starts after the last sample");
  if (idx.n_end >= r.size()) {
    idx.n_end = r.size() - 1;
    idx.n_seg = idx.n_end - idx.n_start + 1;
    if (idx.n_seg < kMinSegment) throw ValidationError("degenerate segment: fewer than 8 samples inside the recording");
  }

  PurifiedSegment seg;
  seg.sample_rate_hz = fs;
  seg.record_start_s = t0;
  seg.n_start = idx.n_start;
  seg.n_seg = idx.n_seg;
  seg.source_conf = prop.confidence;
  seg.f_c_hz = prop.f_c_hz();

  double f_lp = cutoff_frequency(prop.bandwidth_hz(), prop.confidence, p.kappa);
  const double limit = std::min(0.5 * fs * (1.0 - p.eta) * (1.0 - 1e-9), 0.5 * fs - std::abs(seg.f_c_hz));
  if (!(limit > 0.0)) throw ValidationError("ahlp: no usable band left next to the Nyquist edge");
  if (f_lp > limit) {
    f_lp = limit;
    seg.band_clipped = true;
  }
  seg.f_lp_hz = f_lp;
  seg.taps_capped = lowpass_tap_count(f_lp, fs, p) > tap_cap(p.max_taps);

  const auto y = heterodyne(r, idx.n_start, idx.n_seg, seg.f_c_hz);
  const auto h = design_lowpass(f_lp, fs, p);
  const auto z = lowpass_filter(y, h);
  seg.decim_factor = safe_decim_factor(fs, f_lp);
  seg.out_rate_hz = fs / static_cast<double>(seg.decim_factor);
  seg.samples = decimate(z, seg.decim_factor);
  if (seg.out_rate_hz < 2.0 * seg.f_lp_hz) throw InvariantError("ahlp: Nyquist condition violated");
  return seg;
}

std::vector<BatchItem> ahlp_purify_batch(const IqRecording& r, std::span<const Proposal> proposals, const AhlpParams& p,
                                         std::size_t n_threads) {
  std::vector<BatchItem> out(proposals.size());
  auto work = [&](std::size_t i) {
    try {
      out[i].segment = ahlp_purify(r, proposals[i], p);
    } catch (const std::exception& e) {
      out[i].error = "proposal " + std::to_string(i) + ": " + e.what();
    }
  };
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, proposals.size());
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < proposals.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < proposals.size(); i = next++) work(i);
    });
  }
  pool.clear();
  return out;
}

} // namespace zoomspec
