#include "zoomspec/decode.hpp"

#include "fft.hpp"
#include "zoomspec/errors.hpp"
#include "zoomspec/specfront.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zoomspec {

namespace {

constexpr double kSumTol = 1e-6;

double expectation(const GridDistribution& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) acc += p.grid[i] * p.probs[i];
  return acc;
}

double percentile(std::vector<double> v, double q) {
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

// Index where the envelope first reaches `thr`, interpolated against the
// previous sample.
double rising_crossing(const std::vector<double>& e, double thr) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] >= thr) {
      if (i == 0) return 0.0;
      return static_cast<double>(i - 1) + (thr - e[i - 1]) / (e[i] - e[i - 1]);
    }
  }
  return 0.0;
}

double falling_crossing(const std::vector<double>& e, double thr) {
  for (std::size_t i = e.size(); i-- > 0;) {
    if (e[i] >= thr) {
      if (i + 1 == e.size()) return static_cast<double>(e.size());
      return static_cast<double>(i) + (e[i] - thr) / (e[i] - e[i + 1]);
    }
  }
  return static_cast<double>(e.size());
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t w) {
  if (w <= 1) return x;
  const std::size_t n = x.size();
  const std::size_t before = (w - 1) / 2;
  const std::size_t after = w - 1 - before;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= before ? i - before : 0;
    const std::size_t b = std::min(n, i + after + 1);
    out[i] = (prefix[b] - prefix[a]) / static_cast<double>(b - a);
  }
  return out;
}

// Welch periodogram (Hann, 50% overlap), DC in the middle.
std::vector<double> welch_psd(const std::vector<cf64>& u) {
  std::size_t nfft = 256;
  while (nfft > u.size()) nfft /= 2;
  nfft = std::max<std::size_t>(nfft, 8);
  const auto g = analysis_window(WindowKind::Hann, nfft);
  std::vector<double> psd(nfft, 0.0);
  std::vector<cf64> buf(nfft), spec(nfft);
  const std::size_t hop = nfft / 2;
  std::size_t count = 0;
  for (std::size_t off = 0; off + nfft <= u.size(); off += hop) {
    for (std::size_t i = 0; i < nfft; ++i) buf[i] = u[off + i] * g[i];
    detail::fft(buf, spec);
    for (std::size_t k = 0; k < nfft; ++k) psd[k] += std::norm(spec[(k + nfft / 2) % nfft]);
    ++count;
  }
  if (count == 0) {
    std::fill(buf.begin(), buf.end(), cf64{});
    for (std::size_t i = 0; i < u.size(); ++i) buf[i] = u[i];
    detail::fft(buf, spec);
    for (std::size_t k = 0; k < nfft; ++k) psd[k] = std::norm(spec[(k + nfft / 2) % nfft]);
  }
  return psd;
}

// 99%-power width of a PSD in units of the sample rate.
double occupied_fraction(const std::vector<double>& psd) {
  const std::size_t n = psd.size();
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + psd[k];
  const double total = cum[n];
  if (!(total > 0.0)) return 1.0;
  // Bin k covers [k, k+1) in bin units; cumulative power is piecewise linear.
  auto locate = [&](double target) {
    auto it = std::lower_bound(cum.begin() + 1, cum.end(), target);
    const auto k = static_cast<std::size_t>(it - cum.begin()) - 1;
    const double span = cum[k + 1] - cum[k];
    const double frac = span > 0.0 ? (target - cum[k]) / span : 0.0;
    return static_cast<double>(k) + frac;
  };
  const double lo = locate(0.005 * total);
  const double hi = locate(0.995 * total);
  return std::clamp((hi - lo) / static_cast<double>(n), 0.0, 1.0);
}

} // namespace

std::vector<double> uniform_unit_grid(std::size_t length) {
  if (length == 0) throw ValidationError("grid length must be positive");
  std::vector<double> g(length, 0.0);
  if (length == 1) return g;
  for (std::size_t i = 0; i < length; ++i) g[i] = static_cast<double>(i) / static_cast<double>(length - 1);
  g.back() = 1.0;
  return g;
}

GridDistribution GridDistribution::on_uniform_grid(std::vector<double> probs) {
  GridDistribution d;
  d.grid = uniform_unit_grid(probs.size());
  d.probs = std::move(probs);
  return d;
}

GridDistribution GridDistribution::point_mass(double x, std::size_t length) {
  if (length < 2) throw ValidationError("point_mass: grid needs at least two points");
  x = std::clamp(x, 0.0, 1.0);
  std::vector<double> probs(length, 0.0);
  const double pos = x * static_cast<double>(length - 1);
  auto i = static_cast<std::size_t>(std::floor(pos));
  if (i >= length - 1) {
    probs[length - 1] = 1.0;
  } else {
    const double frac = pos - static_cast<double>(i);
    probs[i] = 1.0 - frac;
    probs[i + 1] = frac;
  }
  return on_uniform_grid(std::move(probs));
}

void GridDistribution::validate() const {
  if (probs.empty()) throw ValidationError("grid distribution: empty");
  if (probs.size() != grid.size()) throw ValidationError("grid distribution: probs and grid lengths differ");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw ValidationError("grid distribution: probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw ValidationError("grid distribution: probabilities sum to " + std::to_string(sum) + ", not 1");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ValidationError("grid distribution: grid outside [0,1]");
    if (i > 0 && grid[i] < grid[i - 1]) throw ValidationError("grid distribution: grid must be non-decreasing");
  }
}

TimeEstimate decode_time(const GridDistribution& p_start, const GridDistribution& p_dur, double eps_clamp) {
  if (!(eps_clamp > 0.0 && eps_clamp <= 1e-3)) throw ValidationError("decode_time: eps must lie in (0, 1e-3]");
  p_start.validate();
  p_dur.validate();
  if (p_start.probs.size() != p_dur.probs.size())
    throw ValidationError("decode_time: start and duration grids differ in length");
  TimeEstimate t;
  t.t_start = std::clamp(expectation(p_start), 0.0, 1.0);
  t.duration = std::clamp(expectation(p_dur), 0.0, 1.0);
  t.t_end = std::min(1.0 - eps_clamp, t.t_start + t.duration);
  return t;
}

double decode_bandwidth(const GridDistribution& p_bw) {
  p_bw.validate();
  return std::clamp(expectation(p_bw), 0.0, 1.0);
}

void RefinedDetection::validate(double eps_clamp) const {
  for (double v : {t_start_norm, t_end_norm, bandwidth_norm})
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("refined detection: fields must lie in [0,1]");
  if (!(t_end_norm > t_start_norm)) throw ValidationError("refined detection: t_end_norm must exceed t_start_norm");
  if (t_end_norm > 1.0 - eps_clamp + 1e-15) throw ValidationError("refined detection: t_end_norm exceeds 1 - eps");
  if (class_probs) {
    double sum = 0.0;
    for (double p : *class_probs) {
      if (!(p >= 0.0)) throw ValidationError("refined detection: class_probs must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTol) throw ValidationError("refined detection: class_probs must sum to 1");
  }
}

namespace {

void check_segment_meta(const PurifiedSegment& seg) {
  if (!(seg.sample_rate_hz > 0.0) || !(seg.out_rate_hz > 0.0) || seg.decim_factor == 0 || seg.n_seg == 0)
    throw ValidationError("denormalize: incomplete segment metadata");
  const double expect = seg.sample_rate_hz / static_cast<double>(seg.decim_factor);
  if (std::abs(expect - seg.out_rate_hz) > 1e-9 * expect)
    throw ValidationError("denormalize: out_rate_hz inconsistent with sample rate and decimation factor");
}

} // namespace

Detection denormalize(const RefinedDetection& refined, const PurifiedSegment& seg) {
  check_segment_meta(seg);
  const double fs = seg.sample_rate_hz;
  const double t0 = seg.record_start_s + static_cast<double>(seg.n_start) / fs;
  const double dur = static_cast<double>(seg.n_seg) / fs;
  Detection d;
  d.t_start_s = t0 + refined.t_start_norm * dur;
  d.t_end_s = t0 + refined.t_end_norm * dur;
  d.f_c_hz = seg.f_c_hz;
  d.bandwidth_hz = refined.bandwidth_norm * seg.out_rate_hz;
  d.confidence = std::clamp(seg.source_conf, 0.0, 1.0);
  d.refined = true;
  d.class_label = ModClass::Unknown;
  if (refined.class_probs) {
    d.class_probs = *refined.class_probs;
    const auto& cp = *refined.class_probs;
    if (cp.size() == kNumModClasses) {
      const auto best = std::max_element(cp.begin(), cp.end()) - cp.begin();
      d.class_label = static_cast<ModClass>(best);
    }
  }
  return d;
}

RefinedDetection normalize(const Detection& det, const PurifiedSegment& seg) {
  check_segment_meta(seg);
  const double fs = seg.sample_rate_hz;
  const double t0 = seg.record_start_s + static_cast<double>(seg.n_start) / fs;
  const double dur = static_cast<double>(seg.n_seg) / fs;
  RefinedDetection r;
  r.t_start_norm = (det.t_start_s - t0) / dur;
  r.t_end_norm = (det.t_end_s - t0) / dur;
  r.bandwidth_norm = det.bandwidth_hz / seg.out_rate_hz;
  if (!det.class_probs.empty()) r.class_probs = det.class_probs;
  return r;
}

void RefineParams::validate() const {
  if (grid_length < 2) throw ValidationError("refine: grid_length must be at least 2");
  if (!(eps_clamp > 0.0 && eps_clamp <= 1e-3)) throw ValidationError("refine: eps_clamp must lie in (0, 1e-3]");
}

RefinedDetection refine_stub(const PurifiedSegment& seg, const RefineParams& p) {
  p.validate();
  const auto& u = seg.samples;
  if (u.size() < 8) throw ValidationError("refine: segment shorter than 8 samples");
  if (seg.n_seg == 0 || seg.decim_factor == 0) throw ValidationError("refine: incomplete segment metadata");
  std::vector<double> power(u.size());
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    power[i] = std::norm(u[i]);
    total += power[i];
  }
  if (!(total > 0.0)) throw ValidationError("refine: all-zero segment");

  const std::size_t w = std::max<std::size_t>(1, u.size() / 128);
  const auto env = moving_average(power, w);
  const double floor = percentile(env, 0.02);
  const double plateau = percentile(env, 0.90);

  // Span of the segment in u samples: sample m sits at m D input samples.
  const double span_u = static_cast<double>(seg.n_seg) / static_cast<double>(seg.decim_factor);
  double on = 0.0;
  double off = 1.0;
  if (plateau > 4.0 * floor) {
    const double thr = 0.5 * (floor + plateau);
    on = std::clamp(rising_crossing(env, thr) / span_u, 0.0, 1.0);
    off = std::clamp(falling_crossing(env, thr) / span_u, 0.0, 1.0);
    if (off <= on) {
      on = 0.0;
      off = 1.0;
    }
  }

  auto psd = welch_psd(u);
  const double psd_floor = percentile(psd, 0.10);
  for (auto& v : psd) v = std::max(0.0, v - psd_floor);
  const double b_norm = occupied_fraction(psd);

  const std::size_t L = p.grid_length;
  const auto t = decode_time(GridDistribution::point_mass(on, L), GridDistribution::point_mass(off - on, L), p.eps_clamp);
  RefinedDetection r;
  r.t_start_norm = t.t_start;
  r.t_end_norm = t.t_end;
  if (!(r.t_end_norm > r.t_start_norm)) r.t_start_norm = std::max(0.0, r.t_end_norm - 1.0 / static_cast<double>(L - 1));
  r.bandwidth_norm = decode_bandwidth(GridDistribution::point_mass(b_norm, L));
  return r;
}

} // namespace zoomspec
