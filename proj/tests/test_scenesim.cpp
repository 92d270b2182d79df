#include "doctest.h"
#include "oracles.hpp"

#include "zoomspec/errors.hpp"
#include "zoomspec/scenesim.hpp"

#include <cstring>

using namespace zoomspec;
using oracle::cd;

namespace {

EmitterTruth span_truth(double t0, double t1, double bw, ModClass c = ModClass::Unknown) {
  EmitterTruth e;
  e.class_label = c;
  e.t_start_s = t0;
  e.t_end_s = t1;
  e.bandwidth_hz = bw;
  return e;
}

std::vector<cd> to_cd(const IqRecording& r) {
  std::vector<cd> v(r.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = cd(r.samples()[i].real(), r.samples()[i].imag());
  return v;
}

bool same_bits(const IqRecording& a, const IqRecording& b) {
  return a.size() == b.size() && std::memcmp(a.samples().data(), b.samples().data(), a.size() * sizeof(cf32)) == 0;
}

// 99%-power bandwidth from a shifted periodogram, symmetric trimming.
double obw99(const std::vector<double>& psd, double fs) {
  double total = 0.0;
  for (double v : psd) total += v;
  std::size_t lo = 0, hi = psd.size() - 1;
  double cut_lo = 0.0, cut_hi = 0.0;
  while (cut_lo + psd[lo] <= 0.005 * total) cut_lo += psd[lo++];
  while (cut_hi + psd[hi] <= 0.005 * total) cut_hi += psd[hi--];
  return static_cast<double>(hi - lo + 1) * fs / static_cast<double>(psd.size());
}

} // namespace

TEST_CASE("DC tone is all ones over its span") {
  Rng rng(1);
  const auto s = synth_emitter(waveform::Tone{}, span_truth(0.0, 1.0, 1.0), 1e6, 1000000, rng);
  REQUIRE(s.size() == 1000000);
  for (const auto& v : s) REQUIRE(v == cf64(1.0, 0.0));
}

TEST_CASE("emitter is zero outside its span and unit power inside") {
  Rng rng(2);
  const double fs = 1e6;
  const auto s = synth_emitter(waveform::SrrcPskQam{16, 5e4, 0.35}, span_truth(0.002, 0.006, 5.8e4), fs, 10000, rng);
  double p = 0.0;
  std::size_t n_on = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    if (t < 0.002 || t >= 0.006) {
      REQUIRE(s[i] == cf64{});
    } else {
      p += std::norm(s[i]);
      ++n_on;
    }
  }
  CHECK(n_on == 4000);
  CHECK(p / static_cast<double>(n_on) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chirp instantaneous frequency slope") {
  const double fs = 1e6, bw = 1e5, tsym = 1e-3;
  Rng rng(3);
  const auto s = synth_emitter(waveform::Chirp{-bw / 2, bw / 2, tsym}, span_truth(0.0, 0.004, bw), fs, 4000, rng);
  // phase-difference frequency over the second symbol, least squares line
  const std::size_t a = 1000 + 5, b = 2000 - 5;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = a; i < b; ++i) {
    const double f = std::arg(s[i + 1] * std::conj(s[i])) * fs / (2.0 * oracle::pi);
    const double t = static_cast<double>(i) / fs;
    sx += t;
    sy += f;
    sxx += t * t;
    sxy += t * f;
    n += 1;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(bw / tsym).epsilon(0.01));
}

TEST_CASE("SRRC QPSK 99% bandwidth") {
  const double fs = 1e6, rs = 5e4, beta = 0.35;
  // analytic 99% bandwidth of a 0.35 raised-cosine spectrum is 1.1667 Rs
  const double expected = 1.1667 * rs;
  Rng rng(4);
  const auto s = synth_emitter(waveform::SrrcPskQam{4, rs, beta}, span_truth(0.0, 0.1, expected), fs, 100000, rng);
  const std::vector<cd> x(s.begin(), s.end());
  const double obw = obw99(oracle::welch(x, 512), fs);
  CHECK(obw == doctest::Approx(expected).epsilon(0.10));
  CHECK(nominal_bandwidth_hz(waveform::SrrcPskQam{4, rs, beta}) == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("waveform parameter checks") {
  Rng rng(5);
  CHECK_THROWS_AS(synth_emitter(waveform::Chirp{-3e5, 3e5, 1e-3}, span_truth(0, 0.001, 6e5), 1e6, 1000, rng),
                  ValidationError);
  CHECK_THROWS_AS(synth_emitter(waveform::Chirp{-5e4, 5e4, 1e-3}, span_truth(0, 0.001, 2e5), 1e6, 1000, rng),
                  ValidationError);
  CHECK_THROWS_AS(synth_emitter(waveform::SrrcPskQam{8, 1e4, 0.35}, span_truth(0, 0.001, 1.2e4), 1e6, 1000, rng),
                  ValidationError);
  CHECK_THROWS_AS(synth_emitter(waveform::SrrcPskQam{4, 1e4, 0.0}, span_truth(0, 0.001, 1.2e4), 1e6, 1000, rng),
                  ValidationError);
  CHECK_NOTHROW(synth_emitter(waveform::Chirp{-5e4, 5e4, 1e-3}, span_truth(0, 0.001, 1.1e5), 1e6, 1000, rng));
}

TEST_CASE("default waveforms match their labeled bandwidth") {
  for (std::size_t i = 0; i < kNumModClasses; ++i) {
    const auto c = static_cast<ModClass>(i);
    const double bw = 1e5;
    const double nb = nominal_bandwidth_hz(default_waveform(c, bw));
    if (c == ModClass::Tone) {
      CHECK(nb == 0.0);
    } else {
      CHECK(nb == doctest::Approx(bw).epsilon(0.2));
    }
  }
}

TEST_CASE("identity channel keeps samples up to a constant phase") {
  Rng rng(6);
  const auto s = synth_emitter(waveform::SrrcPskQam{4, 1e4, 0.35}, span_truth(0, 0.01, 1.17e4), 1e6, 10000, rng);
  auto truth = span_truth(0, 0.01, 1.17e4);
  const auto y = apply_impairments(s, truth, 1e6, rng);
  cd rot = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(s[i]) > 1e-3) {
      rot = y[i] / s[i];
      break;
    }
  CHECK(std::abs(rot) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(std::abs(y[i] - rot * s[i]) < 1e-12);
}

TEST_CASE("fixed phase0 and static taps") {
  Rng rng(7);
  std::vector<cf64> s(64, 0.0);
  s[0] = 1.0;
  auto truth = span_truth(0, 1, 1);
  truth.phase0_rad = 0.0;
  truth.taps = {{0, {1.0, 0.0}}, {5, {0.5, -0.25}}};
  const auto y = apply_impairments(s, truth, 1e6, rng);
  CHECK(std::abs(y[0] - cd(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(y[5] - cd(0.5, -0.25)) < 1e-15);
  CHECK(std::abs(y[3]) == 0.0);

  // time-varying hook doubles the echo
  const auto z = apply_impairments(s, truth, 1e6, rng, [](std::size_t p, std::size_t) { return p == 1 ? cf64(2.0) : cf64(1.0); });
  CHECK(std::abs(z[5] - cd(1.0, -0.5)) < 1e-15);

  truth.phase_noise_var = -1.0;
  CHECK_THROWS_AS(apply_impairments(s, truth, 1e6, rng), ValidationError);
}

TEST_CASE("CFO moves a DC tone to 1 kHz") {
  const double fs = 1e6;
  const std::size_t n = 2000;  // 500 Hz bins
  std::vector<cf64> s(n, 1.0);
  auto truth = span_truth(0, 1, 1);
  truth.cfo_hz = 1000.0;
  Rng rng(8);
  const auto y = apply_impairments(s, truth, fs, rng);
  const auto X = oracle::dft({y.begin(), y.end()});
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(X[k]) > std::abs(X[best])) best = k;
  const double f_peak = static_cast<double>(best) * fs / static_cast<double>(n);
  CHECK(std::abs(f_peak - 1000.0) <= fs / static_cast<double>(n));
}

TEST_CASE("Wiener phase variance grows linearly") {
  const double var = 1e-6;
  const std::size_t n = 10001, trials = 1000;
  const std::vector<std::size_t> probes{1000, 2500, 5000, 7500, 10000};
  std::vector<double> sum(probes.size(), 0.0), sum2(probes.size(), 0.0);
  auto truth = span_truth(0, 1, 1);
  truth.phase_noise_var = var;
  truth.phase0_rad = 0.0;
  const std::vector<cf64> ones(n, 1.0);
  Rng rng(9);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto y = apply_impairments(ones, truth, 1e6, rng);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const double th = std::arg(y[probes[k]]);
      sum[k] += th;
      sum2[k] += th * th;
    }
  }
  std::vector<double> v(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double m = sum[k] / trials;
    v[k] = sum2[k] / trials - m * m;
    CHECK(std::abs(m) < 4.0 * std::sqrt(var * (probes[k] + 1) / trials));
  }
  // theta[n] sums n + 1 increments
  CHECK(v.back() == doctest::Approx(var * 10001).epsilon(0.10));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double x = static_cast<double>(probes[k]);
    sx += x;
    sy += v[k];
    sxx += x * x;
    sxy += x * v[k];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  CHECK(slope == doctest::Approx(var).epsilon(0.10));
}

TEST_CASE("noise-only scene variance") {
  SceneSpec spec;
  spec.sample_rate_hz = 1e6;
  spec.duration_s = 0.1;
  spec.noise_power = 2.0;
  spec.rng_seed = 10;
  const auto sc = synth_scene(spec);
  REQUIRE(sc.recording.size() == 100000);
  CHECK(sc.truths.empty());
  double m2 = 0.0;
  cd mean = 0.0;
  for (const auto& v : sc.recording.samples()) {
    m2 += std::norm(v);
    mean += cd(v.real(), v.imag());
  }
  mean /= 1e5;
  const double var = m2 / 1e5 - std::norm(mean);
  CHECK(var == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("noiseless DC tone equals the tone") {
  SceneSpec spec;
  spec.sample_rate_hz = 1e6;
  spec.duration_s = 0.001;
  spec.noise_power = 0.0;
  SceneEmitter em;
  em.truth = span_truth(0.0, 0.001, 1e4, ModClass::Tone);
  em.truth.snr_db = 20.0;
  em.truth.phase0_rad = 0.0;
  spec.emitters.push_back(em);
  const auto sc = synth_scene(spec);
  const double amp = std::sqrt(std::pow(10.0, 2.0) * 1e4 / 1e6);
  for (const auto& v : sc.recording.samples()) {
    REQUIRE(v.real() == static_cast<float>(amp));
    REQUIRE(v.imag() == 0.0f);
  }
}

TEST_CASE("fig2 scene") {
  const auto sc = fig2_scene();
  REQUIRE(sc.truths.size() == 3);
  CHECK(sc.recording.sample_rate_hz() == 5e6);
  std::vector<long> subbands;
  for (const auto& t : sc.truths) {
    CHECK(t.bandwidth_hz < 1e6);
    // centered in a 1 MHz subband of [-2.5, 2.5] MHz
    const double k = (t.f_c_hz + 2.5e6) / 1e6 - 0.5;
    CHECK(k == doctest::Approx(std::round(k)).epsilon(1e-12));
    subbands.push_back(std::lround(k));
  }
  std::sort(subbands.begin(), subbands.end());
  CHECK(std::adjacent_find(subbands.begin(), subbands.end()) == subbands.end());
  CHECK(sc.truths[0].class_label == ModClass::Zigbee);
  CHECK(sc.truths[1].class_label == ModClass::LoRa);
  CHECK(sc.truths[2].class_label == ModClass::NBFM);
  CHECK(sc.truths[2].t_start_s == 0.0);
  CHECK(sc.truths[2].t_end_s == doctest::Approx(sc.recording.duration_s()));

  CHECK(same_bits(fig2_scene(5e6, 20.0, 3).recording, fig2_scene(5e6, 20.0, 3).recording));
  CHECK_FALSE(same_bits(fig2_scene(5e6, 20.0, 3).recording, fig2_scene(5e6, 20.0, 4).recording));
  CHECK_THROWS_AS(fig2_scene(4e6), ValidationError);
  CHECK(fig2_scene(10e6).truths.size() == 3);
}

TEST_CASE("fig2 at 40 dB: band power contrast") {
  const double fs = 5e6;
  const auto sc = fig2_scene(fs, 40.0, 1);
  const auto x = to_cd(sc.recording);
  for (const auto& t : sc.truths) {
    const auto a = static_cast<std::size_t>(std::ceil(t.t_start_s * fs));
    const auto b = std::min(x.size(), static_cast<std::size_t>(std::floor(t.t_end_s * fs)));
    const std::vector<cd> part(x.begin() + static_cast<long>(a), x.begin() + static_cast<long>(b));
    const auto psd = oracle::welch(part, 1024);
    const double sig = oracle::band_sum(psd, fs, t.f_c_hz - t.bandwidth_hz / 2, t.f_c_hz + t.bandwidth_hz / 2);
    // subband 2 (centered on DC) carries nothing
    const double empty = oracle::band_sum(psd, fs, -t.bandwidth_hz / 2, t.bandwidth_hz / 2);
    CHECK(10.0 * std::log10(sig / empty) >= 30.0);
  }
}

TEST_CASE("superposition of disjoint emitter sets") {
  SceneSpec base;
  base.sample_rate_hz = 2e6;
  base.duration_s = 0.005;
  base.noise_power = 0.0;
  base.rng_seed = 77;
  auto em = [](ModClass c, double fc, double bw, double t0, double t1, std::uint64_t seed) {
    SceneEmitter e;
    e.truth = span_truth(t0, t1, bw, c);
    e.truth.f_c_hz = fc;
    e.truth.snr_db = 10.0;
    e.truth.cfo_hz = 120.0;
    e.truth.phase_noise_var = 1e-7;
    e.seed = seed;
    return e;
  };
  SceneSpec a = base, b = base, u = base;
  a.emitters = {em(ModClass::QPSK, -5e5, 1e5, 0.0, 0.004, 0), em(ModClass::NBFM, 2e5, 2e4, 0.001, 0.005, 1)};
  b.emitters = {em(ModClass::LoRa, 6e5, 1.25e5, 0.0005, 0.003, 2), em(ModClass::AM, -1e5, 1e4, 0.0, 0.005, 3)};
  u.emitters = a.emitters;
  u.emitters.insert(u.emitters.end(), b.emitters.begin(), b.emitters.end());
  const auto ra = synth_scene(a).recording, rb = synth_scene(b).recording, ru = synth_scene(u).recording;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ru.size(); ++i) {
    const cd s = cd(ra.samples()[i]) + cd(rb.samples()[i]);
    num += std::norm(cd(ru.samples()[i]) - s);
    den += std::norm(cd(ru.samples()[i]));
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("in-band SNR calibration") {
  const double fs = 2e6;
  for (double snr : {0.0, 10.0}) {
    SceneSpec with;
    with.sample_rate_hz = fs;
    with.duration_s = 0.1;
    with.noise_power = 1.0;
    with.rng_seed = 21;
    SceneEmitter e;
    e.truth = span_truth(0.0, 0.1, 2e5, ModClass::QPSK);
    e.truth.f_c_hz = 3e5;
    e.truth.snr_db = snr;
    with.emitters.push_back(e);
    SceneSpec without = with;
    without.emitters.clear();

    const auto r1 = to_cd(synth_scene(with).recording), r0 = to_cd(synth_scene(without).recording);
    std::vector<cd> sig(r1.size());
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = r1[i] - r0[i];
    const double lo = e.truth.f_c_hz - 1e5, hi = e.truth.f_c_hz + 1e5;
    const double ps = oracle::band_sum(oracle::welch(sig, 512), fs, lo, hi);
    const double pn = oracle::band_sum(oracle::welch(r0, 512), fs, lo, hi);
    CHECK(std::abs(10.0 * std::log10(ps / pn) - snr) <= 0.5);
  }
}

TEST_CASE("scene validation") {
  SceneSpec s;
  s.sample_rate_hz = 1e3;
  s.duration_s = 0.01;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.duration_s = 1.0;
  SceneEmitter e;
  e.truth = span_truth(0.5, 1.5, 10.0, ModClass::Tone);
  s.emitters.push_back(e);
  CHECK_THROWS_AS(synth_scene(s), ValidationError);
  s.emitters[0].truth.t_end_s = 1.0;
  CHECK_NOTHROW(s.validate());
  s.noise_power = -1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("scene config round trip regenerates the same recording") {
  SceneSpec spec = fig2_scene_spec(5e6, 15.0, 42);
  spec.emitters[0].truth.taps = {{0, {1.0, 0.0}}, {3, {0.2, 0.1}}};
  spec.interferers.push_back(spec.emitters[1]);
  spec.interferers[0].truth.f_c_hz = 0.0;
  const auto doc = scene_spec_to_json(spec);
  const auto back = scene_spec_from_json(doc);
  CHECK(scene_spec_to_json(back) == doc);
  CHECK(same_bits(synth_scene(spec).recording, synth_scene(back).recording));
  CHECK(synth_scene(spec).truths.size() == 3);

  const auto preset = scene_spec_from_json(nlohmann::json{{"preset", "fig2"}, {"snr_db", 15.0}, {"rng_seed", 42}});
  CHECK(same_bits(synth_scene(preset).recording, synth_scene(fig2_scene_spec(5e6, 15.0, 42)).recording));
  CHECK(scene_spec_from_json(doc, 5).rng_seed == 5);
  CHECK_THROWS_AS(scene_spec_from_json(nlohmann::json{{"preset", "fig9"}}), ValidationError);
}
