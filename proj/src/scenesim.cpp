#include "zoomspec/scenesim.hpp"

#include "json_util.hpp"
#include "zoomspec/errors.hpp"
#include "zoomspec/json_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace zoomspec {

using detail::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 99%-power bandwidth of MSK / half-sine O-QPSK in units of the chip rate.
constexpr double kMskObwFactor = 1.18;
// SRRC pulses are truncated to +/- this many symbols.
constexpr int kSrrcSpan = 8;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t scene_seed, std::uint64_t role, std::uint64_t id) {
  return splitmix64(splitmix64(scene_seed) ^ splitmix64((role << 48) ^ id));
}

// Cycles reduced to [0, 1) before turning into radians keeps phases accurate
// for long recordings.
cf64 unit_phasor(double cycles) {
  const double frac = cycles - std::floor(cycles);
  return std::polar(1.0, kTwoPi * frac);
}

// 99%-power bandwidth of a raised-cosine spectrum, in units of the symbol rate.
double raised_cosine_obw_factor(double rolloff) {
  const double a = rolloff;
  const double flat = 0.5 * (1.0 - a);
  const double edge = 0.5 * (1.0 + a);
  auto psd = [&](double f) {
    if (f <= flat) return 1.0;
    if (f >= edge) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi / a * (f - flat)));
  };
  // Midpoint rule on a fine grid, one-sided.
  constexpr int n = 20000;
  const double df = edge / n;
  std::vector<double> cum(n + 1, 0.0);
  for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + psd((i + 0.5) * df) * df;
  const double target = 0.99 * cum[n];
  auto it = std::lower_bound(cum.begin(), cum.end(), target);
  const auto i = static_cast<double>(it - cum.begin());
  return 2.0 * i * df;
}

double srrc_pulse(double t_sym, double beta) {
  // t_sym is time in symbol periods.
  if (std::abs(t_sym) < 1e-12) return 1.0 + beta * (4.0 / kPi - 1.0);
  if (std::abs(std::abs(t_sym) - 1.0 / (4.0 * beta)) < 1e-9) {
    return beta / std::numbers::sqrt2 *
           ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
  }
  const double num = std::sin(kPi * t_sym * (1.0 - beta)) + 4.0 * beta * t_sym * std::cos(kPi * t_sym * (1.0 + beta));
  const double den = kPi * t_sym * (1.0 - std::pow(4.0 * beta * t_sym, 2));
  return num / den;
}

struct ActiveSpan {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
  bool empty = true;
};

ActiveSpan active_span(const EmitterTruth& truth, double fs, double t0, std::size_t n_samples) {
  auto snap = [](double x) {
    const double r = std::round(x);
    return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? r : x;
  };
  const double a = std::ceil(snap((truth.t_start_s - t0) * fs));
  const double b = std::ceil(snap((truth.t_end_s - t0) * fs)) - 1.0;
  ActiveSpan s;
  const double lo = std::max(a, 0.0);
  const double hi = std::min(b, static_cast<double>(n_samples) - 1.0);
  if (hi < lo) return s;
  s.first = static_cast<std::size_t>(lo);
  s.last = static_cast<std::size_t>(hi);
  s.empty = false;
  return s;
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("waveform: ") + what + " must be positive");
}

void validate_kind(const WaveformKind& kind) {
  std::visit(overloaded{
                 [](const waveform::Tone&) {},
                 [](const waveform::Nbfm& w) {
                   check_positive(w.deviation_hz, "deviation_hz");
                   check_positive(w.audio_rate_hz, "audio_rate_hz");
                 },
                 [](const waveform::Chirp& w) {
                   if (!(w.sweep_high_hz > w.sweep_low_hz)) throw ValidationError("waveform: chirp needs sweep_high > sweep_low");
                   check_positive(w.symbol_s, "symbol_s");
                 },
                 [](const waveform::BurstOqpsk& w) {
                   check_positive(w.chip_rate_hz, "chip_rate_hz");
                   if (!(w.burst_duty > 0.0 && w.burst_duty <= 1.0)) throw ValidationError("waveform: burst_duty must be in (0,1]");
                 },
                 [](const waveform::SrrcPskQam& w) {
                   if (w.order != 4 && w.order != 16) throw ValidationError("waveform: order must be 4 or 16");
                   check_positive(w.symbol_rate_hz, "symbol_rate_hz");
                   if (!(w.rolloff > 0.0 && w.rolloff <= 1.0)) throw ValidationError("waveform: rolloff must be in (0,1]");
                 },
                 [](const waveform::Am& w) {
                   if (!(w.mod_index > 0.0 && w.mod_index <= 1.0)) throw ValidationError("waveform: mod_index must be in (0,1]");
                   check_positive(w.audio_rate_hz, "audio_rate_hz");
                 },
             },
             kind);
}

} // namespace

double nominal_bandwidth_hz(const WaveformKind& kind) {
  return std::visit(overloaded{
                        [](const waveform::Tone&) { return 0.0; },
                        [](const waveform::Nbfm& w) { return 2.0 * (w.deviation_hz + w.audio_rate_hz); },
                        [](const waveform::Chirp& w) { return w.sweep_high_hz - w.sweep_low_hz; },
                        [](const waveform::BurstOqpsk& w) { return kMskObwFactor * w.chip_rate_hz; },
                        [](const waveform::SrrcPskQam& w) { return raised_cosine_obw_factor(w.rolloff) * w.symbol_rate_hz; },
                        [](const waveform::Am& w) { return 2.0 * w.audio_rate_hz; },
                    },
                    kind);
}

WaveformKind default_waveform(ModClass c, double b) {
  if (!(b > 0.0)) throw ValidationError("default_waveform: bandwidth must be positive");
  switch (c) {
  case ModClass::Tone: return waveform::Tone{};
  case ModClass::NBFM: return waveform::Nbfm{0.4 * b, 0.1 * b};
  case ModClass::LoRa: return waveform::Chirp{-0.5 * b, 0.5 * b, 128.0 / b};
  case ModClass::Zigbee: return waveform::BurstOqpsk{b / kMskObwFactor, 1.0};
  case ModClass::QAM16: return waveform::SrrcPskQam{16, b / raised_cosine_obw_factor(0.35), 0.35};
  case ModClass::AM: return waveform::Am{0.5, 0.5 * b};
  case ModClass::QPSK:
  case ModClass::Unknown: break;
  }
  return waveform::SrrcPskQam{4, b / raised_cosine_obw_factor(0.35), 0.35};
}

std::vector<cf64> synth_emitter(const WaveformKind& kind, const EmitterTruth& truth, double fs, std::size_t n_samples,
                                Rng& rng) {
  truth.validate();
  validate_kind(kind);
  const double occupied = nominal_bandwidth_hz(kind);
  if (occupied > 0.5 * fs)
    throw ValidationError("waveform occupied bandwidth " + std::to_string(occupied) + " Hz exceeds fs/2");
  if (occupied > 0.0 && std::abs(occupied - truth.bandwidth_hz) > 0.2 * truth.bandwidth_hz)
    throw ValidationError("waveform occupied bandwidth " + std::to_string(occupied) +
                          " Hz is not within 20% of the labeled " + std::to_string(truth.bandwidth_hz) + " Hz");

  std::vector<cf64> s(n_samples, cf64{});
  const ActiveSpan span = active_span(truth, fs, 0.0, n_samples);
  if (span.empty) return s;
  const std::size_t n_active = span.last - span.first + 1;
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  auto local_t = [&](std::size_t i) { return static_cast<double>(i) / fs; };

  std::visit(
      overloaded{
          [&](const waveform::Tone&) {
            for (std::size_t i = 0; i < n_active; ++i) s[span.first + i] = 1.0;
          },
          [&](const waveform::Nbfm& w) {
            const double beta = w.deviation_hz / w.audio_rate_hz;
            const double phi = uni(rng);
            for (std::size_t i = 0; i < n_active; ++i) {
              const double m = std::sin(kTwoPi * (w.audio_rate_hz * local_t(i) + phi));
              s[span.first + i] = std::polar(1.0, beta * m);
            }
          },
          [&](const waveform::Chirp& w) {
            const double sweep = w.sweep_high_hz - w.sweep_low_hz;
            const double per_symbol_cycles = 0.5 * (w.sweep_low_hz + w.sweep_high_hz) * w.symbol_s;
            for (std::size_t i = 0; i < n_active; ++i) {
              const double t = local_t(i);
              const double k = std::floor(t / w.symbol_s);
              const double tau = t - k * w.symbol_s;
              double cycles = k * per_symbol_cycles;
              cycles -= std::floor(cycles);
              cycles += w.sweep_low_hz * tau + 0.5 * sweep * tau * tau / w.symbol_s;
              s[span.first + i] = unit_phasor(cycles);
            }
          },
          [&](const waveform::BurstOqpsk& w) {
            const double tc = 1.0 / w.chip_rate_hz;
            const double active_s = static_cast<double>(n_active) / fs;
            const auto n_chips = static_cast<std::size_t>(std::ceil(active_s / tc)) + 4;
            std::vector<double> chips(n_chips);
            std::bernoulli_distribution coin(0.5);
            for (auto& c : chips) c = coin(rng) ? 1.0 : -1.0;
            // chips[k + 1] holds chip index k, so index -1 exists for the
            // first Q pulse.
            auto chip = [&](long long k) { return chips[static_cast<std::size_t>(k + 1)]; };
            constexpr int n_bursts = 4;
            const double period = (w.burst_duty < 1.0) ? active_s / (n_bursts - 1 + w.burst_duty) : active_s;
            const double on = w.burst_duty * period;
            for (std::size_t i = 0; i < n_active; ++i) {
              const double t = local_t(i);
              if (w.burst_duty < 1.0) {
                const double in_period = t - std::floor(t / period) * period;
                if (in_period >= on) continue;
              }
              const auto k = static_cast<long long>(std::floor(t / tc));
              const long long ei = k - (k % 2);
              const long long oi = (k % 2 != 0) ? k : k - 1;
              const double pi_i = std::sin(kPi * (t - static_cast<double>(ei) * tc) / (2.0 * tc));
              const double pq = std::sin(kPi * (t - static_cast<double>(oi) * tc) / (2.0 * tc));
              s[span.first + i] = cf64(chip(ei) * pi_i, chip(oi) * pq);
            }
          },
          [&](const waveform::SrrcPskQam& w) {
            const double ts = 1.0 / w.symbol_rate_hz;
            const double active_s = static_cast<double>(n_active) / fs;
            const auto n_sym = static_cast<long long>(std::ceil(active_s / ts)) + 2 * kSrrcSpan + 2;
            std::vector<cf64> sym(static_cast<std::size_t>(n_sym));
            std::uniform_int_distribution<int> pick(0, w.order == 4 ? 1 : 3);
            for (auto& a : sym) {
              if (w.order == 4) {
                a = cf64(pick(rng) ? 1.0 : -1.0, pick(rng) ? 1.0 : -1.0) / std::numbers::sqrt2;
              } else {
                const double lv[4] = {-3.0, -1.0, 1.0, 3.0};
                a = cf64(lv[pick(rng)], lv[pick(rng)]) / std::sqrt(10.0);
              }
            }
            // sym[j] is the symbol at time (j - kSrrcSpan) * ts.
            for (std::size_t i = 0; i < n_active; ++i) {
              const double u = local_t(i) / ts;
              const auto k_lo = static_cast<long long>(std::ceil(u - kSrrcSpan));
              const auto k_hi = static_cast<long long>(std::floor(u + kSrrcSpan));
              cf64 acc{};
              for (long long k = k_lo; k <= k_hi; ++k) {
                const long long j = k + kSrrcSpan;
                if (j < 0 || j >= n_sym) continue;
                acc += sym[static_cast<std::size_t>(j)] * srrc_pulse(u - static_cast<double>(k), w.rolloff);
              }
              s[span.first + i] = acc;
            }
          },
          [&](const waveform::Am& w) {
            const double phi = uni(rng);
            for (std::size_t i = 0; i < n_active; ++i)
              s[span.first + i] = 1.0 + w.mod_index * std::cos(kTwoPi * (w.audio_rate_hz * local_t(i) + phi));
          },
      },
      kind);

  double power = 0.0;
  for (std::size_t i = span.first; i <= span.last; ++i) power += std::norm(s[i]);
  power /= static_cast<double>(n_active);
  if (power > 0.0) {
    const double g = 1.0 / std::sqrt(power);
    for (std::size_t i = span.first; i <= span.last; ++i) s[i] *= g;
  }
  return s;
}

std::vector<cf64> apply_impairments(std::span<const cf64> s, const EmitterTruth& truth, double fs, Rng& rng,
                                    const TapModulation& modulation) {
  if (truth.phase_noise_var < 0.0) throw ValidationError("phase_noise_var must be non-negative");
  std::vector<MultipathTap> taps = truth.taps;
  if (taps.empty()) taps.push_back({0, {1.0, 0.0}});

  std::uniform_real_distribution<double> uni(0.0, kTwoPi);
  const double theta0 = truth.phase0_rad ? *truth.phase0_rad : uni(rng);

  const std::size_t n = s.size();
  std::vector<cf64> out(n, cf64{});
  for (std::size_t p = 0; p < taps.size(); ++p) {
    const auto& tap = taps[p];
    for (std::size_t i = tap.delay_samples; i < n; ++i) {
      const cf64 h = modulation ? tap.gain * modulation(p, i) : tap.gain;
      out[i] += h * s[i - tap.delay_samples];
    }
  }

  const double sigma = std::sqrt(truth.phase_noise_var);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double cfo_cycles_per_sample = truth.cfo_hz / fs;
  double theta = 0.0;  // theta[-1]
  for (std::size_t i = 0; i < n; ++i) {
    if (sigma > 0.0) theta += sigma * gauss(rng);
    const double cycles = cfo_cycles_per_sample * static_cast<double>(i);
    out[i] *= unit_phasor(cycles) * std::polar(1.0, theta0 + theta);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t SceneSpec::n_samples() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

void SceneSpec::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) throw ValidationError("scene: sample_rate_hz must be positive");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw ValidationError("scene: duration_s must be positive");
  if (n_samples() < 64) throw ValidationError("scene: duration_s * sample_rate_hz must give at least 64 samples");
  if (!(noise_power >= 0.0) || !std::isfinite(noise_power)) throw ValidationError("scene: noise_power must be non-negative");
  auto check = [&](const std::vector<SceneEmitter>& list, const char* what) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& e = list[i].truth;
      const std::string where = std::string(what) + "[" + std::to_string(i) + "]";
      try {
        e.validate(sample_rate_hz);
      } catch (const ValidationError& err) {
        throw ValidationError("scene: " + where + ": " + err.what());
      }
      const double tol = 1e-12 + 1e-9 * duration_s;
      if (e.t_start_s < start_time_s - tol || e.t_end_s > start_time_s + duration_s + tol)
        throw ValidationError("scene: " + where + " span lies outside [0, duration_s]");
    }
  };
  check(emitters, "emitters");
  check(interferers, "interferers");
}

Scene synth_scene(const SceneSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples();
  const double fs = spec.sample_rate_hz;
  const double reference_noise = spec.noise_power > 0.0 ? spec.noise_power : 1.0;
  std::vector<cf64> acc(n, cf64{});

  auto add = [&](const SceneEmitter& em, std::uint64_t role, std::uint64_t index) {
    Rng rng(stream_seed(spec.rng_seed, role, em.seed.value_or(index)));
    // Emitter times are absolute; synth_emitter works relative to the scene start.
    EmitterTruth local = em.truth;
    local.t_start_s -= spec.start_time_s;
    local.t_end_s -= spec.start_time_s;
    const WaveformKind kind = em.waveform ? *em.waveform : default_waveform(local.class_label, local.bandwidth_hz);
    auto s = synth_emitter(kind, local, fs, n, rng);
    s = apply_impairments(s, local, fs, rng);
    const double power = std::pow(10.0, local.snr_db / 10.0) * reference_noise * local.bandwidth_hz / fs;
    const double amp = std::sqrt(power);
    const double cycles_per_sample = local.f_c_hz / fs;
    for (std::size_t i = 0; i < n; ++i) {
      if (s[i] == cf64{}) continue;
      acc[i] += amp * s[i] * unit_phasor(cycles_per_sample * static_cast<double>(i));
    }
  };

  for (std::size_t i = 0; i < spec.emitters.size(); ++i) add(spec.emitters[i], 1, i);
  for (std::size_t i = 0; i < spec.interferers.size(); ++i) add(spec.interferers[i], 2, i);

  if (spec.noise_power > 0.0) {
    Rng rng(stream_seed(spec.rng_seed, 3, 0));
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * spec.noise_power));
    for (auto& v : acc) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v += cf64(re, im);
    }
  }

  std::vector<cf32> samples(n);
  for (std::size_t i = 0; i < n; ++i)
    samples[i] = cf32(static_cast<float>(acc[i].real()), static_cast<float>(acc[i].imag()));

  Scene scene{IqRecording(std::move(samples), fs, spec.start_time_s, spec.label), {}};
  for (const auto& e : spec.emitters) scene.truths.push_back(e.truth);
  return scene;
}

SceneSpec fig2_scene_spec(double fs, double snr_db, std::uint64_t rng_seed) {
  if (!(fs >= 5e6)) throw ValidationError("fig2 scene needs sample_rate_hz >= 5 MHz");
  SceneSpec spec;
  spec.sample_rate_hz = fs;
  spec.duration_s = 0.02;
  spec.noise_power = 1.0;
  spec.rng_seed = rng_seed;
  spec.label = "fig2";

  const auto n_sub = static_cast<std::size_t>(std::max(1.0, std::round(fs / 1e6)));
  const double b_sub = fs / static_cast<double>(n_sub);
  auto center = [&](std::size_t k) { return -0.5 * fs + (static_cast<double>(k) + 0.5) * b_sub; };

  auto make = [&](ModClass c, double f_c, double bw, double t0, double t1) {
    EmitterTruth e;
    e.class_label = c;
    e.f_c_hz = f_c;
    e.bandwidth_hz = bw;
    e.t_start_s = t0;
    e.t_end_s = t1;
    e.snr_db = snr_db;
    SceneEmitter se;
    se.truth = e;
    se.waveform = default_waveform(c, bw);
    return se;
  };
  spec.emitters.push_back(make(ModClass::Zigbee, center(1), 500e3, 0.003, 0.008));
  spec.emitters.push_back(make(ModClass::LoRa, center(3), 250e3, 0.006, 0.016));
  spec.emitters.push_back(make(ModClass::NBFM, center(n_sub - 1), 40e3, 0.0, spec.duration_s));
  return spec;
}

Scene fig2_scene(double fs, double snr_db, std::uint64_t rng_seed) {
  return synth_scene(fig2_scene_spec(fs, snr_db, rng_seed));
}

// ---------------------------------------------------------------------------

namespace {

json waveform_to_json(const WaveformKind& kind) {
  return std::visit(overloaded{
                        [](const waveform::Tone&) { return json{{"kind", "tone"}}; },
                        [](const waveform::Nbfm& w) {
                          return json{{"kind", "nbfm"}, {"deviation_hz", w.deviation_hz}, {"audio_rate_hz", w.audio_rate_hz}};
                        },
                        [](const waveform::Chirp& w) {
                          return json{{"kind", "chirp"},
                                      {"sweep_low_hz", w.sweep_low_hz},
                                      {"sweep_high_hz", w.sweep_high_hz},
                                      {"symbol_s", w.symbol_s}};
                        },
                        [](const waveform::BurstOqpsk& w) {
                          return json{{"kind", "burst_oqpsk"}, {"chip_rate_hz", w.chip_rate_hz}, {"burst_duty", w.burst_duty}};
                        },
                        [](const waveform::SrrcPskQam& w) {
                          return json{{"kind", "srrc"}, {"order", w.order}, {"symbol_rate_hz", w.symbol_rate_hz}, {"rolloff", w.rolloff}};
                        },
                        [](const waveform::Am& w) {
                          return json{{"kind", "am"}, {"mod_index", w.mod_index}, {"audio_rate_hz", w.audio_rate_hz}};
                        },
                    },
                    kind);
}

WaveformKind waveform_from_json(const json& j, const std::string& path) {
  using namespace detail;
  const std::string kind = req_string(j, "kind", path);
  if (kind == "tone") {
    reject_unknown_keys(j, {"kind"}, path);
    return waveform::Tone{};
  }
  if (kind == "nbfm") {
    reject_unknown_keys(j, {"kind", "deviation_hz", "audio_rate_hz"}, path);
    return waveform::Nbfm{req_number(j, "deviation_hz", path), req_number(j, "audio_rate_hz", path)};
  }
  if (kind == "chirp") {
    reject_unknown_keys(j, {"kind", "sweep_low_hz", "sweep_high_hz", "symbol_s"}, path);
    return waveform::Chirp{req_number(j, "sweep_low_hz", path), req_number(j, "sweep_high_hz", path),
                           req_number(j, "symbol_s", path)};
  }
  if (kind == "burst_oqpsk") {
    reject_unknown_keys(j, {"kind", "chip_rate_hz", "burst_duty"}, path);
    return waveform::BurstOqpsk{req_number(j, "chip_rate_hz", path), opt_number(j, "burst_duty", path, 1.0)};
  }
  if (kind == "srrc") {
    reject_unknown_keys(j, {"kind", "order", "symbol_rate_hz", "rolloff"}, path);
    return waveform::SrrcPskQam{static_cast<int>(opt_integer(j, "order", path, 4)), req_number(j, "symbol_rate_hz", path),
                                opt_number(j, "rolloff", path, 0.35)};
  }
  if (kind == "am") {
    reject_unknown_keys(j, {"kind", "mod_index", "audio_rate_hz"}, path);
    return waveform::Am{opt_number(j, "mod_index", path, 0.5), req_number(j, "audio_rate_hz", path)};
  }
  throw ValidationError("schema error: field '" + join_path(path, "kind") + "' has unknown waveform '" + kind + "'");
}

std::vector<SceneEmitter> emitters_from_json(const json& doc, std::string_view key) {
  std::vector<SceneEmitter> out;
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return out;
  if (!it->is_array()) throw ValidationError("schema error: field '" + std::string(key) + "' must be an array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& e = (*it)[i];
    const std::string p = std::string(key) + "[" + std::to_string(i) + "]";
    detail::reject_unknown_keys(e,
                                {"class", "f_c_hz", "bandwidth_hz", "t_start_s", "t_end_s", "snr_db", "cfo_hz",
                                 "phase_noise_var", "taps", "phase0_rad", "waveform", "seed"},
                                p);
    SceneEmitter se;
    se.truth = emitter_from_json(e, p);
    if (auto w = e.find("waveform"); w != e.end() && !w->is_null()) se.waveform = waveform_from_json(*w, p + ".waveform");
    if (auto s = e.find("seed"); s != e.end() && !s->is_null()) {
      const long long v = detail::as_integer(*s, p + ".seed");
      if (v < 0) throw ValidationError("schema error: field '" + p + ".seed' must be non-negative");
      se.seed = static_cast<std::uint64_t>(v);
    }
    out.push_back(std::move(se));
  }
  return out;
}

json emitters_to_json(const std::vector<SceneEmitter>& list) {
  json arr = json::array();
  for (const auto& se : list) {
    json j = emitter_to_json(se.truth);
    if (se.waveform) j["waveform"] = waveform_to_json(*se.waveform);
    if (se.seed) j["seed"] = *se.seed;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::uint64_t seed_from_json(const json& doc) {
  const long long v = detail::opt_integer(doc, "rng_seed", "", 0);
  if (v < 0) throw ValidationError("schema error: field 'rng_seed' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

} // namespace

SceneSpec scene_spec_from_json(const json& doc, std::optional<std::uint64_t> seed_override) {
  using namespace detail;
  if (!doc.is_object()) throw ValidationError("schema error: scene config must be an object");
  SceneSpec spec;
  if (doc.contains("preset")) {
    reject_unknown_keys(doc, {"preset", "sample_rate_hz", "snr_db", "rng_seed"}, "");
    const std::string preset = req_string(doc, "preset", "");
    if (preset != "fig2") throw ValidationError("schema error: field 'preset' has unknown value '" + preset + "'");
    spec = fig2_scene_spec(opt_number(doc, "sample_rate_hz", "", 5e6), opt_number(doc, "snr_db", "", 20.0),
                           seed_override.value_or(seed_from_json(doc)));
  } else {
    reject_unknown_keys(doc,
                        {"sample_rate_hz", "duration_s", "noise_power", "rng_seed", "start_time_s", "label", "emitters",
                         "interferers"},
                        "");
    spec.sample_rate_hz = req_number(doc, "sample_rate_hz", "");
    spec.duration_s = req_number(doc, "duration_s", "");
    spec.noise_power = opt_number(doc, "noise_power", "", 1.0);
    spec.rng_seed = seed_override.value_or(seed_from_json(doc));
    spec.start_time_s = opt_number(doc, "start_time_s", "", 0.0);
    spec.label = opt_string(doc, "label", "", "");
    spec.emitters = emitters_from_json(doc, "emitters");
    spec.interferers = emitters_from_json(doc, "interferers");
  }
  spec.validate();
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return scene_spec_from_json(detail::read_json_file(path), seed_override);
}

json scene_spec_to_json(const SceneSpec& spec) {
  return json{{"sample_rate_hz", spec.sample_rate_hz},
              {"duration_s", spec.duration_s},
              {"noise_power", spec.noise_power},
              {"rng_seed", spec.rng_seed},
              {"start_time_s", spec.start_time_s},
              {"label", spec.label},
              {"emitters", emitters_to_json(spec.emitters)},
              {"interferers", emitters_to_json(spec.interferers)}};
}

} // namespace zoomspec
