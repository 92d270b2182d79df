#pragma once

#include "json.hpp"
#include "zoomspec/iqcore.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace zoomspec {

// Waveform families. Each is protocol-shaped rather than protocol-compliant.
namespace waveform {
struct Tone {};
// Sinusoidal-message FM.
struct Nbfm {
  double deviation_hz = 0.0;
  double audio_rate_hz = 0.0;
};
// Repeating linear up-chirp (LoRa-like).
struct Chirp {
  double sweep_low_hz = 0.0;
  double sweep_high_hz = 0.0;
  double symbol_s = 0.0;
};
// Half-sine O-QPSK (Zigbee-like). burst_duty < 1 splits the active span into
// a train of equal bursts that still starts at t_start and ends at t_end.
struct BurstOqpsk {
  double chip_rate_hz = 0.0;
  double burst_duty = 1.0;
};
// Square-root raised-cosine QPSK (order 4) or 16-QAM (order 16).
struct SrrcPskQam {
  int order = 4;
  double symbol_rate_hz = 0.0;
  double rolloff = 0.35;
};
// Full-carrier AM with a sinusoidal message.
struct Am {
  double mod_index = 0.5;
  double audio_rate_hz = 0.0;
};
} // namespace waveform

using WaveformKind =
    std::variant<waveform::Tone, waveform::Nbfm, waveform::Chirp, waveform::BurstOqpsk, waveform::SrrcPskQam, waveform::Am>;

// Analytic 99%-power bandwidth of a waveform (0 for a tone).
double nominal_bandwidth_hz(const WaveformKind& kind);

// Waveform whose 99%-power bandwidth matches `bandwidth_hz` for a class.
WaveformKind default_waveform(ModClass c, double bandwidth_hz);

using Rng = std::mt19937_64;

// Unit average power over the active span, zero elsewhere. The returned
// sequence has n_samples entries at baseband (centered on DC).
std::vector<cf64> synth_emitter(const WaveformKind& kind, const EmitterTruth& truth, double sample_rate_hz,
                                std::size_t n_samples, Rng& rng);

// Optional time variation of tap gains: multiplies tap p's static gain at
// absolute sample n.
using TapModulation = std::function<cf64(std::size_t tap, std::size_t n)>;

// e^{j(2 pi df n / fs + theta0 + theta[n])} * sum_p h_p[n] s[n - d_p] with a
// Wiener phase process theta[n] = theta[n-1] + nu[n], theta[-1] = 0.
std::vector<cf64> apply_impairments(std::span<const cf64> s, const EmitterTruth& truth, double sample_rate_hz,
                                    Rng& rng, const TapModulation& modulation = {});

struct SceneEmitter {
  EmitterTruth truth;
  // Derived from the class and bandwidth when absent.
  std::optional<WaveformKind> waveform;
  // Stream id for this emitter's randomness; defaults to its list position.
  std::optional<std::uint64_t> seed;
};

struct SceneSpec {
  double sample_rate_hz = 1e6;
  double duration_s = 0.01;
  // Complex AWGN variance. Zero gives a noiseless scene; emitter powers are
  // then calibrated against a unit reference.
  double noise_power = 1.0;
  std::vector<SceneEmitter> emitters;
  std::vector<SceneEmitter> interferers;  // excluded from ground truth
  std::uint64_t rng_seed = 0;
  double start_time_s = 0.0;
  std::string label;

  std::size_t n_samples() const;
  void validate() const;
};

struct Scene {
  IqRecording recording;
  std::vector<EmitterTruth> truths;
};

// Sum of frequency-shifted, impaired emitters and interferers plus AWGN.
// Each emitter's power is set so the in-band SNR (signal power over the noise
// power inside its bandwidth) equals its snr_db. Deterministic in rng_seed.
Scene synth_scene(const SceneSpec& spec);

// Three-emitter controlled scene: a bursty O-QPSK signal, a chirp and a
// continuous NB-FM trace, each centered in its own 1 MHz subband.
SceneSpec fig2_scene_spec(double sample_rate_hz, double snr_db, std::uint64_t rng_seed);
Scene fig2_scene(double sample_rate_hz = 5e6, double snr_db = 20.0, std::uint64_t rng_seed = 0);

// Scene config document (see README for the schema). `seed_override`
// replaces rng_seed when given.
SceneSpec read_scene_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});
SceneSpec scene_spec_from_json(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = {});
nlohmann::json scene_spec_to_json(const SceneSpec& spec);

} // namespace zoomspec
