#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zoomspec {

using cf32 = std::complex<float>;
using cf64 = std::complex<double>;

// Modulation tag carried by ground truth and detections.
enum class ModClass { Tone, NBFM, LoRa, Zigbee, QPSK, QAM16, AM, Unknown };

inline constexpr std::size_t kNumModClasses = 8;

std::string_view to_string(ModClass c);
// Accepts the names produced by to_string; throws ValidationError otherwise.
ModClass mod_class_from_string(std::string_view name);

// Axis-aligned rectangle in the time-frequency plane (seconds x Hz).
struct TfBox {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double f_start_hz = 0.0;
  double f_end_hz = 0.0;

  double duration() const { return t_end_s - t_start_s; }
  double bandwidth() const { return f_end_hz - f_start_hz; }
  double center_hz() const { return 0.5 * (f_start_hz + f_end_hz); }

  bool operator==(const TfBox&) const = default;
};

// Complex baseband recording. Samples are stored at the on-disk precision so
// a write/read cycle is bit-exact.
class IqRecording {
public:
  IqRecording() = default;
  // Throws ValidationError on a non-positive rate or a non-finite sample.
  IqRecording(std::vector<cf32> samples, double sample_rate_hz, double start_time_s = 0.0,
              std::string label = {});

  const std::vector<cf32>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double sample_rate_hz() const { return sample_rate_hz_; }
  double start_time_s() const { return start_time_s_; }
  double duration_s() const { return static_cast<double>(samples_.size()) / sample_rate_hz_; }
  double end_time_s() const { return start_time_s_ + duration_s(); }
  const std::string& label() const { return label_; }

  // Throws ValidationError("empty recording") when there is nothing to process.
  void require_nonempty() const;

private:
  std::vector<cf32> samples_;
  double sample_rate_hz_ = 1.0;
  double start_time_s_ = 0.0;
  std::string label_;
};

struct MultipathTap {
  std::size_t delay_samples = 0;
  cf64 gain{1.0, 0.0};

  bool operator==(const MultipathTap&) const = default;
};

struct EmitterTruth {
  ModClass class_label = ModClass::Unknown;
  double f_c_hz = 0.0;
  double bandwidth_hz = 0.0;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double snr_db = 0.0;
  double cfo_hz = 0.0;
  double phase_noise_var = 0.0;
  std::vector<MultipathTap> taps;
  // Initial carrier phase; drawn uniformly by the simulator when absent.
  std::optional<double> phase0_rad;

  TfBox box() const;
  // Span, bandwidth and noise-variance checks.
  void validate() const;
  // Additionally requires f_c +/- B/2 inside [-fs/2, fs/2].
  void validate(double sample_rate_hz) const;

  bool operator==(const EmitterTruth&) const = default;
};

struct Detection {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double f_c_hz = 0.0;
  double bandwidth_hz = 0.0;
  ModClass class_label = ModClass::Unknown;
  double confidence = 0.0;
  bool refined = false;
  std::vector<double> class_probs;

  TfBox box() const;
  void validate() const;

  bool operator==(const Detection&) const = default;
};

// Extra sidecar fields attached to purified segments.
struct SegmentMeta {
  std::size_t decim_factor = 1;
  double f_c_hz = 0.0;
  double f_lp_hz = 0.0;
  std::size_t n_start = 0;
  double source_conf = 0.0;
};

// `<name>.iq` <-> `<name>.meta.json`
std::filesystem::path sidecar_path(const std::filesystem::path& iq_path);

// Interleaved float32 little-endian (I, Q) pairs plus the JSON sidecar.
void write_iq(const IqRecording& recording, const std::filesystem::path& path,
              const std::optional<SegmentMeta>& segment = std::nullopt);

// Reads raw samples; metadata other than the rate comes from defaults.
IqRecording read_iq(const std::filesystem::path& path, double sample_rate_hz);
// Reads samples and the sidecar written by write_iq.
IqRecording read_iq(const std::filesystem::path& path);

std::vector<EmitterTruth> read_annotations(const std::filesystem::path& path);
void write_annotations(std::span<const EmitterTruth> emitters, const std::filesystem::path& path);

} // namespace zoomspec
