#pragma once

#include "zoomspec/iqcore.hpp"
#include "zoomspec/proposer.hpp"
#include "zoomspec/specfront.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zoomspec {

struct AhlpParams {
  double kappa = 0.2;
  double eta = 0.1;
  WindowKind window = WindowKind::Hamming;
  std::size_t max_taps = 8191;

  void validate() const;
};

struct SegmentIndices {
  std::size_t n_start = 0;
  std::size_t n_end = 0;  // inclusive
  std::size_t n_seg = 0;
};

// n_s = ceil(t_s fs), n_e = floor(t_e fs). Times are relative to the first
// sample. Fewer than 8 samples is a degenerate segment.
SegmentIndices segment_indices(double t_start_s, double t_end_s, double sample_rate_hz);

// y[n] = r[n_s + n] exp(-j 2 pi f_c (n_s + n) / fs), absolute sample index.
std::vector<cf64> heterodyne(const IqRecording& r, std::size_t n_start, std::size_t n_seg, double f_c_hz);

// beta = 1 + kappa (1 - conf); f_LP = beta B / 2.
double cutoff_frequency(double bandwidth_hz, double conf, double kappa);

// Odd tap count for the windowed-sinc design, before the max_taps cap.
std::size_t lowpass_tap_count(double f_lp_hz, double sample_rate_hz, const AhlpParams& p);

// Linear-phase windowed-sinc low-pass, unit DC gain, ideal cutoff at
// f_LP (1 + eta / 2).
std::vector<double> design_lowpass(double f_lp_hz, double sample_rate_hz, const AhlpParams& p);

enum class ConvMethod { Auto, Direct, Fft };

// Same-length output with the (N - 1) / 2 group delay removed.
std::vector<cf64> lowpass_filter(std::span<const cf64> y, std::span<const double> h, ConvMethod method = ConvMethod::Auto);

// D = max(1, floor(fs / (2 f_LP))).
std::size_t safe_decim_factor(double sample_rate_hz, double f_lp_hz);

// u[m] = z[m D].
std::vector<cf64> decimate(std::span<const cf64> z, std::size_t d);

struct PurifiedSegment {
  std::vector<cf64> samples;
  std::size_t decim_factor = 1;
  double sample_rate_hz = 0.0;  // input rate
  double out_rate_hz = 0.0;
  double f_c_hz = 0.0;
  double f_lp_hz = 0.0;
  std::size_t n_start = 0;
  std::size_t n_seg = 0;
  double source_conf = 0.0;
  double record_start_s = 0.0;
  // f_LP was reduced to keep f_c +/- f_LP inside the sampled band.
  bool band_clipped = false;
  // The design wanted more than max_taps taps.
  bool taps_capped = false;

  SegmentMeta meta() const;
  IqRecording to_recording() const;
  bool operator==(const PurifiedSegment&) const = default;
};

PurifiedSegment ahlp_purify(const IqRecording& r, const Proposal& prop, const AhlpParams& p);

struct BatchItem {
  std::optional<PurifiedSegment> segment;
  std::string error;  // empty on success

  bool ok() const { return segment.has_value(); }
};

// One item per proposal, in input order. n_threads == 0 picks the hardware
// concurrency.
std::vector<BatchItem> ahlp_purify_batch(const IqRecording& r, std::span<const Proposal> proposals,
                                         const AhlpParams& p, std::size_t n_threads = 0);

} // namespace zoomspec
