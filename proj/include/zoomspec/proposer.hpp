#pragma once

#include "zoomspec/iqcore.hpp"
#include "zoomspec/specfront.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace zoomspec {

enum class BwTier { Narrow, Mid, Wide };

std::string_view to_string(BwTier t);
BwTier bw_tier_from_string(std::string_view name);

struct Proposal {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double f_start_hz = 0.0;
  double f_end_hz = 0.0;
  BwTier tier = BwTier::Narrow;
  double confidence = 0.0;

  double f_c_hz() const { return 0.5 * (f_start_hz + f_end_hz); }
  double bandwidth_hz() const { return f_end_hz - f_start_hz; }
  TfBox box() const { return {t_start_s, t_end_s, f_start_hz, f_end_hz}; }
  void validate() const;
  bool operator==(const Proposal&) const = default;
};

struct ProposerParams {
  double threshold_db = 6.0;
  std::size_t min_area_bins = 6;
  std::size_t dilation_bins = 1;
  std::array<double, 2> tier_edges_hz{1e6, 10e6};
  double nms_iou = 0.45;
  // Frames averaged (in power) before thresholding. 1 disables smoothing.
  std::size_t smooth_frames = 17;
  // Pixels are grouped by connectivity at min(threshold_db, group_db), then
  // only pixels above threshold_db count toward area, box and confidence.
  double group_db = 3.0;

  void validate() const;
};

BwTier bw_tier_for(double bandwidth_hz, const ProposerParams& p);

// Median over frames, per bin. Needs at least 8 frames.
std::vector<double> estimate_noise_floor(const Spectrogram& s);

// Energy detector. `grid` maps bin indices of `s` to Hz and must have one
// point per bin. Output sorted by confidence, highest first.
std::vector<Proposal> propose(const Spectrogram& s, const WarpGrid& grid, const ProposerParams& p);

double tf_iou(const TfBox& a, const TfBox& b);

// IoU with frequency measured in fractional grid index.
double tf_iou_weighted(const TfBox& a, const TfBox& b, const WarpGrid& grid);

// Greedy suppression by weighted IoU. Ties in confidence go to the earlier
// start time, then the lower start frequency.
std::vector<Proposal> nms(std::vector<Proposal> proposals, double iou_thresh, const WarpGrid& grid);

// `<name>.prop.json`
std::vector<Proposal> read_proposals(const std::filesystem::path& path);
void write_proposals(std::span<const Proposal> proposals, const std::filesystem::path& path);

} // namespace zoomspec
