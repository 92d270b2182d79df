#pragma once

#include "zoomspec/ahlp.hpp"
#include "zoomspec/iqcore.hpp"

#include <optional>
#include <vector>

namespace zoomspec {

struct GridDistribution {
  std::vector<double> probs;
  std::vector<double> grid;

  // Uniform grid of L points on [0, 1] with the given weights.
  static GridDistribution on_uniform_grid(std::vector<double> probs);
  // Mass split between the two grid points around x so the mean is x.
  static GridDistribution point_mass(double x, std::size_t length);

  void validate() const;
};

std::vector<double> uniform_unit_grid(std::size_t length);

struct TimeEstimate {
  double t_start = 0.0;
  double duration = 0.0;
  double t_end = 0.0;
};

constexpr double kDefaultEpsClamp = 1e-3;
constexpr std::size_t kDefaultGridLength = 64;

// Expectations over the grid; t_end = min(1 - eps, t_start + d).
TimeEstimate decode_time(const GridDistribution& p_start, const GridDistribution& p_dur,
                         double eps_clamp = kDefaultEpsClamp);
double decode_bandwidth(const GridDistribution& p_bw);

struct RefinedDetection {
  double t_start_norm = 0.0;
  double t_end_norm = 0.0;
  double bandwidth_norm = 0.0;
  std::optional<std::vector<double>> class_probs;

  void validate(double eps_clamp = kDefaultEpsClamp) const;
};

// Absolute seconds / Hz from segment metadata.
Detection denormalize(const RefinedDetection& refined, const PurifiedSegment& seg);

// Inverse of denormalize for the time and bandwidth fields.
RefinedDetection normalize(const Detection& det, const PurifiedSegment& seg);

struct RefineParams {
  std::size_t grid_length = kDefaultGridLength;
  double eps_clamp = kDefaultEpsClamp;

  void validate() const;
};

// Classical stand-in for the refinement network: envelope onset/offset and
// 99% occupied bandwidth, expressed as grid distributions and decoded.
RefinedDetection refine_stub(const PurifiedSegment& seg, const RefineParams& p = {});

} // namespace zoomspec
