#pragma once

#include "json.hpp"
#include "zoomspec/ahlp.hpp"
#include "zoomspec/decode.hpp"
#include "zoomspec/iqcore.hpp"
#include "zoomspec/proposer.hpp"
#include "zoomspec/specfront.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace zoomspec {

struct WarpParams {
  // 0 derives the subband count from the sample rate and b_sub_hz.
  std::size_t n_sub = 0;
  std::size_t m_sub = 128;
  double b_sub_hz = 1e6;
  double alpha1 = 1.0;
  double alpha2 = 4.0;
  WarpOrientation orientation = WarpOrientation::CenterDense;
  WarpInterp interp = WarpInterp::Complex;

  void validate() const;
};

struct PipelineConfig {
  StftParams stft;
  WarpParams warp;
  ProposerParams proposer;
  AhlpParams ahlp;
  RefineParams decode;
  std::uint64_t seed = 0;
  // Worker threads for the purification batch; 0 = hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& c);
// Missing fields take defaults; unknown fields are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);
PipelineConfig read_pipeline_config(const std::filesystem::path& path);

// Grid over [-fs/2, fs/2] for a recording at fs.
WarpGrid make_grid(const WarpParams& w, double sample_rate_hz);
// One grid point per linear STFT bin.
WarpGrid linear_grid(const StftParams& s, double sample_rate_hz);

struct Representation {
  Spectrogram spectrogram;
  WarpGrid grid;
};

Representation warped_representation(const IqRecording& r, const PipelineConfig& c);
Representation linear_representation(const IqRecording& r, const PipelineConfig& c);

struct DetectResult {
  WarpGrid grid;
  std::vector<Proposal> proposals;  // after NMS, or the injected list
  std::vector<BatchItem> segments;
  std::vector<Detection> detections;
  std::vector<std::string> errors;
};

// Proposals -> purification -> refinement -> absolute detections.
std::vector<Detection> refine_proposals(const IqRecording& r, std::span<const Proposal> proposals,
                                        const PipelineConfig& c, std::vector<BatchItem>* segments = nullptr,
                                        std::vector<std::string>* errors = nullptr);

// Full chain. Injected proposals replace the internal proposer.
DetectResult run_detect(const IqRecording& r, const PipelineConfig& c,
                        const std::optional<std::vector<Proposal>>& injected = std::nullopt);

} // namespace zoomspec
