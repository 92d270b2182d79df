#include "zoomspec/pipeline.hpp"

#include "json_util.hpp"
#include "zoomspec/errors.hpp"

#include <cmath>

namespace zoomspec {

using detail::json;

namespace {

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(stage) + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(std::string(stage) + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(std::string(stage) + ": " + e.what());
  }
}

std::string interp_name(WarpInterp i) { return i == WarpInterp::Complex ? "complex" : "magnitude"; }

WarpInterp interp_from_string(const std::string& s) {
  if (s == "complex") return WarpInterp::Complex;
  if (s == "magnitude") return WarpInterp::Magnitude;
  throw ValidationError("unknown interpolation mode '" + s + "'");
}

std::size_t req_size(const json& j, std::string_view key, const std::string& path, std::size_t fallback) {
  const long long v = detail::opt_integer(j, key, path, static_cast<long long>(fallback));
  if (v < 0) throw ValidationError("schema error: field '" + detail::join_path(path, key) + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

template <class F>
auto named(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError("schema error: field '" + field + "': " + e.what());
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return empty;
  if (!it->is_object()) throw ValidationError(std::string("schema error: field '") + key + "' must be an object");
  return *it;
}

} // namespace

void WarpParams::validate() const {
  if (m_sub < 4 || m_sub % 2 != 0) throw ValidationError("warp: m_sub must be even and at least 4");
  if (!(b_sub_hz > 0.0)) throw ValidationError("warp: b_sub_hz must be positive");
  if (!(alpha2 > alpha1)) throw ValidationError("warp: alpha2 must exceed alpha1");
}

void PipelineConfig::validate() const {
  stft.validate();
  warp.validate();
  proposer.validate();
  ahlp.validate();
  decode.validate();
}

json config_to_json(const PipelineConfig& c) {
  return json{
      {"stft",
       {{"window", std::string(to_string(c.stft.window))},
        {"n_window", c.stft.n_window},
        {"hop", c.stft.hop},
        {"n_fft", c.stft.n_fft},
        {"eps", c.stft.eps}}},
      {"warp",
       {{"n_sub", c.warp.n_sub},
        {"m_sub", c.warp.m_sub},
        {"b_sub_hz", c.warp.b_sub_hz},
        {"alpha1", c.warp.alpha1},
        {"alpha2", c.warp.alpha2},
        {"orientation", std::string(to_string(c.warp.orientation))},
        {"interp", interp_name(c.warp.interp)}}},
      {"proposer",
       {{"threshold_db", c.proposer.threshold_db},
        {"min_area_bins", c.proposer.min_area_bins},
        {"dilation_bins", c.proposer.dilation_bins},
        {"tier_edges_hz", {c.proposer.tier_edges_hz[0], c.proposer.tier_edges_hz[1]}},
        {"nms_iou", c.proposer.nms_iou},
        {"smooth_frames", c.proposer.smooth_frames},
        {"group_db", c.proposer.group_db}}},
      {"ahlp",
       {{"kappa", c.ahlp.kappa},
        {"eta", c.ahlp.eta},
        {"window", std::string(to_string(c.ahlp.window))},
        {"max_taps", c.ahlp.max_taps}}},
      {"decode", {{"grid_length", c.decode.grid_length}, {"eps_clamp", c.decode.eps_clamp}}},
      {"seed", c.seed},
      {"threads", c.threads},
  };
}

PipelineConfig config_from_json(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ValidationError("schema error: pipeline config must be an object");
  reject_unknown_keys(doc, {"stft", "warp", "proposer", "ahlp", "decode", "seed", "threads"}, "");
  PipelineConfig c;

  const json& s = section(doc, "stft");
  reject_unknown_keys(s, {"window", "n_window", "hop", "n_fft", "eps"}, "stft");
  c.stft.window = named("stft.window", [&] { return window_from_string(opt_string(s, "window", "stft", "hann")); });
  c.stft.n_window = req_size(s, "n_window", "stft", c.stft.n_window);
  c.stft.hop = req_size(s, "hop", "stft", c.stft.hop);
  c.stft.n_fft = req_size(s, "n_fft", "stft", c.stft.n_fft);
  c.stft.eps = opt_number(s, "eps", "stft", c.stft.eps);

  const json& w = section(doc, "warp");
  reject_unknown_keys(w, {"n_sub", "m_sub", "b_sub_hz", "alpha1", "alpha2", "orientation", "interp"}, "warp");
  c.warp.n_sub = req_size(w, "n_sub", "warp", c.warp.n_sub);
  c.warp.m_sub = req_size(w, "m_sub", "warp", c.warp.m_sub);
  c.warp.b_sub_hz = opt_number(w, "b_sub_hz", "warp", c.warp.b_sub_hz);
  c.warp.alpha1 = opt_number(w, "alpha1", "warp", c.warp.alpha1);
  c.warp.alpha2 = opt_number(w, "alpha2", "warp", c.warp.alpha2);
  c.warp.orientation = named("warp.orientation", [&] {
    return orientation_from_string(opt_string(w, "orientation", "warp", std::string(to_string(c.warp.orientation))));
  });
  c.warp.interp = named("warp.interp", [&] { return interp_from_string(opt_string(w, "interp", "warp", "complex")); });

  const json& p = section(doc, "proposer");
  reject_unknown_keys(p, {"threshold_db", "min_area_bins", "dilation_bins", "tier_edges_hz", "nms_iou", "smooth_frames", "group_db"},
                      "proposer");
  c.proposer.threshold_db = opt_number(p, "threshold_db", "proposer", c.proposer.threshold_db);
  c.proposer.min_area_bins = req_size(p, "min_area_bins", "proposer", c.proposer.min_area_bins);
  c.proposer.dilation_bins = req_size(p, "dilation_bins", "proposer", c.proposer.dilation_bins);
  if (auto it = p.find("tier_edges_hz"); it != p.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2)
      throw ValidationError("schema error: field 'proposer.tier_edges_hz' must be an array of two numbers");
    c.proposer.tier_edges_hz = {as_number((*it)[0], "proposer.tier_edges_hz[0]"),
                                as_number((*it)[1], "proposer.tier_edges_hz[1]")};
  }
  c.proposer.nms_iou = opt_number(p, "nms_iou", "proposer", c.proposer.nms_iou);
  c.proposer.smooth_frames = req_size(p, "smooth_frames", "proposer", c.proposer.smooth_frames);
  c.proposer.group_db = opt_number(p, "group_db", "proposer", c.proposer.group_db);

  const json& a = section(doc, "ahlp");
  reject_unknown_keys(a, {"kappa", "eta", "window", "max_taps"}, "ahlp");
  c.ahlp.kappa = opt_number(a, "kappa", "ahlp", c.ahlp.kappa);
  c.ahlp.eta = opt_number(a, "eta", "ahlp", c.ahlp.eta);
  c.ahlp.window = named("ahlp.window", [&] { return window_from_string(opt_string(a, "window", "ahlp", "hamming")); });
  c.ahlp.max_taps = req_size(a, "max_taps", "ahlp", c.ahlp.max_taps);

  const json& d = section(doc, "decode");
  reject_unknown_keys(d, {"grid_length", "eps_clamp"}, "decode");
  c.decode.grid_length = req_size(d, "grid_length", "decode", c.decode.grid_length);
  c.decode.eps_clamp = opt_number(d, "eps_clamp", "decode", c.decode.eps_clamp);

  c.seed = req_size(doc, "seed", "", 0);
  c.threads = req_size(doc, "threads", "", 0);

  auto check = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("validation error in '") + name + "': " + e.what());
    }
  };
  check("stft", [&] { c.stft.validate(); });
  check("warp", [&] { c.warp.validate(); });
  check("proposer", [&] { c.proposer.validate(); });
  check("ahlp", [&] { c.ahlp.validate(); });
  check("decode", [&] { c.decode.validate(); });
  return c;
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  return config_from_json(detail::read_json_file(path));
}

WarpGrid make_grid(const WarpParams& w, double fs) {
  w.validate();
  if (!(fs > 0.0)) throw ValidationError("grid: sample rate must be positive");
  const std::size_t n_sub =
      w.n_sub > 0 ? w.n_sub : static_cast<std::size_t>(std::max(1.0, std::round(fs / w.b_sub_hz)));
  if (w.orientation == WarpOrientation::Uniform) return uniform_grid(-0.5 * fs, fs, n_sub, w.m_sub);
  return build_warp_grid(-0.5 * fs, fs, n_sub, w.m_sub, w.alpha1, w.alpha2, w.orientation);
}

WarpGrid linear_grid(const StftParams& s, double fs) { return uniform_grid(-0.5 * fs, fs, 1, s.n_fft); }

Representation warped_representation(const IqRecording& r, const PipelineConfig& c) {
  const auto x = in_stage("stft", [&] { return stft(r, c.stft); });
  Representation out;
  out.grid = in_stage("warp", [&] { return make_grid(c.warp, r.sample_rate_hz()); });
  out.spectrogram = in_stage("warp", [&] { return warp_spectrogram(x, out.grid, c.stft.eps, c.warp.interp); });
  return out;
}

Representation linear_representation(const IqRecording& r, const PipelineConfig& c) {
  Representation out;
  out.spectrogram = in_stage("stft", [&] { return log_magnitude(stft(r, c.stft), c.stft.eps); });
  out.grid = linear_grid(c.stft, r.sample_rate_hz());
  return out;
}

std::vector<Detection> refine_proposals(const IqRecording& r, std::span<const Proposal> proposals,
                                        const PipelineConfig& c, std::vector<BatchItem>* segments,
                                        std::vector<std::string>* errors) {
  auto items = in_stage("ahlp", [&] { return ahlp_purify_batch(r, proposals, c.ahlp, c.threads); });
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].ok()) {
      if (errors) errors->push_back("ahlp: " + items[i].error);
      continue;
    }
    const auto& seg = *items[i].segment;
    try {
      const auto refined = refine_stub(seg, c.decode);
      Detection d = denormalize(refined, seg);
      d.validate();
      dets.push_back(d);
    } catch (const Error& e) {
      if (errors) errors->push_back("refine: proposal " + std::to_string(i) + ": " + e.what());
    }
  }
  if (segments) *segments = std::move(items);
  return dets;
}

DetectResult run_detect(const IqRecording& r, const PipelineConfig& c, const std::optional<std::vector<Proposal>>& injected) {
  c.validate();
  r.require_nonempty();
  DetectResult out;
  if (injected) {
    out.proposals = *injected;
    out.grid = in_stage("warp", [&] { return make_grid(c.warp, r.sample_rate_hz()); });
  } else {
    const auto rep = warped_representation(r, c);
    out.grid = rep.grid;
    auto props = in_stage("propose", [&] { return propose(rep.spectrogram, rep.grid, c.proposer); });
    out.proposals = in_stage("nms", [&] { return nms(std::move(props), c.proposer.nms_iou, rep.grid); });
  }
  out.detections = refine_proposals(r, out.proposals, c, &out.segments, &out.errors);
  return out;
}

} // namespace zoomspec
