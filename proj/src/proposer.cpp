#include "zoomspec/proposer.hpp"

#include "json_util.hpp"
#include "zoomspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace zoomspec {

using detail::json;

namespace {

// dB per natural-log unit of magnitude.
const double kDbPerNeper = 20.0 / std::numbers::ln10;

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double weighted_median(std::vector<std::pair<double, double>> vw) {
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& [v, w] : vw) total += w;
  if (!(total > 0.0)) {
    std::vector<double> v;
    for (const auto& e : vw) v.push_back(e.first);
    return median_of(v);
  }
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vw.back().first;
}

// Centered moving average over k frames in the power domain, truncated at
// the ends; returns log-magnitude again.
std::vector<double> smooth_in_time(const Spectrogram& s, std::size_t k) {
  const std::size_t nf = s.n_frames;
  const std::size_t nb = s.n_bins;
  if (k <= 1) return s.values;
  const std::size_t before = (k - 1) / 2;
  const std::size_t after = k - 1 - before;
  std::vector<double> out(s.values.size());
  std::vector<double> prefix(nf + 1);
  for (std::size_t b = 0; b < nb; ++b) {
    prefix[0] = 0.0;
    for (std::size_t l = 0; l < nf; ++l) prefix[l + 1] = prefix[l] + std::exp(2.0 * s.values[l * nb + b]);
    for (std::size_t l = 0; l < nf; ++l) {
      const std::size_t a = l >= before ? l - before : 0;
      const std::size_t e = std::min(nf, l + after + 1);
      const double mean = (prefix[e] - prefix[a]) / static_cast<double>(e - a);
      out[l * nb + b] = 0.5 * std::log(std::max(mean, 1e-300));
    }
  }
  return out;
}

struct Component {
  std::size_t l0, l1, m0, m1;
  std::size_t area = 0;
  double excess_sum = 0.0;
};

} // namespace

std::string_view to_string(BwTier t) {
  switch (t) {
  case BwTier::Narrow: return "narrow";
  case BwTier::Mid: return "mid";
  case BwTier::Wide: return "wide";
  }
  return "narrow";
}

BwTier bw_tier_from_string(std::string_view name) {
  if (name == "narrow") return BwTier::Narrow;
  if (name == "mid") return BwTier::Mid;
  if (name == "wide") return BwTier::Wide;
  throw ValidationError("unknown bandwidth tier '" + std::string(name) + "'");
}

void Proposal::validate() const {
  for (double v : {t_start_s, t_end_s, f_start_hz, f_end_hz, confidence})
    if (!std::isfinite(v)) throw ValidationError("proposal: non-finite field");
  if (!(t_end_s > t_start_s)) throw ValidationError("proposal: t_end_s must exceed t_start_s");
  if (!(f_end_hz > f_start_hz)) throw ValidationError("proposal: f_end_hz must exceed f_start_hz");
  if (confidence < 0.0 || confidence > 1.0) throw ValidationError("proposal: confidence must lie in [0,1]");
}

void ProposerParams::validate() const {
  if (!std::isfinite(threshold_db)) throw ValidationError("proposer: threshold_db must be finite");
  if (min_area_bins == 0) throw ValidationError("proposer: min_area_bins must be positive");
  if (!(tier_edges_hz[0] > 0.0 && tier_edges_hz[1] > tier_edges_hz[0]))
    throw ValidationError("proposer: tier_edges_hz must be positive and ascending");
  if (!(nms_iou > 0.0 && nms_iou < 1.0)) throw ValidationError("proposer: nms_iou must lie in (0,1)");
  if (smooth_frames == 0) throw ValidationError("proposer: smooth_frames must be positive");
  if (!std::isfinite(group_db)) throw ValidationError("proposer: group_db must be finite");
}

BwTier bw_tier_for(double bandwidth_hz, const ProposerParams& p) {
  if (bandwidth_hz < p.tier_edges_hz[0]) return BwTier::Narrow;
  if (bandwidth_hz < p.tier_edges_hz[1]) return BwTier::Mid;
  return BwTier::Wide;
}

std::vector<double> estimate_noise_floor(const Spectrogram& s) {
  if (s.n_frames < 8) throw ValidationError("noise floor: need at least 8 frames, got " + std::to_string(s.n_frames));
  std::vector<double> floor(s.n_bins);
  std::vector<double> col(s.n_frames);
  for (std::size_t b = 0; b < s.n_bins; ++b) {
    for (std::size_t l = 0; l < s.n_frames; ++l) col[l] = s.values[l * s.n_bins + b];
    floor[b] = median_of(col);
  }
  return floor;
}

std::vector<Proposal> propose(const Spectrogram& s, const WarpGrid& grid, const ProposerParams& p) {
  p.validate();
  if (s.n_bins != grid.size())
    throw ValidationError("propose: spectrogram has " + std::to_string(s.n_bins) + " bins but the grid has " +
                          std::to_string(grid.size()) + " points");
  if (s.n_frames < 8) throw ValidationError("propose: need at least 8 frames");
  const std::size_t nf = s.n_frames;
  const std::size_t nb = s.n_bins;

  Spectrogram sm = s;
  sm.values = smooth_in_time(s, p.smooth_frames);
  std::vector<double> floor = estimate_noise_floor(sm);

  // A per-bin median cannot see an emitter that is on for most of the
  // recording, so cap each bin at the band-wide level (Hz-weighted, after
  // removing the expected interpolation shape).
  std::vector<double> shape(nb, 0.0);
  if (s.noise_shape.size() == nb) shape = s.noise_shape;
  std::vector<std::pair<double, double>> vw(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const double left = b > 0 ? grid.points_hz[b] - grid.points_hz[b - 1] : 0.0;
    const double right = b + 1 < nb ? grid.points_hz[b + 1] - grid.points_hz[b] : 0.0;
    vw[b] = {floor[b] - shape[b], 0.5 * (left + right)};
  }
  const double level = weighted_median(vw);
  for (std::size_t b = 0; b < nb; ++b) floor[b] = std::min(floor[b], level + shape[b]);

  const double thr = p.threshold_db / kDbPerNeper;
  const double low = std::min(p.threshold_db, p.group_db) / kDbPerNeper;
  std::vector<char> hit(nf * nb, 0), seed(nf * nb, 0);
  for (std::size_t l = 0; l < nf; ++l)
    for (std::size_t b = 0; b < nb; ++b) {
      const double e = sm.values[l * nb + b] - floor[b];
      hit[l * nb + b] = e > thr;
      seed[l * nb + b] = e > low;
    }

  // Box dilation, separable.
  std::vector<char> mask = seed;
  const std::size_t r = p.dilation_bins;
  if (r > 0) {
    std::vector<char> tmp(nf * nb, 0);
    for (std::size_t l = 0; l < nf; ++l)
      for (std::size_t b = 0; b < nb; ++b) {
        if (!seed[l * nb + b]) continue;
        const std::size_t b0 = b >= r ? b - r : 0;
        const std::size_t b1 = std::min(nb - 1, b + r);
        for (std::size_t q = b0; q <= b1; ++q) tmp[l * nb + q] = 1;
      }
    std::fill(mask.begin(), mask.end(), 0);
    for (std::size_t l = 0; l < nf; ++l)
      for (std::size_t b = 0; b < nb; ++b) {
        if (!tmp[l * nb + b]) continue;
        const std::size_t l0 = l >= r ? l - r : 0;
        const std::size_t l1 = std::min(nf - 1, l + r);
        for (std::size_t q = l0; q <= l1; ++q) mask[q * nb + b] = 1;
      }
  }

  // 4-connected labelling; geometry and statistics from pixels above the
  // threshold only.
  std::vector<int> label(nf * nb, -1);
  std::vector<Component> comps;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < nf * nb; ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    Component c{nf, 0, nb, 0};
    label[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const std::size_t l = idx / nb;
      const std::size_t b = idx % nb;
      if (hit[idx]) {
        c.l0 = std::min(c.l0, l);
        c.l1 = std::max(c.l1, l);
        c.m0 = std::min(c.m0, b);
        c.m1 = std::max(c.m1, b);
        ++c.area;
        c.excess_sum += (sm.values[idx] - floor[b]) * kDbPerNeper - p.threshold_db;
      }
      auto visit = [&](std::size_t n) {
        if (mask[n] && label[n] < 0) {
          label[n] = id;
          stack.push_back(n);
        }
      };
      if (l > 0) visit(idx - nb);
      if (l + 1 < nf) visit(idx + nb);
      if (b > 0) visit(idx - 1);
      if (b + 1 < nb) visit(idx + 1);
    }
    comps.push_back(c);
  }

  const double fs = s.sample_rate_hz;
  const double t_lo = s.frame_times_s.front();
  const double t_hi = s.frame_times_s.front() +
                      (static_cast<double>((nf - 1) * s.hop) + static_cast<double>(s.n_window)) / fs;
  const double half_hop = 0.5 * s.hop_s();
  const double last_bin = static_cast<double>(nb - 1);

  std::vector<Proposal> out;
  for (const auto& c : comps) {
    if (c.area < p.min_area_bins) continue;
    Proposal q;
    q.t_start_s = std::max(t_lo, s.frame_center_s(c.l0) - half_hop);
    q.t_end_s = std::min(t_hi, s.frame_center_s(c.l1) + half_hop);
    q.f_start_hz = warp_to_hz(grid, std::max(0.0, static_cast<double>(c.m0) - 0.5));
    q.f_end_hz = warp_to_hz(grid, std::min(last_bin, static_cast<double>(c.m1) + 0.5));
    if (!(q.f_end_hz > q.f_start_hz)) {
      q.f_start_hz = grid.points_hz[c.m0 > 0 ? c.m0 - 1 : 0];
      q.f_end_hz = grid.points_hz[std::min(nb - 1, c.m1 + 1)];
    }
    if (!(q.f_end_hz > q.f_start_hz) || !(q.t_end_s > q.t_start_s)) continue;
    q.confidence = std::clamp(c.excess_sum / static_cast<double>(c.area) / 20.0, 0.0, 1.0);
    q.tier = bw_tier_for(q.bandwidth_hz(), p);
    out.push_back(q);
  }
  std::stable_sort(out.begin(), out.end(), [](const Proposal& a, const Proposal& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.t_start_s != b.t_start_s) return a.t_start_s < b.t_start_s;
    return a.f_start_hz < b.f_start_hz;
  });
  return out;
}

namespace {

double rect_iou(double a0, double a1, double b0, double b1, double c0, double c1, double d0, double d1) {
  // [a0,a1]x[b0,b1] against [c0,c1]x[d0,d1]
  const double iw = std::max(0.0, std::min(a1, c1) - std::max(a0, c0));
  const double ih = std::max(0.0, std::min(b1, d1) - std::max(b0, d0));
  const double inter = iw * ih;
  const double uni = (a1 - a0) * (b1 - b0) + (c1 - c0) * (d1 - d0) - inter;
  if (!(uni > 0.0)) return (a0 == c0 && a1 == c1 && b0 == d0 && b1 == d1) ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

} // namespace

double tf_iou(const TfBox& a, const TfBox& b) {
  return rect_iou(a.t_start_s, a.t_end_s, a.f_start_hz, a.f_end_hz, b.t_start_s, b.t_end_s, b.f_start_hz, b.f_end_hz);
}

double tf_iou_weighted(const TfBox& a, const TfBox& b, const WarpGrid& grid) {
  const double a0 = hz_to_warp(grid, a.f_start_hz);
  const double a1 = hz_to_warp(grid, a.f_end_hz);
  const double b0 = hz_to_warp(grid, b.f_start_hz);
  const double b1 = hz_to_warp(grid, b.f_end_hz);
  if (a == b) return 1.0;
  return rect_iou(a.t_start_s, a.t_end_s, a0, a1, b.t_start_s, b.t_end_s, b0, b1);
}

std::vector<Proposal> nms(std::vector<Proposal> proposals, double iou_thresh, const WarpGrid& grid) {
  std::stable_sort(proposals.begin(), proposals.end(), [](const Proposal& a, const Proposal& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.t_start_s != b.t_start_s) return a.t_start_s < b.t_start_s;
    return a.f_start_hz < b.f_start_hz;
  });
  std::vector<Proposal> kept;
  std::vector<bool> removed(proposals.size(), false);
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (removed[i]) continue;
    kept.push_back(proposals[i]);
    for (std::size_t j = i + 1; j < proposals.size(); ++j) {
      if (!removed[j] && tf_iou_weighted(proposals[i].box(), proposals[j].box(), grid) > iou_thresh) removed[j] = true;
    }
  }
  return kept;
}

std::vector<Proposal> read_proposals(const std::filesystem::path& path) {
  const json doc = detail::read_json_file(path);
  detail::reject_unknown_keys(doc, {"proposals"}, "");
  const json& arr = detail::require_field(doc, "proposals", "");
  if (!arr.is_array()) throw ValidationError("schema error: field 'proposals' must be an array");
  std::vector<Proposal> out;
  const ProposerParams defaults;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& e = arr[i];
    const std::string p = "proposals[" + std::to_string(i) + "]";
    detail::reject_unknown_keys(e, {"t_start_s", "t_end_s", "f_start_hz", "f_end_hz", "tier", "conf"}, p);
    Proposal q;
    q.t_start_s = detail::req_number(e, "t_start_s", p);
    q.t_end_s = detail::req_number(e, "t_end_s", p);
    q.f_start_hz = detail::req_number(e, "f_start_hz", p);
    q.f_end_hz = detail::req_number(e, "f_end_hz", p);
    q.confidence = detail::req_number(e, "conf", p);
    if (e.contains("tier")) {
      try {
        q.tier = bw_tier_from_string(detail::req_string(e, "tier", p));
      } catch (const ValidationError& err) {
        throw ValidationError("schema error: field '" + p + ".tier': " + err.what());
      }
    } else {
      q.tier = bw_tier_for(q.bandwidth_hz(), defaults);
    }
    try {
      q.validate();
    } catch (const ValidationError& err) {
      throw ValidationError("validation error in '" + p + "': " + err.what());
    }
    out.push_back(q);
  }
  return out;
}

void write_proposals(std::span<const Proposal> proposals, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& q : proposals) {
    arr.push_back(json{{"t_start_s", q.t_start_s},
                       {"t_end_s", q.t_end_s},
                       {"f_start_hz", q.f_start_hz},
                       {"f_end_hz", q.f_end_hz},
                       {"tier", to_string(q.tier)},
                       {"conf", q.confidence}});
  }
  detail::write_json_file(json{{"proposals", arr}}, path);
}

} // namespace zoomspec
