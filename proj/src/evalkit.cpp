#include "zoomspec/evalkit.hpp"

#include "json_util.hpp"
#include "zoomspec/errors.hpp"
#include "zoomspec/json_codec.hpp"
#include "zoomspec/proposer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

namespace zoomspec {

using detail::json;

namespace {

std::vector<std::size_t> by_confidence(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
  return order;
}

struct Scored {
  double conf;
  bool tp;
};

double ap_from_sweep(std::vector<Scored> scored, std::size_t n_truths) {
  if (n_truths == 0) return scored.empty() ? 1.0 : 0.0;
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.conf > b.conf; });
  const std::size_t n = scored.size();
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (scored[i].tp) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  // Recall grows by 1/n_truths at each true positive.
  double ap = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (scored[i].tp) ap += precision[i];
  ap /= static_cast<double>(n_truths);
  return std::clamp(ap, 0.0, 1.0);
}

void add_scored(std::span<const Detection> dets, std::span<const EmitterTruth> truths, double iou_thresh,
                std::vector<Scored>& out) {
  const auto m = match_detections(dets, truths, iou_thresh);
  const auto order = by_confidence(dets);
  for (std::size_t i : order) out.push_back({dets[i].confidence, m[i].truth.has_value()});
}

EvalScene filter_class(const EvalScene& s, ModClass c) {
  EvalScene out;
  for (const auto& d : s.dets)
    if (d.class_label == c) out.dets.push_back(d);
  for (const auto& t : s.truths)
    if (t.class_label == c) out.truths.push_back(t);
  return out;
}

} // namespace

std::vector<Match> match_detections(std::span<const Detection> dets, std::span<const EmitterTruth> truths,
                                    double iou_thresh, bool class_aware) {
  std::vector<Match> out(dets.size());
  std::vector<bool> taken(truths.size(), false);
  std::vector<TfBox> tboxes;
  tboxes.reserve(truths.size());
  for (const auto& t : truths) tboxes.push_back(t.box());
  for (std::size_t i : by_confidence(dets)) {
    out[i].det = i;
    const TfBox b = dets[i].box();
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t j = 0; j < truths.size(); ++j) {
      if (taken[j]) continue;
      if (class_aware && truths[j].class_label != dets[i].class_label) continue;
      const double iou = tf_iou(b, tboxes[j]);
      if (iou >= iou_thresh && iou > best_iou) {
        best_iou = iou;
        best = j;
      }
    }
    if (best) {
      taken[*best] = true;
      out[i].truth = best;
      out[i].iou = best_iou;
    }
  }
  return out;
}

double average_precision(std::span<const Detection> dets, std::span<const EmitterTruth> truths, double iou_thresh) {
  std::vector<Scored> scored;
  add_scored(dets, truths, iou_thresh, scored);
  return ap_from_sweep(std::move(scored), truths.size());
}

double average_precision(std::span<const EvalScene> scenes, double iou_thresh) {
  std::vector<Scored> scored;
  std::size_t n_truths = 0;
  for (const auto& s : scenes) {
    add_scored(s.dets, s.truths, iou_thresh, scored);
    n_truths += s.truths.size();
  }
  return ap_from_sweep(std::move(scored), n_truths);
}

std::array<double, 10> iou_thresholds() {
  std::array<double, 10> t{};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(50 + 5 * i) / 100.0;
  return t;
}

double map_50_95(std::span<const Detection> dets, std::span<const EmitterTruth> truths) {
  double sum = 0.0;
  for (double t : iou_thresholds()) sum += average_precision(dets, truths, t);
  return sum / 10.0;
}

double map_50_95(std::span<const EvalScene> scenes) {
  double sum = 0.0;
  for (double t : iou_thresholds()) sum += average_precision(scenes, t);
  return sum / 10.0;
}

PrecisionRecall precision_recall_at(std::span<const EvalScene> scenes, double iou_thresh, double conf_thresh) {
  std::size_t tp = 0, n_dets = 0, n_truths = 0;
  for (const auto& s : scenes) {
    std::vector<Detection> kept;
    for (const auto& d : s.dets)
      if (d.confidence >= conf_thresh) kept.push_back(d);
    for (const auto& m : match_detections(kept, s.truths, iou_thresh))
      if (m.truth) ++tp;
    n_dets += kept.size();
    n_truths += s.truths.size();
  }
  PrecisionRecall pr;
  pr.precision = n_dets == 0 ? (n_truths == 0 ? 1.0 : 0.0) : static_cast<double>(tp) / static_cast<double>(n_dets);
  pr.recall = n_truths == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(n_truths);
  return pr;
}

PrecisionRecall precision_recall_at(std::span<const Detection> dets, std::span<const EmitterTruth> truths,
                                    double iou_thresh, double conf_thresh) {
  const EvalScene s{{dets.begin(), dets.end()}, {truths.begin(), truths.end()}};
  return precision_recall_at(std::span<const EvalScene>(&s, 1), iou_thresh, conf_thresh);
}

ConfusionMatrix confusion_matrix(std::span<const EvalScene> scenes, double iou_thresh) {
  ConfusionMatrix cm(kNumModClasses + 1, std::vector<std::size_t>(kNumModClasses + 1, 0));
  for (const auto& s : scenes) {
    const auto m = match_detections(s.dets, s.truths, iou_thresh);
    std::vector<bool> matched(s.truths.size(), false);
    for (std::size_t i = 0; i < s.dets.size(); ++i) {
      const auto pred = static_cast<std::size_t>(s.dets[i].class_label);
      if (m[i].truth) {
        matched[*m[i].truth] = true;
        ++cm[static_cast<std::size_t>(s.truths[*m[i].truth].class_label)][pred];
      } else {
        ++cm[kBackground][pred];
      }
    }
    for (std::size_t j = 0; j < s.truths.size(); ++j)
      if (!matched[j]) ++cm[static_cast<std::size_t>(s.truths[j].class_label)][kBackground];
  }
  return cm;
}

ConfusionMatrix confusion_matrix(std::span<const Detection> dets, std::span<const EmitterTruth> truths,
                                 double iou_thresh) {
  const EvalScene s{{dets.begin(), dets.end()}, {truths.begin(), truths.end()}};
  return confusion_matrix(std::span<const EvalScene>(&s, 1), iou_thresh);
}

EvalReport evaluate(std::span<const EvalScene> scenes) {
  EvalReport r;
  double sum = 0.0;
  for (double t : iou_thresholds()) {
    const double ap = average_precision(scenes, t);
    r.ap_per_iou[t] = ap;
    sum += ap;
  }
  r.map_50_95 = sum / 10.0;
  const auto pr = precision_recall_at(scenes, 0.5);
  r.precision_50 = pr.precision;
  r.recall_50 = pr.recall;

  std::set<ModClass> classes, with_truth;
  for (const auto& s : scenes) {
    for (const auto& d : s.dets) classes.insert(d.class_label);
    for (const auto& t : s.truths) {
      classes.insert(t.class_label);
      with_truth.insert(t.class_label);
    }
  }
  double class_sum = 0.0;
  for (ModClass c : classes) {
    std::vector<EvalScene> sub;
    for (const auto& s : scenes) sub.push_back(filter_class(s, c));
    auto& per = r.per_class_ap[c];
    double csum = 0.0;
    for (double t : iou_thresholds()) {
      per[t] = average_precision(sub, t);
      csum += per[t];
    }
    if (with_truth.count(c)) class_sum += csum / 10.0;
  }
  r.class_map_50_95 = with_truth.empty() ? r.map_50_95 : class_sum / static_cast<double>(with_truth.size());
  r.confusion = confusion_matrix(scenes, 0.5);
  return r;
}

EvalReport evaluate(std::span<const Detection> dets, std::span<const EmitterTruth> truths) {
  const EvalScene s{{dets.begin(), dets.end()}, {truths.begin(), truths.end()}};
  return evaluate(std::span<const EvalScene>(&s, 1));
}

namespace {

std::string threshold_key(double t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  return buf;
}

} // namespace

json report_to_json(const EvalReport& r) {
  json ap = json::object();
  for (const auto& [t, v] : r.ap_per_iou) ap[threshold_key(t)] = v;
  json per_class = json::object();
  for (const auto& [c, m] : r.per_class_ap) {
    json inner = json::object();
    double sum = 0.0;
    for (const auto& [t, v] : m) {
      inner[threshold_key(t)] = v;
      sum += v;
    }
    per_class[std::string(to_string(c))] = json{{"ap_per_iou", inner}, {"map_50_95", m.empty() ? 0.0 : sum / m.size()}};
  }
  json labels = json::array();
  for (std::size_t i = 0; i < kNumModClasses; ++i) labels.push_back(std::string(to_string(static_cast<ModClass>(i))));
  labels.push_back("background");
  return json{{"ap_per_iou", ap},
              {"map_50_95", r.map_50_95},
              {"precision_50", r.precision_50},
              {"recall_50", r.recall_50},
              {"per_class_ap", per_class},
              {"class_map_50_95", r.class_map_50_95},
              {"confusion", {{"labels", labels}, {"counts", r.confusion}}}};
}

void write_report(const EvalReport& r, const std::filesystem::path& path) {
  detail::write_json_file(report_to_json(r), path);
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  const json doc = detail::read_json_file(path);
  detail::reject_unknown_keys(doc, {"detections"}, "");
  const json& arr = detail::require_field(doc, "detections", "");
  if (!arr.is_array()) throw ValidationError("schema error: field 'detections' must be an array");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(detection_from_json(arr[i], "detections[" + std::to_string(i) + "]"));
  return out;
}

void write_detections(std::span<const Detection> dets, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& d : dets) arr.push_back(detection_to_json(d));
  detail::write_json_file(json{{"detections", arr}}, path);
}

} // namespace zoomspec
