#include "zoomspec/iqcore.hpp"

#include "json_util.hpp"
#include "zoomspec/errors.hpp"
#include "zoomspec/json_codec.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace zoomspec {

using detail::json;

namespace {

constexpr std::array<std::string_view, kNumModClasses> kClassNames = {
    "Tone", "NBFM", "LoRa", "Zigbee", "QPSK", "16QAM", "AM", "Unknown"};

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v & 0xff0000u) >> 8) | (v >> 24);
  }
}

bool finite(cf32 s) { return std::isfinite(s.real()) && std::isfinite(s.imag()); }

} // namespace

std::string_view to_string(ModClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

ModClass mod_class_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<ModClass>(i);
  }
  throw ValidationError("unknown class label '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

IqRecording::IqRecording(std::vector<cf32> samples, double sample_rate_hz, double start_time_s,
                         std::string label)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz), start_time_s_(start_time_s),
      label_(std::move(label)) {
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
    throw ValidationError("sample_rate_hz must be positive and finite");
  if (!std::isfinite(start_time_s_)) throw ValidationError("start_time_s must be finite");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!finite(samples_[i]))
      throw ValidationError("non-finite sample at index " + std::to_string(i));
  }
}

void IqRecording::require_nonempty() const {
  if (samples_.empty()) throw ValidationError("empty recording");
}

// ---------------------------------------------------------------------------

TfBox EmitterTruth::box() const {
  return {t_start_s, t_end_s, f_c_hz - 0.5 * bandwidth_hz, f_c_hz + 0.5 * bandwidth_hz};
}

void EmitterTruth::validate() const {
  if (!(t_end_s > t_start_s)) throw ValidationError("emitter span requires t_end_s > t_start_s");
  if (!(bandwidth_hz > 0.0)) throw ValidationError("emitter bandwidth_hz must be positive");
  if (phase_noise_var < 0.0) throw ValidationError("phase_noise_var must be non-negative");
  for (double v : {f_c_hz, bandwidth_hz, t_start_s, t_end_s, snr_db, cfo_hz, phase_noise_var}) {
    if (!std::isfinite(v)) throw ValidationError("emitter fields must be finite");
  }
}

void EmitterTruth::validate(double sample_rate_hz) const {
  validate();
  const double half = 0.5 * sample_rate_hz;
  const double lo = f_c_hz - 0.5 * bandwidth_hz;
  const double hi = f_c_hz + 0.5 * bandwidth_hz;
  // Small relative slack so labels computed as fs/2 - B/2 pass.
  const double slack = 1e-9 * sample_rate_hz;
  if (lo < -half - slack || hi > half + slack)
    throw ValidationError("emitter band [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] Hz exceeds the +/-fs/2 baseband");
}

TfBox Detection::box() const {
  return {t_start_s, t_end_s, f_c_hz - 0.5 * bandwidth_hz, f_c_hz + 0.5 * bandwidth_hz};
}

void Detection::validate() const {
  if (!(t_end_s > t_start_s)) throw ValidationError("detection requires t_end_s > t_start_s");
  if (!(bandwidth_hz > 0.0)) throw ValidationError("detection bandwidth_hz must be positive");
  if (!(confidence >= 0.0 && confidence <= 1.0)) throw ValidationError("detection confidence must be in [0,1]");
}

// ---------------------------------------------------------------------------

std::filesystem::path sidecar_path(const std::filesystem::path& iq_path) {
  std::filesystem::path p = iq_path;
  if (p.extension() == ".iq") p.replace_extension();
  p += ".meta.json";
  return p;
}

void write_iq(const IqRecording& recording, const std::filesystem::path& path,
              const std::optional<SegmentMeta>& segment) {
  recording.require_nonempty();
  // Constructor already rejects non-finite samples; re-check in case of a
  // moved-from or default object.
  for (const auto& s : recording.samples()) {
    if (!finite(s)) throw ValidationError("non-finite sample; refusing to write " + path.string());
  }

  std::vector<std::uint32_t> words(2 * recording.size());
  for (std::size_t i = 0; i < recording.size(); ++i) {
    const float re = recording.samples()[i].real();
    const float im = recording.samples()[i].imag();
    words[2 * i] = to_le(std::bit_cast<std::uint32_t>(re));
    words[2 * i + 1] = to_le(std::bit_cast<std::uint32_t>(im));
  }
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  }

  json meta = {{"sample_rate_hz", recording.sample_rate_hz()},
               {"start_time_s", recording.start_time_s()},
               {"label", recording.label()}};
  if (segment) {
    meta["decim_factor"] = segment->decim_factor;
    meta["f_c_hz"] = segment->f_c_hz;
    meta["f_lp_hz"] = segment->f_lp_hz;
    meta["n_start"] = segment->n_start;
    meta["source_conf"] = segment->source_conf;
  }
  detail::write_json_file(meta, sidecar_path(path));
}

namespace {

std::vector<cf32> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0)
    throw ValidationError("structural error: '" + path.string() + "' has " + std::to_string(bytes.size()) +
                          " bytes, not a multiple of 8");
  std::vector<cf32> samples(bytes.size() / 8);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::uint32_t w[2];
    std::memcpy(w, bytes.data() + 8 * i, 8);
    const float re = std::bit_cast<float>(to_le(w[0]));
    const float im = std::bit_cast<float>(to_le(w[1]));
    samples[i] = {re, im};
    if (!finite(samples[i]))
      throw ValidationError("non-finite sample at index " + std::to_string(i) + " in '" + path.string() + "'");
  }
  return samples;
}

} // namespace

IqRecording read_iq(const std::filesystem::path& path, double sample_rate_hz) {
  return IqRecording(read_samples(path), sample_rate_hz);
}

IqRecording read_iq(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  json meta = detail::read_json_file(meta_path);
  const double fs = detail::req_number(meta, "sample_rate_hz", "");
  const double t0 = detail::opt_number(meta, "start_time_s", "", 0.0);
  std::string label = detail::opt_string(meta, "label", "", "");
  return IqRecording(read_samples(path), fs, t0, std::move(label));
}

// ---------------------------------------------------------------------------

json emitter_to_json(const EmitterTruth& e) {
  json j = {{"class", std::string(to_string(e.class_label))},
            {"f_c_hz", e.f_c_hz},
            {"bandwidth_hz", e.bandwidth_hz},
            {"t_start_s", e.t_start_s},
            {"t_end_s", e.t_end_s},
            {"snr_db", e.snr_db},
            {"cfo_hz", e.cfo_hz},
            {"phase_noise_var", e.phase_noise_var}};
  if (!e.taps.empty()) {
    json taps = json::array();
    for (const auto& t : e.taps) taps.push_back({t.delay_samples, t.gain.real(), t.gain.imag()});
    j["taps"] = std::move(taps);
  }
  if (e.phase0_rad) j["phase0_rad"] = *e.phase0_rad;
  return j;
}

EmitterTruth emitter_from_json(const json& j, const std::string& path) {
  using namespace detail;
  EmitterTruth e;
  e.class_label = mod_class_from_string(req_string(j, "class", path));
  e.f_c_hz = req_number(j, "f_c_hz", path);
  e.bandwidth_hz = req_number(j, "bandwidth_hz", path);
  e.t_start_s = req_number(j, "t_start_s", path);
  e.t_end_s = req_number(j, "t_end_s", path);
  e.snr_db = opt_number(j, "snr_db", path, 0.0);
  e.cfo_hz = opt_number(j, "cfo_hz", path, 0.0);
  e.phase_noise_var = opt_number(j, "phase_noise_var", path, 0.0);
  if (auto it = j.find("phase0_rad"); it != j.end() && !it->is_null())
    e.phase0_rad = as_number(*it, join_path(path, "phase0_rad"));
  if (auto it = j.find("taps"); it != j.end() && !it->is_null()) {
    const std::string tp = join_path(path, "taps");
    if (!it->is_array()) throw ValidationError("schema error: field '" + tp + "' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& t = (*it)[i];
      const std::string ep = tp + "[" + std::to_string(i) + "]";
      if (!t.is_array() || t.size() != 3)
        throw ValidationError("schema error: '" + ep + "' must be [delay, re, im]");
      const long long delay = as_integer(t[0], ep + "[0]");
      if (delay < 0) throw ValidationError("schema error: '" + ep + "' delay must be non-negative");
      e.taps.push_back({static_cast<std::size_t>(delay), {as_number(t[1], ep + "[1]"), as_number(t[2], ep + "[2]")}});
    }
  }
  try {
    e.validate();
  } catch (const ValidationError& err) {
    throw ValidationError("validation error in '" + (path.empty() ? "<root>" : path) + "': " + err.what());
  }
  return e;
}

json detection_to_json(const Detection& d) {
  json j = {{"t_start_s", d.t_start_s},
            {"t_end_s", d.t_end_s},
            {"f_c_hz", d.f_c_hz},
            {"bandwidth_hz", d.bandwidth_hz},
            {"class", std::string(to_string(d.class_label))},
            {"conf", d.confidence}};
  if (d.refined) j["refined"] = true;
  if (!d.class_probs.empty()) j["class_probs"] = d.class_probs;
  return j;
}

Detection detection_from_json(const json& j, const std::string& path) {
  using namespace detail;
  Detection d;
  d.t_start_s = req_number(j, "t_start_s", path);
  d.t_end_s = req_number(j, "t_end_s", path);
  d.f_c_hz = req_number(j, "f_c_hz", path);
  d.bandwidth_hz = req_number(j, "bandwidth_hz", path);
  d.class_label = mod_class_from_string(opt_string(j, "class", path, "Unknown"));
  d.confidence = req_number(j, "conf", path);
  d.refined = opt_bool(j, "refined", path, false);
  if (auto it = j.find("class_probs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError("schema error: field '" + join_path(path, "class_probs") + "' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      d.class_probs.push_back(as_number((*it)[i], join_path(path, "class_probs") + "[" + std::to_string(i) + "]"));
  }
  try {
    d.validate();
  } catch (const ValidationError& err) {
    throw ValidationError("validation error in '" + (path.empty() ? "<root>" : path) + "': " + err.what());
  }
  return d;
}

std::vector<EmitterTruth> read_annotations(const std::filesystem::path& path) {
  json doc = detail::read_json_file(path);
  const json& list = detail::require_field(doc, "emitters", "");
  if (!list.is_array()) throw ValidationError("schema error: field 'emitters' must be an array");
  std::vector<EmitterTruth> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string p = "emitters[" + std::to_string(i) + "]";
    detail::reject_unknown_keys(list[i],
                                {"class", "f_c_hz", "bandwidth_hz", "t_start_s", "t_end_s", "snr_db", "cfo_hz",
                                 "phase_noise_var", "taps", "phase0_rad"},
                                p);
    out.push_back(emitter_from_json(list[i], p));
  }
  return out;
}

void write_annotations(std::span<const EmitterTruth> emitters, const std::filesystem::path& path) {
  json list = json::array();
  for (const auto& e : emitters) list.push_back(emitter_to_json(e));
  detail::write_json_file(json{{"emitters", std::move(list)}}, path);
}

// ---------------------------------------------------------------------------

namespace detail {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace detail

} // namespace zoomspec
