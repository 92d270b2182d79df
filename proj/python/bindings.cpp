#include "zoomspec/ahlp.hpp"
#include "zoomspec/decode.hpp"
#include "zoomspec/errors.hpp"
#include "zoomspec/evalkit.hpp"
#include "zoomspec/iqcore.hpp"
#include "zoomspec/pipeline.hpp"
#include "zoomspec/proposer.hpp"
#include "zoomspec/scenesim.hpp"
#include "zoomspec/specfront.hpp"

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace zoomspec;

namespace {

using CArray = py::array_t<std::complex<float>, py::array::c_style | py::array::forcecast>;

IqRecording to_recording(const CArray& samples, double fs, double start_time_s) {
  if (samples.ndim() != 1) throw ValidationError("samples must be one-dimensional");
  const auto* p = samples.data();
  std::vector<cf32> v(p, p + samples.size());
  return IqRecording(std::move(v), fs, start_time_s);
}

py::array_t<std::complex<float>> samples_of(const IqRecording& r) {
  py::array_t<std::complex<float>> a(static_cast<py::ssize_t>(r.size()));
  std::copy(r.samples().begin(), r.samples().end(), a.mutable_data());
  return a;
}

py::array_t<std::complex<double>> to_numpy(const std::vector<cf64>& v) {
  py::array_t<std::complex<double>> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> to_numpy(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::dict spectrogram_dict(const Spectrogram& s) {
  py::array_t<double> values({static_cast<py::ssize_t>(s.n_frames), static_cast<py::ssize_t>(s.n_bins)});
  std::copy(s.values.begin(), s.values.end(), values.mutable_data());
  py::dict d;
  d["values"] = values;
  d["frame_times_s"] = to_numpy(s.frame_times_s);
  d["freq_axis_hz"] = to_numpy(s.freq_axis_hz);
  d["warped"] = s.kind == AxisKind::Warped;
  return d;
}

PipelineConfig config_from(const py::object& cfg) {
  if (cfg.is_none()) return PipelineConfig{};
  const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
  return config_from_json(nlohmann::json::parse(text));
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wideband spectrum sensing core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::enum_<ModClass>(m, "ModClass")
      .value("Tone", ModClass::Tone)
      .value("NBFM", ModClass::NBFM)
      .value("LoRa", ModClass::LoRa)
      .value("Zigbee", ModClass::Zigbee)
      .value("QPSK", ModClass::QPSK)
      .value("QAM16", ModClass::QAM16)
      .value("AM", ModClass::AM)
      .value("Unknown", ModClass::Unknown);

  py::enum_<BwTier>(m, "BwTier").value("Narrow", BwTier::Narrow).value("Mid", BwTier::Mid).value("Wide", BwTier::Wide);

  py::class_<EmitterTruth>(m, "EmitterTruth")
      .def(py::init<>())
      .def_readwrite("class_label", &EmitterTruth::class_label)
      .def_readwrite("f_c_hz", &EmitterTruth::f_c_hz)
      .def_readwrite("bandwidth_hz", &EmitterTruth::bandwidth_hz)
      .def_readwrite("t_start_s", &EmitterTruth::t_start_s)
      .def_readwrite("t_end_s", &EmitterTruth::t_end_s)
      .def_readwrite("snr_db", &EmitterTruth::snr_db)
      .def_readwrite("cfo_hz", &EmitterTruth::cfo_hz)
      .def_readwrite("phase_noise_var", &EmitterTruth::phase_noise_var)
      .def("__repr__", [](const EmitterTruth& e) {
        return "<EmitterTruth " + std::string(to_string(e.class_label)) + " f_c=" + std::to_string(e.f_c_hz) + ">";
      });

  py::class_<Detection>(m, "Detection")
      .def(py::init<>())
      .def_readwrite("t_start_s", &Detection::t_start_s)
      .def_readwrite("t_end_s", &Detection::t_end_s)
      .def_readwrite("f_c_hz", &Detection::f_c_hz)
      .def_readwrite("bandwidth_hz", &Detection::bandwidth_hz)
      .def_readwrite("class_label", &Detection::class_label)
      .def_readwrite("confidence", &Detection::confidence)
      .def_readwrite("refined", &Detection::refined);

  py::class_<Proposal>(m, "Proposal")
      .def(py::init<>())
      .def(py::init([](double t0, double t1, double f0, double f1, double conf) {
             Proposal p{t0, t1, f0, f1, BwTier::Narrow, conf};
             p.tier = bw_tier_for(p.bandwidth_hz(), ProposerParams{});
             p.validate();
             return p;
           }),
           py::arg("t_start_s"), py::arg("t_end_s"), py::arg("f_start_hz"), py::arg("f_end_hz"), py::arg("confidence"))
      .def_readwrite("t_start_s", &Proposal::t_start_s)
      .def_readwrite("t_end_s", &Proposal::t_end_s)
      .def_readwrite("f_start_hz", &Proposal::f_start_hz)
      .def_readwrite("f_end_hz", &Proposal::f_end_hz)
      .def_readwrite("tier", &Proposal::tier)
      .def_readwrite("confidence", &Proposal::confidence)
      .def_property_readonly("f_c_hz", &Proposal::f_c_hz)
      .def_property_readonly("bandwidth_hz", &Proposal::bandwidth_hz);

  m.def(
      "fig2_scene",
      [](double fs, double snr_db, std::uint64_t seed) {
        Scene s = fig2_scene(fs, snr_db, seed);
        return py::make_tuple(samples_of(s.recording), s.recording.sample_rate_hz(), s.truths);
      },
      py::arg("sample_rate_hz") = 5e6, py::arg("snr_db") = 20.0, py::arg("seed") = 0,
      "Three-emitter scene. Returns (samples, sample_rate_hz, truths).");

  m.def(
      "synth_scene",
      [](const py::object& spec, std::optional<std::uint64_t> seed) {
        const std::string text = py::module_::import("json").attr("dumps")(spec).cast<std::string>();
        Scene s = synth_scene(scene_spec_from_json(nlohmann::json::parse(text), seed));
        return py::make_tuple(samples_of(s.recording), s.recording.sample_rate_hz(), s.truths);
      },
      py::arg("spec"), py::arg("seed") = py::none(), "Scene from a config dict (same schema as the CLI).");

  m.def(
      "warp_grid",
      [](double f_min_hz, double b_obs_hz, std::size_t n_sub, std::size_t m_sub, double alpha1, double alpha2,
         const std::string& orientation) {
        return to_numpy(
            build_warp_grid(f_min_hz, b_obs_hz, n_sub, m_sub, alpha1, alpha2, orientation_from_string(orientation)).points_hz);
      },
      py::arg("f_min_hz"), py::arg("b_obs_hz"), py::arg("n_sub"), py::arg("m_sub") = 128, py::arg("alpha1") = 1.0,
      py::arg("alpha2") = 4.0, py::arg("orientation") = "center_dense");

  m.def(
      "spectrogram",
      [](const CArray& samples, double fs, bool warped, const py::object& cfg) {
        const auto c = config_from(cfg);
        const auto r = to_recording(samples, fs, 0.0);
        return spectrogram_dict((warped ? warped_representation(r, c) : linear_representation(r, c)).spectrogram);
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("warped") = true, py::arg("config") = py::none());

  m.def(
      "propose",
      [](const CArray& samples, double fs, const py::object& cfg) {
        const auto c = config_from(cfg);
        const auto rep = warped_representation(to_recording(samples, fs, 0.0), c);
        return nms(propose(rep.spectrogram, rep.grid, c.proposer), c.proposer.nms_iou, rep.grid);
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("config") = py::none(),
      "Energy proposals on the warped spectrogram, after NMS.");

  m.def("tf_iou", [](const Proposal& a, const Proposal& b) { return tf_iou(a.box(), b.box()); });

  m.def("segment_indices", [](double t0, double t1, double fs) {
    const auto s = segment_indices(t0, t1, fs);
    return py::make_tuple(s.n_start, s.n_end, s.n_seg);
  });
  m.def("cutoff_frequency", &cutoff_frequency, py::arg("bandwidth_hz"), py::arg("conf"), py::arg("kappa") = 0.2);
  m.def(
      "design_lowpass",
      [](double f_lp, double fs, double eta, std::size_t max_taps) {
        AhlpParams p;
        p.eta = eta;
        p.max_taps = max_taps;
        return to_numpy(design_lowpass(f_lp, fs, p));
      },
      py::arg("f_lp_hz"), py::arg("sample_rate_hz"), py::arg("eta") = 0.1, py::arg("max_taps") = 8191);
  m.def("safe_decim_factor", &safe_decim_factor);

  m.def(
      "purify",
      [](const CArray& samples, double fs, const Proposal& prop, double kappa, double eta) {
        AhlpParams p;
        p.kappa = kappa;
        p.eta = eta;
        const auto seg = ahlp_purify(to_recording(samples, fs, 0.0), prop, p);
        py::dict d;
        d["samples"] = to_numpy(seg.samples);
        d["decim_factor"] = seg.decim_factor;
        d["out_rate_hz"] = seg.out_rate_hz;
        d["f_c_hz"] = seg.f_c_hz;
        d["f_lp_hz"] = seg.f_lp_hz;
        d["n_start"] = seg.n_start;
        d["n_seg"] = seg.n_seg;
        d["band_clipped"] = seg.band_clipped;
        return d;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("proposal"), py::arg("kappa") = 0.2, py::arg("eta") = 0.1);

  m.def(
      "decode_time",
      [](std::vector<double> p_start, std::vector<double> p_dur, double eps) {
        const auto t = decode_time(GridDistribution::on_uniform_grid(std::move(p_start)),
                                   GridDistribution::on_uniform_grid(std::move(p_dur)), eps);
        return py::make_tuple(t.t_start, t.duration, t.t_end);
      },
      py::arg("p_start"), py::arg("p_dur"), py::arg("eps_clamp") = kDefaultEpsClamp);
  m.def("decode_bandwidth",
        [](std::vector<double> p) { return decode_bandwidth(GridDistribution::on_uniform_grid(std::move(p))); });

  m.def(
      "detect",
      [](const CArray& samples, double fs, const py::object& cfg) {
        const auto c = config_from(cfg);
        const auto r = to_recording(samples, fs, 0.0);
        py::gil_scoped_release release;
        return run_detect(r, c).detections;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("config") = py::none(), "Full pipeline.");

  m.def(
      "evaluate",
      [](const std::vector<Detection>& dets, const std::vector<EmitterTruth>& truths) {
        return json_to_py(report_to_json(evaluate(dets, truths)));
      },
      py::arg("detections"), py::arg("truths"));

  m.def("default_config", [] { return json_to_py(config_to_json(PipelineConfig{})); });
}
