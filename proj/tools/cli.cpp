#include "cli.hpp"

#include "CLI11.hpp"
#include "json.hpp"
#include "zoomspec/errors.hpp"
#include "zoomspec/evalkit.hpp"
#include "zoomspec/pipeline.hpp"
#include "zoomspec/scenesim.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace zoomspec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string input;
  std::string input2;
  std::string proposals;
  double sample_rate_hz = 0.0;
  bool linear = false;
  bool warped = false;
  std::string boxes;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

void write_echo(const json& resolved, const std::string& prefix) {
  write_text(prefix + ".config.json", resolved.dump(2) + "\n");
}

void require_out(const Options& o) {
  if (o.out.empty()) throw ValidationError("--out is required");
}

PipelineConfig load_pipeline(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : read_pipeline_config(o.config);
  if (o.seed) c.seed = *o.seed;
  return c;
}

IqRecording load_iq(const Options& o) {
  if (o.input.empty()) throw ValidationError("an input .iq file is required");
  if (!fs::exists(sidecar_path(o.input)) && o.sample_rate_hz > 0.0) return read_iq(o.input, o.sample_rate_hz);
  return read_iq(o.input);
}

std::string strip_suffix(std::string s, std::string_view suffix) {
  if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    s.resize(s.size() - suffix.size());
  return s;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  require_out(o);
  SceneSpec spec = o.config.empty() ? fig2_scene_spec(5e6, 20.0, o.seed.value_or(0)) : read_scene_spec(o.config, o.seed);
  if (o.config.empty() && o.seed) spec.rng_seed = *o.seed;
  const Scene scene = synth_scene(spec);
  write_iq(scene.recording, o.out + ".iq");
  write_annotations(scene.truths, o.out + ".ann.json");
  write_echo(scene_spec_to_json(spec), o.out);
  out << "wrote " << o.out << ".iq (" << scene.recording.size() << " samples, " << scene.truths.size()
      << " emitters)\n";
  return kOk;
}

int cmd_spectrogram(const Options& o, std::ostream& out) {
  require_out(o);
  if (o.linear && o.warped) throw ValidationError("--linear and --warped are exclusive");
  const PipelineConfig c = load_pipeline(o);
  const IqRecording r = load_iq(o);
  const Representation rep = o.linear ? linear_representation(r, c) : warped_representation(r, c);
  std::vector<TfBox> boxes;
  if (!o.boxes.empty()) {
    if (o.boxes.ends_with(".det.json")) {
      for (const auto& d : read_detections(o.boxes)) boxes.push_back(d.box());
    } else if (o.boxes.ends_with(".prop.json")) {
      for (const auto& p : read_proposals(o.boxes)) boxes.push_back(p.box());
    } else {
      for (const auto& e : read_annotations(o.boxes)) boxes.push_back(e.box());
    }
  }
  const std::string path = o.out.ends_with(".pgm") ? o.out : o.out + ".pgm";
  render_spectrogram(rep.spectrogram, path, boxes);
  json echo = config_to_json(c);
  echo["representation"] = o.linear ? "linear" : "warped";
  write_echo(echo, strip_suffix(path, ".pgm"));
  out << "wrote " << path << " (" << rep.spectrogram.n_bins << " x " << rep.spectrogram.n_frames << ")\n";
  return kOk;
}

int cmd_propose(const Options& o, std::ostream& out) {
  require_out(o);
  const PipelineConfig c = load_pipeline(o);
  const IqRecording r = load_iq(o);
  const Representation rep = warped_representation(r, c);
  auto props = nms(propose(rep.spectrogram, rep.grid, c.proposer), c.proposer.nms_iou, rep.grid);
  write_proposals(props, o.out + ".prop.json");
  write_echo(config_to_json(c), o.out);
  out << "wrote " << o.out << ".prop.json (" << props.size() << " proposals)\n";
  return kOk;
}

int cmd_purify(const Options& o, std::ostream& out, std::ostream& err) {
  require_out(o);
  const PipelineConfig c = load_pipeline(o);
  const IqRecording r = load_iq(o);
  std::vector<Proposal> props;
  if (!o.proposals.empty()) {
    props = read_proposals(o.proposals);
  } else {
    const Representation rep = warped_representation(r, c);
    props = nms(propose(rep.spectrogram, rep.grid, c.proposer), c.proposer.nms_iou, rep.grid);
  }
  const auto items = ahlp_purify_batch(r, props, c.ahlp, c.threads);
  std::size_t written = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].ok()) {
      err << "warning: " << items[i].error << "\n";
      continue;
    }
    const auto& seg = *items[i].segment;
    char name[32];
    std::snprintf(name, sizeof name, ".seg%03zu.iq", i);
    write_iq(seg.to_recording(), o.out + name, seg.meta());
    ++written;
  }
  write_echo(config_to_json(c), o.out);
  out << "wrote " << written << " purified segments\n";
  return kOk;
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream& err) {
  require_out(o);
  const PipelineConfig c = load_pipeline(o);
  const IqRecording r = load_iq(o);
  std::optional<std::vector<Proposal>> injected;
  if (!o.proposals.empty()) injected = read_proposals(o.proposals);
  const DetectResult res = run_detect(r, c, injected);
  for (const auto& e : res.errors) err << "warning: " << e << "\n";
  write_proposals(res.proposals, o.out + ".prop.json");
  write_detections(res.detections, o.out + ".det.json");
  json echo = config_to_json(c);
  if (injected) echo["proposals_file"] = o.proposals;
  write_echo(echo, o.out);
  out << "wrote " << o.out << ".det.json (" << res.detections.size() << " detections)\n";
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  require_out(o);
  if (o.input.empty() || o.input2.empty()) throw ValidationError("evaluate needs a detections file and an annotation file");
  const auto dets = read_detections(o.input);
  const auto truths = read_annotations(o.input2);
  const EvalReport rep = evaluate(dets, truths);
  const std::string path = o.out.ends_with(".json") ? o.out : o.out + ".report.json";
  write_report(rep, path);
  write_echo(json{{"detections", o.input}, {"annotations", o.input2}}, strip_suffix(strip_suffix(path, ".json"), ".report"));
  out << std::fixed << std::setprecision(6) << "map_50_95 " << rep.map_50_95 << "\n"
      << "precision_50 " << rep.precision_50 << "\n"
      << "recall_50 " << rep.recall_50 << "\n";
  return kOk;
}

int cmd_griddump(const Options& o, std::ostream& out) {
  require_out(o);
  const PipelineConfig c = load_pipeline(o);
  const double fs = o.sample_rate_hz > 0.0 ? o.sample_rate_hz : 5e6;
  const WarpGrid g = make_grid(c.warp, fs);
  std::string text;
  char line[64];
  for (double f : g.points_hz) {
    std::snprintf(line, sizeof line, "%.17g\n", f);
    text += line;
  }
  write_text(o.out, text);
  json echo = config_to_json(c);
  echo["sample_rate_hz"] = fs;
  write_echo(echo, o.out);
  out << "wrote " << g.size() << " grid points to " << o.out << "\n";
  return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wideband spectrum sensing toolkit"};
  app.require_subcommand(1);
  // Subcommands inherit this, so global flags may follow the subcommand.
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Config file (scene config for simulate, pipeline config otherwise)");
  app.add_option("--seed", o.seed, "Seed override");
  app.add_option("--out", o.out, "Output prefix or path");

  auto* sim = app.add_subcommand("simulate", "Synthesize a scene: <out>.iq, .meta.json, .ann.json");
  auto* spec = app.add_subcommand("spectrogram", "Render a PGM spectrogram");
  spec->add_option("input", o.input, "Input .iq")->required();
  auto* lin = spec->add_flag("--linear", o.linear, "Linear STFT axis");
  auto* war = spec->add_flag("--warped", o.warped, "Warped axis (default)");
  lin->excludes(war);
  spec->add_option("--boxes", o.boxes, "Overlay boxes from .ann.json, .prop.json or .det.json");
  auto* prop = app.add_subcommand("propose", "Energy proposals: <out>.prop.json");
  prop->add_option("input", o.input, "Input .iq")->required();
  auto* pur = app.add_subcommand("purify", "Purified segments: <out>.segNNN.iq");
  pur->add_option("input", o.input, "Input .iq")->required();
  pur->add_option("--proposals", o.proposals, "Proposals file to use instead of the internal proposer");
  auto* det = app.add_subcommand("detect", "Full pipeline: <out>.prop.json and <out>.det.json");
  det->add_option("input", o.input, "Input .iq")->required();
  det->add_option("--proposals", o.proposals, "Proposals file to use instead of the internal proposer");
  auto* ev = app.add_subcommand("evaluate", "Score detections against annotations");
  ev->add_option("detections", o.input, "Detections .det.json")->required();
  ev->add_option("annotations", o.input2, "Annotations .ann.json")->required();
  auto* gd = app.add_subcommand("griddump", "Write warped grid frequencies, one per line");
  for (auto* sub : {spec, prop, pur, det, gd})
    sub->add_option("--sample-rate", o.sample_rate_hz, "Sample rate when no sidecar is present");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*sim) return cmd_simulate(o, out);
    if (*spec) return cmd_spectrogram(o, out);
    if (*prop) return cmd_propose(o, out);
    if (*pur) return cmd_purify(o, out, err);
    if (*det) return cmd_detect(o, out, err);
    if (*ev) return cmd_evaluate(o, out);
    if (*gd) return cmd_griddump(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kInvariant;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInvariant;
  }
  return kValidation;
}

} // namespace zoomspec::cli
