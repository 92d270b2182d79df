#include "doctest.h"
#include "oracles.hpp"

#include "cli.hpp"
#include "json.hpp"
#include "zoomspec/evalkit.hpp"
#include "zoomspec/iqcore.hpp"
#include "zoomspec/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace zoomspec;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run zs(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = zoomspec::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct Pgm {
  std::size_t w = 0, h = 0;
  std::vector<unsigned char> px;
};

Pgm read_pgm(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::string magic;
  int maxv = 0;
  Pgm g;
  f >> magic >> g.w >> g.h >> maxv;
  f.get();
  g.px.resize(g.w * g.h);
  f.read(reinterpret_cast<char*>(g.px.data()), static_cast<std::streamsize>(g.px.size()));
  return g;
}

// Rows whose mean gray level sits above half way between the median row and
// the brightest row.
int bright_rows(const Pgm& g) {
  std::vector<double> rows(g.h, 0.0);
  for (std::size_t r = 0; r < g.h; ++r) {
    for (std::size_t c = 0; c < g.w; ++c) rows[r] += g.px[r * g.w + c];
    rows[r] /= static_cast<double>(g.w);
  }
  auto sorted = rows;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2], top = sorted.back();
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [&](double v) { return v > 0.5 * (med + top); }));
}

const char* kToneScene = R"({
  "sample_rate_hz": 5e6, "duration_s": 0.02, "rng_seed": 4,
  "emitters": [{"class": "Tone", "f_c_hz": 1.007e6, "bandwidth_hz": 2e4, "t_start_s": 0.0, "t_end_s": 0.02, "snr_db": 25}]
})";

}  // namespace

TEST_CASE("simulate") {
  const auto dir = oracle::scratch_dir("cli_sim");
  put(dir / "fig2.json", R"({"preset": "fig2", "rng_seed": 3})");
  const auto a = zs({"simulate", "--config", (dir / "fig2.json").string(), "--out", (dir / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(load(dir / "a.ann.json").at("emitters").size() == 3);
  CHECK(fs::exists(dir / "a.meta.json"));
  CHECK(fs::exists(dir / "a.config.json"));
  CHECK(read_iq(dir / "a.iq").sample_rate_hz() == 5e6);

  zs({"simulate", "--config", (dir / "fig2.json").string(), "--out", (dir / "b").string()});
  CHECK(slurp(dir / "a.iq") == slurp(dir / "b.iq"));
  CHECK(slurp(dir / "a.ann.json") == slurp(dir / "b.ann.json"));

  zs({"simulate", "--config", (dir / "fig2.json").string(), "--seed", "9", "--out", (dir / "c").string()});
  CHECK(slurp(dir / "a.iq") != slurp(dir / "c.iq"));
  CHECK(load(dir / "c.config.json").at("rng_seed") == 9);

  put(dir / "empty.json", R"({"sample_rate_hz": 1e6, "duration_s": 0.005})");
  REQUIRE(zs({"simulate", "--config", (dir / "empty.json").string(), "--out", (dir / "e").string()}).code == 0);
  CHECK(load(dir / "e.ann.json").at("emitters").empty());
}

TEST_CASE("exit codes") {
  const auto dir = oracle::scratch_dir("cli_codes");
  put(dir / "bad.json", R"({"sample_rate_hz": 1e6, "duration_s": 0.005, "emitters": [{"class": "Tone"}]})");
  const auto v = zs({"simulate", "--config", (dir / "bad.json").string(), "--out", (dir / "x").string()});
  CHECK(v.code == 1);
  CHECK(v.err.find("emitters[0]") != std::string::npos);
  CHECK(zs({"simulate"}).code == 1);
  CHECK(zs({}).code == 1);
  CHECK(zs({"frobnicate"}).code == 1);
  const auto io = zs({"propose", (dir / "nope.iq").string(), "--out", (dir / "p").string()});
  CHECK(io.code == 2);
  put(dir / "odd.iq", std::string(7, '\0'));
  CHECK(zs({"propose", (dir / "odd.iq").string(), "--sample-rate", "1e6", "--out", (dir / "p").string()}).code == 1);
  CHECK(zs({"simulate", "--config", (dir / "absent.json").string(), "--out", (dir / "x").string()}).code == 2);
  CHECK(zs({"--help"}).code == 0);
}

TEST_CASE("spectrogram") {
  const auto dir = oracle::scratch_dir("cli_spec");
  put(dir / "tone.json", kToneScene);
  REQUIRE(zs({"simulate", "--config", (dir / "tone.json").string(), "--out", (dir / "t").string()}).code == 0);
  const std::string iq = (dir / "t.iq").string();
  REQUIRE(zs({"spectrogram", iq, "--warped", "--out", (dir / "w.pgm").string()}).code == 0);
  REQUIRE(zs({"spectrogram", iq, "--linear", "--out", (dir / "l.pgm").string()}).code == 0);
  REQUIRE(zs({"spectrogram", iq, "--out", (dir / "w2").string()}).code == 0);
  CHECK(slurp(dir / "w.pgm") == slurp(dir / "w2.pgm"));
  CHECK(load(dir / "l.config.json").at("representation") == "linear");
  const auto w = read_pgm(dir / "w.pgm"), l = read_pgm(dir / "l.pgm");
  CHECK(w.h == 5 * 128);
  CHECK(l.h == 1024);
  CHECK(bright_rows(w) > bright_rows(l));
  CHECK(zs({"spectrogram", iq, "--warped", "--linear", "--out", (dir / "z").string()}).code == 1);
  REQUIRE(zs({"spectrogram", iq, "--boxes", (dir / "t.ann.json").string(), "--out", (dir / "b").string()}).code == 0);
  CHECK(slurp(dir / "b.pgm") != slurp(dir / "w.pgm"));
}

TEST_CASE("propose, purify, detect, evaluate") {
  const auto dir = oracle::scratch_dir("cli_chain");
  put(dir / "fig2.json", R"({"preset": "fig2", "rng_seed": 1})");
  REQUIRE(zs({"simulate", "--config", (dir / "fig2.json").string(), "--out", (dir / "s").string()}).code == 0);
  const std::string iq = (dir / "s.iq").string();

  const auto p = zs({"propose", iq, "--out", (dir / "p").string()});
  REQUIRE(p.code == 0);
  const auto props = read_proposals(dir / "p.prop.json");
  CHECK(props.size() == 3);

  REQUIRE(zs({"purify", iq, "--proposals", (dir / "p.prop.json").string(), "--out", (dir / "u").string()}).code == 0);
  for (int i = 0; i < 3; ++i) {
    const fs::path seg = dir / ("u.seg00" + std::to_string(i) + ".iq");
    REQUIRE(fs::exists(seg));
    const json meta = load(sidecar_path(seg));
    CHECK(meta.contains("decim_factor"));
    CHECK(meta.contains("f_lp_hz"));
  }

  const auto d = zs({"detect", iq, "--out", (dir / "d").string()});
  REQUIRE(d.code == 0);
  const auto dets = read_detections(dir / "d.det.json");
  CHECK(dets.size() == 3);
  CHECK(fs::exists(dir / "d.prop.json"));
  CHECK(load(dir / "d.config.json").contains("proposer"));

  const auto e = zs({"evaluate", (dir / "d.det.json").string(), (dir / "s.ann.json").string(), "--out",
                      (dir / "r.report.json").string()});
  REQUIRE(e.code == 0);
  CHECK(e.out.rfind("map_50_95 ", 0) == 0);
  CHECK(e.out.find("\nprecision_50 ") != std::string::npos);
  CHECK(e.out.find("\nrecall_50 ") != std::string::npos);
  const auto lib = report_to_json(evaluate(dets, read_annotations(dir / "s.ann.json")));
  CHECK(load(dir / "r.report.json") == lib);
}

TEST_CASE("evaluate edge cases") {
  const auto dir = oracle::scratch_dir("cli_eval");
  put(dir / "fig2.json", R"({"preset": "fig2"})");
  REQUIRE(zs({"simulate", "--config", (dir / "fig2.json").string(), "--out", (dir / "s").string()}).code == 0);
  const auto truths = read_annotations(dir / "s.ann.json");
  std::vector<Detection> same;
  for (const auto& t : truths) {
    Detection x;
    x.t_start_s = t.t_start_s;
    x.t_end_s = t.t_end_s;
    x.f_c_hz = t.f_c_hz;
    x.bandwidth_hz = t.bandwidth_hz;
    x.class_label = t.class_label;
    x.confidence = 0.9;
    same.push_back(x);
  }
  write_detections(same, dir / "same.det.json");
  write_detections({}, dir / "none.det.json");
  auto r = zs({"evaluate", (dir / "same.det.json").string(), (dir / "s.ann.json").string(), "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("map_50_95 1.000000") != std::string::npos);
  r = zs({"evaluate", (dir / "none.det.json").string(), (dir / "s.ann.json").string(), "--out", (dir / "b").string()});
  CHECK(r.out.find("recall_50 0.000000") != std::string::npos);
  CHECK(fs::exists(dir / "b.report.json"));
  put(dir / "junk.det.json", R"({"detections": [{"t_start_s": 0}]})");
  CHECK(zs({"evaluate", (dir / "junk.det.json").string(), (dir / "s.ann.json").string(), "--out", (dir / "c").string()})
            .code == 1);
}

TEST_CASE("detect with injected proposals ignores proposer settings") {
  const auto dir = oracle::scratch_dir("cli_inject");
  put(dir / "fig2.json", R"({"preset": "fig2", "rng_seed": 6})");
  REQUIRE(zs({"simulate", "--config", (dir / "fig2.json").string(), "--out", (dir / "s").string()}).code == 0);
  const std::string iq = (dir / "s.iq").string();
  REQUIRE(zs({"propose", iq, "--out", (dir / "p").string()}).code == 0);
  PipelineConfig odd;
  odd.proposer.threshold_db = 25.0;
  odd.proposer.min_area_bins = 500;
  put(dir / "odd.json", config_to_json(odd).dump());
  REQUIRE(zs({"detect", iq, "--proposals", (dir / "p.prop.json").string(), "--out", (dir / "a").string()}).code == 0);
  REQUIRE(zs({"detect", iq, "--config", (dir / "odd.json").string(), "--proposals", (dir / "p.prop.json").string(),
               "--out", (dir / "b").string()})
              .code == 0);
  CHECK(slurp(dir / "a.det.json") == slurp(dir / "b.det.json"));
  CHECK(load(dir / "b.config.json").at("proposals_file") == (dir / "p.prop.json").string());
}

TEST_CASE("griddump") {
  const auto dir = oracle::scratch_dir("cli_grid");
  REQUIRE(zs({"griddump", "--out", (dir / "g.txt").string()}).code == 0);
  std::ifstream f(dir / "g.txt");
  std::vector<double> v;
  std::string line;
  while (std::getline(f, line)) v.push_back(std::stod(line));
  REQUIRE(v.size() == 5 * 128);
  CHECK(v.front() == -2.5e6);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] >= v[i - 1]);
  const auto g = make_grid(WarpParams{}, 5e6);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == g.points_hz[i]);

  REQUIRE(zs({"griddump", "--sample-rate", "2e6", "--out", (dir / "h.txt").string()}).code == 0);
  CHECK(load(dir / "h.txt.config.json").at("sample_rate_hz") == 2e6);
}
