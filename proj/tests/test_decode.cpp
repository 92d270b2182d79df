#include "doctest.h"
#include "ahlp_checks.hpp"

#include "zoomspec/decode.hpp"
#include "zoomspec/errors.hpp"
#include "zoomspec/scenesim.hpp"

#include <random>

using namespace zoomspec;

namespace {

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += (v = e(rng));
  for (auto& v : p) v /= s;
  return p;
}

double weighted_sum(const std::vector<double>& p, const std::vector<double>& g) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) acc += static_cast<long double>(p[i]) * g[i];
  return static_cast<double>(acc);
}

GridDistribution one_hot(std::size_t i, std::size_t n) {
  std::vector<double> p(n, 0.0);
  p[i] = 1.0;
  return GridDistribution::on_uniform_grid(p);
}

// Segment wrapper around raw samples at D = 1.
PurifiedSegment raw_segment(std::vector<cf64> u, double fs) {
  PurifiedSegment s;
  s.n_seg = u.size();
  s.samples = std::move(u);
  s.sample_rate_hz = fs;
  s.out_rate_hz = fs;
  s.decim_factor = 1;
  s.f_lp_hz = fs / 4;
  return s;
}

}  // namespace

TEST_CASE("decode_time examples") {
  const auto t = decode_time(one_hot(2, 4), one_hot(1, 4), 1e-3);
  CHECK(t.t_start == doctest::Approx(2.0 / 3.0));
  CHECK(t.duration == doctest::Approx(1.0 / 3.0));
  CHECK(t.t_end == 0.999);

  const auto u = GridDistribution::on_uniform_grid(std::vector<double>(9, 1.0 / 9));
  const auto tu = decode_time(u, u);
  CHECK(tu.t_start == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(decode_bandwidth(u) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("decode_bandwidth one-hot") {
  CHECK(decode_bandwidth(one_hot(1, 5)) == 0.25);
}

TEST_CASE("argument checks") {
  auto bad = GridDistribution::on_uniform_grid({0.5, 0.6});
  CHECK_THROWS_AS(decode_bandwidth(bad), ValidationError);
  auto neg = GridDistribution::on_uniform_grid({1.5, -0.5});
  CHECK_THROWS_AS(decode_bandwidth(neg), ValidationError);
  const auto ok = one_hot(0, 4);
  CHECK_THROWS_AS(decode_time(ok, ok, 0.0), ValidationError);
  CHECK_THROWS_AS(decode_time(ok, ok, 2e-3), ValidationError);
  CHECK_THROWS_AS(decode_time(ok, one_hot(0, 5)), ValidationError);
  GridDistribution backwards{{0.5, 0.5}, {0.7, 0.2}};
  CHECK_THROWS_AS(backwards.validate(), ValidationError);
  GridDistribution outside{{0.5, 0.5}, {0.0, 1.2}};
  CHECK_THROWS_AS(outside.validate(), ValidationError);
}

TEST_CASE("random distributions against the weighted sum") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ug(0.0, 1.0);
  std::uniform_real_distribution<double> ue(1e-9, 1e-3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t L = 2 + rng() % 100;
    std::vector<double> grid(L);
    for (auto& g : grid) g = ug(rng);
    std::sort(grid.begin(), grid.end());
    const GridDistribution ps{random_simplex(L, rng), grid}, pd{random_simplex(L, rng), grid}, pb{random_simplex(L, rng), grid};
    const double eps = ue(rng);
    const auto t = decode_time(ps, pd, eps);
    const double ws = weighted_sum(ps.probs, grid), wd = weighted_sum(pd.probs, grid);
    CHECK(std::abs(t.t_start - ws) < 1e-12);
    CHECK(std::abs(t.duration - wd) < 1e-12);
    CHECK(std::abs(t.t_end - std::min(1.0 - eps, ws + wd)) < 1e-12);
    CHECK(t.t_end <= 1.0 - eps);
    CHECK(std::abs(decode_bandwidth(pb) - weighted_sum(pb.probs, grid)) < 1e-12);
  }
}

TEST_CASE("expectation is linear in the distribution") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ul(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = 64;
    const auto p = random_simplex(L, rng), q = random_simplex(L, rng);
    const double lam = ul(rng);
    std::vector<double> mix(L);
    for (std::size_t i = 0; i < L; ++i) mix[i] = lam * p[i] + (1 - lam) * q[i];
    const double a = decode_bandwidth(GridDistribution::on_uniform_grid(p));
    const double b = decode_bandwidth(GridDistribution::on_uniform_grid(q));
    CHECK(std::abs(decode_bandwidth(GridDistribution::on_uniform_grid(mix)) - (lam * a + (1 - lam) * b)) < 1e-12);
  }
}

TEST_CASE("point mass keeps the mean") {
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.999, 1.0}) {
    const auto p = GridDistribution::point_mass(x, 64);
    p.validate();
    CHECK(decode_bandwidth(p) == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK_THROWS_AS(GridDistribution::point_mass(0.5, 1), ValidationError);
}

TEST_CASE("denormalize anchors and round trip") {
  PurifiedSegment seg;
  seg.sample_rate_hz = 5e6;
  seg.decim_factor = 20;
  seg.out_rate_hz = 5e6 / 20;
  seg.n_start = 12500;
  seg.n_seg = 5000;
  seg.f_c_hz = -1.25e6;
  seg.source_conf = 0.7;
  seg.record_start_s = 0.0;

  RefinedDetection r{0.0, 0.5, 1.0, std::nullopt};
  const auto d = denormalize(r, seg);
  CHECK(d.t_start_s == doctest::Approx(12500 / 5e6));
  CHECK(d.t_end_s == doctest::Approx(12500 / 5e6 + 0.5 * 5000 / 5e6));
  CHECK(d.bandwidth_hz == doctest::Approx(seg.out_rate_hz));
  CHECK(d.f_c_hz == -1.25e6);
  CHECK(d.refined);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    seg.n_start = rng() % 1000000;
    seg.n_seg = 8 + rng() % 100000;
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const RefinedDetection x{a, b, u(rng), std::nullopt};
    const auto y = normalize(denormalize(x, seg), seg);
    CHECK(std::abs(y.t_start_norm - x.t_start_norm) < 1e-9);
    CHECK(std::abs(y.t_end_norm - x.t_end_norm) < 1e-9);
    CHECK(std::abs(y.bandwidth_norm - x.bandwidth_norm) < 1e-9);
  }

  seg.out_rate_hz = 1e6;
  CHECK_THROWS_AS(denormalize(r, seg), ValidationError);
}

TEST_CASE("class probabilities pass through") {
  PurifiedSegment seg = raw_segment(std::vector<cf64>(16, 1.0), 1e6);
  std::vector<double> cp(kNumModClasses, 0.0);
  cp[static_cast<std::size_t>(ModClass::LoRa)] = 1.0;
  const RefinedDetection r{0.1, 0.9, 0.2, cp};
  const auto d = denormalize(r, seg);
  CHECK(d.class_label == ModClass::LoRa);
  CHECK(d.class_probs == cp);
}

TEST_CASE("refine_stub") {
  const double cell = 1.0 / 63.0;
  SUBCASE("constant power spans the segment") {
    const auto r = refine_stub(raw_segment(std::vector<cf64>(4096, cf64(1.0, 1.0)), 1e6));
    CHECK(r.t_start_norm <= cell);
    CHECK(r.t_end_norm >= 1.0 - 1e-3 - cell);
    CHECK(r.t_end_norm <= 1.0 - 1e-3);
    r.validate();
  }
  SUBCASE("burst in the middle third") {
    auto u = ahlp_checks::noise_rec(6000, 1e6, 1e-4, 1).samples();
    std::vector<cf64> v(u.begin(), u.end());
    for (std::size_t i = 2000; i < 4000; ++i) v[i] += cf64(1.0, 0.0);
    const auto r = refine_stub(raw_segment(v, 1e6));
    CHECK(std::abs(r.t_start_norm - 1.0 / 3.0) <= 1.5 * cell);
    CHECK(std::abs(r.t_end_norm - 2.0 / 3.0) <= 1.5 * cell);
  }
  SUBCASE("bandwidth of a purified QPSK burst") {
    const double fs = 5e6, bw = 200e3, f_c = 600e3;
    const std::size_t n = 40000;
    EmitterTruth t;
    t.class_label = ModClass::QPSK;
    t.bandwidth_hz = bw;
    t.t_start_s = 0.0;
    t.t_end_s = static_cast<double>(n) / fs;
    Rng rng(4);
    const auto base = synth_emitter(default_waveform(ModClass::QPSK, bw), t, fs, n, rng);
    std::vector<cf32> x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = cf32(base[i] * std::polar(1.0, 2.0 * oracle::pi * f_c * static_cast<double>(i) / fs));
    const IqRecording rec(std::move(x), fs, 0.0);
    const Proposal prop{0.0, t.t_end_s - 1.0 / fs, f_c - bw / 2, f_c + bw / 2, BwTier::Mid, 0.6};
    const auto seg = ahlp_purify(rec, prop, AhlpParams{});
    const auto r = refine_stub(seg);
    CHECK(r.bandwidth_norm * seg.out_rate_hz == doctest::Approx(bw).epsilon(0.25));
  }
  SUBCASE("deterministic, and zero input rejected") {
    const auto rec = ahlp_checks::noise_rec(512, 1e6, 1.0, 2);
    const auto seg = raw_segment(std::vector<cf64>(rec.samples().begin(), rec.samples().end()), 1e6);
    const auto a = refine_stub(seg), b = refine_stub(seg);
    CHECK(a.t_start_norm == b.t_start_norm);
    CHECK(a.t_end_norm == b.t_end_norm);
    CHECK(a.bandwidth_norm == b.bandwidth_norm);
    CHECK_THROWS_WITH_AS(refine_stub(raw_segment(std::vector<cf64>(64), 1e6)), doctest::Contains("all-zero"),
                         ValidationError);
    CHECK_THROWS_AS(refine_stub(raw_segment(std::vector<cf64>(4, 1.0), 1e6)), ValidationError);
  }
}
