#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "babblekit/error.hpp"
#include "babblekit/vtsynth.hpp"
#include "doctest.h"

using namespace babblekit;
using namespace babblekit::vtsynth;

namespace {

const artic::ArticulatorySpace& space() {
  static const auto s = artic::ArticulatorySpace::load(BABBLEKIT_DATA_DIR "/space.json");
  return s;
}

const TractModel& model() {
  static const TractModel m(space(), TractConfig::defaults());
  return m;
}

artic::Target with(std::initializer_list<std::pair<const char*, double>> values) {
  auto t = space().neutral_target();
  for (const auto& [name, v] : values) t.values[space().index_of(name)] = v;
  space().apply_rules(t);
  return t;
}

// Trajectory holding one frame for `seconds`.
tam::Trajectory constant(const artic::Target& t, double seconds) {
  tam::Trajectory traj;
  traj.columns = space().size();
  const auto frames = static_cast<std::size_t>(seconds * traj.sample_rate);
  for (std::size_t k = 0; k < frames; ++k) traj.data.insert(traj.data.end(), t.values.begin(), t.values.end());
  return traj;
}

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Magnitude of the DFT of x at frequency f.
double dft_magnitude(const std::vector<double>& x, double f, double rate) {
  std::complex<double> acc = 0.0;
  const double w = -2.0 * std::numbers::pi * f / rate;
  for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, w * static_cast<double>(n));
  return std::abs(acc);
}

}  // namespace

TEST_SUITE("vtsynth") {

TEST_CASE("neutral articulation gives a uniform tube of baseline area") {
  const auto af = model().area_function(space().neutral_target().values);
  REQUIRE(!af.sections.empty());
  for (double a : af.sections) CHECK(a == doctest::Approx(3.0).epsilon(1e-6));
  const auto f = model().features(af);
  CHECK(f.min_area == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(f.lip_area == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("closed lips zero the labial sections") {
  const auto af = model().area_function(with({{"LD", -2.0}}).values);
  CHECK(af.sections.back() == 0.0);
  const auto f = model().features(af);
  CHECK(f.min_area == 0.0);
  CHECK(f.lip_area == 0.0);
  CHECK(f.min_area_region == Region::Labial);
}

TEST_CASE("half-closure tongue tip follows the Gaussian profile formula") {
  // Degree = gain (v - neutral) / (closed - neutral) = 2 (v + 0.25) / 2.75 = 0.5.
  const auto t = with({{"TTY", -0.25 + 0.25 * 2.75}});
  const auto af = model().area_function(t.values);
  const auto n = af.sections.size();
  double expected = 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double z = (x - 0.85) / 0.025;
    const double a = 3.0 - 1.5 * std::exp(-0.5 * z * z);
    CHECK(af.sections[i] == doctest::Approx(a).epsilon(1e-12));
    expected = std::min(expected, a);
  }
  const auto f = model().features(af);
  CHECK(f.min_area == doctest::Approx(expected).epsilon(1e-12));
  CHECK(f.min_area_region == Region::Alveolar);
  // On a fine grid the minimum approaches A0 - 0.5 depth_max.
  const auto fine = model().area_function(t.values, 2000);
  CHECK(*std::min_element(fine.sections.begin(), fine.sections.end()) == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("constriction regions follow the partition") {
  CHECK(model().features(with({{"TCY", 1.0}}).values).min_area_region == Region::Velar);
  CHECK(model().features(with({{"TBY", 5.0}}).values).min_area_region == Region::Palatal);
  CHECK(model().features(with({{"TCX", -3.0}}).values).min_area_region == Region::Pharyngeal);
  AreaFunction af{std::vector<double>(40, 3.0), 0.4};
  af.sections[20] = 0.0;  // normalised position 0.51: velar
  CHECK(model().features(af).min_area_region == Region::Velar);
  af.sections[34] = 0.0;  // 0.86: alveolar, in front of the velar closure
  const auto f = model().features(af);
  CHECK(f.min_area_region == Region::Alveolar);
  CHECK(f.min_area_index == 34);
}

TEST_CASE("lip protrusion lengthens the tract") {
  CHECK(model().tract_length(space().neutral_target().values) == doctest::Approx(17.5));
  CHECK(model().tract_length(with({{"LP", 1.0}}).values) == doctest::Approx(18.5));
  CHECK(model().section_count(with({{"LP", 1.0}}).values) > model().section_count(space().neutral_target().values));
}

TEST_CASE("frames outside the space are rejected") {
  auto t = space().neutral_target();
  t.values[space().index_of("LD")] = 9.0;
  CHECK_THROWS_AS(model().area_function(t.values), RangeError);
}

TEST_CASE("uniform tube resonates at the odd quarter-wavelength frequencies") {
  const double rate = 44100.0;
  const std::size_t n = 44;  // 44 x 0.3968 cm = 17.46 cm
  const std::vector<std::vector<double>> areas{std::vector<double>(n, 3.0)};
  std::vector<double> source(8192, 0.0);
  source[0] = 1.0;
  const auto h = simulate_tube(areas, source, SynthConfig{});
  std::vector<double> mag;
  for (int f = 100; f <= 3000; f += 2) mag.push_back(dft_magnitude(h, f, rate));
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < mag.size(); ++i)
    if (mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) peaks.push_back(100.0 + 2.0 * static_cast<double>(i));
  REQUIRE(peaks.size() >= 3);
  CHECK(std::abs(peaks[0] - 500.0) / 500.0 < 0.05);
  CHECK(std::abs(peaks[1] - 1500.0) / 1500.0 < 0.05);
  CHECK(std::abs(peaks[2] - 2500.0) / 2500.0 < 0.05);
}

TEST_CASE("reflection coefficients and response are invariant to area scale") {
  CHECK(reflection(2.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(reflection(0.0, 0.0) == 0.0);
  CHECK(reflection(4.0, 2.0) == reflection(2.0, 1.0));
  std::vector<double> a{3.0, 2.5, 1.0, 0.4, 1.7, 3.0, 2.2, 2.9};
  std::vector<double> b = a;
  for (auto& v : b) v *= 2.0;
  std::vector<double> source(500, 0.0);
  source[0] = 1.0;
  const std::vector<std::vector<double>> aa{a};
  const std::vector<std::vector<double>> bb{b};
  // The radiation load scales with the sections.
  SynthConfig scaled;
  scaled.lip_reference_area *= 2.0;
  const auto ya = simulate_tube(aa, source, SynthConfig{});
  const auto yb = simulate_tube(bb, source, scaled);
  for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-12));
}

TEST_CASE("full closure is silent") {
  auto t = with({{"LD", -2.0}});
  t.values[space().glottal()[0]] = 0.0;
  t.values[space().glottal()[1]] = 1.0;
  const auto audio = synthesize(model(), constant(t, 0.2), SynthConfig{}, 3);
  CHECK(rms(audio.samples) < 1e-4);
}

TEST_CASE("no source energy gives silence") {
  auto t = space().neutral_target();
  t.values[space().glottal()[0]] = 0.0;
  t.values[space().glottal()[1]] = 0.0;
  const auto audio = synthesize(model(), constant(t, 0.1), SynthConfig{}, 3);
  CHECK(rms(audio.samples) == 0.0);
}

TEST_CASE("open voiced tract produces sound, deterministically") {
  auto t = space().neutral_target();
  t.values[space().glottal()[0]] = 0.05;
  t.values[space().glottal()[1]] = 1.0;
  const auto traj = constant(t, 0.1);
  const auto a = synthesize(model(), traj, SynthConfig{}, 9);
  const auto b = synthesize(model(), traj, SynthConfig{}, 9);
  CHECK(a.samples == b.samples);
  CHECK(a.samples.size() == 4410);
  CHECK(rms(a.samples) > 1e-3);
}

TEST_CASE("random valid trajectories give bounded finite audio") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    tam::UtteranceSpec spec;
    spec.tau_supra = 0.015;
    spec.tau_glottal = 0.01;
    spec.glottal = {std::uniform_real_distribution<double>(0.0, 0.4)(rng),
                    std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
    for (int s = 0; s < 3; ++s) {
      auto t = space().neutral_target();
      for (auto i : space().free_supra())
        t.values[i] = std::uniform_real_distribution<double>(space()[i].min, space()[i].max)(rng);
      space().apply_rules(t);
      spec.segments.push_back({t, 0.05, {}});
    }
    const auto audio = synthesize(model(), tam::generate_trajectory(space(), spec), SynthConfig{}, trial);
    for (double v : audio.samples) {
      REQUIRE(std::isfinite(v));
      REQUIRE(std::abs(v) <= 1.0);
    }
  }
}

TEST_CASE("wav files round-trip at 16-bit resolution") {
  AudioBuffer audio;
  for (int i = 0; i < 1000; ++i) audio.samples.push_back(0.5 * std::sin(0.05 * i));
  const auto path = std::filesystem::temp_directory_path() / "babblekit_test_roundtrip.wav";
  write_wav(path, audio);
  CHECK(std::filesystem::file_size(path) == 44 + 2000);
  const auto back = read_wav(path);
  CHECK(back.sample_rate == 44100.0);
  REQUIRE(back.samples.size() == audio.samples.size());
  for (std::size_t i = 0; i < audio.samples.size(); ++i)
    CHECK(back.samples[i] == doctest::Approx(audio.samples[i]).epsilon(1.0 / 32767.0));
  std::filesystem::remove(path);
}

TEST_CASE("tract config json round-trips") {
  const auto cfg = TractConfig::defaults();
  CHECK(TractConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
  CHECK(SynthConfig::from_json(SynthConfig{}.to_json()).to_json() == SynthConfig{}.to_json());
}

}

TEST_SUITE("vtsynth") {

TEST_CASE("opening gestures widen the tract; rounding narrows the lips") {
  const double a0 = TractConfig::defaults().baseline_area;
  const auto open_jaw = model().area_function(with({{"JA", -7.0}}).values);
  CHECK(open_jaw.sections.back() > a0 + 1.0);
  const auto fronted = model().area_function(with({{"TCX", 4.0}}).values);
  CHECK(fronted.sections[fronted.sections.size() / 5] > a0 + 1.0);
  const auto rounded = model().area_function(with({{"LP", 1.0}}).values);
  const auto spread = model().area_function(with({{"LP", -1.0}}).values);
  CHECK(rounded.sections.back() < a0);
  CHECK(spread.sections.back() > a0);
  // /r/ and /y/ differ only in protrusion.
  const auto r = model().area_function(with({{"TBY", 2.6}, {"LP", 0.5}}).values);
  const auto y = model().area_function(with({{"TBY", 2.6}, {"LP", -0.5}}).values);
  CHECK(r.sections.back() < y.sections.back());
}

}
