// Acceptance suite: one PASS/FAIL line per criterion, with its runtime.
// Exit status is the number of failed criteria. Criterion numbers given as
// arguments restrict the run to those criteria.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "babblekit/artic.hpp"
#include "babblekit/benchmark.hpp"
#include "babblekit/config.hpp"
#include "babblekit/explore.hpp"
#include "babblekit/harness.hpp"
#include "babblekit/tam.hpp"
#include "babblekit/tpe.hpp"
#include "babblekit/vtsynth.hpp"
#include "json.hpp"

using namespace babblekit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = BABBLEKIT_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check; the first failure message is kept.
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double elapsed, double limit) {
  const bool in_time = elapsed < limit;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " [" << fmt(elapsed, 3) << " s, limit "
            << fmt(limit, 4) << " s]";
  if (!o.detail.empty()) std::cout << " - " << o.detail;
  if (!in_time) std::cout << " - over the time limit";
  std::cout << std::endl;
}

void run(int id, const std::string& name, double limit, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  report(id, name, o, seconds_since(start), limit);
}

artic::ArticulatoryDimension dimension(std::string name, double min, double max, double neutral) {
  artic::ArticulatoryDimension d;
  d.name = std::move(name);
  d.min = min;
  d.max = max;
  d.neutral = neutral;
  return d;
}

const artic::ArticulatorySpace& space() {
  static const auto s = artic::ArticulatorySpace::load(kData / "space.json");
  return s;
}

// ---------------------------------------------------------------------------

Outcome metric_suite() {
  Outcome o;
  std::mt19937_64 rng(1);
  auto random_target = [&] {
    std::vector<double> free;
    for (auto i : space().free_supra()) {
      std::uniform_real_distribution<double> u(space()[i].min, space()[i].max);
      free.push_back(u(rng));
    }
    return space().make_target(free);
  };
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_target();
    const auto b = random_target();
    const auto c = random_target();
    const double ab = artic::coart_distance(space(), a, b);
    const bool ok = ab >= 0.0 && ab <= 1.0 && ab == artic::coart_distance(space(), b, a) &&
                    artic::coart_distance(space(), a, a) == 0.0 && (a.values == b.values || ab > 0.0) &&
                    ab <= artic::coart_distance(space(), a, c) + artic::coart_distance(space(), c, b) + 1e-12;
    if (!ok) ++violations;
  }
  o.expect(violations == 0, std::to_string(violations) + " of 10000 pairs violate a metric property");

  const artic::ArticulatorySpace unit({dimension("A", 0.0, 1.0, 0.5), dimension("B", 0.0, 1.0, 0.5)});
  const double d = artic::coart_distance(unit, artic::Target{{0.2, 0.4}}, artic::Target{{0.6, 0.8}});
  o.expect(std::abs(d - 0.4) < 1e-15, "worked example gives " + fmt(d, 17));
  if (o.pass) o.detail = "10000 pairs, worked example " + fmt(d, 17);
  return o;
}

// ---------------------------------------------------------------------------

// Explicit RK4 integration of (D + 1/tau)^3 (y - target) = 0.
struct OdeOracle {
  std::array<double, 3> s{0.0, 0.0, 0.0};

  void step(double target, double tau, double dt) {
    auto f = [&](const std::array<double, 3>& x) {
      return std::array<double, 3>{x[1], x[2],
                                   -3.0 / tau * x[2] - 3.0 / (tau * tau) * x[1] -
                                       (x[0] - target) / (tau * tau * tau)};
    };
    auto add = [](const std::array<double, 3>& a, const std::array<double, 3>& b, double h) {
      return std::array<double, 3>{a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]};
    };
    const auto k1 = f(s);
    const auto k2 = f(add(s, k1, dt / 2));
    const auto k3 = f(add(s, k2, dt / 2));
    const auto k4 = f(add(s, k3, dt));
    for (int i = 0; i < 3; ++i) s[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
};

Outcome tam_oracle() {
  Outcome o;
  const double expected = 1.0 - std::exp(-5.0) * (1.0 + 5.0 + 12.5);
  const double closed = tam::solve_segment({0.0, 0.0, 0.0}, 1.0, 0.01).value(0.05);
  o.expect(std::abs(closed - expected) < 1e-6, "closed form at 5 tau gives " + fmt(closed, 10));

  const artic::ArticulatorySpace line({dimension("X", -10.0, 10.0, 0.0)});
  auto seg = [](double target, double duration) { return tam::SegmentPlan{artic::Target{{target}}, duration, {}}; };
  const auto sampled = tam::generate_trajectory(line, {{seg(1.0, 0.2)}, 0.01, 0.01, {}}, 1000.0);
  o.expect(std::abs(sampled.at(50, 0) - expected) < 1e-6, "sampled frame at 5 tau gives " + fmt(sampled.at(50, 0), 10));

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> target(-3.0, 3.0);
  std::uniform_real_distribution<double> dur(0.03, 0.2);
  std::uniform_real_distribution<double> tau(0.005, 0.04);
  std::uniform_int_distribution<int> count(1, 4);
  double worst = 0.0;
  for (int plan = 0; plan < 100; ++plan) {
    tam::UtteranceSpec spec;
    spec.tau_supra = spec.tau_glottal = tau(rng);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) spec.segments.push_back(seg(target(rng), std::round(dur(rng) * 1000.0) / 1000.0));
    const auto traj = tam::generate_trajectory(line, spec, 1000.0);
    OdeOracle ode;
    const auto onsets = spec.boundaries();
    double sq = 0.0;
    std::size_t s = 0;
    for (std::size_t k = 0; k < traj.frames(); ++k) {
      const double t = traj.time(k);
      while (s + 1 < spec.segments.size() && onsets[s + 1] <= t + 1e-12) ++s;
      const double diff = traj.at(k, 0) - ode.s[0];
      sq += diff * diff;
      for (int j = 0; j < 100; ++j) ode.step(spec.segments[s].target.values[0], spec.tau_supra, 1e-5);
    }
    worst = std::max(worst, std::sqrt(sq / static_cast<double>(traj.frames())));
  }
  o.expect(worst < 1e-5, "worst RMS against RK4 is " + fmt(worst));
  if (o.pass) o.detail = "y(5 tau) = " + fmt(closed, 8) + ", worst RMS over 100 plans " + fmt(worst, 3);
  return o;
}

// ---------------------------------------------------------------------------

double dft_magnitude(const std::vector<double>& x, double f, double rate) {
  std::complex<double> acc = 0.0;
  const double w = -2.0 * std::numbers::pi * f / rate;
  for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, w * static_cast<double>(n));
  return std::abs(acc);
}

Outcome waveguide_oracle() {
  Outcome o;
  const vtsynth::SynthConfig synth;
  const auto tract = vtsynth::TractConfig::defaults();
  const double rate = tract.audio_rate;
  const std::size_t n = 44;
  const double length = static_cast<double>(n) * tract.section_length();
  const std::vector<std::vector<double>> areas{std::vector<double>(n, 3.0)};
  std::vector<double> source(8192, 0.0);
  source[0] = 1.0;
  const auto h = vtsynth::simulate_tube(areas, source, synth);
  std::vector<double> mag;
  for (int f = 100; f <= 3000; f += 2) mag.push_back(dft_magnitude(h, f, rate));
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < mag.size(); ++i)
    if (mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) peaks.push_back(100.0 + 2.0 * static_cast<double>(i));
  o.expect(peaks.size() >= 3, "fewer than three spectral peaks below 3 kHz");
  const double nominal[3] = {500.0, 1500.0, 2500.0};
  std::string found;
  for (std::size_t i = 0; i < 3 && i < peaks.size(); ++i) {
    o.expect(std::abs(peaks[i] - nominal[i]) / nominal[i] < 0.05, "peak " + fmt(peaks[i]) + " Hz off " + fmt(nominal[i]));
    found += (i ? "/" : "") + fmt(peaks[i]);
  }

  const vtsynth::TractModel model(space(), tract);
  auto closed = space().neutral_target();
  closed.values[space().index_of("LD")] = -2.0;
  closed.values[space().glottal()[0]] = 0.0;
  closed.values[space().glottal()[1]] = 1.0;
  space().apply_rules(closed);
  tam::Trajectory traj;
  traj.columns = space().size();
  for (int k = 0; k < 300; ++k) traj.data.insert(traj.data.end(), closed.values.begin(), closed.values.end());
  const auto audio = vtsynth::synthesize(model, traj, synth, 3);
  double sq = 0.0;
  for (double v : audio.samples) sq += v * v;
  const double rms = std::sqrt(sq / static_cast<double>(audio.samples.size()));
  o.expect(rms < 1e-4, "full-closure RMS " + fmt(rms));
  if (o.pass) o.detail = fmt(length) + " cm tube peaks " + found + " Hz, full-closure RMS " + fmt(rms, 3);
  return o;
}

// ---------------------------------------------------------------------------

Outcome tpe_suite() {
  Outcome o;
  const auto fns = bench::standard_functions();
  const auto& sphere = bench::find_function(fns, "sphere");
  const auto c = bench::compare(sphere, 6, 500, 20, 1);
  o.expect(c.tpe_median <= 0.5 * c.random_median,
           "TPE median " + fmt(c.tpe_median) + " vs random median " + fmt(c.random_median));

  tpe::Rng rng(2718);
  std::size_t calls = 0;
  std::size_t outside = 0;
  while (calls < 100000) {
    const std::size_t d = 1 + rng() % 6;
    std::vector<tpe::Bound> bounds;
    for (std::size_t i = 0; i < d; ++i) {
      const double lo = -100.0 + 200.0 * tpe::uniform01(rng);
      const double width = std::pow(10.0, -6.0 + 8.0 * tpe::uniform01(rng));
      bounds.push_back({"x" + std::to_string(i), lo, lo + width});
    }
    const tpe::SearchSpace s(bounds);
    tpe::ObservationLog log(s);
    const std::size_t n = rng() % 300;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> p(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double u = tpe::uniform01(rng);
        p[i] = u < 0.2   ? bounds[i].lower
               : u > 0.8 ? bounds[i].upper
                         : bounds[i].lower + u * (bounds[i].upper - bounds[i].lower);
      }
      log.observe(p, std::floor(tpe::uniform01(rng) * 5.0));
    }
    for (int k = 0; k < 250 && calls < 100000; ++k, ++calls)
      if (!s.contains(tpe::suggest(s, log, {}, rng))) ++outside;
  }
  o.expect(outside == 0, std::to_string(outside) + " of 100000 suggestions out of bounds");

  auto trace = [&](std::uint64_t seed) {
    tpe::Optimizer opt(bench::box(sphere, 6), {}, seed);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 200; ++i) {
      auto x = opt.ask();
      pts.push_back(x);
      opt.tell(x, sphere.f(x));
    }
    return pts;
  };
  o.expect(trace(7) == trace(7), "identical seeds gave different suggestions");
  if (o.pass)
    o.detail = "median best " + fmt(c.tpe_median) + " vs random " + fmt(c.random_median) + ", 100000 fuzz calls in bounds";
  return o;
}

// ---------------------------------------------------------------------------

Outcome budget_semantics() {
  Outcome o;
  using explore::StrategyKind;
  const auto two = explore::budget_split({StrategyKind::V_then_C1C2, 5000, false});
  const auto three_a = explore::budget_split({StrategyKind::V_then_C1_then_C2, 5000, false});
  const auto three_b = explore::budget_split({StrategyKind::V_then_C2_then_C1, 5000, false});
  o.expect(two == std::vector<std::size_t>{1000, 4000}, "two-pass split is not [1000, 4000]");
  o.expect(three_a == std::vector<std::size_t>{1000, 2000, 2000} && three_b == three_a,
           "three-pass split is not [1000, 2000, 2000]");

  const config::Session session(config::ExperimentConfig::load(kData / "exp.json"));
  explore::Deps deps = session.deps();
  std::size_t injected = 0;
  deps.force_gate_failure = [&](std::size_t, std::size_t iter) {
    const bool fail = iter % 3 == 0;
    if (fail) ++injected;
    return fail;
  };
  const std::size_t budget = 60;
  const auto r = explore::run_strategy({"p", "l", "a"}, {StrategyKind::V_then_C1_then_C2, budget, false}, 5, deps);
  o.expect(r.status == "ok", "trial status " + r.status);
  std::size_t synthesized = 0;
  std::size_t gated = 0;
  std::size_t iterations = 0;
  for (const auto& p : r.passes) {
    synthesized += p.synthesized;
    gated += p.gate_failures;
    iterations += p.evaluations.size();
    std::size_t ungated = 0;
    for (const auto& e : p.evaluations) ungated += e.loss.gated ? 0 : 1;
    o.expect(ungated == p.synthesized, "pass " + std::to_string(p.index) + " counts gated evaluations as synthesized");
  }
  o.expect(synthesized == budget, "synthesized " + std::to_string(synthesized) + " of budget " + std::to_string(budget));
  o.expect(iterations == synthesized + gated, "iterations do not split into synthesized and gated");
  o.expect(gated >= injected && injected > 0, "injected failures missing from the gate count");
  if (o.pass)
    o.detail = "[1000, 4000], [1000, 2000, 2000]; budget " + std::to_string(budget) + " with " +
               std::to_string(injected) + " injected failures: " + std::to_string(synthesized) + " synthesized in " +
               std::to_string(iterations) + " iterations";
  return o;
}

// ---------------------------------------------------------------------------

struct GridRun {
  std::vector<harness::TrialRecord> records;
  double base_seconds = 0.0;   // V_then_C1C2 and V_then_C2_then_C1
  double coart_seconds = 0.0;  // V_then_C1C2 with the coarticulation objective
};

std::vector<harness::TrialRecord> run_grid(const config::Session& session, const config::ExperimentConfig& cfg,
                                           std::vector<explore::StrategySpec> strategies) {
  auto plan = cfg.plan();
  plan.strategies = std::move(strategies);
  harness::RunOptions opts;
  opts.workers = std::max(1u, std::thread::hardware_concurrency());
  opts.run_log = false;
  opts.resume = false;
  return harness::run_experiment(plan, session.deps(), opts);
}

GridRun& grid() {
  static GridRun g = [] {
    GridRun r;
    const auto cfg = config::ExperimentConfig::load(kData / "acceptance.json");
    const config::Session session(cfg);
    const auto specs = cfg.strategy_specs();
    std::vector<explore::StrategySpec> base;
    std::vector<explore::StrategySpec> coart;
    for (const auto& s : specs) (s.coart_enabled ? coart : base).push_back(s);
    auto start = Clock::now();
    r.records = run_grid(session, cfg, base);
    r.base_seconds = seconds_since(start);
    start = Clock::now();
    auto more = run_grid(session, cfg, coart);
    r.coart_seconds = seconds_since(start);
    r.records.insert(r.records.end(), more.begin(), more.end());
    return r;
  }();
  return g;
}

std::vector<harness::TrialRecord> with_label(const std::vector<harness::TrialRecord>& records, const std::string& label) {
  std::vector<harness::TrialRecord> out;
  for (const auto& r : records)
    if (r.strategy == label) out.push_back(r);
  return out;
}

std::string rates(const harness::IdRates& r) {
  return r.condition + " syllable " + fmt(r.syllable) + "% onset " + fmt(r.onset) + "% vowel " + fmt(r.vowel) + "%";
}

void self_imitation() {
  const auto start = Clock::now();
  Outcome o;
  double elapsed = 0.0;
  try {
    const auto& g = grid();
    elapsed = g.base_seconds;
    const auto joint = with_label(g.records, "V_then_C1C2");
    const auto c2_first = with_label(g.records, "V_then_C2_then_C1");
    const auto a = harness::identification_rates(joint, "V_then_C1C2");
    const auto b = harness::identification_rates(c2_first, "V_then_C2_then_C1");
    o.expect(a.total == 54 && b.total == 54, "grid does not hold 54 trials per strategy");
    o.expect(a.syllable >= 80.0, "V_then_C1C2 syllable rate " + fmt(a.syllable) + "% below 80%");
    o.expect(b.onset < a.onset, "V_then_C2_then_C1 onset rate " + fmt(b.onset) + "% not below " + fmt(a.onset) + "%");
    o.detail = rates(a) + "; " + rates(b);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
    elapsed = seconds_since(start);
  }
  report(6, "end-to-end self-imitation on the 3x2x3 grid", o, elapsed, 15 * 60);
}

void coarticulation_effect() {
  const auto start = Clock::now();
  Outcome o;
  double elapsed = 0.0;
  try {
    const auto& g = grid();
    elapsed = g.base_seconds + g.coart_seconds;
    auto both = with_label(g.records, "V_then_C1C2");
    const auto on = with_label(g.records, "V_then_C1C2+coart");
    const auto off_rates = harness::identification_rates(both, "off");
    const auto on_rates = harness::identification_rates(on, "on");
    both.insert(both.end(), on.begin(), on.end());
    const auto rows = harness::coart_report(both, explore::Role::C1, space());
    std::size_t reduced = 0;
    std::string dims;
    for (const auto& r : rows) {
      if (r.difference < 0.0 && r.test.p < 0.05) {
        ++reduced;
        dims += (dims.empty() ? "" : ",") + r.dimension;
      }
    }
    const double gap = std::abs(on_rates.syllable - off_rates.syllable);
    o.expect(reduced >= 4, "only " + std::to_string(reduced) + " of 16 dimensions reduced at p < 0.05");
    o.expect(gap <= 10.0, "syllable rates differ by " + fmt(gap) + " points");
    o.detail = std::to_string(reduced) + "/16 dimensions reduced (" + dims + "); syllable rate off " +
               fmt(off_rates.syllable) + "% on " + fmt(on_rates.syllable) + "%";
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
    elapsed = seconds_since(start);
  }
  report(7, "coarticulation objective effect", o, elapsed, 30 * 60);
}

// ---------------------------------------------------------------------------

Outcome welch_oracle() {
  Outcome o;
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 3, 4, 5, 6};
  const auto w = harness::welch_t_test(a, b);
  // Reference: equal variances 2.5, so t = -1 with df = 8.
  const boost::math::students_t ref(8.0);
  const double p_ref = 2.0 * boost::math::cdf(boost::math::complement(ref, 1.0));
  o.expect(std::abs(w.p - p_ref) < 1e-3, "p = " + fmt(w.p, 8) + " vs reference " + fmt(p_ref, 8));
  o.expect(std::abs(w.p - 0.347) < 1e-3, "p = " + fmt(w.p, 8) + " not near 0.347");
  const auto same = harness::welch_t_test(a, a);
  o.expect(same.p == 1.0, "identical samples give p = " + fmt(same.p, 17));
  if (o.pass) o.detail = "p = " + fmt(w.p, 8) + " (reference " + fmt(p_ref, 8) + "), identical samples p = 1";
  return o;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + BABBLEKIT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducibility() {
  Outcome o;
  const auto dir = fs::temp_directory_path() / "babblekit_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  json doc = json::parse(slurp(kData / "exp.json"));
  for (const char* k : {"space", "inventory", "prototypes"}) doc[k] = (kData / doc.at(k).get<std::string>()).string();
  doc["syllables"] = {{"c1", {"p", "t"}}, {"c2", {"l"}}, {"v", {"a", "i"}}};
  doc["budget"] = 40;
  doc["trials"] = 2;
  doc["scale"] = 1.0;
  for (const char* name : {"a", "b"}) {
    doc["out"] = (dir / name).string();
    std::ofstream(dir / (std::string(name) + ".json")) << doc.dump(2);
  }
  const auto log = dir / "log.txt";
  o.expect(cli("run --quiet --seed 42 --config \"" + (dir / "a.json").string() + "\"", log) == 0, "first run failed");
  o.expect(cli("run --quiet --seed 42 --config \"" + (dir / "b.json").string() + "\"", log) == 0, "second run failed");
  std::size_t files = 0;
  std::size_t bytes = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename();
    if (name == "config.json") continue;  // records its own output directory
    const auto a = slurp(entry.path());
    o.expect(fs::exists(dir / "b" / name) && a == slurp(dir / "b" / name), name.string() + " differs between runs");
    ++files;
    bytes += a.size();
  }
  o.expect(fs::exists(dir / "a" / "records.jsonl"), "no records file written");
  if (o.pass) o.detail = std::to_string(files) + " output files, " + std::to_string(bytes) + " bytes, byte-identical";
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto selected = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  auto run = [&](int id, const std::string& name, double limit, const std::function<Outcome()>& body) {
    if (selected(id)) ::run(id, name, limit, body);
  };

  std::cout << "babblekit acceptance suite" << std::endl;
  run(1, "coarticulation distance is a bounded metric", 1.0, metric_suite);
  run(2, "target approximation matches closed form and ODE integration", 5.0, tam_oracle);
  run(3, "waveguide formants and full-closure silence", 10.0, waveguide_oracle);
  run(4, "TPE dominance, bounds and determinism", 120.0, tpe_suite);
  run(5, "budget split and gate-failure accounting", 60.0, budget_semantics);
  if (selected(6)) self_imitation();
  if (selected(7)) coarticulation_effect();
  run(8, "Welch t-test against a reference computation", 1.0, welch_oracle);
  run(9, "seeded runs give byte-identical output", 120.0, reproducibility);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
