#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "babblekit/config.hpp"
#include "babblekit/error.hpp"
#include "babblekit/external.hpp"
#include "babblekit/vtsynth.hpp"
#include "doctest.h"

using namespace babblekit;
using namespace babblekit::config;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = BABBLEKIT_DATA_DIR;

json shipped() {
  std::ifstream in(kData / "exp.json");
  return json::parse(in);
}

// A small experiment that runs in a second or two.
json tiny(const fs::path& out) {
  json doc = shipped();
  for (const char* k : {"space", "inventory", "prototypes"}) doc[k] = (kData / doc.value(k, std::string(k) + ".json")).string();
  doc["syllables"] = {{"c1", {"p", "k"}}, {"c2", {"l"}}, {"v", {"a"}}};
  doc["strategies"] = json::array({{{"kind", "V_then_C1C2"}}, {{"kind", "V_then_C1C2"}, {"coart", true}}});
  doc["budget"] = 10;
  doc["trials"] = 2;
  doc["scale"] = 1.0;
  doc["out"] = out.string();
  return doc;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("babblekit_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

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

}  // namespace

TEST_SUITE("config") {

TEST_CASE("canonical form round-trips byte for byte") {
  const auto cfg = ExperimentConfig::load(kData / "exp.json");
  const auto text = cfg.canonical();
  const auto again = ExperimentConfig::from_json(json::parse(text), cfg.base_dir);
  CHECK(again.canonical() == text);
  CHECK(again.hash() == cfg.hash());
  CHECK(text.back() == '\n');
}

TEST_CASE("hash ignores output location and worker count only") {
  auto cfg = ExperimentConfig::load(kData / "exp.json");
  const auto h = cfg.hash();
  cfg.out = "/elsewhere";
  cfg.workers = 8;
  CHECK(cfg.hash() == h);
  cfg.seed += 1;
  CHECK(cfg.hash() != h);
}

TEST_CASE("strict validation") {
  auto doc = shipped();
  doc["bugdet"] = 3;
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc, kData), ConfigError);
  doc = shipped();
  doc["scale"] = 0.0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc, kData), ConfigError);
  doc = shipped();
  doc["budget"] = "many";
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc, kData), ConfigError);
  doc = shipped();
  doc["budget"] = 2;  // three-pass strategy needs three
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc, kData), ConfigError);
  doc = shipped();
  doc["backend"] = "external";
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc, kData), ConfigError);
  doc = shipped();
  doc["syllables"]["v"].push_back("zz");
  CHECK_THROWS_AS(Session(ExperimentConfig::from_json(doc, kData)), ConfigError);
  doc = shipped();
  doc["space"] = "missing.json";
  CHECK_THROWS_AS(Session(ExperimentConfig::from_json(doc, kData)), ConfigError);
}

TEST_CASE("syllable grid follows the onset clusters and subsamples deterministically") {
  auto cfg = ExperimentConfig::load(kData / "exp.json");
  cfg.scale = 1.0;
  const auto full = cfg.syllable_grid();
  std::size_t clusters = 0;
  for (const auto& [c1, list] : cfg.syllables.onsets) clusters += list.size();
  CHECK(full.size() == clusters * cfg.syllables.v.size());
  const std::set<explore::Syllable> universe(full.begin(), full.end());
  CHECK(universe.size() == full.size());

  cfg.scale = 0.1;
  const auto part = cfg.syllable_grid();
  CHECK(part == cfg.syllable_grid());
  CHECK(!part.empty());
  CHECK(part.size() < full.size() / 4);
  for (const auto& s : part) CHECK(universe.contains(s));
  cfg.scale = 0.5;
  const auto half = cfg.syllable_grid();
  const std::set<explore::Syllable> half_set(half.begin(), half.end());
  for (const auto& s : part) CHECK(half_set.contains(s));  // nested as scale grows

  cfg.scale = 1e-9;
  CHECK(cfg.syllable_grid().size() == 1);
}

TEST_CASE("plan mirrors the config") {
  const auto cfg = ExperimentConfig::from_json(tiny("/tmp/unused"), kData);
  const auto plan = cfg.plan();
  CHECK(plan.syllables.size() == 2);
  CHECK(plan.trials_per_syllable == 2);
  REQUIRE(plan.strategies.size() == 2);
  CHECK(plan.strategies[1].coart_enabled);
  CHECK(plan.strategies[0].total_budget == 10);
  CHECK(plan.job_count() == 8);
}

}

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  const auto log = dir / "log.txt";
  CHECK(cli("--no-such-flag", log) == 1);
  CHECK(slurp(log).find("Usage") != std::string::npos);
  CHECK(cli("run --config " + (dir / "absent.json").string(), log) == 1);
  write(dir / "bad.json", "{\"syllables\": {\"c1\": [\"p\"], \"c2\": [\"l\"], \"v\": [\"a\"]}, \"nonsense\": 1}");
  CHECK(cli("run --config " + (dir / "bad.json").string(), log) == 1);
  write(dir / "broken.json", "{\"segments\": [");
  CHECK(cli("synth --targets " + (dir / "broken.json").string() + " --out " + (dir / "x.wav").string(), log) != 0);
  // A records file that cannot be read is a runtime failure.
  CHECK(cli("report id-table --records " + (dir / "nothing.jsonl").string(), log) == 2);
  fs::remove_all(dir);
}

TEST_CASE("run twice with the same seed gives byte-identical records") {
  const auto dir = scratch("run");
  json a = tiny(dir / "a");
  json b = tiny(dir / "b");
  write(dir / "a.json", a.dump(2));
  write(dir / "b.json", b.dump(2));
  const auto log = dir / "log.txt";
  REQUIRE(cli("run --quiet --seed 42 --config " + (dir / "a.json").string(), log) == 0);
  REQUIRE(cli("run --quiet --seed 42 --workers 2 --config " + (dir / "b.json").string(), log) == 0);
  const auto ra = slurp(dir / "a" / "records.jsonl");
  CHECK(!ra.empty());
  CHECK(ra == slurp(dir / "b" / "records.jsonl"));
  CHECK(slurp(dir / "a" / "runlog.jsonl") == slurp(dir / "b" / "runlog.jsonl"));
  CHECK(slurp(dir / "a" / "id_table.tsv") == slurp(dir / "b" / "id_table.tsv"));
  CHECK(fs::exists(dir / "a" / "config.json"));

  // BABBLEKIT_OUT overrides the config's directory; a different seed changes the records.
  const std::string env = "BABBLEKIT_OUT=\"" + (dir / "c").string() + "\" ";
  const std::string cmd = env + "\"" + BABBLEKIT_CLI + "\" run --quiet --seed 43 --config " +
                          (dir / "a.json").string() + " > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp(dir / "a" / "records.jsonl") == ra);
  CHECK(slurp(dir / "c" / "records.jsonl") != ra);

  // Resuming into a directory written under another configuration is refused.
  CHECK(cli("run --quiet --seed 44 --out " + (dir / "c").string() + " --config " + (dir / "a.json").string(), log) ==
        1);
  CHECK(cli("run --quiet --fresh --seed 44 --out " + (dir / "c").string() + " --config " + (dir / "a.json").string(),
            log) == 0);
  fs::remove_all(dir);
}

TEST_CASE("report id-table on crafted records matches hand counts") {
  const auto dir = scratch("report");
  auto rec = [](const std::string& strategy, const std::string& got_v, const std::string& status) {
    return json{{"id", "p.l.a/0/" + strategy},
                {"syllable", {{"c1", "p"}, {"c2", "l"}, {"v", "a"}}},
                {"strategy", strategy},
                {"coart", false},
                {"trial", 0},
                {"seed", 1},
                {"passes", json::array()},
                {"final_utterance", nullptr},
                {"final_percept", nullptr},
                {"identified", {{"c1", "p"}, {"c2", "l"}, {"v", got_v}}},
                {"c1_v_distance", json::array()},
                {"c2_v_distance", json::array()},
                {"status", status}}
        .dump();
  };
  write(dir / "records.jsonl", rec("joint", "a", "ok") + "\n" + rec("joint", "i", "ok") + "\n" +
                                   rec("V_then_C1C2", "a", "ok") + "\n" + rec("V_then_C1C2", "a", "ok") + "\n" +
                                   rec("V_then_C1C2", "a", "ok") + "\n" + rec("V_then_C1C2", "a", "exhausted") +
                                   "\n");
  REQUIRE(cli("report id-table --records " + (dir / "records.jsonl").string() + " --out " +
                  (dir / "t.tsv").string(),
              dir / "log.txt") == 0);
  const auto table = slurp(dir / "t.tsv");
  CHECK(table.find("joint\t2\t50.00\t50.00\t100.00") != std::string::npos);
  CHECK(table.find("V_then_C1C2\t4\t75.00\t75.00\t75.00") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("synth writes a 44.1 kHz 16-bit mono WAV") {
  const auto dir = scratch("synth");
  REQUIRE(cli("synth --targets " + (kData / "demo_targets.json").string() + " --out " + (dir / "demo.wav").string(),
              dir / "log.txt") == 0);
  const auto bytes = slurp(dir / "demo.wav");
  REQUIRE(bytes.size() > 44);
  CHECK(bytes.substr(0, 4) == "RIFF");
  CHECK(bytes.substr(8, 4) == "WAVE");
  auto u16 = [&](std::size_t at) {
    return static_cast<unsigned>(static_cast<unsigned char>(bytes[at])) |
           static_cast<unsigned>(static_cast<unsigned char>(bytes[at + 1])) << 8;
  };
  auto u32 = [&](std::size_t at) { return u16(at) | u16(at + 2) << 16; };
  CHECK(u16(20) == 1);      // PCM
  CHECK(u16(22) == 1);      // mono
  CHECK(u32(24) == 44100);  // sample rate
  CHECK(u16(34) == 16);     // bits per sample
  const auto audio = vtsynth::read_wav(dir / "demo.wav");
  CHECK(audio.sample_rate == 44100.0);
  CHECK(audio.samples.size() > 4410);
  fs::remove_all(dir);
}

TEST_CASE("bench tpe prints a table") {
  const auto dir = scratch("bench");
  REQUIRE(cli("bench tpe --function sphere --dims 2 --evals 80 --seeds 3", dir / "out.txt") == 0);
  const auto out = slurp(dir / "out.txt");
  CHECK(out.find("sphere\t2\t80\t3") != std::string::npos);
  CHECK(cli("bench tpe --function nope", dir / "out.txt") == 1);
  fs::remove_all(dir);
}

TEST_CASE("external synthesizer adapter") {
  if (std::system("python3 -c 'import json, wave, struct, math' > /dev/null 2>&1") != 0) {
    MESSAGE("python3 unavailable; skipped");
    return;
  }
  const auto dir = scratch("external");
  // Stand-in synthesizer: a vowel-like buzz whose length follows the durations.
  write(dir / "synth.py", R"PY(import json, math, struct, sys, wave, os
out_dir = sys.argv[1]
n = 0
for line in sys.stdin:
    req = json.loads(line)
    if "targets" not in req:
        print(json.dumps({"error": "no targets"}), flush=True)
        continue
    rate = int(req["sample_rate"])
    total = sum(req["durations"])
    frames = int(total * rate)
    path = os.path.join(out_dir, "u%d.wav" % n)
    n += 1
    with wave.open(path, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        data = b"".join(struct.pack("<h", int(8000 * math.sin(2 * math.pi * 120 * k / rate) * math.sin(2 * math.pi * 700 * k / rate))) for k in range(frames))
        w.writeframes(data)
    print(json.dumps({"wav_path": path, "tube_min_area": 0.5, "lip_area": 1.0}), flush=True)
)PY");
  const auto space = artic::ArticulatorySpace::load(kData / "space.json");
  vtsynth::ExternalSynthesizer ext({"python3", (dir / "synth.py").string(), dir.string()});
  tam::UtteranceSpec spec;
  spec.segments.push_back({space.neutral_target(), 0.2, {}});
  spec.tau_glottal = 0.01;
  const auto r = ext.render(space, spec, 22050.0);
  CHECK(fs::exists(r.wav_path));
  CHECK(r.tube_min_area == 0.5);
  const auto audio = vtsynth::read_wav(r.wav_path);
  CHECK(audio.sample_rate == 22050.0);
  CHECK(audio.samples.size() == 4410);
  const auto req = vtsynth::external_request(space, spec, 22050.0);
  CHECK(req.at("targets").size() == 1);
  CHECK(req.at("targets")[0].contains("JA"));
  CHECK_THROWS_AS(vtsynth::parse_external_response("{\"error\": \"boom\"}"), Error);
  CHECK_THROWS_AS(vtsynth::ExternalSynthesizer({"/nonexistent/synth"}).render(space, spec, 22050.0), Error);
  fs::remove_all(dir);
}

}
