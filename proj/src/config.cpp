#include "babblekit/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "babblekit/error.hpp"
#include "babblekit/hash.hpp"

namespace babblekit::config {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Oracle: return "oracle";
    case Backend::MelPrototype: return "mel_prototype";
    case Backend::External: return "external";
  }
  return "?";
}

Backend parse_backend(std::string_view text) {
  if (text == "oracle") return Backend::Oracle;
  if (text == "mel_prototype") return Backend::MelPrototype;
  if (text == "external") return Backend::External;
  throw ConfigError("unknown percept backend '" + std::string(text) + "'");
}

namespace {

const std::set<std::string> kKeys{
    "space",     "inventory",   "prototypes",       "bank",  "tract",   "synth",    "mel",         "oracle",
    "production", "tpe",        "loss",             "syllables", "strategies", "budget", "trials", "scale",
    "backend",   "external_command", "temperature", "fail_cap_factor", "seed", "out", "workers", "run_log"};

json sets_to_json(const SyllableSets& s) {
  json j = {{"c1", s.c1}, {"c2", s.c2}, {"v", s.v}};
  if (!s.onsets.empty()) j["onsets"] = s.onsets;
  return j;
}

SyllableSets sets_from_json(const json& j) {
  SyllableSets s;
  for (const auto& [key, _] : j.items())
    if (key != "c1" && key != "c2" && key != "v" && key != "onsets")
      throw ConfigError("unknown key syllables." + key);
  s.c1 = j.at("c1").get<std::vector<std::string>>();
  s.c2 = j.at("c2").get<std::vector<std::string>>();
  s.v = j.at("v").get<std::vector<std::string>>();
  if (j.contains("onsets")) s.onsets = j.at("onsets").get<std::map<std::string, std::vector<std::string>>>();
  if (s.c1.empty() || s.c2.empty() || s.v.empty()) throw ConfigError("syllable sets must be non-empty");
  for (const auto& [c1, c2s] : s.onsets) {
    if (std::find(s.c1.begin(), s.c1.end(), c1) == s.c1.end())
      throw ConfigError("onset cluster for '" + c1 + "' which is not in the C1 set");
    for (const auto& c2 : c2s)
      if (std::find(s.c2.begin(), s.c2.end(), c2) == s.c2.end())
        throw ConfigError("onset cluster " + c1 + c2 + " uses '" + c2 + "' which is not in the C2 set");
  }
  return s;
}

// Uniform in [0, 1) from a string key.
double key_fraction(const std::string& key) {
  return static_cast<double>(fnv1a64(key) >> 11) * 0x1.0p-53;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc, fs::path base_dir) {
  if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!kKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  try {
    c.space = doc.value("space", c.space);
    c.inventory = doc.value("inventory", c.inventory);
    c.prototypes = doc.value("prototypes", c.prototypes);
    c.bank = doc.value("bank", c.bank);
    if (doc.contains("tract")) c.tract = vtsynth::TractConfig::from_json(doc.at("tract"));
    if (doc.contains("synth")) c.synth = vtsynth::SynthConfig::from_json(doc.at("synth"));
    if (doc.contains("mel")) c.mel = percept::MelConfig::from_json(doc.at("mel"));
    if (doc.contains("oracle")) c.oracle = percept::OracleConfig::from_json(doc.at("oracle"));
    if (doc.contains("production")) c.production = explore::ProductionConfig::from_json(doc.at("production"));
    if (doc.contains("tpe")) c.tpe = tpe::TpeConfig::from_json(doc.at("tpe"));
    if (doc.contains("loss")) c.loss = objectives::LossConfig::from_json(doc.at("loss"));
    if (!doc.contains("syllables")) throw ConfigError("config needs a 'syllables' section");
    c.syllables = sets_from_json(doc.at("syllables"));
    if (doc.contains("strategies")) {
      for (const auto& s : doc.at("strategies")) {
        StrategyEntry e;
        e.kind = explore::parse_strategy(s.at("kind").get<std::string>());
        e.coart = s.value("coart", false);
        c.strategies.push_back(e);
      }
    } else {
      c.strategies.push_back({});
    }
    c.budget = doc.value("budget", c.budget);
    c.trials = doc.value("trials", c.trials);
    c.scale = doc.value("scale", c.scale);
    c.backend = parse_backend(doc.value("backend", std::string(to_string(c.backend))));
    c.external_command = doc.value("external_command", c.external_command);
    c.temperature = doc.value("temperature", c.temperature);
    c.fail_cap_factor = doc.value("fail_cap_factor", c.fail_cap_factor);
    c.seed = doc.value("seed", c.seed);
    c.out = doc.value("out", c.out);
    c.workers = doc.value("workers", c.workers);
    c.run_log = doc.value("run_log", c.run_log);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }

  if (c.strategies.empty()) throw ConfigError("config needs at least one strategy");
  for (const auto& s : c.strategy_specs()) s.validate();
  if (c.trials < 1) throw ConfigError("trials must be at least 1");
  if (!(c.scale > 0.0 && c.scale <= 1.0)) throw ConfigError("scale must be in (0, 1]");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (!(c.temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(c.fail_cap_factor >= 1.0)) throw ConfigError("fail_cap_factor must be at least 1");
  if (c.backend == Backend::External && c.external_command.empty())
    throw ConfigError("the external backend needs external_command");
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return from_json(doc, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

json ExperimentConfig::to_json() const {
  json strategies_j = json::array();
  for (const auto& s : strategies)
    strategies_j.push_back({{"kind", explore::to_string(s.kind)}, {"coart", s.coart}});
  return {{"space", space},
          {"inventory", inventory},
          {"prototypes", prototypes},
          {"bank", bank},
          {"tract", tract.to_json()},
          {"synth", synth.to_json()},
          {"mel", mel.to_json()},
          {"oracle", oracle.to_json()},
          {"production", production.to_json()},
          {"tpe", tpe.to_json()},
          {"loss", loss.to_json()},
          {"syllables", sets_to_json(syllables)},
          {"strategies", std::move(strategies_j)},
          {"budget", budget},
          {"trials", trials},
          {"scale", scale},
          {"backend", to_string(backend)},
          {"external_command", external_command},
          {"temperature", temperature},
          {"fail_cap_factor", fail_cap_factor},
          {"seed", seed},
          {"out", out},
          {"workers", workers},
          {"run_log", run_log}};
}

std::string ExperimentConfig::canonical() const { return to_json().dump(2) + "\n"; }

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("out");
  j.erase("workers");
  return to_hex(fnv1a64(j.dump()));
}

fs::path ExperimentConfig::resolve(const std::string& path) const {
  fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<explore::StrategySpec> ExperimentConfig::strategy_specs() const {
  std::vector<explore::StrategySpec> out;
  for (const auto& s : strategies) out.push_back({s.kind, budget, s.coart});
  return out;
}

std::vector<explore::Syllable> ExperimentConfig::syllable_grid() const {
  std::vector<explore::Syllable> grid;
  for (const auto& c1 : syllables.c1) {
    for (const auto& c2 : syllables.c2) {
      if (!syllables.onsets.empty()) {
        auto it = syllables.onsets.find(c1);
        if (it == syllables.onsets.end() || std::find(it->second.begin(), it->second.end(), c2) == it->second.end())
          continue;
      }
      for (const auto& v : syllables.v) grid.push_back({c1, c2, v});
    }
  }
  if (grid.empty()) throw ConfigError("the onset clusters admit no syllable");
  if (scale >= 1.0) return grid;
  std::vector<explore::Syllable> kept;
  for (const auto& s : grid)
    if (key_fraction(s.key()) < scale) kept.push_back(s);
  if (kept.empty()) {
    kept.push_back(*std::min_element(grid.begin(), grid.end(), [](const auto& a, const auto& b) {
      return key_fraction(a.key()) < key_fraction(b.key());
    }));
  }
  return kept;
}

harness::ExperimentPlan ExperimentConfig::plan() const {
  harness::ExperimentPlan p;
  p.syllables = syllable_grid();
  p.trials_per_syllable = trials;
  p.strategies = strategy_specs();
  p.base_seed = seed;
  return p;
}

// ---------------------------------------------------------------------------

namespace {

fs::path existing(const ExperimentConfig& cfg, const std::string& path, const char* what) {
  auto p = cfg.resolve(path);
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  return p;
}

}  // namespace

Session::Session(const ExperimentConfig& cfg)
    : cfg_(cfg),
      space_(artic::ArticulatorySpace::load(existing(cfg, cfg.space, "space file"))),
      inventory_(percept::Inventory::load(existing(cfg, cfg.inventory, "inventory file"))),
      prototypes_(percept::PhoneticPrototypes::load(existing(cfg, cfg.prototypes, "prototypes file"))) {
  cfg_.plan().validate(inventory_);
  tract_ = std::make_unique<vtsynth::TractModel>(space_, cfg_.tract);

  switch (cfg_.backend) {
    case Backend::Oracle:
      oracle_ = std::make_unique<percept::OraclePerceiver>(space_, inventory_, prototypes_, cfg_.oracle);
      backend_ = std::make_unique<explore::OracleBackend>(*tract_, *oracle_);
      break;
    case Backend::MelPrototype:
      bank_ = std::make_unique<percept::PrototypeBank>(
          percept::PrototypeBank::load(existing(cfg_, cfg_.bank, "prototype bank"), &cfg_.mel));
      backend_ = std::make_unique<explore::MelPrototypeBackend>(*tract_, cfg_.synth, *bank_, cfg_.temperature);
      break;
    case Backend::External:
      bank_ = std::make_unique<percept::PrototypeBank>(
          percept::PrototypeBank::load(existing(cfg_, cfg_.bank, "prototype bank"), &cfg_.mel));
      external_ = std::make_unique<vtsynth::ExternalSynthesizer>(cfg_.external_command);
      backend_ = std::make_unique<explore::ExternalBackend>(space_, *external_, *bank_, cfg_.temperature);
      break;
  }

  deps_.space = &space_;
  deps_.inventory = &inventory_;
  deps_.tract = tract_.get();
  deps_.backend = backend_.get();
  deps_.production = cfg_.production;
  deps_.loss = cfg_.loss;
  deps_.tpe = cfg_.tpe;
  deps_.fail_cap_factor = cfg_.fail_cap_factor;
}

Session::~Session() = default;

}  // namespace babblekit::config
