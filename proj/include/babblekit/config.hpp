#pragma once

// Experiment configuration: one JSON document naming the resource files and
// every tunable of the pipeline, plus a session that loads the resources and
// wires the exploration dependencies.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "babblekit/explore.hpp"
#include "babblekit/harness.hpp"
#include "json.hpp"

namespace babblekit::config {

struct SyllableSets {
  std::vector<std::string> c1;
  std::vector<std::string> c2;
  std::vector<std::string> v;
  // Permitted C1 -> C2 clusters. Empty: every pair of the C1 and C2 sets.
  std::map<std::string, std::vector<std::string>> onsets;
};

struct StrategyEntry {
  explore::StrategyKind kind = explore::StrategyKind::V_then_C1C2;
  bool coart = false;
};

enum class Backend { Oracle, MelPrototype, External };
std::string_view to_string(Backend b);
Backend parse_backend(std::string_view text);

struct ExperimentConfig {
  // Resource paths, relative to base_dir unless absolute.
  std::string space = "space.json";
  std::string inventory = "inventory.json";
  std::string prototypes = "prototypes.json";
  std::string bank = "bank";  // prototype bank directory (mel_prototype, external)

  vtsynth::TractConfig tract = vtsynth::TractConfig::defaults();
  vtsynth::SynthConfig synth;
  percept::MelConfig mel;
  percept::OracleConfig oracle;
  explore::ProductionConfig production;
  tpe::TpeConfig tpe;
  objectives::LossConfig loss;

  SyllableSets syllables;
  std::vector<StrategyEntry> strategies;
  std::size_t budget = 5000;
  std::size_t trials = 5;
  double scale = 1.0;  // fraction of the syllable grid kept
  Backend backend = Backend::Oracle;
  std::vector<std::string> external_command;
  double temperature = 0.1;
  double fail_cap_factor = 50.0;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::size_t workers = 1;
  bool run_log = true;

  // Directory of the file the config was loaded from; not serialised.
  std::filesystem::path base_dir = ".";

  // Throws ConfigError on unknown keys, wrong types or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& doc, std::filesystem::path base_dir = ".");
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // Sorted keys, two-space indent, trailing newline.
  std::string canonical() const;
  // Hash of the canonical form without the fields that cannot change
  // results (out, workers).
  std::string hash() const;

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<explore::StrategySpec> strategy_specs() const;
  // Full grid in (c1, c2, v) order, restricted to the onset clusters, then
  // subsampled by scale: a syllable is kept when its key hashes below the
  // scale fraction. At least one syllable always survives.
  std::vector<explore::Syllable> syllable_grid() const;
  harness::ExperimentPlan plan() const;
};

// Loaded resources and the dependency bundle for exploration.
class Session {
 public:
  // Throws ConfigError when a resource is missing or the syllable sets are
  // not in the inventory; Error when a resource is unreadable.
  explicit Session(const ExperimentConfig& cfg);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const ExperimentConfig& config() const noexcept { return cfg_; }
  const artic::ArticulatorySpace& space() const noexcept { return space_; }
  const percept::Inventory& inventory() const noexcept { return inventory_; }
  const percept::PhoneticPrototypes& prototypes() const noexcept { return prototypes_; }
  const vtsynth::TractModel& tract() const noexcept { return *tract_; }
  const explore::Deps& deps() const noexcept { return deps_; }

 private:
  ExperimentConfig cfg_;
  artic::ArticulatorySpace space_;
  percept::Inventory inventory_;
  percept::PhoneticPrototypes prototypes_;
  std::unique_ptr<vtsynth::TractModel> tract_;
  std::unique_ptr<percept::OraclePerceiver> oracle_;
  std::unique_ptr<percept::PrototypeBank> bank_;
  std::unique_ptr<vtsynth::ExternalSynthesizer> external_;
  std::unique_ptr<explore::PerceptBackend> backend_;
  explore::Deps deps_;
};

}  // namespace babblekit::config
