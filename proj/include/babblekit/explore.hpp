#pragma once

// Exploration strategies: pass pipelines over the optimizer with
// somatosensory-gated budget accounting.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "babblekit/artic.hpp"
#include "babblekit/external.hpp"
#include "babblekit/objectives.hpp"
#include "babblekit/percept.hpp"
#include "babblekit/tam.hpp"
#include "babblekit/tpe.hpp"
#include "babblekit/vtsynth.hpp"
#include "json.hpp"

namespace babblekit::explore {

using objectives::Role;

enum class StrategyKind { Joint, V_then_C1C2, V_then_C1_then_C2, V_then_C2_then_C1 };

std::string_view to_string(StrategyKind k);
StrategyKind parse_strategy(std::string_view text);

struct StrategySpec {
  StrategyKind kind = StrategyKind::V_then_C1C2;
  std::size_t total_budget = 5000;
  bool coart_enabled = false;

  std::size_t passes() const noexcept;
  // Throws ConfigError when the budget cannot cover every pass.
  void validate() const;
  // e.g. "V_then_C1C2+coart"
  std::string label() const;
};

// joint [B]; two passes [B/5, 4B/5]; three passes [B/5, 2B/5, 2B/5].
// Each share is floored; the remainder goes to the last pass.
std::vector<std::size_t> budget_split(const StrategySpec& spec);

struct Syllable {
  std::string c1;
  std::string c2;
  std::string v;

  std::string key() const { return c1 + "." + c2 + "." + v; }
  bool operator==(const Syllable&) const = default;
  auto operator<=>(const Syllable&) const = default;
};

// Durations, time-constant ranges and per-class glottal presets used to turn
// segment targets into an utterance.
struct ProductionConfig {
  double consonant_duration = 0.12;
  double vowel_duration = 0.30;
  double control_rate = 1000.0;
  tpe::Bound tau_supra{"tau_supra", 0.005, 0.02};
  tpe::Bound tau_glottal{"tau_glottal", 0.005, 0.04};
  // Delay of the glottal gesture after a voiceless obstruent.
  double voice_onset = 0.04;
  tam::GlottalPreset voiceless{1.0, 0.0, 0.0};
  tam::GlottalPreset voiced{0.25, 0.6, 0.0};
  tam::GlottalPreset sonorant{0.25, 1.0, 0.0};
  tam::GlottalPreset vowel{0.25, 1.0, 0.0};
  // Controls used when rendering prototypes.
  tam::GlottalControls prototype_glottal{0.3, 0.8};
  double prototype_tau = 0.012;

  static ProductionConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

tam::GlottalPreset preset_for(const ProductionConfig& cfg, const percept::Inventory& inventory,
                              const std::vector<objectives::Segment>& segments, std::size_t index);

// Builds an utterance from per-segment targets.
tam::UtteranceSpec make_utterance(const ProductionConfig& cfg, const percept::Inventory& inventory,
                                  const std::vector<objectives::Segment>& segments,
                                  const std::vector<artic::Target>& targets, double tau_supra, double tau_glottal,
                                  tam::GlottalControls glottal);

// Utterance of hand-authored prototypes: consonants then a vowel.
tam::UtteranceSpec prototype_utterance(const ProductionConfig& cfg, const artic::ArticulatorySpace& space,
                                       const percept::Inventory& inventory,
                                       const percept::PhoneticPrototypes& prototypes,
                                       const std::vector<std::string>& symbols);

// Maps a produced utterance to a percept.
class PerceptBackend {
 public:
  virtual ~PerceptBackend() = default;
  virtual percept::Percept perceive(const tam::UtteranceSpec& spec, const tam::Trajectory& traj,
                                    std::uint64_t noise_seed) const = 0;
  virtual std::string name() const = 0;
};

class OracleBackend final : public PerceptBackend {
 public:
  OracleBackend(const vtsynth::TractModel& tract, const percept::OraclePerceiver& oracle)
      : tract_(&tract), oracle_(&oracle) {}
  percept::Percept perceive(const tam::UtteranceSpec& spec, const tam::Trajectory& traj,
                            std::uint64_t noise_seed) const override;
  std::string name() const override { return "oracle"; }

 private:
  const vtsynth::TractModel* tract_;
  const percept::OraclePerceiver* oracle_;
};

class MelPrototypeBackend final : public PerceptBackend {
 public:
  MelPrototypeBackend(const vtsynth::TractModel& tract, vtsynth::SynthConfig synth, const percept::PrototypeBank& bank,
                      double temperature)
      : tract_(&tract), synth_(synth), bank_(&bank), temperature_(temperature) {}
  percept::Percept perceive(const tam::UtteranceSpec& spec, const tam::Trajectory& traj,
                            std::uint64_t noise_seed) const override;
  std::string name() const override { return "mel_prototype"; }

 private:
  const vtsynth::TractModel* tract_;
  vtsynth::SynthConfig synth_;
  const percept::PrototypeBank* bank_;
  double temperature_;
};

class ExternalBackend final : public PerceptBackend {
 public:
  ExternalBackend(const artic::ArticulatorySpace& space, vtsynth::ExternalSynthesizer& synth,
                  const percept::PrototypeBank& bank, double temperature)
      : space_(&space), synth_(&synth), bank_(&bank), temperature_(temperature) {}
  percept::Percept perceive(const tam::UtteranceSpec& spec, const tam::Trajectory& traj,
                            std::uint64_t noise_seed) const override;
  std::string name() const override { return "external"; }

 private:
  const artic::ArticulatorySpace* space_;
  vtsynth::ExternalSynthesizer* synth_;
  const percept::PrototypeBank* bank_;
  double temperature_;
};

struct Deps {
  const artic::ArticulatorySpace* space = nullptr;
  const percept::Inventory* inventory = nullptr;
  const vtsynth::TractModel* tract = nullptr;
  const PerceptBackend* backend = nullptr;
  ProductionConfig production;
  objectives::LossConfig loss;
  tpe::TpeConfig tpe;
  double fail_cap_factor = 50.0;
  // Test hook: returning true forces a gate failure for (pass, iteration).
  std::function<bool(std::size_t, std::size_t)> force_gate_failure;
};

struct EvaluationRecord {
  std::size_t pass = 0;
  std::size_t iter = 0;
  objectives::LossBreakdown loss;
  std::vector<double> params;
};

struct PassPlan {
  std::size_t index = 0;
  std::vector<objectives::Segment> segments;  // utterance order
  std::map<Role, artic::Target> fixed;        // targets from earlier passes
  std::size_t budget = 1;
  bool coart = false;
};

tpe::SearchSpace pass_search_space(const PassPlan& plan, const Deps& deps);

struct PassResult {
  std::size_t index = 0;
  std::map<Role, artic::Target> fixed_targets;  // inputs plus this pass's best
  std::optional<tam::UtteranceSpec> best_utterance;
  double best_loss = 0.0;
  std::optional<objectives::LossBreakdown> best_breakdown;
  std::optional<percept::Percept> best_percept;
  std::vector<EvaluationRecord> evaluations;
  std::size_t synthesized = 0;
  std::size_t gate_failures = 0;
  std::size_t dimensions = 0;
  bool exhausted = false;  // no gate-passing evaluation within the failure cap
};

PassResult run_pass(const PassPlan& plan, std::uint64_t seed, const Deps& deps);

// Segment lists of each pass, in strategy order.
std::vector<std::vector<objectives::Segment>> pass_segments(StrategyKind kind, const Syllable& syllable);

struct TrialResult {
  std::vector<PassResult> passes;
  std::optional<tam::UtteranceSpec> final_utterance;
  std::optional<percept::Percept> final_percept;
  percept::Identification identified;
  std::map<Role, artic::Target> targets;
  std::vector<double> c1_v_distance;  // per free supra dimension
  std::vector<double> c2_v_distance;
  std::string status = "ok";  // "ok" or "exhausted"
};

TrialResult run_strategy(const Syllable& syllable, const StrategySpec& spec, std::uint64_t seed, const Deps& deps);

}  // namespace babblekit::explore
