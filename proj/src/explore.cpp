#include "babblekit/explore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "babblekit/error.hpp"
#include "babblekit/hash.hpp"

namespace babblekit::explore {

using objectives::Segment;

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Joint:
      return "joint";
    case StrategyKind::V_then_C1C2:
      return "V_then_C1C2";
    case StrategyKind::V_then_C1_then_C2:
      return "V_then_C1_then_C2";
    case StrategyKind::V_then_C2_then_C1:
      return "V_then_C2_then_C1";
  }
  return "joint";
}

StrategyKind parse_strategy(std::string_view text) {
  for (auto k : {StrategyKind::Joint, StrategyKind::V_then_C1C2, StrategyKind::V_then_C1_then_C2,
                 StrategyKind::V_then_C2_then_C1})
    if (to_string(k) == text) return k;
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::size_t StrategySpec::passes() const noexcept {
  switch (kind) {
    case StrategyKind::Joint:
      return 1;
    case StrategyKind::V_then_C1C2:
      return 2;
    default:
      return 3;
  }
}

void StrategySpec::validate() const {
  if (total_budget < passes())
    throw ConfigError("strategy " + std::string(to_string(kind)) + " needs a budget of at least " +
                      std::to_string(passes()));
  for (auto b : budget_split(*this))
    if (b == 0) throw ConfigError("budget " + std::to_string(total_budget) + " leaves a pass of " + label() + " empty");
}

std::string StrategySpec::label() const {
  return std::string(to_string(kind)) + (coart_enabled ? "+coart" : "");
}

std::vector<std::size_t> budget_split(const StrategySpec& spec) {
  const std::size_t b = spec.total_budget;
  std::vector<std::size_t> out;
  switch (spec.passes()) {
    case 1:
      out = {b};
      break;
    case 2:
      out = {b / 5, 4 * b / 5};
      break;
    default:
      out = {b / 5, 2 * b / 5, 2 * b / 5};
      break;
  }
  std::size_t sum = 0;
  for (auto x : out) sum += x;
  out.back() += b - sum;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

tam::GlottalPreset preset_from_json(const nlohmann::json& j, tam::GlottalPreset p) {
  p.chink_scale = j.value("chink_scale", p.chink_scale);
  p.amplitude_scale = j.value("amplitude_scale", p.amplitude_scale);
  p.onset_delay = j.value("onset_delay", p.onset_delay);
  return p;
}

nlohmann::json preset_to_json(const tam::GlottalPreset& p) {
  return {{"chink_scale", p.chink_scale}, {"amplitude_scale", p.amplitude_scale}, {"onset_delay", p.onset_delay}};
}

tpe::Bound bound_from_json(const nlohmann::json& j, tpe::Bound b) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(b.name + " must be a [lower, upper] pair");
  b.lower = j[0].get<double>();
  b.upper = j[1].get<double>();
  if (!(b.lower > 0.0 && b.lower < b.upper)) throw ConfigError(b.name + " needs 0 < lower < upper");
  return b;
}

}  // namespace

ProductionConfig ProductionConfig::from_json(const nlohmann::json& doc) {
  ProductionConfig c;
  c.consonant_duration = doc.value("consonant_duration", c.consonant_duration);
  c.vowel_duration = doc.value("vowel_duration", c.vowel_duration);
  c.control_rate = doc.value("control_rate", c.control_rate);
  if (doc.contains("tau_supra")) c.tau_supra = bound_from_json(doc.at("tau_supra"), c.tau_supra);
  if (doc.contains("tau_glottal")) c.tau_glottal = bound_from_json(doc.at("tau_glottal"), c.tau_glottal);
  c.voice_onset = doc.value("voice_onset", c.voice_onset);
  if (doc.contains("presets")) {
    const auto& p = doc.at("presets");
    if (p.contains("voiceless")) c.voiceless = preset_from_json(p.at("voiceless"), c.voiceless);
    if (p.contains("voiced")) c.voiced = preset_from_json(p.at("voiced"), c.voiced);
    if (p.contains("sonorant")) c.sonorant = preset_from_json(p.at("sonorant"), c.sonorant);
    if (p.contains("vowel")) c.vowel = preset_from_json(p.at("vowel"), c.vowel);
  }
  if (doc.contains("prototype_glottal")) {
    const auto& g = doc.at("prototype_glottal");
    c.prototype_glottal.chink_area = g.value("chink_area", c.prototype_glottal.chink_area);
    c.prototype_glottal.relative_amplitude = g.value("relative_amplitude", c.prototype_glottal.relative_amplitude);
  }
  c.prototype_tau = doc.value("prototype_tau", c.prototype_tau);
  if (!(c.consonant_duration > 0.0) || !(c.vowel_duration > 0.0))
    throw ConfigError("segment durations must be positive");
  if (!(c.control_rate > 0.0)) throw ConfigError("control_rate must be positive");
  if (!(c.voice_onset >= 0.0) || c.voice_onset >= std::min(c.consonant_duration, c.vowel_duration))
    throw ConfigError("voice_onset must be shorter than every segment");
  if (!(c.prototype_tau > 0.0)) throw ConfigError("prototype_tau must be positive");
  return c;
}

nlohmann::json ProductionConfig::to_json() const {
  return {{"consonant_duration", consonant_duration},
          {"vowel_duration", vowel_duration},
          {"control_rate", control_rate},
          {"tau_supra", {tau_supra.lower, tau_supra.upper}},
          {"tau_glottal", {tau_glottal.lower, tau_glottal.upper}},
          {"voice_onset", voice_onset},
          {"presets",
           {{"voiceless", preset_to_json(voiceless)},
            {"voiced", preset_to_json(voiced)},
            {"sonorant", preset_to_json(sonorant)},
            {"vowel", preset_to_json(vowel)}}},
          {"prototype_glottal",
           {{"chink_area", prototype_glottal.chink_area},
            {"relative_amplitude", prototype_glottal.relative_amplitude}}},
          {"prototype_tau", prototype_tau}};
}

namespace {

bool voiceless_obstruent(const percept::Inventory& inv, const Segment& s) {
  if (s.role == Role::V) return false;
  const auto& info = inv.info(s.symbol);
  return info.obstruent() && !info.voiced;
}

}  // namespace

tam::GlottalPreset preset_for(const ProductionConfig& cfg, const percept::Inventory& inventory,
                              const std::vector<Segment>& segments, std::size_t index) {
  const auto& s = segments.at(index);
  tam::GlottalPreset p;
  if (s.role == Role::V) {
    p = cfg.vowel;
  } else {
    const auto& info = inventory.info(s.symbol);
    if (info.obstruent())
      p = info.voiced ? cfg.voiced : cfg.voiceless;
    else
      p = cfg.sonorant;
  }
  if (index > 0 && voiceless_obstruent(inventory, segments[index - 1]) && !voiceless_obstruent(inventory, s))
    p.onset_delay = std::max(p.onset_delay, cfg.voice_onset);
  return p;
}

tam::UtteranceSpec make_utterance(const ProductionConfig& cfg, const percept::Inventory& inventory,
                                  const std::vector<Segment>& segments, const std::vector<artic::Target>& targets,
                                  double tau_supra, double tau_glottal, tam::GlottalControls glottal) {
  if (segments.size() != targets.size()) throw Error("make_utterance: one target per segment required");
  tam::UtteranceSpec spec;
  spec.tau_supra = tau_supra;
  spec.tau_glottal = tau_glottal;
  spec.glottal = glottal;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    tam::SegmentPlan seg;
    seg.target = targets[i];
    seg.duration = segments[i].role == Role::V ? cfg.vowel_duration : cfg.consonant_duration;
    seg.preset = preset_for(cfg, inventory, segments, i);
    spec.segments.push_back(std::move(seg));
  }
  return spec;
}

tam::UtteranceSpec prototype_utterance(const ProductionConfig& cfg, const artic::ArticulatorySpace& space,
                                       const percept::Inventory& inventory,
                                       const percept::PhoneticPrototypes& prototypes,
                                       const std::vector<std::string>& symbols) {
  if (symbols.empty()) throw Error("prototype utterance needs at least a vowel");
  if (symbols.size() > 3) throw Error("prototype utterance takes at most two consonants and a vowel");
  std::vector<Segment> segs;
  std::vector<artic::Target> targets;
  const Role roles[2] = {Role::C1, Role::C2};
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
    inventory.require_consonant(symbols[i]);
    segs.push_back({roles[i], symbols[i]});
    targets.push_back(prototypes.consonant_target(space, symbols[i]));
  }
  inventory.require_vowel(symbols.back());
  segs.push_back({Role::V, symbols.back()});
  targets.push_back(prototypes.vowel_target(space, symbols.back()));
  return make_utterance(cfg, inventory, segs, targets, cfg.prototype_tau, cfg.prototype_tau, cfg.prototype_glottal);
}

// ---------------------------------------------------------------------------

percept::Percept OracleBackend::perceive(const tam::UtteranceSpec& spec, const tam::Trajectory& traj,
                                         std::uint64_t) const {
  const auto timeline = percept::tube_timeline(*tract_, traj);
  return oracle_->perceive(traj, timeline, spec);
}

percept::Percept MelPrototypeBackend::perceive(const tam::UtteranceSpec&, const tam::Trajectory& traj,
                                               std::uint64_t noise_seed) const {
  const auto audio = vtsynth::synthesize(*tract_, traj, synth_, noise_seed);
  return percept::encode(audio, *bank_, temperature_);
}

percept::Percept ExternalBackend::perceive(const tam::UtteranceSpec& spec, const tam::Trajectory&,
                                           std::uint64_t) const {
  const auto reply = synth_->render(*space_, spec, bank_->frontend().sample_rate);
  return percept::encode(vtsynth::read_wav(reply.wav_path), *bank_, temperature_);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Role> free_roles(const PassPlan& plan) {
  std::vector<Role> out;
  for (const auto& s : plan.segments)
    if (!plan.fixed.contains(s.role)) out.push_back(s.role);
  return out;
}

}  // namespace

tpe::SearchSpace pass_search_space(const PassPlan& plan, const Deps& deps) {
  const auto& space = *deps.space;
  std::vector<tpe::Bound> dims;
  for (auto role : free_roles(plan)) {
    for (auto d : space.free_supra())
      dims.push_back({std::string(objectives::to_string(role)) + "." + space[d].name, space[d].min, space[d].max});
  }
  for (auto d : space.glottal()) dims.push_back({space[d].name, space[d].min, space[d].max});
  dims.push_back(deps.production.tau_supra);
  dims.push_back(deps.production.tau_glottal);
  return tpe::SearchSpace(std::move(dims));
}

PassResult run_pass(const PassPlan& plan, std::uint64_t seed, const Deps& deps) {
  if (plan.budget < 1) throw Error("run_pass: budget must be at least 1");
  if (!deps.space || !deps.inventory || !deps.tract || !deps.backend) throw Error("run_pass: incomplete dependencies");
  const auto& space = *deps.space;
  const auto goal = objectives::make_goal(*deps.inventory, plan.segments, plan.coart);
  const auto roles = free_roles(plan);
  const std::size_t n_free = space.free_supra().size();
  if (space.glottal().size() != 2) throw ConfigError("the space needs exactly two glottal dimensions");

  PassResult result;
  result.index = plan.index;
  result.fixed_targets = plan.fixed;
  result.best_loss = std::numeric_limits<double>::infinity();

  tpe::Optimizer opt(pass_search_space(plan, deps), deps.tpe, seed);
  result.dimensions = opt.space().size();
  const auto fail_cap = static_cast<std::size_t>(deps.fail_cap_factor * static_cast<double>(plan.budget));

  std::vector<artic::Target> targets(plan.segments.size());
  std::vector<vtsynth::TubeFeatures> tubes(plan.segments.size());
  std::vector<double> coart(goal.coart_pairs.size());
  std::vector<double> best_point;

  std::size_t iter = 0;
  while (result.synthesized < plan.budget && result.gate_failures <= fail_cap) {
    auto point = opt.ask();
    for (std::size_t i = 0; i < plan.segments.size(); ++i) {
      const auto role = plan.segments[i].role;
      if (auto it = plan.fixed.find(role); it != plan.fixed.end()) {
        targets[i] = it->second;
      } else {
        const auto k = static_cast<std::size_t>(std::find(roles.begin(), roles.end(), role) - roles.begin());
        targets[i] = space.make_target(std::span<const double>(point).subspan(k * n_free, n_free));
      }
      tubes[i] = deps.tract->features(deps.tract->area_function(targets[i].values));
    }
    const std::size_t g = roles.size() * n_free;
    const tam::GlottalControls glottal{point[g], point[g + 1]};
    const double tau_supra = point[g + 2];
    const double tau_glottal = point[g + 3];

    const auto somato = objectives::eval_somatosensory(tubes, goal.somato, deps.loss);
    for (std::size_t c = 0; c < goal.coart_pairs.size(); ++c) {
      const auto [a, b] = goal.coart_pairs[c];
      coart[c] = artic::coart_distance(space, targets[a], targets[b]);
    }
    const auto achieved = objectives::achieved_articulatory(somato, coart);
    const bool forced = deps.force_gate_failure && deps.force_gate_failure(plan.index, iter);

    EvaluationRecord rec;
    rec.pass = plan.index;
    rec.iter = iter;
    if (!somato.pass || forced) {
      rec.loss = objectives::penalty_loss(goal, achieved, deps.loss);
      ++result.gate_failures;
    } else {
      auto spec = make_utterance(deps.production, *deps.inventory, plan.segments, targets, tau_supra, tau_glottal,
                                 glottal);
      const auto traj = tam::generate_trajectory(space, spec, deps.production.control_rate);
      const auto noise_seed = hash_combine(seed, iter);
      auto percept = deps.backend->perceive(spec, traj, noise_seed);
      rec.loss = objectives::compose_loss(goal, percept, achieved, deps.loss);
      ++result.synthesized;
      if (rec.loss.total < result.best_loss) {
        result.best_loss = rec.loss.total;
        result.best_breakdown = rec.loss;
        result.best_percept = std::move(percept);
        result.best_utterance = std::move(spec);
        best_point = point;
      }
    }
    rec.params = point;
    opt.tell(std::move(point), rec.loss.total);
    result.evaluations.push_back(std::move(rec));
    ++iter;
  }

  if (result.synthesized == 0) {
    result.exhausted = true;
    result.best_loss = std::numeric_limits<double>::infinity();
    return result;
  }
  for (std::size_t i = 0; i < plan.segments.size(); ++i)
    result.fixed_targets[plan.segments[i].role] = result.best_utterance->segments[i].target;
  return result;
}

std::vector<std::vector<Segment>> pass_segments(StrategyKind kind, const Syllable& s) {
  const Segment c1{Role::C1, s.c1};
  const Segment c2{Role::C2, s.c2};
  const Segment v{Role::V, s.v};
  switch (kind) {
    case StrategyKind::Joint:
      return {{c1, c2, v}};
    case StrategyKind::V_then_C1C2:
      return {{v}, {c1, c2, v}};
    case StrategyKind::V_then_C1_then_C2:
      return {{v}, {c1, v}, {c1, c2, v}};
    case StrategyKind::V_then_C2_then_C1:
      return {{v}, {c2, v}, {c1, c2, v}};
  }
  return {};
}

TrialResult run_strategy(const Syllable& syllable, const StrategySpec& spec, std::uint64_t seed, const Deps& deps) {
  spec.validate();
  const auto& inv = *deps.inventory;
  for (const auto& c : {syllable.c1, syllable.c2}) {
    inv.require_consonant(c);
    if (c == inv.absence()) throw ConfigError("syllable " + syllable.key() + ": both onset consonants are required");
  }
  inv.require_vowel(syllable.v);

  const auto budgets = budget_split(spec);
  const auto plans = pass_segments(spec.kind, syllable);
  TrialResult trial;
  std::map<Role, artic::Target> fixed;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    PassPlan plan;
    plan.index = p;
    plan.segments = plans[p];
    plan.budget = budgets[p];
    plan.coart = spec.coart_enabled;
    // Targets fixed by earlier passes; the segments produced for the first
    // time in this pass stay free.
    for (const auto& s : plan.segments)
      if (auto it = fixed.find(s.role); it != fixed.end()) plan.fixed.insert(*it);
    auto result = run_pass(plan, hash_combine(seed, p), deps);
    const bool exhausted = result.exhausted;
    if (!exhausted) fixed = result.fixed_targets;
    trial.passes.push_back(std::move(result));
    if (exhausted) {
      trial.status = "exhausted";
      return trial;
    }
  }

  const auto& last = trial.passes.back();
  trial.final_utterance = last.best_utterance;
  trial.final_percept = last.best_percept;
  trial.identified = percept::identify(*trial.final_percept, inv);
  trial.targets = fixed;
  trial.c1_v_distance = artic::per_dimension_distance(*deps.space, fixed.at(Role::C1), fixed.at(Role::V));
  trial.c2_v_distance = artic::per_dimension_distance(*deps.space, fixed.at(Role::C2), fixed.at(Role::V));
  return trial;
}

}  // namespace babblekit::explore
