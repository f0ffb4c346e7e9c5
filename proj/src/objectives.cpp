#include "babblekit/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "babblekit/error.hpp"

namespace babblekit::objectives {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::C1:
      return "C1";
    case Role::C2:
      return "C2";
    case Role::V:
      return "V";
  }
  return "V";
}

LossConfig LossConfig::from_json(const nlohmann::json& doc) {
  LossConfig c;
  c.w_art = doc.value("w_art", c.w_art);
  c.w_aud = doc.value("w_aud", c.w_aud);
  c.penalty_factor = doc.value("penalty_factor", c.penalty_factor);
  if (doc.contains("coart_objective")) {
    const auto& v = doc.at("coart_objective");
    if (v.is_boolean()) {
      c.coart_objective = v.get<bool>();
    } else {
      const auto s = v.get<std::string>();
      if (s != "on" && s != "off") throw ConfigError("coart_objective must be 'on' or 'off'");
      c.coart_objective = s == "on";
    }
  }
  c.vowel_min_area_cm2 = doc.value("vowel_min_area_cm2", c.vowel_min_area_cm2);
  if (!(c.w_art > 0.0) || !(c.w_aud > 0.0) || !(c.penalty_factor > 0.0))
    throw ConfigError("loss weights and penalty factor must be positive");
  if (!(c.vowel_min_area_cm2 > 0.0)) throw ConfigError("vowel_min_area_cm2 must be positive");
  return c;
}

nlohmann::json LossConfig::to_json() const {
  return {{"w_art", w_art},
          {"w_aud", w_aud},
          {"penalty_factor", penalty_factor},
          {"coart_objective", coart_objective ? "on" : "off"},
          {"vowel_min_area_cm2", vowel_min_area_cm2}};
}

std::size_t SomatoGoal::size() const {
  std::size_t n = lip_closure_target ? 1 : 0;
  for (const auto& c : closure_targets) n += c ? 1 : 0;
  return n;
}

std::vector<double> Goal::concat() const {
  auto out = q_a;
  const auto aud = auditory.concat();
  out.insert(out.end(), aud.begin(), aud.end());
  return out;
}

Goal make_goal(const percept::Inventory& inventory, const std::vector<Segment>& segments, bool coart_objective) {
  if (segments.empty() || segments.back().role != Role::V) throw Error("goal: utterance must end in a vowel");
  if (segments.size() > 3) throw Error("goal: at most two consonants");
  Goal g;
  g.segments = segments;
  std::size_t cons_slot[2] = {0, 0};
  std::size_t vowel = 0;
  const std::size_t vowel_seg = segments.size() - 1;

  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    std::optional<double> closure;
    if (s.role == Role::V) {
      if (i != vowel_seg) throw Error("goal: the vowel must be the last segment");
      vowel = inventory.require_vowel(s.symbol);
      closure = 1.0;
    } else {
      cons_slot[i] = inventory.require_consonant(s.symbol);
      if (s.role == Role::C1 && inventory.info(s.symbol).plosive()) {
        closure = 0.0;
        g.somato.lip_closure_target = inventory.info(s.symbol).place == percept::Place::Labial ? 0.0 : 1.0;
        g.somato.lip_segment = i;
      }
      if (coart_objective) g.coart_pairs.emplace_back(i, vowel_seg);
    }
    g.somato.closure_targets.push_back(closure);
  }

  for (const auto& c : g.somato.closure_targets)
    if (c) g.q_a.push_back(*c);
  if (g.somato.lip_closure_target) g.q_a.push_back(*g.somato.lip_closure_target);
  g.q_a.insert(g.q_a.end(), g.coart_pairs.size(), 0.0);
  g.auditory = percept::one_hot(cons_slot[0], cons_slot[1], vowel);
  return g;
}

SomatoResult eval_somatosensory(std::span<const vtsynth::TubeFeatures> tubes, const SomatoGoal& goal,
                                const LossConfig& cfg) {
  if (tubes.size() != goal.closure_targets.size())
    throw Error("somatosensory evaluation: expected " + std::to_string(goal.closure_targets.size()) +
                " segment windows, got " + std::to_string(tubes.size()));
  SomatoResult r;
  r.pass = true;
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    const auto& target = goal.closure_targets[i];
    if (!target) continue;
    const double a = tubes[i].min_area;
    double v;
    if (a <= 0.0)
      v = 0.0;
    else if (a >= cfg.vowel_min_area_cm2)
      v = 1.0;
    else
      v = a / cfg.vowel_min_area_cm2;
    r.achieved.push_back(v);
    if (v != *target) r.pass = false;
  }
  if (goal.lip_closure_target) {
    if (!goal.lip_segment || *goal.lip_segment >= tubes.size()) throw Error("somatosensory evaluation: missing lip window");
    const double v = tubes[*goal.lip_segment].lip_area <= 0.0 ? 0.0 : 1.0;
    r.achieved.push_back(v);
    if (v != *goal.lip_closure_target) r.pass = false;
  }
  return r;
}

std::vector<double> achieved_articulatory(const SomatoResult& somato, std::span<const double> coart_distances) {
  auto out = somato.achieved;
  out.insert(out.end(), coart_distances.begin(), coart_distances.end());
  return out;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("distance between vectors of different length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

LossBreakdown compose_loss(const Goal& goal, const percept::Percept& percept, std::span<const double> achieved_artic,
                           const LossConfig& cfg) {
  LossBreakdown l;
  l.d_a = euclidean(goal.q_a, achieved_artic);
  l.d_c1 = euclidean(goal.auditory.q_c1, percept.q_c1);
  l.d_c2 = euclidean(goal.auditory.q_c2, percept.q_c2);
  l.d_v = euclidean(goal.auditory.q_v, percept.q_v);
  l.total = cfg.w_art * l.d_a + cfg.w_aud * (*l.d_c1 + *l.d_c2 + *l.d_v);
  return l;
}

LossBreakdown penalty_loss(const Goal& goal, std::span<const double> achieved_artic, const LossConfig& cfg) {
  LossBreakdown l;
  l.d_a = euclidean(goal.q_a, achieved_artic);
  l.gated = true;
  l.total = cfg.penalty_factor * l.d_a;
  return l;
}

}  // namespace babblekit::objectives
