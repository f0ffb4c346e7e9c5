#pragma once

// Optimisation goal and loss: somatosensory objectives on tube geometry, the
// coarticulation objective, weighted sub-vector distances and the penalty
// applied when the somatosensory gate fails.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "babblekit/percept.hpp"
#include "babblekit/vtsynth.hpp"
#include "json.hpp"

namespace babblekit::objectives {

enum class Role { C1, C2, V };

std::string_view to_string(Role r);

// One produced segment of an utterance.
struct Segment {
  Role role = Role::V;
  std::string symbol;
};

struct LossConfig {
  double w_art = 1.0;
  double w_aud = 2.0;
  double penalty_factor = 10.0;
  bool coart_objective = false;
  double vowel_min_area_cm2 = 0.25;

  static LossConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct SomatoGoal {
  // Per utterance segment: 0 (closure required), 1 (opening required) or
  // no objective.
  std::vector<std::optional<double>> closure_targets;
  // C1 only, present iff C1 is a plosive: 0 bilabial closure, 1 lips open.
  std::optional<double> lip_closure_target;
  std::optional<std::size_t> lip_segment;

  std::size_t size() const;
};

struct Goal {
  std::vector<Segment> segments;
  SomatoGoal somato;
  // (consonant, vowel) segment index pairs scored by coart_distance.
  std::vector<std::pair<std::size_t, std::size_t>> coart_pairs;
  std::vector<double> q_a;  // somato targets then one 0 per coarticulation pair
  percept::Percept auditory;  // one-hot

  // [q_a | q_c1 | q_c2 | q_v]
  std::vector<double> concat() const;
};

// Consonant segments fill the percept slots in utterance order; unused slots
// expect "absence". Closure objectives apply to a plosive C1 (0) and the
// vowel (1); the lip objective to a plosive C1; C2 gets none.
Goal make_goal(const percept::Inventory& inventory, const std::vector<Segment>& segments, bool coart_objective);

struct SomatoResult {
  std::vector<double> achieved;  // same order as the somato part of q_a
  bool pass = false;
};

// tubes: one summary per utterance segment, taken at the segment target.
SomatoResult eval_somatosensory(std::span<const vtsynth::TubeFeatures> tubes, const SomatoGoal& goal,
                                const LossConfig& cfg);

// Somato achieved values followed by the coarticulation distances.
std::vector<double> achieved_articulatory(const SomatoResult& somato, std::span<const double> coart_distances);

struct LossBreakdown {
  double d_a = 0.0;
  std::optional<double> d_c1;
  std::optional<double> d_c2;
  std::optional<double> d_v;
  bool gated = false;  // true when the somatosensory gate failed
  double total = 0.0;
};

// total = w_art * d_a + w_aud * (d_c1 + d_c2 + d_v), Euclidean sub-distances.
LossBreakdown compose_loss(const Goal& goal, const percept::Percept& percept, std::span<const double> achieved_artic,
                           const LossConfig& cfg);

// total = penalty_factor * d_a; auditory distances absent.
LossBreakdown penalty_loss(const Goal& goal, std::span<const double> achieved_artic, const LossConfig& cfg);

double euclidean(std::span<const double> a, std::span<const double> b);

}  // namespace babblekit::objectives
