#pragma once

// Experiment orchestration and analysis: trial matrices run over a worker
// pool with ordered, resumable persistence; identification-rate tables;
// per-dimension coarticulation comparisons; Welch's t-test.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "babblekit/explore.hpp"
#include "json.hpp"

namespace babblekit::harness {

using explore::StrategySpec;
using explore::Syllable;

struct ExperimentPlan {
  std::vector<Syllable> syllables;
  std::size_t trials_per_syllable = 5;
  std::vector<StrategySpec> strategies;
  std::uint64_t base_seed = 0;

  void validate(const percept::Inventory& inventory) const;
  std::size_t job_count() const { return syllables.size() * trials_per_syllable * strategies.size(); }
};

std::uint64_t trial_seed(std::uint64_t base_seed, const Syllable& s, std::size_t trial, const StrategySpec& strategy);
// "<c1>.<c2>.<v>/<trial>/<strategy label>"
std::string trial_id(const Syllable& s, std::size_t trial, const StrategySpec& strategy);

struct PassSummary {
  std::size_t index = 0;
  std::size_t budget = 0;
  std::size_t synthesized = 0;
  std::size_t gate_failures = 0;
  std::size_t dimensions = 0;
  double best_loss = 0.0;  // infinite when exhausted
  bool exhausted = false;

  bool operator==(const PassSummary&) const = default;
};

struct TrialRecord {
  Syllable syllable;
  std::string strategy;  // StrategySpec label
  bool coart = false;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<PassSummary> passes;
  std::optional<tam::UtteranceSpec> final_utterance;
  std::optional<percept::Percept> final_percept;
  percept::Identification identified;
  std::vector<double> c1_v_distance;
  std::vector<double> c2_v_distance;
  std::string status = "ok";

  std::string id() const;
  bool correct_vowel() const { return status == "ok" && identified.v == syllable.v; }
  bool correct_onset() const {
    return status == "ok" && identified.c1 == syllable.c1 && identified.c2 == syllable.c2;
  }
  bool correct_syllable() const { return correct_vowel() && correct_onset(); }

  nlohmann::json to_json(const artic::ArticulatorySpace& space) const;
  static TrialRecord from_json(const artic::ArticulatorySpace& space, const nlohmann::json& doc);
};

TrialRecord make_record(const Syllable& s, std::size_t trial, const StrategySpec& strategy, std::uint64_t seed,
                        const explore::TrialResult& result);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: nothing persisted
  std::size_t workers = 1;
  bool run_log = true;
  bool resume = true;
  // Stamped into the first line of every output file.
  std::string config_hash;
  std::function<void(const TrialRecord&)> on_record;  // progress hook, called in job order
};

// Jobs ordered syllable-major, then trial, then strategy. Records are
// appended to out_dir/records.jsonl strictly in job order whatever the worker
// count, so an interrupted run resumes by skipping the completed prefix.
// Evaluations go to out_dir/runlog.jsonl. Throws Error on I/O failure after
// the records written so far are flushed.
std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan, const explore::Deps& deps,
                                        const RunOptions& options);

// Reads a records file, skipping header lines.
std::vector<TrialRecord> load_records(const artic::ArticulatorySpace& space, const std::filesystem::path& path);

std::string header_line(std::string_view kind, std::string_view config_hash);

// ---------------------------------------------------------------------------

struct IdRates {
  std::string condition;
  std::size_t total = 0;
  double syllable = 0.0;  // percent
  double vowel = 0.0;
  double onset = 0.0;
};

// Throws Error on an empty set. Failed trials count as misidentified.
IdRates identification_rates(std::span<const TrialRecord> records, std::string condition = "");

// One row per strategy label, in order of first appearance.
std::vector<IdRates> identification_table(std::span<const TrialRecord> records);

void write_id_table(std::ostream& out, const std::vector<IdRates>& rows, std::string_view config_hash);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Throws Error when a sample has fewer than two values or both variances
// are zero.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Regularised incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
// P(T > t) for Student's t with df degrees of freedom.
double student_t_sf(double t, double df);

struct CoartRow {
  std::string dimension;
  double mean_off = 0.0;
  double mean_on = 0.0;
  double difference = 0.0;  // on - off
  WelchResult test;
};

// Per free supra dimension: mean |u_C - u_V| with the coarticulation
// objective off and on, their difference and a Welch test. Trials without
// final targets are skipped. Throws Error with fewer than two records per
// condition.
std::vector<CoartRow> coart_report(std::span<const TrialRecord> records, explore::Role consonant,
                                   const artic::ArticulatorySpace& space);

// TSV with the comparison, and plot-ready CSV (dimension, condition, mean, p).
void write_coart_table(std::ostream& out, const std::vector<CoartRow>& rows, std::string_view config_hash);
void write_coart_csv(std::ostream& out, const std::vector<CoartRow>& rows, std::string_view config_hash);

}  // namespace babblekit::harness
