#pragma once

// Auditory perceptual mapping: audio (or, for the oracle, articulation) to a
// 64-dimensional soft classification [q_c1 | q_c2 | q_v], and argmax
// identification of the encoded symbols.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "babblekit/artic.hpp"
#include "babblekit/tam.hpp"
#include "babblekit/vtsynth.hpp"
#include "json.hpp"

namespace babblekit::percept {

inline constexpr std::size_t kConsonantCount = 24;
inline constexpr std::size_t kVowelCount = 16;
inline constexpr std::size_t kPerceptSize = 2 * kConsonantCount + kVowelCount;

enum class Manner { Absence, Stop, Fricative, Affricate, Nasal, Approximant };
enum class Place { None, Labial, Dental, Alveolar, Palatal, Velar, Glottal };

struct PhoneInfo {
  Manner manner = Manner::Absence;
  Place place = Place::None;
  bool voiced = false;

  bool plosive() const noexcept { return manner == Manner::Stop; }
  bool obstruent() const noexcept {
    return manner == Manner::Stop || manner == Manner::Fricative || manner == Manner::Affricate;
  }
};

// Consonant index 0 is "absence".
class Inventory {
 public:
  Inventory(std::vector<std::string> consonants, std::vector<PhoneInfo> info, std::vector<std::string> vowels);

  static Inventory from_json(const nlohmann::json& doc);
  static Inventory load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<std::string>& consonants() const noexcept { return consonants_; }
  const std::vector<std::string>& vowels() const noexcept { return vowels_; }
  const std::string& absence() const noexcept { return consonants_.front(); }

  std::optional<std::size_t> consonant_index(std::string_view symbol) const;
  std::optional<std::size_t> vowel_index(std::string_view symbol) const;
  // Throw ConfigError on unknown symbols.
  std::size_t require_consonant(std::string_view symbol) const;
  std::size_t require_vowel(std::string_view symbol) const;

  const PhoneInfo& info(std::string_view consonant) const;

 private:
  std::vector<std::string> consonants_;
  std::vector<PhoneInfo> info_;
  std::vector<std::string> vowels_;
};

struct Percept {
  std::vector<double> q_c1 = std::vector<double>(kConsonantCount, 0.0);
  std::vector<double> q_c2 = std::vector<double>(kConsonantCount, 0.0);
  std::vector<double> q_v = std::vector<double>(kVowelCount, 0.0);

  std::vector<double> concat() const;
  static Percept from_concat(std::span<const double> v);
  // Non-negative sub-vectors each summing to 1 within tol.
  bool valid(double tol = 1e-9) const;

  bool operator==(const Percept&) const = default;
};

Percept one_hot(std::size_t c1, std::size_t c2, std::size_t v);

struct Identification {
  std::string c1;
  std::string c2;
  std::string v;

  bool operator==(const Identification&) const = default;
};

// Per-slot argmax; ties resolve to the lowest index.
Identification identify(const Percept& p, const Inventory& inventory);

// ---------------------------------------------------------------------------
// Mel front end

struct MelConfig {
  double sample_rate = 44100.0;
  double window_seconds = 0.025;
  double hop_seconds = 0.010;
  std::size_t bands = 40;
  double floor = 1e-10;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 -> Nyquist

  std::size_t window_length() const;
  std::size_t hop_length() const;
  std::size_t fft_size() const;
  double upper_frequency() const { return fmax > 0.0 ? fmax : 0.5 * sample_rate; }
  // Triangular filter weights, bands x (fft_size / 2 + 1).
  std::vector<std::vector<double>> filterbank() const;

  static MelConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  std::string hash() const;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelMatrix {
  std::size_t frames = 0;
  std::size_t bands = 0;
  std::vector<double> data;  // row-major

  std::span<const double> row(std::size_t f) const { return {data.data() + f * bands, bands}; }
  double at(std::size_t f, std::size_t b) const { return data[f * bands + b]; }
};

// log(mel power + floor) per frame; frame count floor((len - window) / hop) + 1.
// Throws Error on a sample-rate mismatch or audio shorter than one window.
MelMatrix mel_spectrogram(const vtsynth::AudioBuffer& audio, const MelConfig& cfg);

// DTW with unit step weights over per-frame Euclidean distances,
// divided by the length of the optimal path. `offset` is added to every
// entry of `a` before comparison.
double dtw_distance(const MelMatrix& a, const MelMatrix& b, double offset = 0.0);

// ---------------------------------------------------------------------------
// Prototype bank

enum class Slot { C1 = 0, C2 = 1, V = 2 };
std::string_view to_string(Slot s);

class PrototypeBank {
 public:
  PrototypeBank(Inventory inventory, MelConfig frontend);

  const Inventory& inventory() const noexcept { return inventory_; }
  const MelConfig& frontend() const noexcept { return frontend_; }
  std::string frontend_hash() const { return frontend_.hash(); }

  void add(Slot slot, const std::string& symbol, MelMatrix mel);
  // Prototypes per symbol index of the slot's symbol list.
  const std::vector<std::vector<MelMatrix>>& slot(Slot s) const { return slots_[static_cast<int>(s)]; }
  std::size_t entry_count() const;

  // Directory with manifest.json and one binary matrix per prototype.
  void save(const std::filesystem::path& dir) const;
  // Throws Error when the manifest hashes do not match the content or
  // expected_frontend (when given) differs from the stored one.
  static PrototypeBank load(const std::filesystem::path& dir, const MelConfig* expected_frontend = nullptr);

  std::string content_hash() const;

 private:
  Inventory inventory_;
  MelConfig frontend_;
  std::array<std::vector<std::vector<MelMatrix>>, 3> slots_;
};

// Soft assignment per slot: softmax(-d / temperature) over the symbols that
// have prototypes, d the peak-aligned DTW distance. A slot without any
// prototype puts all mass on index 0.
Percept encode(const vtsynth::AudioBuffer& audio, const PrototypeBank& bank, double temperature = 0.1);

// ---------------------------------------------------------------------------
// Hand-authored articulatory configurations per symbol (model units,
// unspecified dimensions neutral).

struct PhoneticPrototypes {
  std::map<std::string, std::map<std::string, double>> consonants;
  std::map<std::string, std::map<std::string, double>> vowels;

  static PhoneticPrototypes from_json(const nlohmann::json& doc);
  static PhoneticPrototypes load(const std::filesystem::path& path);

  artic::Target consonant_target(const artic::ArticulatorySpace& space, const std::string& symbol) const;
  artic::Target vowel_target(const artic::ArticulatorySpace& space, const std::string& symbol) const;
};

// Renders a sequence of segment symbols (consonants then a vowel) to audio.
using Renderer = std::function<vtsynth::AudioBuffer(const std::vector<std::string>& segments)>;

// C1 and C2 slots: each consonant with a prototype rendered before the
// reference vowel; "absence" and the V slot: vowel-only renderings.
PrototypeBank build_prototype_bank(const Inventory& inventory, const PhoneticPrototypes& prototypes,
                                   const MelConfig& frontend, const Renderer& render,
                                   const std::string& reference_vowel = "ax");

// ---------------------------------------------------------------------------
// Oracle percept: classifies segments from articulation and tube geometry.

struct OracleConfig {
  double closure_area = 1e-9;      // at or below: complete closure
  double fricative_area = 0.15;    // (closure, fricative]: turbulent narrowing
  double approximant_area = 1.2;   // (fricative, approximant]: approximant
  double voiceless_chink = 0.2;    // mean chink area at or above: voiceless
  double dental_threshold = 0.75;  // normalised tongue-tip advancement for dental
  double rounded_threshold = 0.6;  // normalised lip protrusion for /r/ vs /y/
  std::string dental_dimension = "TTX";
  std::string rounding_dimension = "LP";
  std::vector<std::string> vowel_features{"TCX", "JA", "LP"};
  double vowel_quantum = 0.05;

  static OracleConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

class OraclePerceiver {
 public:
  OraclePerceiver(const artic::ArticulatorySpace& space, const Inventory& inventory,
                  const PhoneticPrototypes& prototypes, OracleConfig cfg = {});

  // Segments before the last are consonants in slot order; the last is the
  // vowel. Throws Error when the timeline does not cover every frame or the
  // utterance has no vowel or more than two consonants.
  Percept perceive(const tam::Trajectory& traj, std::span<const vtsynth::TubeFeatures> timeline,
                   const tam::UtteranceSpec& spec) const;

  std::size_t classify_vowel(std::span<const double> frame) const;
  std::size_t classify_consonant(const tam::Trajectory& traj, std::span<const vtsynth::TubeFeatures> timeline,
                                 std::size_t begin, std::size_t end) const;

  const OracleConfig& config() const noexcept { return cfg_; }

 private:
  std::vector<double> vowel_point(std::span<const double> frame) const;

  const artic::ArticulatorySpace* space_;
  const Inventory* inventory_;
  OracleConfig cfg_;
  std::vector<std::size_t> feature_dims_;
  std::vector<std::vector<double>> vowel_points_;  // per inventory vowel; empty if no prototype
  std::size_t ca_dim_ = 0;
  std::size_t dental_dim_ = 0;
  std::size_t rounding_dim_ = 0;
};

// Tube features for every trajectory frame.
std::vector<vtsynth::TubeFeatures> tube_timeline(const vtsynth::TractModel& model, const tam::Trajectory& traj);

}  // namespace babblekit::percept
