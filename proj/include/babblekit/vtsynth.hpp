#pragma once

// Simplified forward model: parameter frame -> area function -> radiated
// audio through a scattering-junction (Kelly-Lochbaum) tube.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "babblekit/artic.hpp"
#include "babblekit/tam.hpp"
#include "json.hpp"

namespace babblekit::vtsynth {

enum class Region { Pharyngeal, Velar, Palatal, Alveolar, Labial };

std::string_view to_string(Region r);

// One articulator's contribution to a constriction's closure degree:
// gain * (value - neutral) / (closed - neutral).
struct Driver {
  std::string dimension;
  double closed = 0.0;
  double gain = 1.0;
};

// Gaussian-profiled narrowing at a normalised position along the tract
// (0 = glottis, 1 = lips). Depth is degree * depth_max, degree >= 0. When
// the drivers move away from closure (degree < 0) the section widens by
// min(1, -degree) * expansion instead.
struct Constriction {
  Region region = Region::Velar;
  double center = 0.5;
  double width = 0.05;
  std::vector<Driver> drivers;
  // Optional articulator that moves the center: center + shift_gain * u,
  // u in [-1, 1] the dimension's position relative to its neutral.
  std::string shift_dimension;
  double shift_gain = 0.0;
  double expansion = 0.0;  // cm^2
};

struct TractConfig {
  double baseline_area = 3.0;       // A0, cm^2
  double depth_max = 3.0;           // cm^2
  double base_length = 17.5;        // L0, cm
  double protrusion_gain = 1.0;     // cm per LP unit
  std::string protrusion_dimension = "LP";
  double sound_speed = 35000.0;     // cm/s
  double audio_rate = 44100.0;
  // Upper bounds (exclusive) of the normalised-position partition
  // pharyngeal | velar | palatal | alveolar | labial.
  std::vector<double> region_bounds{0.35, 0.60, 0.78, 0.92};
  std::vector<Constriction> constrictions;

  double section_length() const { return sound_speed / (2.0 * audio_rate); }

  static TractConfig defaults();
  static TractConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct AreaFunction {
  std::vector<double> sections;  // cm^2, glottis -> lips
  double section_length = 0.0;   // cm
};

struct TubeFeatures {
  double min_area = 0.0;
  Region min_area_region = Region::Pharyngeal;
  std::size_t min_area_index = 0;
  double lip_area = 0.0;
};

// Precomputed dimension lookups for a (space, config) pair.
class TractModel {
 public:
  TractModel(const artic::ArticulatorySpace& space, TractConfig config);

  const TractConfig& config() const noexcept { return config_; }
  const artic::ArticulatorySpace& space() const noexcept { return *space_; }

  std::size_t section_count(std::span<const double> frame) const;
  double tract_length(std::span<const double> frame) const;
  Region region_of(std::size_t section, std::size_t n_sections) const;

  // Throws RangeError for frames outside the space.
  AreaFunction area_function(std::span<const double> frame) const;
  // Same profile sampled on a fixed number of sections (used while
  // synthesising so the waveguide keeps a constant length).
  AreaFunction area_function(std::span<const double> frame, std::size_t n_sections) const;

  TubeFeatures features(const AreaFunction& af) const;
  TubeFeatures features(std::span<const double> frame) const { return features(area_function(frame)); }

 private:
  struct ResolvedDriver {
    std::size_t dim;
    double neutral;
    double inv_span;
    double gain;
  };
  struct ResolvedConstriction {
    double center;
    double inv_width;
    std::vector<ResolvedDriver> drivers;
    std::ptrdiff_t shift_dim = -1;
    double shift_gain = 0.0;
    double expansion = 0.0;
  };

  void fill(std::span<const double> frame, std::size_t n, std::vector<double>& out) const;

  const artic::ArticulatorySpace* space_;
  TractConfig config_;
  std::vector<ResolvedConstriction> resolved_;
  std::ptrdiff_t protrusion_dim_ = -1;
};

struct AudioBuffer {
  double sample_rate = 44100.0;
  std::vector<double> samples;

  double duration() const noexcept { return samples.size() / sample_rate; }
};

struct SynthConfig {
  double f0 = 120.0;
  double open_phase = 0.4;
  double closing_phase = 0.16;
  double glottal_reflection = 0.97;
  // The lips radiate into a fixed open area; a mouth of lip_reference_area
  // reflects with lip_reflection, a closed one radiates nothing.
  double lip_reflection = -0.9;
  double lip_reference_area = 3.0;  // cm2
  double damping = 0.9995;          // per half-sample propagation step
  double aspiration_gain = 0.5;
  double output_gain = 0.5;         // applied before clipping to [-1, 1]

  static SynthConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// Reflection coefficient between adjacent sections,
// (A_i - A_{i+1}) / (A_i + A_{i+1}); 0 when both are closed.
double reflection(double a_left, double a_right);

// Runs the waveguide with one area function per output sample (or a single
// one held constant) and a source sample per output sample. Returns the
// radiated pressure (first difference of the lip output), unscaled.
std::vector<double> simulate_tube(std::span<const std::vector<double>> areas,
                                  std::span<const double> source, const SynthConfig& cfg);

// Renders a trajectory to audio. Glottal controls are read from the
// trajectory's glottal columns (chink area first, relative amplitude
// second). Throws Error on an empty trajectory or non-finite output.
AudioBuffer synthesize(const TractModel& model, const tam::Trajectory& traj, const SynthConfig& cfg,
                       std::uint64_t noise_seed);

// 16-bit PCM, mono, little-endian.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);
AudioBuffer read_wav(const std::filesystem::path& path);

}  // namespace babblekit::vtsynth
