#pragma once

// Target approximation: each articulatory parameter follows a critically
// damped third-order response toward the static target of the current
// segment, with value, velocity and acceleration continuous across segment
// boundaries.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "babblekit/artic.hpp"
#include "json.hpp"

namespace babblekit::tam {

struct TamState {
  double value = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
};

// y(t) = (c0 + c1 t + c2 t^2) exp(-t / tau) + target, t measured from onset.
struct TamCoefficients {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double target = 0.0;
  double tau = 1.0;

  double value(double t) const;
  TamState state(double t) const;
};

// Throws Error when tau <= 0.
TamCoefficients solve_segment(const TamState& initial, double target, double tau);

struct GlottalControls {
  double chink_area = 0.0;
  double relative_amplitude = 0.0;

  bool operator==(const GlottalControls&) const = default;
};

// How a segment uses the per-utterance glottal controls.
struct GlottalPreset {
  double chink_scale = 1.0;
  double amplitude_scale = 1.0;
  // Glottal targets of this segment switch on this long after its onset.
  double onset_delay = 0.0;

  bool operator==(const GlottalPreset&) const = default;
};

struct SegmentPlan {
  artic::Target target;
  double duration = 0.0;  // seconds
  GlottalPreset preset;

  bool operator==(const SegmentPlan&) const = default;
};

struct UtteranceSpec {
  std::vector<SegmentPlan> segments;
  double tau_supra = 0.015;
  double tau_glottal = 0.015;
  GlottalControls glottal;

  double total_duration() const;
  // Onset time of every segment plus the final end time.
  std::vector<double> boundaries() const;

  bool operator==(const UtteranceSpec&) const = default;
};

struct Trajectory {
  double sample_rate = 1000.0;
  std::size_t columns = 0;
  std::vector<double> data;  // row-major, frames x columns

  std::size_t frames() const noexcept { return columns == 0 ? 0 : data.size() / columns; }
  std::span<const double> frame(std::size_t k) const { return {data.data() + k * columns, columns}; }
  double at(std::size_t k, std::size_t column) const { return data[k * columns + column]; }
  double time(std::size_t k) const noexcept { return static_cast<double>(k) / sample_rate; }
};

// Throws Error on an invalid spec (no segments, non-positive durations or
// time constants, targets outside the space, glottal controls out of range).
void validate(const artic::ArticulatorySpace& space, const UtteranceSpec& spec);

// Frame count is ceil(total duration x sample_rate); frame k sits at k / rate.
// The state starts at the neutral configuration at rest.
Trajectory generate_trajectory(const artic::ArticulatorySpace& space, const UtteranceSpec& spec,
                               double sample_rate = 1000.0);

// {"segments": [{"target": {dim: value}, "duration": s, "preset": {...}}],
//  "tau_supra": s, "tau_glottal": s,
//  "glottal": {"chink_area": cm2, "relative_amplitude": r}}
nlohmann::json to_json(const artic::ArticulatorySpace& space, const UtteranceSpec& spec);
// Unlisted target dimensions are neutral; fixed and derived dimensions follow
// their rules. Throws ConfigError on unknown names or malformed input.
UtteranceSpec utterance_from_json(const artic::ArticulatorySpace& space, const nlohmann::json& doc);

// Time column followed by one column per dimension.
void write_csv(std::ostream& out, const artic::ArticulatorySpace& space, const Trajectory& traj);

}  // namespace babblekit::tam
