#include "babblekit/tam.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "babblekit/error.hpp"

namespace babblekit::tam {

using artic::ArticulatorySpace;
using artic::DimensionGroup;

double TamCoefficients::value(double t) const {
  return (c0 + t * (c1 + t * c2)) * std::exp(-t / tau) + target;
}

TamState TamCoefficients::state(double t) const {
  const double e = std::exp(-t / tau);
  const double p = c0 + t * (c1 + t * c2);
  const double dp = c1 + 2.0 * c2 * t;
  const double ddp = 2.0 * c2;
  const double k = 1.0 / tau;
  return {p * e + target, (dp - k * p) * e, (ddp - 2.0 * k * dp + k * k * p) * e};
}

TamCoefficients solve_segment(const TamState& initial, double target, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("solve_segment: time constant must be positive");
  TamCoefficients c;
  c.target = target;
  c.tau = tau;
  c.c0 = initial.value - target;
  c.c1 = initial.velocity + c.c0 / tau;
  c.c2 = 0.5 * (initial.acceleration + 2.0 * c.c1 / tau - c.c0 / (tau * tau));
  return c;
}

double UtteranceSpec::total_duration() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration;
  return total;
}

std::vector<double> UtteranceSpec::boundaries() const {
  std::vector<double> b{0.0};
  for (const auto& s : segments) b.push_back(b.back() + s.duration);
  return b;
}

void validate(const ArticulatorySpace& space, const UtteranceSpec& spec) {
  if (spec.segments.empty()) throw Error("utterance has no segments");
  if (!(spec.tau_supra > 0.0) || !(spec.tau_glottal > 0.0))
    throw Error("utterance time constants must be positive");
  for (const auto& s : spec.segments) {
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) throw Error("segment duration must be positive");
    if (s.preset.onset_delay < 0.0 || s.preset.onset_delay >= s.duration)
      throw Error("glottal onset delay must lie within its segment");
    // Glottal entries are filled from the utterance controls, so only the
    // upper-vocal-tract part of each target is checked here.
    auto t = s.target;
    for (auto g : space.glottal()) t.values.at(g) = space[g].neutral;
    space.validate(t);
  }
  const auto& gl = space.glottal();
  if (gl.size() >= 2) {
    const auto& ca = space[gl[0]];
    const auto& ra = space[gl[1]];
    if (spec.glottal.chink_area < ca.min || spec.glottal.chink_area > ca.max)
      throw RangeError(ca.name, "chink area outside configured bounds");
    if (spec.glottal.relative_amplitude < ra.min || spec.glottal.relative_amplitude > ra.max)
      throw RangeError(ra.name, "relative amplitude outside configured bounds");
  }
}

namespace {

struct Step {
  double onset;
  double target;
};

// Glottal columns: first glottal dimension is the chink area, the second the
// relative amplitude.
double glottal_target(const ArticulatorySpace& space, std::size_t dim, const UtteranceSpec& spec,
                      const SegmentPlan& seg) {
  const auto& gl = space.glottal();
  const auto& d = space[dim];
  double v = d.neutral;
  if (!gl.empty() && dim == gl[0]) v = spec.glottal.chink_area * seg.preset.chink_scale;
  if (gl.size() >= 2 && dim == gl[1]) v = spec.glottal.relative_amplitude * seg.preset.amplitude_scale;
  return std::clamp(v, d.min, d.max);
}

}  // namespace

Trajectory generate_trajectory(const ArticulatorySpace& space, const UtteranceSpec& spec,
                               double sample_rate) {
  if (!(sample_rate >= 100.0)) throw Error("control sample rate must be at least 100 Hz");
  validate(space, spec);

  const auto onsets = spec.boundaries();
  const double total = onsets.back();
  const auto n_frames = static_cast<std::size_t>(std::ceil(total * sample_rate - 1e-9));

  Trajectory traj;
  traj.sample_rate = sample_rate;
  traj.columns = space.size();
  traj.data.assign(n_frames * traj.columns, 0.0);

  std::vector<Step> steps;
  for (std::size_t dim = 0; dim < space.size(); ++dim) {
    const auto& d = space[dim];
    const bool glottal = d.group == DimensionGroup::Glottal;
    const double tau = glottal ? spec.tau_glottal : spec.tau_supra;

    steps.clear();
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
      const auto& seg = spec.segments[s];
      if (glottal)
        steps.push_back({onsets[s] + seg.preset.onset_delay, glottal_target(space, dim, spec, seg)});
      else
        steps.push_back({onsets[s], seg.target.values[dim]});
    }

    // Neutral start, at rest; the first step begins at t = 0 for supra
    // dimensions and possibly later for delayed glottal onsets.
    TamState state{d.neutral, 0.0, 0.0};
    TamCoefficients coef = solve_segment(state, d.neutral, tau);
    double coef_onset = 0.0;
    std::size_t next = 0;

    for (std::size_t k = 0; k < n_frames; ++k) {
      const double t = static_cast<double>(k) / sample_rate;
      while (next < steps.size() && steps[next].onset <= t + 1e-12) {
        state = coef.state(steps[next].onset - coef_onset);
        coef = solve_segment(state, steps[next].target, tau);
        coef_onset = steps[next].onset;
        ++next;
      }
      traj.data[k * traj.columns + dim] = std::clamp(coef.value(t - coef_onset), d.min, d.max);
    }
  }
  return traj;
}

void write_csv(std::ostream& out, const ArticulatorySpace& space, const Trajectory& traj) {
  out << "time";
  for (const auto& d : space.dimensions()) out << ',' << d.name;
  out << '\n';
  for (std::size_t k = 0; k < traj.frames(); ++k) {
    out << traj.time(k);
    for (double v : traj.frame(k)) out << ',' << v;
    out << '\n';
  }
}

nlohmann::json to_json(const ArticulatorySpace& space, const UtteranceSpec& spec) {
  auto segments = nlohmann::json::array();
  for (const auto& seg : spec.segments) {
    nlohmann::json target = nlohmann::json::object();
    for (std::size_t i = 0; i < space.size(); ++i) target[space[i].name] = seg.target.values.at(i);
    segments.push_back({{"target", std::move(target)},
                        {"duration", seg.duration},
                        {"preset",
                         {{"chink_scale", seg.preset.chink_scale},
                          {"amplitude_scale", seg.preset.amplitude_scale},
                          {"onset_delay", seg.preset.onset_delay}}}});
  }
  return {{"segments", std::move(segments)},
          {"tau_supra", spec.tau_supra},
          {"tau_glottal", spec.tau_glottal},
          {"glottal",
           {{"chink_area", spec.glottal.chink_area}, {"relative_amplitude", spec.glottal.relative_amplitude}}}};
}

UtteranceSpec utterance_from_json(const ArticulatorySpace& space, const nlohmann::json& doc) {
  UtteranceSpec spec;
  try {
    for (const auto& s : doc.at("segments")) {
      SegmentPlan seg;
      seg.target = space.neutral_target();
      for (const auto& [name, value] : s.at("target").items()) seg.target.values[space.index_of(name)] = value.get<double>();
      space.apply_rules(seg.target);
      seg.duration = s.at("duration").get<double>();
      if (s.contains("preset")) {
        const auto& p = s.at("preset");
        seg.preset.chink_scale = p.value("chink_scale", seg.preset.chink_scale);
        seg.preset.amplitude_scale = p.value("amplitude_scale", seg.preset.amplitude_scale);
        seg.preset.onset_delay = p.value("onset_delay", seg.preset.onset_delay);
      }
      spec.segments.push_back(std::move(seg));
    }
    spec.tau_supra = doc.value("tau_supra", spec.tau_supra);
    spec.tau_glottal = doc.value("tau_glottal", spec.tau_glottal);
    if (doc.contains("glottal")) {
      const auto& g = doc.at("glottal");
      spec.glottal.chink_area = g.value("chink_area", spec.glottal.chink_area);
      spec.glottal.relative_amplitude = g.value("relative_amplitude", spec.glottal.relative_amplitude);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed utterance: ") + e.what());
  }
  return spec;
}

}  // namespace babblekit::tam
