#include <algorithm>
#include <cmath>
#include <limits>

#include "babblekit/error.hpp"
#include "babblekit/percept.hpp"

namespace babblekit::percept {

using vtsynth::Region;
using vtsynth::TubeFeatures;

OracleConfig OracleConfig::from_json(const nlohmann::json& doc) {
  OracleConfig c;
  c.closure_area = doc.value("closure_area", c.closure_area);
  c.fricative_area = doc.value("fricative_area", c.fricative_area);
  c.approximant_area = doc.value("approximant_area", c.approximant_area);
  c.voiceless_chink = doc.value("voiceless_chink", c.voiceless_chink);
  c.dental_threshold = doc.value("dental_threshold", c.dental_threshold);
  c.rounded_threshold = doc.value("rounded_threshold", c.rounded_threshold);
  c.dental_dimension = doc.value("dental_dimension", c.dental_dimension);
  c.rounding_dimension = doc.value("rounding_dimension", c.rounding_dimension);
  c.vowel_features = doc.value("vowel_features", c.vowel_features);
  c.vowel_quantum = doc.value("vowel_quantum", c.vowel_quantum);
  if (!(c.closure_area < c.fricative_area && c.fricative_area < c.approximant_area))
    throw ConfigError("oracle area thresholds must increase: closure < fricative < approximant");
  if (c.vowel_features.empty()) throw ConfigError("oracle needs at least one vowel feature");
  return c;
}

nlohmann::json OracleConfig::to_json() const {
  return {{"closure_area", closure_area},
          {"fricative_area", fricative_area},
          {"approximant_area", approximant_area},
          {"voiceless_chink", voiceless_chink},
          {"dental_threshold", dental_threshold},
          {"rounded_threshold", rounded_threshold},
          {"dental_dimension", dental_dimension},
          {"rounding_dimension", rounding_dimension},
          {"vowel_features", vowel_features},
          {"vowel_quantum", vowel_quantum}};
}

OraclePerceiver::OraclePerceiver(const artic::ArticulatorySpace& space, const Inventory& inventory,
                                 const PhoneticPrototypes& prototypes, OracleConfig cfg)
    : space_(&space), inventory_(&inventory), cfg_(std::move(cfg)) {
  for (const auto& name : cfg_.vowel_features) feature_dims_.push_back(space.index_of(name));
  if (space.glottal().empty()) throw ConfigError("oracle needs a chink-area dimension");
  ca_dim_ = space.glottal().front();
  dental_dim_ = space.index_of(cfg_.dental_dimension);
  rounding_dim_ = space.index_of(cfg_.rounding_dimension);
  bool any = false;
  for (const auto& v : inventory.vowels()) {
    if (prototypes.vowels.contains(v)) {
      const auto t = prototypes.vowel_target(space, v);
      vowel_points_.push_back(vowel_point(t.values));
      any = true;
    } else {
      vowel_points_.emplace_back();
    }
  }
  if (!any) throw ConfigError("oracle needs at least one vowel prototype");
}

std::vector<double> OraclePerceiver::vowel_point(std::span<const double> frame) const {
  std::vector<double> p;
  p.reserve(feature_dims_.size());
  for (auto d : feature_dims_) {
    const auto& dim = (*space_)[d];
    const double u = std::clamp((frame[d] - dim.min) / dim.range(), 0.0, 1.0);
    p.push_back(std::round(u / cfg_.vowel_quantum) * cfg_.vowel_quantum);
  }
  return p;
}

std::size_t OraclePerceiver::classify_vowel(std::span<const double> frame) const {
  const auto p = vowel_point(frame);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vowel_points_.size(); ++i) {
    if (vowel_points_[i].empty()) continue;
    double d = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) d += (p[k] - vowel_points_[i][k]) * (p[k] - vowel_points_[i][k]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

namespace {

enum class Degree { Closure, Fricative, Approximant, Open };

std::size_t lookup(const Inventory& inv, Manner manner, Place place, bool voiced) {
  const auto& cons = inv.consonants();
  for (std::size_t i = 1; i < cons.size(); ++i) {
    const auto& pi = inv.info(cons[i]);
    if (pi.manner == manner && pi.place == place && pi.voiced == voiced) return i;
  }
  for (std::size_t i = 1; i < cons.size(); ++i) {
    const auto& pi = inv.info(cons[i]);
    if (pi.manner == manner && pi.place == place) return i;
  }
  return 0;
}

}  // namespace

std::size_t OraclePerceiver::classify_consonant(const tam::Trajectory& traj, std::span<const TubeFeatures> timeline,
                                                std::size_t begin, std::size_t end) const {
  if (end <= begin || end > timeline.size()) throw Error("oracle: empty or out-of-range consonant window");
  // Place and degree are read at the last frame of the window, once the
  // gesture has had the whole segment to take over from the preceding one.
  // Voicing is averaged over the second half.
  const std::size_t mid = begin + (end - begin) / 2;
  const std::size_t peak = end - 1;
  double chink = 0.0;
  for (std::size_t k = mid; k < end; ++k) chink += traj.at(k, ca_dim_);
  chink /= static_cast<double>(end - mid);
  const bool voiced = chink < cfg_.voiceless_chink;
  const auto& tf = timeline[peak];

  Degree degree = Degree::Open;
  if (tf.min_area <= cfg_.closure_area)
    degree = Degree::Closure;
  else if (tf.min_area <= cfg_.fricative_area)
    degree = Degree::Fricative;
  else if (tf.min_area <= cfg_.approximant_area)
    degree = Degree::Approximant;
  if (degree == Degree::Open) return 0;

  const auto& inv = *inventory_;
  const auto norm = [&](std::size_t dim) {
    const auto& d = (*space_)[dim];
    return (traj.at(peak, dim) - d.min) / d.range();
  };

  switch (tf.min_area_region) {
    case Region::Labial:
      if (degree == Degree::Closure) return lookup(inv, Manner::Stop, Place::Labial, voiced);
      if (degree == Degree::Fricative) return lookup(inv, Manner::Fricative, Place::Labial, voiced);
      return lookup(inv, Manner::Approximant, Place::Labial, true);
    case Region::Alveolar:
      if (degree == Degree::Closure) return lookup(inv, Manner::Stop, Place::Alveolar, voiced);
      if (degree == Degree::Fricative)
        return lookup(inv, Manner::Fricative, norm(dental_dim_) >= cfg_.dental_threshold ? Place::Dental : Place::Alveolar,
                      voiced);
      return lookup(inv, Manner::Approximant, Place::Alveolar, true);
    case Region::Palatal:
      if (degree == Degree::Closure) return lookup(inv, Manner::Affricate, Place::Palatal, voiced);
      if (degree == Degree::Fricative) return lookup(inv, Manner::Fricative, Place::Palatal, voiced);
      // /r/ rounded, /y/ spread.
      if (norm(rounding_dim_) >= cfg_.rounded_threshold) {
        for (std::size_t i = 1; i < inv.consonants().size(); ++i)
          if (inv.consonants()[i] == "r") return i;
      }
      for (std::size_t i = 1; i < inv.consonants().size(); ++i)
        if (inv.consonants()[i] == "y") return i;
      return lookup(inv, Manner::Approximant, Place::Palatal, true);
    case Region::Velar:
      if (degree == Degree::Closure) return lookup(inv, Manner::Stop, Place::Velar, voiced);
      if (degree == Degree::Fricative) return lookup(inv, Manner::Fricative, Place::Glottal, false);
      return 0;
    case Region::Pharyngeal:
      if (degree == Degree::Approximant) return 0;
      return lookup(inv, Manner::Fricative, Place::Glottal, false);
  }
  return 0;
}

Percept OraclePerceiver::perceive(const tam::Trajectory& traj, std::span<const TubeFeatures> timeline,
                                  const tam::UtteranceSpec& spec) const {
  if (spec.segments.empty()) throw Error("oracle: utterance has no segments");
  if (spec.segments.size() > 3) throw Error("oracle: at most two consonants before the vowel");
  if (timeline.size() != traj.frames()) throw Error("oracle: tube timeline does not cover the trajectory");

  const auto bounds = spec.boundaries();
  auto frame_at = [&](double t) {
    return std::min(static_cast<std::size_t>(std::ceil(t * traj.sample_rate - 1e-9)), traj.frames());
  };

  std::size_t slots[2] = {0, 0};
  const std::size_t n_cons = spec.segments.size() - 1;
  for (std::size_t s = 0; s < n_cons; ++s) {
    const auto b = frame_at(bounds[s]);
    const auto e = frame_at(bounds[s + 1]);
    if (e <= b) throw Error("oracle: consonant segment " + std::to_string(s) + " has no frames");
    slots[s] = classify_consonant(traj, timeline, b, e);
  }

  const double mid_t = 0.5 * (bounds[n_cons] + bounds[n_cons + 1]);
  const auto vk = std::min(frame_at(mid_t), traj.frames() - 1);
  if (frame_at(bounds[n_cons]) >= traj.frames()) throw Error("oracle: vowel segment has no frames");
  return one_hot(slots[0], slots[1], classify_vowel(traj.frame(vk)));
}

std::vector<TubeFeatures> tube_timeline(const vtsynth::TractModel& model, const tam::Trajectory& traj) {
  std::vector<TubeFeatures> out;
  out.reserve(traj.frames());
  for (std::size_t k = 0; k < traj.frames(); ++k) out.push_back(model.features(model.area_function(traj.frame(k))));
  return out;
}

}  // namespace babblekit::percept
