#pragma once

// Articulatory parameter space: bounded named dimensions, range
// normalisation and the coarticulation distance between two targets.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace babblekit::artic {

enum class DimensionMode { Free, Fixed, Derived };

// Supra-laryngeal (upper vocal tract) or glottal control.
enum class DimensionGroup { Supra, Glottal };

struct ArticulatoryDimension {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  double neutral = 0.0;
  DimensionMode mode = DimensionMode::Free;
  DimensionGroup group = DimensionGroup::Supra;
  // Derived dimensions only: value = source - (source.neutral - neutral).
  std::string source;

  double range() const noexcept { return max - min; }
};

// Per-dimension values in model units, one entry per dimension of the space.
struct Target {
  std::vector<double> values;

  bool operator==(const Target&) const = default;
};

class ArticulatorySpace {
 public:
  explicit ArticulatorySpace(std::vector<ArticulatoryDimension> dims);

  static ArticulatorySpace from_json(const nlohmann::json& doc);
  static ArticulatorySpace load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::size_t size() const noexcept { return dims_.size(); }
  const std::vector<ArticulatoryDimension>& dimensions() const noexcept { return dims_; }
  const ArticulatoryDimension& operator[](std::size_t i) const { return dims_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const;
  // Throws ConfigError for unknown names.
  std::size_t index_of(std::string_view name) const;

  // Free upper-vocal-tract dimensions, in space order. These are the
  // dimensions searched by the optimiser and compared by coart_distance.
  const std::vector<std::size_t>& free_supra() const noexcept { return free_supra_; }
  const std::vector<std::size_t>& glottal() const noexcept { return glottal_; }

  Target neutral_target() const;

  // Builds a full target from free upper-vocal-tract values (model units);
  // glottal dimensions take their neutral value, fixed and derived
  // dimensions follow their rules.
  Target make_target(std::span<const double> free_values) const;

  // Rewrites fixed and derived entries so they are consistent with the rules.
  void apply_rules(Target& t) const;

  // Throws RangeError naming the first offending dimension.
  void validate(const Target& t) const;

  bool operator==(const ArticulatorySpace& other) const;

 private:
  std::vector<ArticulatoryDimension> dims_;
  std::vector<std::size_t> free_supra_;
  std::vector<std::size_t> glottal_;
  std::vector<std::optional<std::size_t>> derived_source_;
};

std::string_view to_string(DimensionMode mode);
DimensionMode parse_mode(std::string_view text);

// Range-normalised free upper-vocal-tract values, each in [0, 1].
std::vector<double> normalize(const ArticulatorySpace& space, const Target& t);

// Inverse of normalize; non-free entries are neutral / rule-consistent.
Target denormalize(const ArticulatorySpace& space, std::span<const double> normalized);

// |u1_i - u2_i| over range-normalised free upper-vocal-tract dimensions.
std::vector<double> per_dimension_distance(const ArticulatorySpace& space, const Target& a,
                                           const Target& b);

// Mean of per_dimension_distance: a normalised L1 distance in [0, 1].
double coart_distance(const ArticulatorySpace& space, const Target& a, const Target& b);

}  // namespace babblekit::artic
