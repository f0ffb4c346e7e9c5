#include "babblekit/artic.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "babblekit/error.hpp"

namespace babblekit::artic {

namespace {

constexpr double kRuleTolerance = 1e-9;

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(DimensionMode mode) {
  switch (mode) {
    case DimensionMode::Free:
      return "free";
    case DimensionMode::Fixed:
      return "fixed";
    case DimensionMode::Derived:
      return "derived";
  }
  return "free";
}

DimensionMode parse_mode(std::string_view text) {
  if (text == "free") return DimensionMode::Free;
  if (text == "fixed") return DimensionMode::Fixed;
  if (text == "derived") return DimensionMode::Derived;
  throw ConfigError("unknown dimension mode '" + std::string(text) + "'");
}

ArticulatorySpace::ArticulatorySpace(std::vector<ArticulatoryDimension> dims)
    : dims_(std::move(dims)) {
  std::set<std::string> names;
  for (const auto& d : dims_) {
    if (d.name.empty()) throw ConfigError("dimension with empty name");
    if (!names.insert(d.name).second) throw ConfigError("duplicate dimension '" + d.name + "'");
    if (!(d.min < d.max)) throw ConfigError("dimension '" + d.name + "': min must be < max");
    if (d.neutral < d.min || d.neutral > d.max)
      throw ConfigError("dimension '" + d.name + "': neutral outside [min, max]");
  }
  derived_source_.resize(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    if (d.mode == DimensionMode::Derived) {
      auto src = find(d.source);
      if (!src) throw ConfigError("derived dimension '" + d.name + "' has unknown source '" + d.source + "'");
      if (dims_[*src].mode != DimensionMode::Free)
        throw ConfigError("derived dimension '" + d.name + "' must derive from a free dimension");
      derived_source_[i] = *src;
    }
    if (d.group == DimensionGroup::Glottal) {
      if (d.mode != DimensionMode::Free)
        throw ConfigError("glottal dimension '" + d.name + "' must be free");
      glottal_.push_back(i);
    } else if (d.mode == DimensionMode::Free) {
      free_supra_.push_back(i);
    }
  }
  if (free_supra_.empty()) throw ConfigError("space has no free upper-vocal-tract dimension");
}

ArticulatorySpace ArticulatorySpace::from_json(const nlohmann::json& doc) {
  const auto& list = doc.contains("dimensions") ? doc.at("dimensions") : doc;
  if (!list.is_array()) throw ConfigError("space definition must hold a 'dimensions' array");
  std::vector<ArticulatoryDimension> dims;
  try {
    for (const auto& item : list) {
      ArticulatoryDimension d;
      d.name = item.at("name").get<std::string>();
      d.min = item.at("min").get<double>();
      d.max = item.at("max").get<double>();
      d.neutral = item.at("neutral").get<double>();
      d.mode = parse_mode(item.value("mode", std::string("free")));
      const auto group = item.value("group", std::string("supra"));
      if (group == "supra") {
        d.group = DimensionGroup::Supra;
      } else if (group == "glottal") {
        d.group = DimensionGroup::Glottal;
      } else {
        throw ConfigError("dimension '" + d.name + "': unknown group '" + group + "'");
      }
      d.source = item.value("source", std::string());
      dims.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed space definition: ") + e.what());
  }
  return ArticulatorySpace(std::move(dims));
}

ArticulatorySpace ArticulatorySpace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open space file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse space file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json ArticulatorySpace::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& d : dims_) {
    nlohmann::json item{{"name", d.name},
                        {"min", d.min},
                        {"max", d.max},
                        {"neutral", d.neutral},
                        {"mode", std::string(to_string(d.mode))}};
    if (d.group == DimensionGroup::Glottal) item["group"] = "glottal";
    if (d.mode == DimensionMode::Derived) item["source"] = d.source;
    list.push_back(std::move(item));
  }
  return nlohmann::json{{"dimensions", std::move(list)}};
}

std::optional<std::size_t> ArticulatorySpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (dims_[i].name == name) return i;
  return std::nullopt;
}

std::size_t ArticulatorySpace::index_of(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ConfigError("unknown dimension '" + std::string(name) + "'");
  return *i;
}

Target ArticulatorySpace::neutral_target() const {
  Target t;
  t.values.reserve(dims_.size());
  for (const auto& d : dims_) t.values.push_back(d.neutral);
  return t;
}

Target ArticulatorySpace::make_target(std::span<const double> free_values) const {
  if (free_values.size() != free_supra_.size())
    throw Error("make_target: expected " + std::to_string(free_supra_.size()) + " free values, got " +
                std::to_string(free_values.size()));
  Target t = neutral_target();
  for (std::size_t k = 0; k < free_supra_.size(); ++k) t.values[free_supra_[k]] = free_values[k];
  apply_rules(t);
  return t;
}

void ArticulatorySpace::apply_rules(Target& t) const {
  if (t.values.size() != dims_.size()) throw Error("target does not belong to this space");
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    if (d.mode == DimensionMode::Fixed) {
      t.values[i] = d.neutral;
    } else if (d.mode == DimensionMode::Derived) {
      const auto s = *derived_source_[i];
      t.values[i] = t.values[s] - (dims_[s].neutral - d.neutral);
    }
  }
}

void ArticulatorySpace::validate(const Target& t) const {
  if (t.values.size() != dims_.size())
    throw Error("target has " + std::to_string(t.values.size()) + " values, space has " +
                std::to_string(dims_.size()) + " dimensions");
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    const double v = t.values[i];
    if (!std::isfinite(v) || v < d.min || v > d.max)
      throw RangeError(d.name, "dimension " + d.name + ": value " + format_value(v) + " outside [" +
                                   format_value(d.min) + ", " + format_value(d.max) + "]");
    if (d.mode == DimensionMode::Fixed && v != d.neutral)
      throw RangeError(d.name, "dimension " + d.name + " is fixed at " + format_value(d.neutral));
    if (d.mode == DimensionMode::Derived) {
      const auto s = *derived_source_[i];
      const double expected = t.values[s] - (dims_[s].neutral - d.neutral);
      if (std::abs(v - expected) > kRuleTolerance)
        throw RangeError(d.name, "dimension " + d.name + " inconsistent with its source " + d.source);
    }
  }
}

bool ArticulatorySpace::operator==(const ArticulatorySpace& other) const {
  if (dims_.size() != other.dims_.size()) return false;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& a = dims_[i];
    const auto& b = other.dims_[i];
    if (a.name != b.name || a.min != b.min || a.max != b.max || a.neutral != b.neutral ||
        a.mode != b.mode || a.group != b.group || a.source != b.source)
      return false;
  }
  return true;
}

std::vector<double> normalize(const ArticulatorySpace& space, const Target& t) {
  if (t.values.size() != space.size()) throw Error("normalize: target does not belong to this space");
  std::vector<double> out;
  out.reserve(space.free_supra().size());
  for (auto i : space.free_supra()) {
    const auto& d = space[i];
    const double v = t.values[i];
    if (!std::isfinite(v) || v < d.min || v > d.max)
      throw RangeError(d.name, "dimension " + d.name + ": value " + format_value(v) + " outside [" +
                                   format_value(d.min) + ", " + format_value(d.max) + "]");
    out.push_back((v - d.min) / d.range());
  }
  return out;
}

Target denormalize(const ArticulatorySpace& space, std::span<const double> normalized) {
  const auto& free = space.free_supra();
  if (normalized.size() != free.size()) throw Error("denormalize: wrong vector length");
  std::vector<double> values(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) {
    const auto& d = space[free[k]];
    if (!(normalized[k] >= 0.0 && normalized[k] <= 1.0))
      throw RangeError(d.name, "dimension " + d.name + ": normalised value outside [0, 1]");
    values[k] = d.min + normalized[k] * d.range();
  }
  return space.make_target(values);
}

std::vector<double> per_dimension_distance(const ArticulatorySpace& space, const Target& a,
                                           const Target& b) {
  if (a.values.size() != b.values.size()) throw Error("coarticulation distance: mismatched spaces");
  const auto ua = normalize(space, a);
  const auto ub = normalize(space, b);
  std::vector<double> out(ua.size());
  for (std::size_t i = 0; i < ua.size(); ++i) out[i] = std::abs(ua[i] - ub[i]);
  return out;
}

double coart_distance(const ArticulatorySpace& space, const Target& a, const Target& b) {
  const auto d = per_dimension_distance(space, a, b);
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

}  // namespace babblekit::artic
