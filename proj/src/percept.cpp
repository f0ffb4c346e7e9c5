#include "babblekit/percept.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "babblekit/error.hpp"

namespace babblekit::percept {

namespace {

Manner parse_manner(const std::string& s) {
  if (s == "absence") return Manner::Absence;
  if (s == "stop") return Manner::Stop;
  if (s == "fricative") return Manner::Fricative;
  if (s == "affricate") return Manner::Affricate;
  if (s == "nasal") return Manner::Nasal;
  if (s == "approximant") return Manner::Approximant;
  throw ConfigError("unknown manner '" + s + "'");
}

const char* manner_name(Manner m) {
  switch (m) {
    case Manner::Absence:
      return "absence";
    case Manner::Stop:
      return "stop";
    case Manner::Fricative:
      return "fricative";
    case Manner::Affricate:
      return "affricate";
    case Manner::Nasal:
      return "nasal";
    case Manner::Approximant:
      return "approximant";
  }
  return "absence";
}

Place parse_place(const std::string& s) {
  if (s.empty() || s == "none") return Place::None;
  if (s == "labial") return Place::Labial;
  if (s == "dental") return Place::Dental;
  if (s == "alveolar") return Place::Alveolar;
  if (s == "palatal") return Place::Palatal;
  if (s == "velar") return Place::Velar;
  if (s == "glottal") return Place::Glottal;
  throw ConfigError("unknown place '" + s + "'");
}

const char* place_name(Place p) {
  switch (p) {
    case Place::None:
      return "none";
    case Place::Labial:
      return "labial";
    case Place::Dental:
      return "dental";
    case Place::Alveolar:
      return "alveolar";
    case Place::Palatal:
      return "palatal";
    case Place::Velar:
      return "velar";
    case Place::Glottal:
      return "glottal";
  }
  return "none";
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

bool simplex(const std::vector<double>& v, double tol) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

}  // namespace

Inventory::Inventory(std::vector<std::string> consonants, std::vector<PhoneInfo> info, std::vector<std::string> vowels)
    : consonants_(std::move(consonants)), info_(std::move(info)), vowels_(std::move(vowels)) {
  if (consonants_.size() != kConsonantCount)
    throw ConfigError("inventory needs exactly " + std::to_string(kConsonantCount) + " consonants (index 0 = absence)");
  if (vowels_.size() != kVowelCount)
    throw ConfigError("inventory needs exactly " + std::to_string(kVowelCount) + " vowels");
  if (info_.size() != consonants_.size()) throw ConfigError("inventory: one phone description per consonant");
  if (info_.front().manner != Manner::Absence) throw ConfigError("inventory: consonant 0 must be the absence symbol");
  std::set<std::string> seen;
  for (const auto& s : consonants_)
    if (!seen.insert(s).second) throw ConfigError("inventory: duplicate consonant '" + s + "'");
  seen.clear();
  for (const auto& s : vowels_)
    if (!seen.insert(s).second) throw ConfigError("inventory: duplicate vowel '" + s + "'");
}

Inventory Inventory::from_json(const nlohmann::json& doc) {
  std::vector<std::string> consonants;
  std::vector<PhoneInfo> info;
  try {
    for (const auto& c : doc.at("consonants")) {
      consonants.push_back(c.at("symbol").get<std::string>());
      PhoneInfo pi;
      pi.manner = parse_manner(c.at("manner").get<std::string>());
      pi.place = parse_place(c.value("place", std::string()));
      pi.voiced = c.value("voiced", false);
      info.push_back(pi);
    }
    return Inventory(std::move(consonants), std::move(info), doc.at("vowels").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed inventory: ") + e.what());
  }
}

Inventory Inventory::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open inventory file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse inventory " + path.string() + ": " + e.what());
  }
}

nlohmann::json Inventory::to_json() const {
  nlohmann::json cons = nlohmann::json::array();
  for (std::size_t i = 0; i < consonants_.size(); ++i) {
    nlohmann::json c{{"symbol", consonants_[i]}, {"manner", manner_name(info_[i].manner)}};
    if (info_[i].manner != Manner::Absence) {
      c["place"] = place_name(info_[i].place);
      c["voiced"] = info_[i].voiced;
    }
    cons.push_back(std::move(c));
  }
  return {{"consonants", cons}, {"vowels", vowels_}};
}

std::optional<std::size_t> Inventory::consonant_index(std::string_view symbol) const {
  for (std::size_t i = 0; i < consonants_.size(); ++i)
    if (consonants_[i] == symbol) return i;
  return std::nullopt;
}

std::optional<std::size_t> Inventory::vowel_index(std::string_view symbol) const {
  for (std::size_t i = 0; i < vowels_.size(); ++i)
    if (vowels_[i] == symbol) return i;
  return std::nullopt;
}

std::size_t Inventory::require_consonant(std::string_view symbol) const {
  auto i = consonant_index(symbol);
  if (!i) throw ConfigError("unknown consonant '" + std::string(symbol) + "'");
  return *i;
}

std::size_t Inventory::require_vowel(std::string_view symbol) const {
  auto i = vowel_index(symbol);
  if (!i) throw ConfigError("unknown vowel '" + std::string(symbol) + "'");
  return *i;
}

const PhoneInfo& Inventory::info(std::string_view consonant) const { return info_[require_consonant(consonant)]; }

std::vector<double> Percept::concat() const {
  std::vector<double> out;
  out.reserve(kPerceptSize);
  out.insert(out.end(), q_c1.begin(), q_c1.end());
  out.insert(out.end(), q_c2.begin(), q_c2.end());
  out.insert(out.end(), q_v.begin(), q_v.end());
  return out;
}

Percept Percept::from_concat(std::span<const double> v) {
  if (v.size() != kPerceptSize) throw Error("percept vector must have 64 entries");
  Percept p;
  std::copy_n(v.begin(), kConsonantCount, p.q_c1.begin());
  std::copy_n(v.begin() + kConsonantCount, kConsonantCount, p.q_c2.begin());
  std::copy_n(v.begin() + 2 * kConsonantCount, kVowelCount, p.q_v.begin());
  return p;
}

bool Percept::valid(double tol) const {
  return q_c1.size() == kConsonantCount && q_c2.size() == kConsonantCount && q_v.size() == kVowelCount &&
         simplex(q_c1, tol) && simplex(q_c2, tol) && simplex(q_v, tol);
}

Percept one_hot(std::size_t c1, std::size_t c2, std::size_t v) {
  Percept p;
  p.q_c1.at(c1) = 1.0;
  p.q_c2.at(c2) = 1.0;
  p.q_v.at(v) = 1.0;
  return p;
}

Identification identify(const Percept& p, const Inventory& inventory) {
  return {inventory.consonants().at(argmax(p.q_c1)), inventory.consonants().at(argmax(p.q_c2)),
          inventory.vowels().at(argmax(p.q_v))};
}

std::string_view to_string(Slot s) {
  switch (s) {
    case Slot::C1:
      return "c1";
    case Slot::C2:
      return "c2";
    case Slot::V:
      return "v";
  }
  return "c1";
}

PhoneticPrototypes PhoneticPrototypes::from_json(const nlohmann::json& doc) {
  PhoneticPrototypes p;
  try {
    p.consonants = doc.value("consonants", decltype(p.consonants){});
    p.vowels = doc.value("vowels", decltype(p.vowels){});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed prototype file: ") + e.what());
  }
  return p;
}

PhoneticPrototypes PhoneticPrototypes::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open prototype file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse prototype file " + path.string() + ": " + e.what());
  }
}

namespace {

artic::Target build_target(const artic::ArticulatorySpace& space, const std::map<std::string, double>& values) {
  auto t = space.neutral_target();
  for (const auto& [name, v] : values) t.values[space.index_of(name)] = v;
  space.apply_rules(t);
  space.validate(t);
  return t;
}

}  // namespace

artic::Target PhoneticPrototypes::consonant_target(const artic::ArticulatorySpace& space,
                                                   const std::string& symbol) const {
  auto it = consonants.find(symbol);
  if (it == consonants.end()) throw ConfigError("no articulatory prototype for consonant '" + symbol + "'");
  return build_target(space, it->second);
}

artic::Target PhoneticPrototypes::vowel_target(const artic::ArticulatorySpace& space,
                                               const std::string& symbol) const {
  auto it = vowels.find(symbol);
  if (it == vowels.end()) throw ConfigError("no articulatory prototype for vowel '" + symbol + "'");
  return build_target(space, it->second);
}

}  // namespace babblekit::percept
