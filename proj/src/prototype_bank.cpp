#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "babblekit/error.hpp"
#include "babblekit/hash.hpp"
#include "babblekit/percept.hpp"

namespace babblekit::percept {

namespace {

constexpr char kMatrixMagic[4] = {'B', 'K', 'M', '1'};

const std::vector<std::string>& slot_symbols(const Inventory& inv, Slot s) {
  return s == Slot::V ? inv.vowels() : inv.consonants();
}

std::size_t slot_index(const Inventory& inv, Slot s, const std::string& symbol) {
  return s == Slot::V ? inv.require_vowel(symbol) : inv.require_consonant(symbol);
}

std::string serialize(const MelMatrix& m) {
  std::string bytes(kMatrixMagic, 4);
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put32(static_cast<std::uint32_t>(m.frames));
  put32(static_cast<std::uint32_t>(m.bands));
  for (double d : m.data) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  return bytes;
}

MelMatrix deserialize(const std::string& bytes, const std::string& name) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMatrixMagic, 4) != 0)
    throw Error("prototype matrix " + name + " has a bad header");
  auto get32 = [&](std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    return v;
  };
  MelMatrix m;
  m.frames = get32(4);
  m.bands = get32(8);
  if (bytes.size() != 12 + 8 * m.frames * m.bands) throw Error("prototype matrix " + name + " is truncated");
  m.data.resize(m.frames * m.bands);
  for (std::size_t k = 0; k < m.data.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[12 + 8 * k + i])) << (8 * i);
    std::memcpy(&m.data[k], &bits, sizeof bits);
  }
  return m;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

PrototypeBank::PrototypeBank(Inventory inventory, MelConfig frontend)
    : inventory_(std::move(inventory)), frontend_(frontend) {
  slots_[0].resize(kConsonantCount);
  slots_[1].resize(kConsonantCount);
  slots_[2].resize(kVowelCount);
}

void PrototypeBank::add(Slot slot, const std::string& symbol, MelMatrix mel) {
  if (mel.frames == 0 || mel.bands != frontend_.bands) throw Error("prototype does not match the front end");
  slots_[static_cast<int>(slot)][slot_index(inventory_, slot, symbol)].push_back(std::move(mel));
}

std::size_t PrototypeBank::entry_count() const {
  std::size_t n = 0;
  for (const auto& s : slots_)
    for (const auto& list : s) n += list.size();
  return n;
}

std::string PrototypeBank::content_hash() const {
  std::uint64_t h = fnv1a64(inventory_.to_json().dump());
  h = fnv1a64(frontend_.to_json().dump(), h);
  for (int s = 0; s < 3; ++s)
    for (std::size_t i = 0; i < slots_[s].size(); ++i)
      for (const auto& m : slots_[s][i]) {
        h = fnv1a64(std::to_string(s) + ":" + std::to_string(i), h);
        h = fnv1a64(serialize(m), h);
      }
  return to_hex(h);
}

void PrototypeBank::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (auto slot : {Slot::C1, Slot::C2, Slot::V}) {
    const auto& symbols = slot_symbols(inventory_, slot);
    const auto& lists = slots_[static_cast<int>(slot)];
    for (std::size_t i = 0; i < lists.size(); ++i)
      for (std::size_t k = 0; k < lists[i].size(); ++k) {
        // Symbol index rather than symbol text keeps file names portable.
        const std::string file =
            std::string(to_string(slot)) + "_" + std::to_string(i) + "_" + std::to_string(k) + ".bkm";
        std::ofstream out(dir / file, std::ios::binary);
        const auto bytes = serialize(lists[i][k]);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("failed writing " + (dir / file).string());
        entries.push_back({{"slot", std::string(to_string(slot))},
                           {"symbol", symbols[i]},
                           {"file", file},
                           {"frames", lists[i][k].frames},
                           {"bands", lists[i][k].bands}});
      }
  }
  nlohmann::json manifest{{"inventory", inventory_.to_json()},
                          {"frontend", frontend_.to_json()},
                          {"frontend_hash", frontend_hash()},
                          {"content_hash", content_hash()},
                          {"entries", entries}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("failed writing bank manifest in " + dir.string());
}

PrototypeBank PrototypeBank::load(const std::filesystem::path& dir, const MelConfig* expected_frontend) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse bank manifest in " + dir.string() + ": " + e.what());
  }
  PrototypeBank bank(Inventory::from_json(manifest.at("inventory")), MelConfig::from_json(manifest.at("frontend")));
  if (manifest.at("frontend_hash").get<std::string>() != bank.frontend_hash())
    throw Error("prototype bank front-end hash mismatch");
  if (expected_frontend && expected_frontend->hash() != bank.frontend_hash())
    throw Error("prototype bank was built with a different front end");
  for (const auto& e : manifest.at("entries")) {
    const auto slot_name = e.at("slot").get<std::string>();
    Slot slot = slot_name == "c1" ? Slot::C1 : slot_name == "c2" ? Slot::C2 : Slot::V;
    if (slot == Slot::V && slot_name != "v") throw Error("bank manifest: unknown slot '" + slot_name + "'");
    const auto file = e.at("file").get<std::string>();
    bank.add(slot, e.at("symbol").get<std::string>(), deserialize(read_file(dir / file), file));
  }
  if (manifest.at("content_hash").get<std::string>() != bank.content_hash())
    throw Error("prototype bank content hash mismatch");
  return bank;
}

Percept encode(const vtsynth::AudioBuffer& audio, const PrototypeBank& bank, double temperature) {
  if (audio.samples.empty()) throw Error("encode: empty audio");
  if (!(temperature > 0.0)) throw Error("encode: temperature must be positive");
  const auto mel = mel_spectrogram(audio, bank.frontend());
  const double inf = std::numeric_limits<double>::infinity();
  // Levels are aligned on each matrix's peak so an overall gain change
  // leaves the distances unchanged.
  auto peak = [](const MelMatrix& m) { return *std::max_element(m.data.begin(), m.data.end()); };
  const double mel_peak = peak(mel);

  auto soft = [&](Slot slot, std::vector<double>& out) {
    const auto& lists = bank.slot(slot);
    std::vector<double> dist(lists.size(), inf);
    for (std::size_t i = 0; i < lists.size(); ++i)
      for (const auto& proto : lists[i]) dist[i] = std::min(dist[i], dtw_distance(mel, proto, peak(proto) - mel_peak));
    const double best = *std::min_element(dist.begin(), dist.end());
    std::fill(out.begin(), out.end(), 0.0);
    if (best == inf) {
      out[0] = 1.0;
      return;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (dist[i] == inf) continue;
      out[i] = std::exp(-(dist[i] - best) / temperature);
      sum += out[i];
    }
    for (auto& x : out) x /= sum;
  };

  Percept p;
  soft(Slot::C1, p.q_c1);
  soft(Slot::C2, p.q_c2);
  soft(Slot::V, p.q_v);
  return p;
}

PrototypeBank build_prototype_bank(const Inventory& inventory, const PhoneticPrototypes& prototypes,
                                   const MelConfig& frontend, const Renderer& render,
                                   const std::string& reference_vowel) {
  PrototypeBank bank(inventory, frontend);
  inventory.require_vowel(reference_vowel);
  for (const auto& v : inventory.vowels()) {
    if (!prototypes.vowels.contains(v)) continue;
    const auto mel = mel_spectrogram(render({v}), frontend);
    bank.add(Slot::V, v, mel);
    bank.add(Slot::C1, inventory.absence(), mel);
    bank.add(Slot::C2, inventory.absence(), mel);
  }
  for (const auto& c : inventory.consonants()) {
    if (c == inventory.absence() || !prototypes.consonants.contains(c)) continue;
    const auto mel = mel_spectrogram(render({c, reference_vowel}), frontend);
    bank.add(Slot::C1, c, mel);
    bank.add(Slot::C2, c, mel);
  }
  return bank;
}

}  // namespace babblekit::percept
