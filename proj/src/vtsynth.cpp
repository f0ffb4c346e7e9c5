#include "babblekit/vtsynth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "babblekit/error.hpp"

namespace babblekit::vtsynth {

using artic::ArticulatorySpace;

std::string_view to_string(Region r) {
  switch (r) {
    case Region::Pharyngeal:
      return "pharyngeal";
    case Region::Velar:
      return "velar";
    case Region::Palatal:
      return "palatal";
    case Region::Alveolar:
      return "alveolar";
    case Region::Labial:
      return "labial";
  }
  return "pharyngeal";
}

namespace {

Region parse_region(const std::string& s) {
  for (auto r : {Region::Pharyngeal, Region::Velar, Region::Palatal, Region::Alveolar, Region::Labial})
    if (to_string(r) == s) return r;
  throw ConfigError("unknown tract region '" + s + "'");
}

}  // namespace

TractConfig TractConfig::defaults() {
  TractConfig c;
  c.constrictions = {
      {Region::Pharyngeal, 0.20, 0.070, {{"TCX", -3.0, 1.3}}, "", 0.0, 2.0},
      {Region::Velar, 0.48, 0.050, {{"TCY", 1.0, 2.0}}, "", 0.0, 0.0},
      // Tongue body fronting raises it toward the palate.
      {Region::Palatal, 0.64, 0.060, {{"TCX", 4.0, 0.6}}, "", 0.0, 0.0},
      {Region::Palatal, 0.69, 0.035, {{"TBY", 5.0, 2.0}}, "TBX", 0.03, 0.0},
      {Region::Alveolar, 0.85, 0.025, {{"TTY", 2.5, 2.0}}, "TTX", 0.025, 0.0},
      // Protrusion rounds the lips; spreading widens them.
      {Region::Labial, 1.00, 0.050, {{"LD", -2.0, 2.0}, {"JA", 0.0, 0.5}, {"LP", 1.0, 0.4}}, "", 0.0, 3.0},
  };
  return c;
}

TractConfig TractConfig::from_json(const nlohmann::json& doc) {
  TractConfig c = defaults();
  try {
    c.baseline_area = doc.value("baseline_area", c.baseline_area);
    c.depth_max = doc.value("depth_max", c.depth_max);
    c.base_length = doc.value("base_length", c.base_length);
    c.protrusion_gain = doc.value("protrusion_gain", c.protrusion_gain);
    c.protrusion_dimension = doc.value("protrusion_dimension", c.protrusion_dimension);
    c.sound_speed = doc.value("sound_speed", c.sound_speed);
    c.audio_rate = doc.value("audio_rate", c.audio_rate);
    c.region_bounds = doc.value("region_bounds", c.region_bounds);
    if (doc.contains("constrictions")) {
      c.constrictions.clear();
      for (const auto& item : doc.at("constrictions")) {
        Constriction k;
        k.region = parse_region(item.at("region").get<std::string>());
        k.center = item.at("center").get<double>();
        k.width = item.at("width").get<double>();
        for (const auto& d : item.at("drivers"))
          k.drivers.push_back({d.at("dimension").get<std::string>(), d.at("closed").get<double>(),
                               d.value("gain", 1.0)});
        k.shift_dimension = item.value("shift_dimension", std::string());
        k.shift_gain = item.value("shift_gain", 0.0);
        k.expansion = item.value("expansion", 0.0);
        c.constrictions.push_back(std::move(k));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed tract config: ") + e.what());
  }
  if (c.region_bounds.size() != 4) throw ConfigError("tract config needs four region bounds");
  return c;
}

nlohmann::json TractConfig::to_json() const {
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& k : constrictions) {
    nlohmann::json drivers = nlohmann::json::array();
    for (const auto& d : k.drivers)
      drivers.push_back({{"dimension", d.dimension}, {"closed", d.closed}, {"gain", d.gain}});
    cons.push_back({{"region", std::string(to_string(k.region))},
                    {"center", k.center},
                    {"width", k.width},
                    {"drivers", drivers},
                    {"shift_dimension", k.shift_dimension},
                    {"shift_gain", k.shift_gain},
                    {"expansion", k.expansion}});
  }
  return {{"baseline_area", baseline_area},     {"depth_max", depth_max},
          {"base_length", base_length},         {"protrusion_gain", protrusion_gain},
          {"protrusion_dimension", protrusion_dimension}, {"sound_speed", sound_speed},
          {"audio_rate", audio_rate},           {"region_bounds", region_bounds},
          {"constrictions", cons}};
}

TractModel::TractModel(const ArticulatorySpace& space, TractConfig config)
    : space_(&space), config_(std::move(config)) {
  for (const auto& k : config_.constrictions) {
    ResolvedConstriction r;
    r.center = k.center;
    if (!(k.width > 0.0)) throw ConfigError("constriction width must be positive");
    if (!(k.expansion >= 0.0)) throw ConfigError("constriction expansion must be non-negative");
    r.inv_width = 1.0 / k.width;
    r.expansion = k.expansion;
    for (const auto& d : k.drivers) {
      const auto dim = space.index_of(d.dimension);
      const double neutral = space[dim].neutral;
      if (d.closed == neutral) throw ConfigError("driver '" + d.dimension + "' closes at its neutral value");
      r.drivers.push_back({dim, neutral, 1.0 / (d.closed - neutral), d.gain});
    }
    if (!k.shift_dimension.empty()) {
      r.shift_dim = static_cast<std::ptrdiff_t>(space.index_of(k.shift_dimension));
      r.shift_gain = k.shift_gain;
    }
    resolved_.push_back(std::move(r));
  }
  if (!config_.protrusion_dimension.empty())
    protrusion_dim_ = static_cast<std::ptrdiff_t>(space.index_of(config_.protrusion_dimension));
}

double TractModel::tract_length(std::span<const double> frame) const {
  double length = config_.base_length;
  if (protrusion_dim_ >= 0)
    length += config_.protrusion_gain *
              (frame[protrusion_dim_] - (*space_)[static_cast<std::size_t>(protrusion_dim_)].neutral);
  return length;
}

std::size_t TractModel::section_count(std::span<const double> frame) const {
  const auto n = std::lround(tract_length(frame) / config_.section_length());
  return static_cast<std::size_t>(std::max<long>(n, 8));
}

Region TractModel::region_of(std::size_t section, std::size_t n_sections) const {
  const double x = (static_cast<double>(section) + 0.5) / static_cast<double>(n_sections);
  const auto& b = config_.region_bounds;
  if (x < b[0]) return Region::Pharyngeal;
  if (x < b[1]) return Region::Velar;
  if (x < b[2]) return Region::Palatal;
  if (x < b[3]) return Region::Alveolar;
  return Region::Labial;
}

void TractModel::fill(std::span<const double> frame, std::size_t n, std::vector<double>& out) const {
  out.assign(n, config_.baseline_area);
  for (const auto& k : resolved_) {
    double degree = 0.0;
    for (const auto& d : k.drivers) degree += d.gain * (frame[d.dim] - d.neutral) * d.inv_span;
    // Signed area change at the profile peak.
    const double peak = degree > 0.0 ? -degree * config_.depth_max : std::min(1.0, -degree) * k.expansion;
    if (peak == 0.0) continue;
    double center = k.center;
    if (k.shift_dim >= 0) {
      const auto& sd = (*space_)[static_cast<std::size_t>(k.shift_dim)];
      const double v = frame[k.shift_dim];
      const double u = v >= sd.neutral ? (v - sd.neutral) / (sd.max - sd.neutral)
                                       : (v - sd.neutral) / (sd.neutral - sd.min);
      center += k.shift_gain * u;
    }
    // Gaussian on the uniform section grid by recurrence:
    // g[i+1] = g[i] r[i], r[i+1] = r[i] q, with d the grid step in widths.
    const double d = k.inv_width / static_cast<double>(n);
    const double z0 = (0.5 / static_cast<double>(n) - center) * k.inv_width;
    if (std::abs(z0) < 30.0 && std::abs(z0 + d * static_cast<double>(n)) < 30.0) {
      double g = std::exp(-0.5 * z0 * z0);
      double r = std::exp(-(z0 * d + 0.5 * d * d));
      const double q = std::exp(-d * d);
      for (std::size_t i = 0; i < n; ++i) {
        out[i] += peak * g;
        g *= r;
        r *= q;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double z = z0 + d * static_cast<double>(i);
        out[i] += peak * std::exp(-0.5 * z * z);
      }
    }
  }
  for (auto& a : out) a = std::max(a, 0.0);
}

AreaFunction TractModel::area_function(std::span<const double> frame) const {
  auto t = artic::Target{{frame.begin(), frame.end()}};
  space_->validate(t);
  AreaFunction af;
  af.section_length = config_.section_length();
  fill(frame, section_count(frame), af.sections);
  return af;
}

AreaFunction TractModel::area_function(std::span<const double> frame, std::size_t n_sections) const {
  if (frame.size() != space_->size()) throw Error("area_function: frame does not match the space");
  if (n_sections < 8) throw Error("area_function: at least 8 sections required");
  AreaFunction af;
  af.section_length = tract_length(frame) / static_cast<double>(n_sections);
  fill(frame, n_sections, af.sections);
  return af;
}

TubeFeatures TractModel::features(const AreaFunction& af) const {
  if (af.sections.empty()) throw Error("empty area function");
  TubeFeatures f;
  // Ties resolve to the front-most section: with several full closures the
  // one nearest the lips is released last and sets the place.
  const auto it = std::min_element(af.sections.rbegin(), af.sections.rend());
  f.min_area = *it;
  f.min_area_index = static_cast<std::size_t>(af.sections.rend() - it) - 1;
  f.min_area_region = region_of(f.min_area_index, af.sections.size());
  f.lip_area = af.sections.back();
  return f;
}

SynthConfig SynthConfig::from_json(const nlohmann::json& doc) {
  SynthConfig c;
  c.f0 = doc.value("f0", c.f0);
  c.open_phase = doc.value("open_phase", c.open_phase);
  c.closing_phase = doc.value("closing_phase", c.closing_phase);
  c.glottal_reflection = doc.value("glottal_reflection", c.glottal_reflection);
  c.lip_reflection = doc.value("lip_reflection", c.lip_reflection);
  c.lip_reference_area = doc.value("lip_reference_area", c.lip_reference_area);
  c.damping = doc.value("damping", c.damping);
  c.aspiration_gain = doc.value("aspiration_gain", c.aspiration_gain);
  c.output_gain = doc.value("output_gain", c.output_gain);
  if (!(c.lip_reflection > -1.0 && c.lip_reflection < 1.0)) throw ConfigError("lip_reflection must be in (-1, 1)");
  if (!(c.lip_reference_area > 0.0)) throw ConfigError("lip_reference_area must be positive");
  return c;
}

nlohmann::json SynthConfig::to_json() const {
  return {{"f0", f0},
          {"open_phase", open_phase},
          {"closing_phase", closing_phase},
          {"glottal_reflection", glottal_reflection},
          {"lip_reflection", lip_reflection},
          {"lip_reference_area", lip_reference_area},
          {"damping", damping},
          {"aspiration_gain", aspiration_gain},
          {"output_gain", output_gain}};
}

double reflection(double a_left, double a_right) {
  const double sum = a_left + a_right;
  if (sum <= 0.0) return 0.0;
  return (a_left - a_right) / sum;
}

namespace {

// Two-rail pressure waveguide; each section delays half an output sample.
class Waveguide {
 public:
  Waveguide(std::size_t n, const SynthConfig& cfg)
      : cfg_(cfg),
        right_(n, 0.0),
        left_(n, 0.0),
        next_right_(n, 0.0),
        next_left_(n, 0.0),
        refl_(n, 0.0),
        radiation_area_(cfg.lip_reference_area * (1.0 - cfg.lip_reflection) / (1.0 + cfg.lip_reflection)) {}

  void set_areas(const std::vector<double>& areas) {
    const auto n = right_.size();
    for (std::size_t j = 1; j < n; ++j) refl_[j] = reflection(areas[j - 1], areas[j]);
    // A closed first section blocks the source entirely.
    source_open_ = areas.front() > 0.0;
    lip_r_ = reflection(areas.back(), radiation_area_);
  }

  // One half-sample step; returns the pressure transmitted at the lips.
  double step(double source) {
    const auto n = right_.size();
    const double g = cfg_.damping;
    next_right_[0] = (cfg_.glottal_reflection * left_[0] + (source_open_ ? source : 0.0)) * g;
    for (std::size_t j = 1; j < n; ++j) {
      const double r = refl_[j];
      next_right_[j] = ((1.0 + r) * right_[j - 1] - r * left_[j]) * g;
      next_left_[j - 1] = (r * right_[j - 1] + (1.0 - r) * left_[j]) * g;
    }
    next_left_[n - 1] = lip_r_ * right_[n - 1] * g;
    const double out = (1.0 + lip_r_) * right_[n - 1];
    right_.swap(next_right_);
    left_.swap(next_left_);
    return out;
  }

 private:
  const SynthConfig& cfg_;
  std::vector<double> right_, left_, next_right_, next_left_, refl_;
  double radiation_area_;
  double lip_r_ = 0.0;
  bool source_open_ = true;
};

double rosenberg(double phase, double open, double closing) {
  if (phase < open) return 0.5 * (1.0 - std::cos(std::numbers::pi * phase / open));
  if (phase < open + closing) return std::cos(0.5 * std::numbers::pi * (phase - open) / closing);
  return 0.0;
}

// Uniform in [-1, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
double noise_sample(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace

std::vector<double> simulate_tube(std::span<const std::vector<double>> areas, std::span<const double> source,
                                  const SynthConfig& cfg) {
  if (areas.empty()) throw Error("simulate_tube: no area function");
  const auto n = areas.front().size();
  if (n < 2) throw Error("simulate_tube: tube needs at least two sections");
  Waveguide wg(n, cfg);
  std::vector<double> out(source.size());
  double prev = 0.0;
  wg.set_areas(areas.front());
  for (std::size_t k = 0; k < source.size(); ++k) {
    if (areas.size() > 1) {
      const auto& a = areas[std::min(k, areas.size() - 1)];
      if (a.size() != n) throw Error("simulate_tube: section count changed");
      wg.set_areas(a);
    }
    wg.step(0.5 * source[k]);
    const double lip = wg.step(0.5 * source[k]);
    out[k] = lip - prev;
    prev = lip;
  }
  return out;
}

AudioBuffer synthesize(const TractModel& model, const tam::Trajectory& traj, const SynthConfig& cfg,
                       std::uint64_t noise_seed) {
  if (traj.frames() == 0) throw Error("synthesize: empty trajectory");
  const auto& space = model.space();
  if (traj.columns != space.size()) throw Error("synthesize: trajectory does not match the space");
  const auto& gl = space.glottal();
  if (gl.size() < 2) throw Error("synthesize: space needs chink-area and relative-amplitude dimensions");
  const std::size_t ca = gl[0];
  const std::size_t ra = gl[1];
  const double ca_max = space[ca].max > 0.0 ? space[ca].max : 1.0;

  const double rate = model.config().audio_rate;
  const double duration = static_cast<double>(traj.frames()) / traj.sample_rate;
  const auto n_samples = static_cast<std::size_t>(std::llround(duration * rate));

  // Constant section count for the utterance, from its mean tract length.
  double mean_length = 0.0;
  for (std::size_t k = 0; k < traj.frames(); ++k) mean_length += model.tract_length(traj.frame(k));
  mean_length /= static_cast<double>(traj.frames());
  const auto n_sections = static_cast<std::size_t>(
      std::max<long>(8, std::lround(mean_length / model.config().section_length())));

  Waveguide wg(n_sections, cfg);
  std::mt19937_64 rng(noise_seed);
  std::vector<double> frame(traj.columns);
  AudioBuffer audio;
  audio.sample_rate = rate;
  audio.samples.resize(n_samples);
  double prev_lip = 0.0;
  double phase = 0.0;

  for (std::size_t n = 0; n < n_samples; ++n) {
    // Piecewise-linear interpolation of the control trajectory.
    const double pos = static_cast<double>(n) / rate * traj.sample_rate;
    const auto k0 = std::min(static_cast<std::size_t>(pos), traj.frames() - 1);
    const auto k1 = std::min(k0 + 1, traj.frames() - 1);
    const double w = std::clamp(pos - static_cast<double>(k0), 0.0, 1.0);
    for (std::size_t c = 0; c < traj.columns; ++c) frame[c] = (1.0 - w) * traj.at(k0, c) + w * traj.at(k1, c);

    wg.set_areas(model.area_function(frame, n_sections).sections);

    const double voice = frame[ra] * rosenberg(phase, cfg.open_phase, cfg.closing_phase);
    const double noise = cfg.aspiration_gain * (frame[ca] / ca_max) * noise_sample(rng);
    const double src = voice + noise;
    phase += cfg.f0 / rate;
    phase -= std::floor(phase);

    wg.step(0.5 * src);
    const double lip = wg.step(0.5 * src);
    const double y = cfg.output_gain * (lip - prev_lip);
    prev_lip = lip;
    if (!std::isfinite(y)) throw Error("synthesize: waveguide became unstable");
    audio.samples[n] = std::clamp(y, -1.0, 1.0);
  }
  return audio;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (double s : audio.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  if (!out) throw Error("failed writing " + path.string());
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(path.string() + " is not a RIFF/WAVE file");
  AudioBuffer audio;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto size = get_u32(bytes.data() + pos + 4);
    const unsigned char* body = bytes.data() + pos + 8;
    if (pos + 8 + size > bytes.size()) throw Error(path.string() + ": truncated chunk");
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (get_u16(body) != 1 || get_u16(body + 2) != 1 || get_u16(body + 14) != 16)
        throw Error(path.string() + ": only 16-bit PCM mono is supported");
      audio.sample_rate = get_u32(body + 4);
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw Error(path.string() + ": data chunk before fmt chunk");
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i)
        audio.samples[i] = static_cast<std::int16_t>(get_u16(body + 2 * i)) / 32767.0;
      return audio;
    }
    pos += 8 + size + (size & 1);
  }
  throw Error(path.string() + ": no data chunk");
}

}  // namespace babblekit::vtsynth
