#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "babblekit/error.hpp"
#include "babblekit/hash.hpp"
#include "babblekit/percept.hpp"

namespace babblekit::percept {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t MelConfig::window_length() const {
  return static_cast<std::size_t>(std::lround(window_seconds * sample_rate));
}

std::size_t MelConfig::hop_length() const { return static_cast<std::size_t>(std::lround(hop_seconds * sample_rate)); }

std::size_t MelConfig::fft_size() const {
  std::size_t n = 1;
  while (n < window_length()) n <<= 1;
  return n;
}

std::vector<std::vector<double>> MelConfig::filterbank() const {
  const std::size_t n_fft = fft_size();
  const std::size_t n_bins = n_fft / 2 + 1;
  const double lo = hz_to_mel(fmin);
  const double hi = hz_to_mel(upper_frequency());
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bands + 1));

  std::vector<std::vector<double>> fb(bands, std::vector<double>(n_bins, 0.0));
  for (std::size_t b = 0; b < bands; ++b) {
    const double left = edges[b], center = edges[b + 1], right = edges[b + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      if (f > left && f < right)
        fb[b][k] = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
    }
  }
  return fb;
}

MelConfig MelConfig::from_json(const nlohmann::json& doc) {
  MelConfig c;
  c.sample_rate = doc.value("sample_rate", c.sample_rate);
  c.window_seconds = doc.value("window_seconds", c.window_seconds);
  c.hop_seconds = doc.value("hop_seconds", c.hop_seconds);
  c.bands = doc.value("bands", c.bands);
  c.floor = doc.value("floor", c.floor);
  c.fmin = doc.value("fmin", c.fmin);
  c.fmax = doc.value("fmax", c.fmax);
  if (c.bands == 0 || !(c.hop_seconds > 0.0) || !(c.window_seconds > 0.0) || !(c.floor > 0.0))
    throw ConfigError("invalid mel front-end configuration");
  return c;
}

nlohmann::json MelConfig::to_json() const {
  return {{"sample_rate", sample_rate}, {"window_seconds", window_seconds}, {"hop_seconds", hop_seconds},
          {"bands", bands},             {"floor", floor},                   {"fmin", fmin},
          {"fmax", fmax}};
}

std::string MelConfig::hash() const { return to_hex(fnv1a64(to_json().dump())); }

MelMatrix mel_spectrogram(const vtsynth::AudioBuffer& audio, const MelConfig& cfg) {
  if (audio.sample_rate != cfg.sample_rate)
    throw Error("mel_spectrogram: audio sample rate " + std::to_string(audio.sample_rate) +
                " does not match front end " + std::to_string(cfg.sample_rate));
  const std::size_t win = cfg.window_length();
  const std::size_t hop = cfg.hop_length();
  if (audio.samples.size() < win) throw Error("mel_spectrogram: audio shorter than one analysis window");

  const std::size_t n_fft = cfg.fft_size();
  const std::size_t n_bins = n_fft / 2 + 1;
  const auto fb = cfg.filterbank();

  std::vector<double> window(win);
  for (std::size_t i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(win));

  MelMatrix mel;
  mel.frames = (audio.samples.size() - win) / hop + 1;
  mel.bands = cfg.bands;
  mel.data.resize(mel.frames * mel.bands);

  Eigen::FFT<double> fft;
  std::vector<double> buf(n_fft);
  std::vector<std::complex<double>> spec;
  std::vector<double> power(n_bins);
  for (std::size_t f = 0; f < mel.frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < win; ++i) buf[i] = audio.samples[f * hop + i] * window[i];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(spec[k]);
    for (std::size_t b = 0; b < mel.bands; ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) e += fb[b][k] * power[k];
      mel.data[f * mel.bands + b] = std::log(e + cfg.floor);
    }
  }
  return mel;
}

double dtw_distance(const MelMatrix& a, const MelMatrix& b, double offset) {
  if (a.frames == 0 || b.frames == 0) throw Error("dtw_distance: empty sequence");
  if (a.bands != b.bands) throw Error("dtw_distance: band count mismatch");
  const std::size_t n = a.frames, m = b.frames;
  const double inf = std::numeric_limits<double>::infinity();
  // Rolling rows of accumulated cost and the matching path length.
  std::vector<double> cost_prev(m + 1, inf), cost_cur(m + 1, inf);
  std::vector<std::size_t> len_prev(m + 1, 0), len_cur(m + 1, 0);
  cost_prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cost_cur[0] = inf;
    const auto ra = a.row(i - 1);
    for (std::size_t j = 1; j <= m; ++j) {
      const auto rb = b.row(j - 1);
      double d = 0.0;
      for (std::size_t k = 0; k < a.bands; ++k) {
        const double diff = ra[k] - rb[k] + offset;
        d += diff * diff;
      }
      d = std::sqrt(d);
      // Preference on ties: diagonal, then vertical, then horizontal.
      double best = cost_prev[j - 1];
      std::size_t len = len_prev[j - 1];
      if (cost_prev[j] < best) {
        best = cost_prev[j];
        len = len_prev[j];
      }
      if (cost_cur[j - 1] < best) {
        best = cost_cur[j - 1];
        len = len_cur[j - 1];
      }
      cost_cur[j] = best + d;
      len_cur[j] = len + 1;
    }
    std::swap(cost_prev, cost_cur);
    std::swap(len_prev, len_cur);
  }
  return cost_prev[m] / static_cast<double>(len_prev[m]);
}

}  // namespace babblekit::percept
