#pragma once

// Adapter for an external synthesizer running as a child process. One JSON
// request per line on its stdin, one JSON response per line on its stdout.
//
// request:  {"targets": [{dim: value, ...}, ...], "durations": [...],
//            "tau_supra": s, "tau_glottal": s,
//            "glottal": {"chink_area": cm2, "relative_amplitude": r},
//            "sample_rate": hz}
// response: {"wav_path": path, "tube_min_area": cm2, "lip_area": cm2}
//           or {"error": message}

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "babblekit/artic.hpp"
#include "babblekit/tam.hpp"
#include "json.hpp"

namespace babblekit::vtsynth {

struct ExternalResponse {
  std::filesystem::path wav_path;
  double tube_min_area = 0.0;
  double lip_area = 0.0;
};

nlohmann::json external_request(const artic::ArticulatorySpace& space, const tam::UtteranceSpec& spec,
                                 double sample_rate);

// Throws Error on an {"error"} reply or a malformed one.
ExternalResponse parse_external_response(const std::string& line);

class ExternalSynthesizer {
 public:
  // command[0] is looked up on PATH. Throws Error when the process cannot start.
  explicit ExternalSynthesizer(std::vector<std::string> command);
  ~ExternalSynthesizer();
  ExternalSynthesizer(const ExternalSynthesizer&) = delete;
  ExternalSynthesizer& operator=(const ExternalSynthesizer&) = delete;

  // Serialised across threads. Throws Error when the child exits or replies
  // with an error.
  ExternalResponse render(const artic::ArticulatorySpace& space, const tam::UtteranceSpec& spec,
                          double sample_rate);

 private:
  std::string round_trip(const std::string& line);

  std::vector<std::string> command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

}  // namespace babblekit::vtsynth
