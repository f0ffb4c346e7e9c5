#include "babblekit/external.hpp"

#include <csignal>
#include <cstring>

#include <sys/wait.h>
#include <unistd.h>

#include "babblekit/error.hpp"

namespace babblekit::vtsynth {

nlohmann::json external_request(const artic::ArticulatorySpace& space, const tam::UtteranceSpec& spec,
                                 double sample_rate) {
  auto targets = nlohmann::json::array();
  auto durations = nlohmann::json::array();
  for (const auto& seg : spec.segments) {
    nlohmann::json t = nlohmann::json::object();
    for (std::size_t i = 0; i < space.size(); ++i) t[space[i].name] = seg.target.values.at(i);
    targets.push_back(std::move(t));
    durations.push_back(seg.duration);
  }
  return {{"targets", std::move(targets)},
          {"durations", std::move(durations)},
          {"tau_supra", spec.tau_supra},
          {"tau_glottal", spec.tau_glottal},
          {"glottal",
           {{"chink_area", spec.glottal.chink_area}, {"relative_amplitude", spec.glottal.relative_amplitude}}},
          {"sample_rate", sample_rate}};
}

ExternalResponse parse_external_response(const std::string& line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("external synthesizer: malformed response: ") + e.what());
  }
  if (!doc.is_object()) throw Error("external synthesizer: response is not an object");
  if (doc.contains("error")) throw Error("external synthesizer: " + doc.at("error").dump());
  try {
    ExternalResponse r;
    r.wav_path = doc.at("wav_path").get<std::string>();
    r.tube_min_area = doc.at("tube_min_area").get<double>();
    r.lip_area = doc.at("lip_area").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("external synthesizer: incomplete response: ") + e.what());
  }
}

ExternalSynthesizer::ExternalSynthesizer(std::vector<std::string> command) : command_(std::move(command)) {
  if (command_.empty()) throw Error("external synthesizer: empty command");
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error("external synthesizer: pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error("external synthesizer: pipe failed");
  }
  std::vector<char*> argv;
  for (auto& a : command_) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_ = fork();
  if (pid_ < 0) throw Error("external synthesizer: fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ExternalSynthesizer::~ExternalSynthesizer() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::string ExternalSynthesizer::round_trip(const std::string& line) {
  std::string msg = line + "\n";
  const char* p = msg.data();
  std::size_t left = msg.size();
  // A dead child turns writes into EPIPE instead of killing us.
  std::signal(SIGPIPE, SIG_IGN);
  while (left > 0) {
    const auto n = write(to_child_, p, left);
    if (n <= 0) throw Error("external synthesizer: write failed (process exited?)");
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      auto out = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return out;
    }
    char chunk[4096];
    const auto n = read(from_child_, chunk, sizeof chunk);
    if (n <= 0) throw Error("external synthesizer: process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ExternalResponse ExternalSynthesizer::render(const artic::ArticulatorySpace& space, const tam::UtteranceSpec& spec,
                                             double sample_rate) {
  const auto request = external_request(space, spec, sample_rate).dump();
  std::lock_guard lock(mutex_);
  return parse_external_response(round_trip(request));
}

}  // namespace babblekit::vtsynth
