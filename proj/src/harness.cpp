#include "babblekit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "babblekit/error.hpp"
#include "babblekit/hash.hpp"

namespace babblekit::harness {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentPlan::validate(const percept::Inventory& inventory) const {
  if (syllables.empty()) throw ConfigError("experiment plan has no syllables");
  if (trials_per_syllable < 1) throw ConfigError("trials_per_syllable must be at least 1");
  if (strategies.empty()) throw ConfigError("experiment plan has no strategies");
  for (const auto& s : syllables) {
    for (const auto& c : {s.c1, s.c2}) {
      inventory.require_consonant(c);
      if (c == inventory.absence()) throw ConfigError("syllable " + s.key() + " lacks an onset consonant");
    }
    inventory.require_vowel(s.v);
  }
  for (const auto& st : strategies) st.validate();
}

std::uint64_t trial_seed(std::uint64_t base_seed, const Syllable& s, std::size_t trial, const StrategySpec& strategy) {
  std::uint64_t h = hash_combine(base_seed, fnv1a64(s.key()));
  h = hash_combine(h, trial);
  return hash_combine(h, fnv1a64(strategy.label()));
}

std::string trial_id(const Syllable& s, std::size_t trial, const StrategySpec& strategy) {
  return s.key() + "/" + std::to_string(trial) + "/" + strategy.label();
}

std::string TrialRecord::id() const { return syllable.key() + "/" + std::to_string(trial) + "/" + strategy; }

namespace {

json optional_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json TrialRecord::to_json(const artic::ArticulatorySpace& space) const {
  json passes_j = json::array();
  for (const auto& p : passes) {
    passes_j.push_back({{"index", p.index},
                        {"budget", p.budget},
                        {"synthesized", p.synthesized},
                        {"gate_failures", p.gate_failures},
                        {"dimensions", p.dimensions},
                        {"best_loss", optional_number(p.best_loss)},
                        {"exhausted", p.exhausted}});
  }
  json doc = {{"id", id()},
              {"syllable", {{"c1", syllable.c1}, {"c2", syllable.c2}, {"v", syllable.v}}},
              {"strategy", strategy},
              {"coart", coart},
              {"trial", trial},
              {"seed", seed},
              {"passes", std::move(passes_j)},
              {"final_utterance", final_utterance ? tam::to_json(space, *final_utterance) : json(nullptr)},
              {"final_percept", final_percept ? json(final_percept->concat()) : json(nullptr)},
              {"identified", {{"c1", identified.c1}, {"c2", identified.c2}, {"v", identified.v}}},
              {"c1_v_distance", c1_v_distance},
              {"c2_v_distance", c2_v_distance},
              {"status", status}};
  return doc;
}

TrialRecord TrialRecord::from_json(const artic::ArticulatorySpace& space, const json& doc) {
  TrialRecord r;
  try {
    const auto& s = doc.at("syllable");
    r.syllable = {s.at("c1").get<std::string>(), s.at("c2").get<std::string>(), s.at("v").get<std::string>()};
    r.strategy = doc.at("strategy").get<std::string>();
    r.coart = doc.at("coart").get<bool>();
    r.trial = doc.at("trial").get<std::size_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& p : doc.at("passes")) {
      PassSummary ps;
      ps.index = p.at("index").get<std::size_t>();
      ps.budget = p.at("budget").get<std::size_t>();
      ps.synthesized = p.at("synthesized").get<std::size_t>();
      ps.gate_failures = p.at("gate_failures").get<std::size_t>();
      ps.dimensions = p.at("dimensions").get<std::size_t>();
      ps.best_loss = p.at("best_loss").is_null() ? std::numeric_limits<double>::infinity()
                                                  : p.at("best_loss").get<double>();
      ps.exhausted = p.at("exhausted").get<bool>();
      r.passes.push_back(ps);
    }
    if (!doc.at("final_utterance").is_null())
      r.final_utterance = tam::utterance_from_json(space, doc.at("final_utterance"));
    if (!doc.at("final_percept").is_null())
      r.final_percept = percept::Percept::from_concat(doc.at("final_percept").get<std::vector<double>>());
    const auto& id = doc.at("identified");
    r.identified = {id.at("c1").get<std::string>(), id.at("c2").get<std::string>(), id.at("v").get<std::string>()};
    r.c1_v_distance = doc.at("c1_v_distance").get<std::vector<double>>();
    r.c2_v_distance = doc.at("c2_v_distance").get<std::vector<double>>();
    r.status = doc.at("status").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed trial record: ") + e.what());
  }
  return r;
}

TrialRecord make_record(const Syllable& s, std::size_t trial, const StrategySpec& strategy, std::uint64_t seed,
                        const explore::TrialResult& result) {
  TrialRecord r;
  r.syllable = s;
  r.strategy = strategy.label();
  r.coart = strategy.coart_enabled;
  r.trial = trial;
  r.seed = seed;
  const auto budgets = explore::budget_split(strategy);
  for (const auto& p : result.passes) {
    r.passes.push_back({p.index, budgets.at(p.index), p.synthesized, p.gate_failures, p.dimensions, p.best_loss,
                        p.exhausted});
  }
  r.final_utterance = result.final_utterance;
  r.final_percept = result.final_percept;
  r.identified = result.identified;
  r.c1_v_distance = result.c1_v_distance;
  r.c2_v_distance = result.c2_v_distance;
  r.status = result.status;
  return r;
}

std::string header_line(std::string_view kind, std::string_view config_hash) {
  return json{{"header", {{"kind", kind}, {"config_hash", config_hash}, {"format", 1}}}}.dump();
}

namespace {

bool is_header(const json& doc) { return doc.is_object() && doc.contains("header"); }

std::string run_log_lines(const std::string& id, const explore::TrialResult& result) {
  std::string out;
  for (const auto& p : result.passes) {
    for (const auto& e : p.evaluations) {
      json line = {{"trial_id", id},
                   {"pass", e.pass},
                   {"iter", e.iter},
                   {"gated", e.loss.gated},
                   {"loss", e.loss.total},
                   {"d_a", e.loss.d_a},
                   {"d_c1", e.loss.d_c1 ? json(*e.loss.d_c1) : json(nullptr)},
                   {"d_c2", e.loss.d_c2 ? json(*e.loss.d_c2) : json(nullptr)},
                   {"d_v", e.loss.d_v ? json(*e.loss.d_v) : json(nullptr)},
                   {"params", e.params}};
      out += line.dump();
      out += '\n';
    }
  }
  return out;
}

struct Job {
  Syllable syllable;
  std::size_t trial;
  StrategySpec strategy;
};

// Complete lines of a file; a trailing partial line is dropped.
std::vector<std::string> read_complete_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::string> lines;
  std::size_t pos = 0;
  for (;;) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan, const explore::Deps& deps,
                                        const RunOptions& options) {
  plan.validate(*deps.inventory);
  const auto& space = *deps.space;

  std::vector<Job> jobs;
  for (const auto& s : plan.syllables)
    for (std::size_t t = 0; t < plan.trials_per_syllable; ++t)
      for (const auto& st : plan.strategies) jobs.push_back({s, t, st});

  std::vector<TrialRecord> records;
  const bool persist = !options.out_dir.empty();
  const fs::path records_path = options.out_dir / "records.jsonl";
  const fs::path log_path = options.out_dir / "runlog.jsonl";
  const std::string rec_header = header_line("records", options.config_hash);
  const std::string log_header = header_line("runlog", options.config_hash);

  std::ofstream rec_out;
  std::ofstream log_out;
  if (persist) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw Error("cannot create output directory " + options.out_dir.string() + ": " + ec.message());

    std::vector<std::string> kept{rec_header};
    if (options.resume && fs::exists(records_path)) {
      const auto lines = read_complete_lines(records_path);
      if (!lines.empty()) {
        if (lines.front() != rec_header)
          throw ConfigError(records_path.string() + " was written by a different configuration");
        for (std::size_t i = 1; i < lines.size() && records.size() < jobs.size(); ++i) {
          auto r = TrialRecord::from_json(space, json::parse(lines[i]));
          const auto& job = jobs[records.size()];
          if (r.id() != trial_id(job.syllable, job.trial, job.strategy))
            throw ConfigError(records_path.string() + " does not match the experiment plan at record " +
                              std::to_string(records.size()));
          kept.push_back(lines[i]);
          records.push_back(std::move(r));
        }
      }
    }
    write_lines(records_path, kept);

    if (options.run_log) {
      std::vector<std::string> log_kept{log_header};
      if (!records.empty() && fs::exists(log_path)) {
        std::set<std::string> done;
        for (const auto& r : records) done.insert(r.id());
        const auto lines = read_complete_lines(log_path);
        for (std::size_t i = 1; i < lines.size(); ++i) {
          const auto doc = json::parse(lines[i], nullptr, false);
          if (doc.is_discarded() || is_header(doc)) continue;
          if (done.contains(doc.value("trial_id", std::string()))) log_kept.push_back(lines[i]);
        }
      }
      write_lines(log_path, log_kept);
      log_out.open(log_path, std::ios::binary | std::ios::app);
      if (!log_out) throw Error("cannot append to " + log_path.string());
    }
    rec_out.open(records_path, std::ios::binary | std::ios::app);
    if (!rec_out) throw Error("cannot append to " + records_path.string());
  }
  if (options.on_record)
    for (const auto& r : records) options.on_record(r);

  const std::size_t start = records.size();
  const std::size_t n = jobs.size();
  struct Done {
    TrialRecord record;
    std::string log;
  };
  std::vector<std::optional<Done>> done(n);
  std::mutex mutex;
  std::condition_variable cv;
  std::atomic<std::size_t> next{start};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || abort.load()) return;
      try {
        const auto& job = jobs[i];
        const auto seed = trial_seed(plan.base_seed, job.syllable, job.trial, job.strategy);
        auto result = explore::run_strategy(job.syllable, job.strategy, seed, deps);
        Done d{make_record(job.syllable, job.trial, job.strategy, seed, result), {}};
        if (persist && options.run_log) d.log = run_log_lines(d.record.id(), result);
        std::lock_guard lock(mutex);
        done[i] = std::move(d);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
      cv.notify_all();
    }
  };

  const std::size_t width = std::max<std::size_t>(1, std::min(options.workers, n - std::min(n, start)));
  std::vector<std::thread> pool;
  if (start < n)
    for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);

  std::exception_ptr io_failure;
  for (std::size_t i = start; i < n; ++i) {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return done[i].has_value() || failure != nullptr; });
    if (!done[i]) break;
    Done d = std::move(*done[i]);
    done[i].reset();
    lock.unlock();
    if (persist) {
      if (options.run_log) log_out << d.log << std::flush;
      rec_out << d.record.to_json(space).dump() << '\n' << std::flush;
      if (!rec_out || (options.run_log && !log_out)) {
        io_failure = std::make_exception_ptr(Error("write failed in " + options.out_dir.string()));
        abort = true;
        break;
      }
    }
    if (options.on_record) options.on_record(d.record);
    records.push_back(std::move(d.record));
  }
  abort = true;
  for (auto& t : pool) t.join();
  if (io_failure) std::rethrow_exception(io_failure);
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::vector<TrialRecord> load_records(const artic::ArticulatorySpace& space, const fs::path& path) {
  std::vector<TrialRecord> out;
  for (const auto& line : read_complete_lines(path)) {
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("cannot parse " + path.string() + ": " + e.what());
    }
    if (is_header(doc)) continue;
    out.push_back(TrialRecord::from_json(space, doc));
  }
  return out;
}

// ---------------------------------------------------------------------------

IdRates identification_rates(std::span<const TrialRecord> records, std::string condition) {
  if (records.empty()) throw Error("identification rates of an empty record set");
  IdRates r;
  r.condition = std::move(condition);
  r.total = records.size();
  std::size_t syl = 0;
  std::size_t vow = 0;
  std::size_t ons = 0;
  for (const auto& rec : records) {
    syl += rec.correct_syllable();
    vow += rec.correct_vowel();
    ons += rec.correct_onset();
  }
  const double n = static_cast<double>(records.size());
  r.syllable = 100.0 * static_cast<double>(syl) / n;
  r.vowel = 100.0 * static_cast<double>(vow) / n;
  r.onset = 100.0 * static_cast<double>(ons) / n;
  return r;
}

std::vector<IdRates> identification_table(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error("identification table of an empty record set");
  std::vector<std::string> order;
  for (const auto& r : records)
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
  std::vector<IdRates> rows;
  for (const auto& cond : order) {
    std::vector<TrialRecord> subset;
    for (const auto& r : records)
      if (r.strategy == cond) subset.push_back(r);
    rows.push_back(identification_rates(subset, cond));
  }
  return rows;
}

void write_id_table(std::ostream& out, const std::vector<IdRates>& rows, std::string_view config_hash) {
  out << "# babblekit id-table config_hash=" << config_hash << '\n';
  out << "# rates in percent; failed trials count as misidentified\n";
  out << "condition\ttrials\tsyllable\tvowel\tonset\n";
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows)
    out << r.condition << '\t' << r.total << '\t' << r.syllable << '\t' << r.vowel << '\t' << r.onset << '\n';
}

// ---------------------------------------------------------------------------

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete_beta: a and b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // The continued fraction converges fast for x < (a + 1) / (a + b + 2).
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  // Modified Lentz.
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double f = 1.0;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  f = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::exp(log_front) * f / a;
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw Error("student_t_sf: degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? tail : 1.0 - tail;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

Moments moments(std::span<const double> x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

}  // namespace

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("welch_t_test: each sample needs at least two values");
  const auto ma = moments(a);
  const auto mb = moments(b);
  if (ma.var == 0.0 && mb.var == 0.0) throw Error("welch_t_test: both samples have zero variance");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = ma.var / na;
  const double vb = mb.var / nb;
  WelchResult r;
  r.t = (ma.mean - mb.mean) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = std::clamp(2.0 * student_t_sf(std::abs(r.t), r.df), 0.0, 1.0);
  return r;
}

std::vector<CoartRow> coart_report(std::span<const TrialRecord> records, explore::Role consonant,
                                   const artic::ArticulatorySpace& space) {
  if (consonant == explore::Role::V) throw Error("coart_report: segment pair must be C1-V or C2-V");
  const std::size_t dims = space.free_supra().size();
  std::vector<std::vector<double>> off(dims);
  std::vector<std::vector<double>> on(dims);
  for (const auto& r : records) {
    const auto& dist = consonant == explore::Role::C1 ? r.c1_v_distance : r.c2_v_distance;
    if (dist.empty()) continue;
    if (dist.size() != dims) throw Error("coart_report: record " + r.id() + " has the wrong dimension count");
    for (std::size_t d = 0; d < dims; ++d) (r.coart ? on : off)[d].push_back(dist[d]);
  }
  if (off.front().size() < 2 || on.front().size() < 2)
    throw Error("coart_report: need at least two records with and without the coarticulation objective");

  std::vector<CoartRow> rows;
  for (std::size_t d = 0; d < dims; ++d) {
    CoartRow row;
    row.dimension = space[space.free_supra()[d]].name;
    const auto m_off = moments(off[d]);
    const auto m_on = moments(on[d]);
    row.mean_off = m_off.mean;
    row.mean_on = m_on.mean;
    row.difference = m_on.mean - m_off.mean;
    if (m_off.var == 0.0 && m_on.var == 0.0) {
      // Degenerate: constant samples. Equal means cannot differ; unequal ones
      // differ with certainty.
      const bool same = m_off.mean == m_on.mean;
      row.test.t = same ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m_on.mean - m_off.mean);
      row.test.df = static_cast<double>(off[d].size() + on[d].size() - 2);
      row.test.p = same ? 1.0 : 0.0;
    } else {
      row.test = welch_t_test(on[d], off[d]);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_coart_table(std::ostream& out, const std::vector<CoartRow>& rows, std::string_view config_hash) {
  out << "# babblekit coart config_hash=" << config_hash << '\n';
  out << "# per-dimension Welch test, pooled over all records of each condition\n";
  out << "dimension\tmean_off\tmean_on\tdifference\tt\tdf\tp\n";
  out << std::setprecision(6);
  for (const auto& r : rows)
    out << r.dimension << '\t' << r.mean_off << '\t' << r.mean_on << '\t' << r.difference << '\t' << r.test.t << '\t'
        << r.test.df << '\t' << r.test.p << '\n';
}

void write_coart_csv(std::ostream& out, const std::vector<CoartRow>& rows, std::string_view config_hash) {
  out << "# babblekit coart-plot config_hash=" << config_hash << '\n';
  out << "dimension,condition,mean,p\n";
  out << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.dimension << ",off," << r.mean_off << ',' << r.test.p << '\n';
    out << r.dimension << ",on," << r.mean_on << ',' << r.test.p << '\n';
  }
}

}  // namespace babblekit::harness
