// babblekit command-line entry point.
//
//   babblekit run --config exp.json [--seed N] [--workers N] [--scale F] [--out DIR]
//   babblekit report id-table --records out/records.jsonl
//   babblekit report coart --records out/records.jsonl [--pair c1|c2] [--csv plot.csv]
//   babblekit synth --targets demo.json --out demo.wav
//   babblekit calibrate --config exp.json
//   babblekit bench tpe
//
// Exit status: 0 success, 1 configuration or usage error, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "babblekit/benchmark.hpp"
#include "babblekit/config.hpp"
#include "babblekit/error.hpp"
#include "babblekit/harness.hpp"
#include "babblekit/hash.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace babblekit;

namespace {

fs::path default_config() { return fs::path(BABBLEKIT_DATA_DIR) / "exp.json"; }

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<double> scale;
  std::string out;
};

config::ExperimentConfig load_config(const Common& c) {
  auto cfg = config::ExperimentConfig::load(c.config.empty() ? default_config() : fs::path(c.config));
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) {
    if (*c.workers < 1) throw ConfigError("--workers must be at least 1");
    cfg.workers = *c.workers;
  }
  if (c.scale) {
    if (!(*c.scale > 0.0 && *c.scale <= 1.0)) throw ConfigError("--scale must be in (0, 1]");
    cfg.scale = *c.scale;
  }
  return cfg;
}

// --out, then $BABBLEKIT_OUT, then the config's own value.
fs::path output_dir(const Common& c, const config::ExperimentConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("BABBLEKIT_OUT"); env && *env) return env;
  return cfg.out;
}

// Config hash from a records file header, or "unknown".
std::string records_hash(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open records file " + path.string());
  std::string line;
  std::getline(in, line);
  const auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_object() && doc.contains("header")) return doc["header"].value("config_hash", std::string("unknown"));
  return "unknown";
}

// Output stream: a file when a path is given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void close(const std::string& path) {
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw Error("write failed: " + path);
    }
  }

 private:
  std::ofstream file_;
};

int cmd_run(const Common& c, bool fresh, bool quiet) {
  auto cfg = load_config(c);
  const fs::path out = output_dir(c, cfg);
  config::Session session(cfg);
  const auto plan = cfg.plan();
  const std::string hash = cfg.hash();

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create " + out.string() + ": " + ec.message());
  {
    std::ofstream f(out / "config.json");
    f << cfg.canonical();
    if (!f) throw Error("cannot write " + (out / "config.json").string());
  }

  harness::RunOptions opts;
  opts.out_dir = out;
  opts.workers = cfg.workers;
  opts.run_log = cfg.run_log;
  opts.resume = !fresh;
  opts.config_hash = hash;
  std::size_t done = 0;
  const std::size_t total = plan.job_count();
  if (!quiet) {
    opts.on_record = [&](const harness::TrialRecord& r) {
      ++done;
      std::cerr << "[" << done << "/" << total << "] " << r.id() << " -> " << r.identified.c1 << "."
                << r.identified.c2 << "." << r.identified.v << (r.status == "ok" ? "" : " (" + r.status + ")")
                << '\n';
    };
  }
  std::cerr << "config " << hash << ": " << plan.syllables.size() << " syllables x " << plan.trials_per_syllable
            << " trials x " << plan.strategies.size() << " strategies, backend " << to_string(cfg.backend) << '\n';
  const auto records = harness::run_experiment(plan, session.deps(), opts);

  const auto table = harness::identification_table(records);
  std::ofstream tsv(out / "id_table.tsv");
  harness::write_id_table(tsv, table, hash);
  if (!tsv) throw Error("cannot write " + (out / "id_table.tsv").string());
  if (!quiet) harness::write_id_table(std::cout, table, hash);
  return 0;
}

artic::ArticulatorySpace report_space(const std::string& config_path) {
  const auto cfg = config::ExperimentConfig::load(config_path.empty() ? default_config() : fs::path(config_path));
  return artic::ArticulatorySpace::load(cfg.resolve(cfg.space));
}

int cmd_id_table(const std::string& records_path, const std::string& config_path, const std::string& out) {
  const auto space = report_space(config_path);
  const auto records = harness::load_records(space, records_path);
  if (records.empty()) throw Error(records_path + " holds no trial records");
  Sink sink(out);
  harness::write_id_table(sink.get(), harness::identification_table(records), records_hash(records_path));
  sink.close(out);
  return 0;
}

int cmd_coart(const std::string& records_path, const std::string& config_path, const std::string& pair,
              const std::string& strategy, const std::string& out, const std::string& csv) {
  const auto space = report_space(config_path);
  const auto all = harness::load_records(space, records_path);
  const auto kind = explore::parse_strategy(strategy);
  std::vector<harness::TrialRecord> selected;
  for (const auto& r : all) {
    const explore::StrategySpec spec{kind, 1, r.coart};
    if (r.strategy == spec.label()) selected.push_back(r);
  }
  const auto role = pair == "c1" ? explore::Role::C1 : explore::Role::C2;
  const auto rows = harness::coart_report(selected, role, space);
  const auto hash = records_hash(records_path);
  Sink sink(out);
  harness::write_coart_table(sink.get(), rows, hash);
  sink.close(out);
  if (!csv.empty()) {
    Sink plot(csv);
    harness::write_coart_csv(plot.get(), rows, hash);
    plot.close(csv);
  }
  return 0;
}

int cmd_synth(const Common& c, const std::string& targets, const std::string& out, std::uint64_t seed) {
  const auto cfg = load_config(c);
  const auto space = artic::ArticulatorySpace::load(cfg.resolve(cfg.space));
  std::ifstream in(targets);
  if (!in) throw ConfigError("cannot open " + targets);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + targets + ": " + e.what());
  }
  const auto spec = tam::utterance_from_json(space, doc);
  const vtsynth::TractModel tract(space, cfg.tract);
  const auto traj = tam::generate_trajectory(space, spec, cfg.production.control_rate);
  vtsynth::write_wav(out, vtsynth::synthesize(tract, traj, cfg.synth, seed));
  std::cerr << "wrote " << out << " (" << std::fixed << std::setprecision(3) << spec.total_duration() << " s)\n";
  return 0;
}

int cmd_calibrate(const Common& c) {
  const auto cfg = load_config(c);
  const auto space = artic::ArticulatorySpace::load(cfg.resolve(cfg.space));
  const auto inventory = percept::Inventory::load(cfg.resolve(cfg.inventory));
  const auto prototypes = percept::PhoneticPrototypes::load(cfg.resolve(cfg.prototypes));
  const vtsynth::TractModel tract(space, cfg.tract);
  std::uint64_t count = 0;
  const percept::Renderer render = [&](const std::vector<std::string>& symbols) {
    const auto spec = explore::prototype_utterance(cfg.production, space, inventory, prototypes, symbols);
    const auto traj = tam::generate_trajectory(space, spec, cfg.production.control_rate);
    return vtsynth::synthesize(tract, traj, cfg.synth, hash_combine(cfg.seed, count++));
  };
  const auto bank = percept::build_prototype_bank(inventory, prototypes, cfg.mel, render);
  const fs::path dir = c.out.empty() ? cfg.resolve(cfg.bank) : fs::path(c.out);
  bank.save(dir);
  std::cerr << "wrote " << bank.entry_count() << " prototypes to " << dir.string() << " (content "
            << bank.content_hash() << ")\n";
  return 0;
}

int cmd_bench(const std::string& function, std::size_t dims, std::size_t evals, std::size_t seeds,
              std::uint64_t seed) {
  const auto fns = bench::standard_functions();
  std::vector<bench::TestFunction> chosen;
  if (function == "all")
    chosen = fns;
  else
    chosen.push_back(bench::find_function(fns, function));
  std::cout << "function\tdims\tevaluations\tseeds\ttpe_median\trandom_median\tratio\n";
  std::cout << std::setprecision(6);
  for (const auto& fn : chosen) {
    const auto r = bench::compare(fn, dims, evals, seeds, seed);
    std::cout << fn.name << '\t' << dims << '\t' << evals << '\t' << seeds << '\t' << r.tpe_median << '\t'
              << r.random_median << '\t' << r.tpe_median / r.random_median << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"babblekit: articulatory exploration of CCV syllables"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  Common common;
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config (default: shipped exp.json)");
  };

  auto* run = app.add_subcommand("run", "Run the experiment plan of a config");
  add_config(run);
  run->add_option("--seed", common.seed, "Base seed (overrides the config)");
  run->add_option("--workers", common.workers, "Worker threads (overrides the config)");
  run->add_option("--scale", common.scale, "Fraction of the syllable grid to keep, in (0, 1]");
  run->add_option("--out", common.out, "Output directory (fallback: $BABBLEKIT_OUT, then the config)");
  bool fresh = false;
  bool quiet = false;
  run->add_flag("--fresh", fresh, "Discard existing records instead of resuming");
  run->add_flag("--quiet", quiet, "No progress output");

  auto* report = app.add_subcommand("report", "Tables from a records file");
  report->require_subcommand(1);
  std::string records;
  std::string report_out;
  std::string csv;
  std::string pair = "c1";
  std::string strategy = "V_then_C1C2";
  auto* id_table = report->add_subcommand("id-table", "Identification rates per condition");
  id_table->add_option("--records", records, "records.jsonl")->required();
  id_table->add_option("--out", report_out, "Output TSV (default: stdout)");
  add_config(id_table);
  auto* coart = report->add_subcommand("coart", "Per-dimension consonant-vowel distances, coart off vs on");
  coart->add_option("--records", records, "records.jsonl")->required();
  coart->add_option("--pair", pair, "Consonant compared with the vowel")->check(CLI::IsMember({"c1", "c2"}));
  coart->add_option("--strategy", strategy, "Strategy whose two coart conditions are compared");
  coart->add_option("--out", report_out, "Output TSV (default: stdout)");
  coart->add_option("--csv", csv, "Plot-ready CSV (dimension, condition, mean, p)");
  add_config(coart);

  auto* synth = app.add_subcommand("synth", "Render one utterance to a WAV file");
  std::string targets;
  std::string wav;
  std::uint64_t synth_seed = 0;
  synth->add_option("--targets", targets, "Utterance JSON")->required();
  synth->add_option("--out", wav, "Output WAV")->required();
  synth->add_option("--seed", synth_seed, "Aspiration noise seed");
  add_config(synth);

  auto* calibrate = app.add_subcommand("calibrate", "Build the mel prototype bank");
  add_config(calibrate);
  calibrate->add_option("--seed", common.seed, "Noise seed (overrides the config)");
  calibrate->add_option("--out", common.out, "Bank directory (default: the config's bank)");

  auto* bench_cmd = app.add_subcommand("bench", "Benchmarks");
  bench_cmd->require_subcommand(1);
  auto* bench_tpe = bench_cmd->add_subcommand("tpe", "TPE versus random search on standard functions");
  std::string function = "all";
  std::size_t dims = 6;
  std::size_t evals = 500;
  std::size_t seeds = 20;
  std::uint64_t bench_seed = 0;
  bench_tpe->add_option("--function", function, "sphere, rosenbrock, rastrigin, ackley or all");
  bench_tpe->add_option("--dims", dims, "Dimensions")->check(CLI::PositiveNumber);
  bench_tpe->add_option("--evals", evals, "Evaluations per run")->check(CLI::PositiveNumber);
  bench_tpe->add_option("--seeds", seeds, "Runs per optimizer")->check(CLI::PositiveNumber);
  bench_tpe->add_option("--seed", bench_seed, "First seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*run) return cmd_run(common, fresh, quiet);
    if (*id_table) return cmd_id_table(records, common.config, report_out);
    if (*coart) return cmd_coart(records, common.config, pair, strategy, report_out, csv);
    if (*synth) return cmd_synth(common, targets, wav, synth_seed);
    if (*calibrate) return cmd_calibrate(common);
    if (*bench_tpe) return cmd_bench(function, dims, evals, seeds, bench_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
