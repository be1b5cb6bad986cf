#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>

#include "cafda/config.hpp"
#include "cafda/csv.hpp"
#include "cafda/errors.hpp"
#include "cafda/harness.hpp"
#include "cafda/prepare.hpp"
#include "cafda/service.hpp"
#include "cafda/synthetic.hpp"

namespace cafda::cli {
namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

fs::path resolve_output_dir(const std::string& flag, const ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("CAFDA_OUTPUT_DIR"); env && *env) return env;
  return "cafda-out";
}

ExperimentConfig build_config(const std::string& config_path, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path);
  apply_overrides(cfg, overrides);
  validate(cfg);
  return cfg;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_prepare(const std::string& name, const std::string& raw, const std::string& out_path, std::ostream& out) {
  const auto d = parse_public_dataset(name);
  if (!d) throw UsageError("unknown dataset '" + name + "' (expected shuttle, covtype or creditcard)");
  const auto desc = prepare_dataset_file(*d, raw, out_path);
  const auto mapping = prep_mapping(*d);
  out << "dataset      " << desc.name << "\n"
      << "raw format   " << mapping.raw_format << "\n"
      << "class rule   " << mapping.class_rule << "\n"
      << "samples      " << desc.n_samples << "\n"
      << "dimension    " << desc.dimension << " (" << desc.n_features << " features + label)\n"
      << "positives    " << desc.n_positives << "\n"
      << "anomaly      " << fixed(100.0 * desc.anomaly_proportion, 3) << "%\n"
      << "written      " << out_path << "\n";
  return kOk;
}

int cmd_run(const ExperimentConfig& cfg, const fs::path& out_dir, std::size_t threads, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  auto data = std::make_shared<const Dataset>(load_dataset(cfg.run.dataset_path, cfg.run.label_column));
  fs::create_directories(out_dir / "logs");

  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.replications; ++i) seeds.push_back(cfg.run.seed + i);

  {
    std::ofstream eff(out_dir / "effective.cfg", std::ios::binary);
    eff << dump_config(cfg);
  }

  CurveTable table;
  nlohmann::ordered_json timing = nlohmann::ordered_json::object();
  bool any_truncated = false;
  for (const auto& name : cfg.strategies) {
    const auto s0 = std::chrono::steady_clock::now();
    RunConfig rc = cfg.run;
    rc.strategy = name;
    const auto runs = run_replications(data, rc, seeds, threads);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      write_step_log(runs[i].records, out_dir / "logs" / (name + "_seed" + std::to_string(seeds[i]) + ".jsonl"));
      any_truncated = any_truncated || runs[i].truncated;
    }
    auto pts = aggregate_runs(name, runs);
    const auto& last = pts.back();
    out << std::left << std::setw(16) << name << " final cum_reward mean " << fixed(last.mean, 3) << "  sd "
        << fixed(last.sd, 3) << "  [" << fixed(last.min, 1) << ", " << fixed(last.max, 1) << "]\n";
    table.rows.insert(table.rows.end(), pts.begin(), pts.end());
    timing[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
  }
  export_curves(table, out_dir / "curves.csv");
  if (any_truncated) out << "note: some runs exhausted the pool before the horizon\n";

  nlohmann::ordered_json meta{
      {"started_utc", iso_now()},
      {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
      {"strategy_wall_seconds", timing},
      {"dataset", data->name},
      {"replications", cfg.replications},
      {"seeds", seeds},
      {"config_digest", config_digest(cfg.run)},
      {"truncated", any_truncated}};
  std::ofstream(out_dir / "metadata.json") << meta.dump(2) << '\n';
  out << "artifacts in " << out_dir.string() << "\n";
  return kOk;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& output, std::ostream& out) {
  struct Entry {
    std::string run, strategy;
    double mean, sd;
    std::size_t n;
  };
  std::vector<Entry> entries;
  std::optional<std::size_t> horizon;
  for (const auto& d : dirs) {
    if (!fs::is_directory(d)) throw DataError("run directory not found: " + d);
    const auto table = read_curves(fs::path(d) / "curves.csv");
    std::size_t reps = 1;
    if (std::ifstream meta(fs::path(d) / "metadata.json"); meta) {
      const auto j = nlohmann::json::parse(meta, nullptr, false);
      if (j.is_object() && j.contains("replications")) reps = j["replications"].get<std::size_t>();
    }
    for (const auto& s : table.strategies()) {
      const auto c = table.curve(s);
      if (horizon && c.back().t != *horizon) {
        throw StateError("mismatched horizons: " + d + " has " + std::to_string(c.back().t) + ", expected " +
                         std::to_string(*horizon));
      }
      horizon = c.back().t;
      entries.push_back({d, s, c.back().mean, c.back().sd, reps});
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.mean > b.mean; });

  std::ostringstream csv;
  csv << "rank,run,strategy,final_mean,sd,se,diff_from_best\n";
  out << std::left << std::setw(5) << "rank" << std::setw(28) << "run" << std::setw(16) << "strategy"
      << std::setw(12) << "final_mean" << std::setw(10) << "sd" << std::setw(10) << "se"
      << "diff_from_best\n";
  std::size_t rank = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (i == 0 || e.mean != entries[i - 1].mean) rank = i + 1;
    const double se = e.sd / std::sqrt(static_cast<double>(e.n));
    const double diff = entries.front().mean - e.mean;
    csv << rank << ',' << e.run << ',' << e.strategy << ',' << csv::format_double(e.mean) << ','
        << csv::format_double(e.sd) << ',' << csv::format_double(se) << ',' << csv::format_double(diff) << '\n';
    out << std::left << std::setw(5) << rank << std::setw(28) << e.run << std::setw(16) << e.strategy
        << std::setw(12) << fixed(e.mean, 3) << std::setw(10) << fixed(e.sd, 3) << std::setw(10) << fixed(se, 3)
        << fixed(diff, 3) << '\n';
  }
  std::ofstream file(output, std::ios::binary);
  if (!file) throw DataError("cannot write " + output);
  file << csv.str();
  out << "written " << output << "\n";
  return kOk;
}

OracleServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& sessions_dir, const std::string& static_dir,
              std::ostream& out) {
  SessionManager sessions(sessions_dir.empty() ? std::nullopt : std::optional<fs::path>(sessions_dir));
  OracleServer server(sessions, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
  const int bound = server.bind(host, port);
  out << "listening on http://" << host << ":" << bound << " (" << sessions.restored() << " sessions restored)"
      << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.serve();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost-aware active search for fraud detection"};
  app.require_subcommand(1);

  std::string ds_name, raw_path, prep_out;
  auto* prep = app.add_subcommand("prepare-data", "Convert a raw public dataset to the canonical CSV");
  prep->add_option("dataset", ds_name, "shuttle | covtype | creditcard")->required();
  prep->add_option("raw", raw_path, "Raw file as downloaded")->required();
  prep->add_option("out", prep_out, "Output CSV")->required();

  std::string config_path, output_dir;
  std::vector<std::string> overrides;
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "Run every configured strategy over the seed replications");
  run->add_option("-c,--config", config_path, "Config file (key=value)");
  run->add_option("-o,--output-dir", output_dir, "Artifact directory (default: $CAFDA_OUTPUT_DIR)");
  run->add_option("-j,--threads", threads, "Parallel replications (0 = all cores)");
  run->add_option("overrides", overrides, "key=value overrides");

  std::vector<std::string> run_dirs;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Rank strategies by final mean cumulative reward");
  compare->add_option("run_dirs", run_dirs, "Run artifact directories")->required();
  compare->add_option("-o,--output", compare_out, "Comparison CSV (default: <output dir>/comparison.csv)");

  SyntheticTaskConfig synth;
  std::string synth_out;
  auto* make_synth = app.add_subcommand("make-synthetic", "Write a synthetic imbalanced task in the canonical CSV");
  make_synth->add_option("out", synth_out, "Output CSV")->required();
  make_synth->add_option("-n,--samples", synth.n_samples);
  make_synth->add_option("-f,--positive-fraction", synth.positive_fraction);
  make_synth->add_option("-d,--dimension", synth.dimension);
  make_synth->add_option("--clusters", synth.n_clusters);
  make_synth->add_option("--radius", synth.cluster_radius);
  make_synth->add_option("--spread", synth.cluster_spread);
  make_synth->add_option("-s,--seed", synth.seed);

  std::string host = "127.0.0.1", sessions_dir, static_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Start the interactive oracle service");
  serve->add_option("--host", host);
  serve->add_option("-p,--port", port);
  serve->add_option("--sessions-dir", sessions_dir, "Persist sessions here (replayed on restart)");
  serve->add_option("--static-dir", static_dir, "Console bundle served at /");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!args.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (prep->parsed()) return cmd_prepare(ds_name, raw_path, prep_out, out);
    if (run->parsed()) {
      const auto cfg = build_config(config_path, overrides);
      return cmd_run(cfg, resolve_output_dir(output_dir, cfg), threads, out);
    }
    if (compare->parsed()) {
      if (compare_out.empty()) {
        const fs::path dir = resolve_output_dir("", ExperimentConfig{});
        fs::create_directories(dir);
        compare_out = (dir / "comparison.csv").string();
      }
      return cmd_compare(run_dirs, compare_out, out);
    }
    if (make_synth->parsed()) {
      const auto data = make_synthetic(synth);
      write_dataset(data, synth_out, "label");
      const auto d = data.descriptor();
      out << "wrote " << synth_out << ": " << d.n_samples << " rows, " << d.n_positives << " positives\n";
      return kOk;
    }
    if (serve->parsed()) return cmd_serve(host, port, sessions_dir, static_dir, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsage;
}

}  // namespace cafda::cli
