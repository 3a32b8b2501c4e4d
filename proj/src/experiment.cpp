#include "anchor/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "anchor/error.hpp"
#include "anchor/format.hpp"
#include "anchor/persist.hpp"
#include "anchor/theory.hpp"

#ifndef ANCHOR_VERSION
#define ANCHOR_VERSION "0.0.0"
#endif

namespace anchor {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Seed streams derived from data_seed.
constexpr std::uint64_t kSourceStream = 0;
constexpr std::uint64_t kSourceTestStream = 1;
constexpr std::uint64_t kTargetStream = 2;
constexpr std::uint64_t kShiftStream = 7;
constexpr std::uint64_t kSplitStream = 11;

ordered_json opt_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

ordered_json shift_json(const ShiftSpec& s) {
  ordered_json j;
  j["kind"] = std::string(to_string(s.kind));
  j["intensity"] = s.intensity;
  j["seed"] = s.seed;
  j["angle_per_level_deg"] = s.angle_per_level_deg;
  j["offset_per_level"] = s.offset_per_level;
  j["noise_sigmas"] = s.noise_sigmas;
  j["log_scale_per_level"] = s.log_scale_per_level;
  return j;
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04zu.txt", epoch);
  return buf;
}

std::string label(double v) {
  // Compact, filesystem-safe rendering of a grid value.
  std::string s = format_double(v);
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

fs::path intensity_dir(int intensity) { return "i" + std::to_string(intensity); }

fs::path state_dir(const fs::path& run) { return run / "state"; }
fs::path state_next_dir(const fs::path& run) { return run / "state.next"; }

// The snapshot is built beside the live one and swapped in, so a crash leaves
// at least one complete snapshot.
void commit_state(const fs::path& run, const AdaptState& state) {
  const fs::path next = state_next_dir(run);
  fs::remove_all(next);
  save_state(next, state);
  fs::remove_all(state_dir(run));
  fs::rename(next, state_dir(run));
}

std::optional<AdaptState> recover_state(const fs::path& run) {
  if (fs::exists(state_dir(run) / "state.json")) {
    fs::remove_all(state_next_dir(run));
    return load_state(state_dir(run));
  }
  if (fs::exists(state_next_dir(run) / "state.json")) {
    fs::rename(state_next_dir(run), state_dir(run));
    return load_state(state_dir(run));
  }
  fs::remove_all(state_next_dir(run));
  return std::nullopt;
}

std::vector<RunRecord> read_records(const fs::path& path, std::size_t limit) {
  std::vector<RunRecord> out;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  while (out.size() < limit && std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::string records_text(const std::vector<RunRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_line(r);
  return out;
}

void append_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << text;
  out.flush();
  if (!out) throw InputError("cannot append to " + path.string());
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string tool_version() { return ANCHOR_VERSION; }

ShiftSpec shift_for(const ExperimentConfig& config, int intensity) {
  ShiftSpec s;
  s.kind = config.shift_kind;
  s.intensity = intensity;
  s.seed = derive_seed(config.data_seed, kShiftStream);
  s.angle_per_level_deg = config.angle_per_level;
  s.offset_per_level = config.offset_per_level;
  s.noise_sigmas = config.noise_sigmas;
  s.log_scale_per_level = config.log_scale_per_level;
  return s;
}

SourceConfig source_config(const ExperimentConfig& config) {
  SourceConfig s;
  s.epochs = config.source_epochs;
  s.lr = config.source_lr;
  s.batch_size = config.source_batch_size;
  s.seed = config.source_seed;
  return s;
}

Benchmark build_benchmark(const ExperimentConfig& config) {
  config.validate();
  Benchmark b;
  const std::uint64_t split_seed = derive_seed(config.data_seed, kSplitStream);
  if (!config.source_csv.empty()) {
    const Dataset source = load_csv(config.source_csv, true, config.csv_header);
    auto [train, test] = split_holdout(source, config.holdout_fraction, split_seed);
    b.source_train = std::move(train);
    b.source_test = std::move(test);
  } else {
    ClusterSpec spec;
    spec.classes = config.classes;
    spec.dim = config.dim;
    spec.n_per_class = config.source_n_per_class;
    spec.spread = config.spread;
    spec.radius = config.radius;
    spec.seed = config.data_seed;
    spec.sample_stream = kSourceStream;
    b.source_train = gen_clusters(spec);
    spec.sample_stream = kSourceTestStream;
    b.source_test = gen_clusters(spec);
  }

  if (!config.target_csv.empty()) {
    const Dataset target = load_csv(config.target_csv, config.target_has_labels, config.csv_header);
    if (target.dim() != b.source_train.dim())
      throw InputError("target table has " + std::to_string(target.dim()) +
                       " features; source has " + std::to_string(b.source_train.dim()));
    auto [train, holdout] = split_holdout(target, config.holdout_fraction, split_seed);
    b.targets.push_back({0, std::move(train), std::move(holdout), std::nullopt});
    return b;
  }
  if (!config.source_csv.empty())
    throw ConfigError("source_csv requires target_csv; the shift ladder only applies to generated data");

  ClusterSpec spec;
  spec.classes = config.classes;
  spec.dim = config.dim;
  spec.n_per_class = config.target_n_per_class;
  spec.spread = config.spread;
  spec.radius = config.radius;
  spec.seed = config.data_seed;
  spec.sample_stream = kTargetStream;
  const Dataset clean = gen_clusters(spec);
  for (int intensity : config.intensities) {
    const ShiftSpec shift = shift_for(config, intensity);
    Dataset shifted = apply_shift(clean, shift);
    auto [train, holdout] = split_holdout(shifted, config.holdout_fraction, split_seed);
    b.targets.push_back({intensity, std::move(train), std::move(holdout), shift});
  }
  return b;
}

std::string RunSpec::name() const {
  std::string out = std::string(to_string(strategy));
  std::replace(out.begin(), out.end(), '+', '_');
  if (uses_ensemble(strategy)) out += "-lam" + label(lambda) + "-beta" + label(beta);
  if (strategy == Strategy::Elr || strategy == Strategy::ElrAsAux) out += "-elr" + label(elr_lambda);
  out += "-seed" + std::to_string(seed);
  return out;
}

std::vector<RunSpec> enumerate_runs(const ExperimentConfig& config) {
  std::vector<int> intensities = config.intensities;
  if (!config.target_csv.empty()) intensities = {0};
  std::vector<RunSpec> out;
  for (int intensity : intensities) {
    for (Strategy strategy : config.strategies) {
      const bool ensemble = uses_ensemble(strategy);
      const bool elr = strategy == Strategy::Elr || strategy == Strategy::ElrAsAux;
      const std::size_t nl = ensemble ? config.lambdas.size() : 1;
      const std::size_t nb = ensemble ? config.betas.size() : 1;
      const std::size_t ne = elr ? config.elr_lambdas.size() : 1;
      for (std::size_t il = 0; il < nl; ++il)
        for (std::size_t ib = 0; ib < nb; ++ib)
          for (std::size_t ie = 0; ie < ne; ++ie)
            for (std::uint64_t seed : config.seeds) {
              RunSpec r;
              r.intensity = intensity;
              r.strategy = strategy;
              r.lambda = config.lambdas[il];
              r.beta = config.betas[ib];
              r.elr_lambda = config.elr_lambdas[ie];
              r.seed = seed;
              out.push_back(r);
            }
    }
  }
  return out;
}

AdaptConfig adapt_config(const ExperimentConfig& config, const RunSpec& spec) {
  AdaptConfig a;
  a.strategy = spec.strategy;
  a.epochs = config.epochs;
  a.lr = config.lr;
  a.batch_size = config.batch_size;
  a.inner_steps = config.inner_steps;
  a.seed = spec.seed;
  a.ancon.lambda = spec.lambda;
  a.ancon.beta = spec.beta;
  a.ancon.weight_scheme = config.weight_scheme;
  a.ancon.prediction = config.prediction;
  a.ancon.temperature = config.temperature;
  a.ancon.normalization = config.normalization;
  a.elr_decay = config.elr_decay;
  a.elr_lambda = spec.elr_lambda;
  a.gce_q = config.gce_q;
  a.ece_bins = config.ece_bins;
  return a;
}

RunSummary summarize_run(const RunSpec& spec, const std::vector<RunRecord>& records) {
  RunSummary s;
  s.spec = spec;
  s.epochs = records.size();
  if (records.empty()) return s;
  const RunRecord& last = records.back();
  s.final_accuracy = last.target_accuracy;
  s.final_holdout_accuracy = last.holdout_accuracy;
  s.final_ece = last.ece;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& acc = records[i].target_accuracy;
    if (acc && (!s.peak_accuracy || *acc > *s.peak_accuracy)) {
      s.peak_accuracy = acc;
      s.peak_epoch = records[i].epoch;
    }
  }
  const auto pick = [&](Criterion c) {
    const RunRecord& r = records[select_checkpoint(records, c)];
    return RunSummary::Selected{r.epoch, r.target_accuracy, r.holdout_accuracy, r.ece};
  };
  s.infomax = pick(Criterion::InfoMax);
  s.ent = pick(Criterion::Ent);
  s.corr_c = pick(Criterion::CorrC);
  return s;
}

ordered_json summary_to_json(const RunSummary& s) {
  ordered_json j;
  j["intensity"] = s.spec.intensity;
  j["strategy"] = std::string(to_string(s.spec.strategy));
  j["lambda"] = s.spec.lambda;
  j["beta"] = s.spec.beta;
  j["elr_lambda"] = s.spec.elr_lambda;
  j["seed"] = s.spec.seed;
  j["epochs"] = s.epochs;
  j["final_accuracy"] = opt_json(s.final_accuracy);
  j["final_holdout_accuracy"] = opt_json(s.final_holdout_accuracy);
  j["final_ece"] = opt_json(s.final_ece);
  j["peak_accuracy"] = opt_json(s.peak_accuracy);
  j["peak_epoch"] = s.peak_epoch;
  const auto sel = [](const RunSummary::Selected& x) {
    ordered_json o;
    o["epoch"] = x.epoch;
    o["accuracy"] = opt_json(x.accuracy);
    o["holdout_accuracy"] = opt_json(x.holdout_accuracy);
    o["ece"] = opt_json(x.ece);
    return o;
  };
  j["selected"]["infomax"] = sel(s.infomax);
  j["selected"]["ent"] = sel(s.ent);
  j["selected"]["corr_c"] = sel(s.corr_c);
  return j;
}

RunSummary summary_from_json(const nlohmann::json& j) {
  try {
    RunSummary s;
    s.spec.intensity = j.at("intensity").get<int>();
    s.spec.strategy = parse_strategy(j.at("strategy").get<std::string>());
    s.spec.lambda = j.at("lambda").get<double>();
    s.spec.beta = j.at("beta").get<double>();
    s.spec.elr_lambda = j.at("elr_lambda").get<double>();
    s.spec.seed = j.at("seed").get<std::uint64_t>();
    s.epochs = j.at("epochs").get<std::size_t>();
    s.final_accuracy = opt_from(j, "final_accuracy");
    s.final_holdout_accuracy = opt_from(j, "final_holdout_accuracy");
    s.final_ece = opt_from(j, "final_ece");
    s.peak_accuracy = opt_from(j, "peak_accuracy");
    s.peak_epoch = j.at("peak_epoch").get<std::size_t>();
    const auto sel = [](const nlohmann::json& o) {
      return RunSummary::Selected{o.at("epoch").get<std::size_t>(), opt_from(o, "accuracy"),
                                  opt_from(o, "holdout_accuracy"), opt_from(o, "ece")};
    };
    s.infomax = sel(j.at("selected").at("infomax"));
    s.ent = sel(j.at("selected").at("ent"));
    s.corr_c = sel(j.at("selected").at("corr_c"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("run summary: ") + e.what());
  }
}

std::optional<RunSummary> execute_run(const ExperimentConfig& config, const RunSpec& spec,
                                      const TargetSplit& target, const LinearParams& source,
                                      const fs::path& dir, std::optional<std::size_t> stop_after) {
  const fs::path summary_path = dir / "summary.json";
  if (fs::exists(summary_path))
    return summary_from_json(nlohmann::json::parse(read_file(summary_path)));

  fs::create_directories(dir / "checkpoints");
  const AdaptConfig adapt = adapt_config(config, spec);
  write_file_atomic(dir / "config.txt", config_to_text(config));
  ordered_json run;
  run["tool_version"] = tool_version();
  run["config_hash"] = config_hash(config);
  run["name"] = spec.name();
  run["intensity"] = spec.intensity;
  run["strategy"] = std::string(to_string(spec.strategy));
  run["lambda"] = spec.lambda;
  run["beta"] = spec.beta;
  run["elr_lambda"] = spec.elr_lambda;
  run["seed"] = spec.seed;
  run["train_size"] = target.train.size();
  run["holdout_size"] = target.holdout.size();
  write_file_atomic(dir / "run.json", run.dump(2) + "\n");

  const fs::path records_path = dir / "records.jsonl";
  AdaptState state;
  if (auto recovered = recover_state(dir)) {
    state = std::move(*recovered);
  } else {
    state = initial_state(target.train, source, adapt);
  }
  // Records past the snapshot belong to an epoch that will be rerun.
  std::vector<RunRecord> records = read_records(records_path, state.epochs_done);
  if (records.size() != state.epochs_done)
    throw InputError(dir.string() + ": records.jsonl has fewer lines than the saved state");
  write_file_atomic(records_path, records_text(records));
  for (const auto& entry : fs::directory_iterator(dir / "checkpoints")) {
    const std::string name = entry.path().filename().string();
    std::size_t epoch = 0;
    if (std::sscanf(name.c_str(), "epoch_%zu.txt", &epoch) == 1 && epoch >= state.epochs_done)
      fs::remove(entry.path());
  }

  const auto limit = stop_after.value_or(adapt.epochs);
  if (state.epochs_done < adapt.epochs && state.epochs_done < limit) {
    const EpochHook hook = [&](const AdaptState& s, const RunRecord& rec) {
      write_checkpoint(dir / "checkpoints" / checkpoint_name(rec.epoch), s.params, rec.epoch);
      append_file(records_path, record_to_line(rec));
      commit_state(dir, s);
      records.push_back(rec);
      return s.epochs_done < limit;
    };
    resume_adaptation(target.train, target.holdout, std::move(state), adapt, hook);
  }
  if (records.size() < adapt.epochs) return std::nullopt;

  RunSummary summary = summarize_run(spec, records);
  write_file_atomic(summary_path, summary_to_json(summary).dump(2) + "\n");
  return summary;
}

void cmd_generate(const ExperimentConfig& config, const fs::path& out) {
  const Benchmark b = build_benchmark(config);
  fs::create_directories(out);
  ordered_json manifest;
  manifest["tool_version"] = tool_version();
  manifest["config_hash"] = config_hash(config);
  manifest["data_seed"] = config.data_seed;
  manifest["split_seed"] = derive_seed(config.data_seed, kSplitStream);
  ordered_json files = ordered_json::array();
  const auto emit = [&](const fs::path& rel, const Dataset& d, const ordered_json& extra) {
    fs::create_directories((out / rel).parent_path());
    const std::string text = to_csv(d);
    write_file_atomic(out / rel, text);
    ordered_json f;
    f["path"] = rel.generic_string();
    f["rows"] = d.size();
    f["dim"] = d.dim();
    f["classes"] = d.classes;
    f["labeled"] = d.labeled();
    f["support_bound"] = d.support_bound;
    f["fnv1a64"] = hex64(fnv1a64(text));
    f["provenance"] = d.provenance;
    for (const auto& [k, v] : extra.items()) f[k] = v;
    files.push_back(f);
  };
  emit("source.csv", b.source_train, ordered_json::object());
  emit("source_test.csv", b.source_test, ordered_json::object());
  for (const auto& t : b.targets) {
    ordered_json extra = ordered_json::object();
    if (t.shift) extra["shift"] = shift_json(*t.shift);
    extra["intensity"] = t.intensity;
    emit(intensity_dir(t.intensity) / "target.csv", t.train, extra);
    emit(intensity_dir(t.intensity) / "holdout.csv", t.holdout, extra);
  }
  manifest["files"] = files;
  write_file_atomic(out / "config.txt", config_to_text(config));
  write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
}

LinearParams cmd_train_source(const ExperimentConfig& config, const fs::path& out,
                              std::vector<std::string>* warnings) {
  const Benchmark b = build_benchmark(config);
  const fs::path dir = out / "source";
  fs::create_directories(dir);
  const fs::path params_path = dir / "params.txt";
  const fs::path meta_path = dir / "source.json";
  // Reuse only a model trained under the same configuration hash.
  if (fs::exists(params_path) && fs::exists(meta_path)) {
    const auto meta = nlohmann::json::parse(read_file(meta_path));
    if (meta.value("config_hash", std::string()) == config_hash(config))
      return read_checkpoint(params_path).params;
  }
  const LinearParams params = train_source(b.source_train, source_config(config), warnings);
  write_checkpoint(params_path, params, config.source_epochs);
  ordered_json meta;
  meta["tool_version"] = tool_version();
  meta["config_hash"] = config_hash(config);
  meta["epochs"] = config.source_epochs;
  meta["seed"] = config.source_seed;
  meta["source_train_accuracy"] = accuracy(predict(params, b.source_train));
  if (b.source_test.size() > 0)
    meta["source_test_accuracy"] = accuracy(predict(params, b.source_test));
  ordered_json targets = ordered_json::array();
  for (const auto& t : b.targets) {
    if (!t.train.labeled()) continue;
    ordered_json row;
    row["intensity"] = t.intensity;
    row["target_accuracy"] = accuracy(predict(params, t.train));
    targets.push_back(row);
  }
  meta["zero_shot"] = targets;
  write_file_atomic(meta_path, meta.dump(2) + "\n");
  return params;
}

AdaptOutcome cmd_adapt(const ExperimentConfig& config, const fs::path& out, const AdaptOptions& options) {
  AdaptOutcome outcome;
  const auto runs = enumerate_runs(config);
  if (runs.empty()) {
    outcome.warnings.push_back("adapt: the strategy grid is empty; nothing to run");
    return outcome;
  }
  const Benchmark b = build_benchmark(config);
  fs::create_directories(out);
  const LinearParams source = cmd_train_source(config, out, &outcome.warnings);

  ordered_json manifest;
  manifest["tool_version"] = tool_version();
  manifest["config_hash"] = config_hash(config);
  manifest["data_seed"] = config.data_seed;
  manifest["source_seed"] = config.source_seed;
  manifest["seeds"] = config.seeds;
  ordered_json shifts = ordered_json::array();
  for (const auto& t : b.targets)
    if (t.shift) shifts.push_back(shift_json(*t.shift));
  manifest["shifts"] = shifts;
  manifest["runs"] = runs.size();
  write_file_atomic(out / "config.txt", config_to_text(config));
  write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");

  std::map<int, const TargetSplit*> by_intensity;
  for (const auto& t : b.targets) by_intensity[t.intensity] = &t;

  std::vector<std::optional<RunSummary>> results(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const RunSpec& spec = runs[i];
      const fs::path dir = out / intensity_dir(spec.intensity) / spec.name();
      try {
        results[i] = execute_run(config, spec, *by_intensity.at(spec.intensity), source, dir,
                                 options.stop_after);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, runs.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);

  std::string csv =
      "intensity,strategy,lambda,beta,elr_lambda,seed,epochs,final_accuracy,final_ece,peak_accuracy,"
      "peak_epoch,infomax_epoch,infomax_accuracy,infomax_ece,ent_epoch,ent_accuracy,ent_ece,"
      "corr_c_epoch,corr_c_accuracy,corr_c_ece\n";
  for (const auto& r : results) {
    if (!r) {
      ++outcome.incomplete;
      continue;
    }
    std::ostringstream row;
    row << r->spec.intensity << ',' << to_string(r->spec.strategy) << ',' << format_double(r->spec.lambda)
        << ',' << format_double(r->spec.beta) << ',' << format_double(r->spec.elr_lambda) << ','
        << r->spec.seed << ',' << r->epochs << ',' << opt_cell(r->final_accuracy) << ','
        << opt_cell(r->final_ece) << ',' << opt_cell(r->peak_accuracy) << ',' << r->peak_epoch;
    for (const auto* sel : {&r->infomax, &r->ent, &r->corr_c})
      row << ',' << sel->epoch << ',' << opt_cell(sel->accuracy) << ',' << opt_cell(sel->ece);
    csv += row.str() + "\n";
    outcome.completed.push_back(*r);
  }
  if (outcome.incomplete == 0) write_file_atomic(out / "summary.csv", csv);
  return outcome;
}

VerifyOutcome cmd_verify(const ExperimentConfig& config, const fs::path& out, const std::string& fault) {
  VerifyOptions opt;
  opt.seed = config.verify_seed;
  opt.tail_configs = config.verify_tail_configs;
  opt.mc_trials = config.verify_mc_trials;
  opt.ensemble_trials = config.verify_ensemble_trials;
  opt.identity_sets = config.verify_identity_sets;
  opt.l_gamma = config.l_gamma;
  if (fault == "xi-sign") {
    opt.xi_override = [](double z) { return -xi(z); };
  } else if (!fault.empty()) {
    throw ConfigError("unknown fault '" + fault + "'");
  }
  const auto checks = run_verification(opt);
  fs::create_directories(out);
  write_file_atomic(out / "verification.csv", verification_csv(checks));
  VerifyOutcome outcome;
  outcome.checks = checks.size();
  for (const auto& c : checks)
    if (!c.pass) ++outcome.failures;
  return outcome;
}

namespace {

struct GroupKey {
  std::string strategy;
  double lambda, beta, elr_lambda;
  int intensity;
  auto tie() const { return std::tie(strategy, lambda, beta, elr_lambda, intensity); }
  bool operator<(const GroupKey& o) const { return tie() < o.tie(); }
};

struct Stat {
  double mean = std::nan("");
  double std = std::nan("");
  std::size_t n = 0;
};

Stat stat(const std::vector<double>& xs) {
  Stat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return s;
}

std::string cell(double v) { return std::isnan(v) ? "" : format_double(v); }

struct Collected {
  std::vector<RunSummary> summaries;
  std::vector<std::vector<RunRecord>> records;
};

}  // namespace

ReportOutcome cmd_report(const std::vector<fs::path>& inputs, const fs::path& out) {
  Collected c;
  std::vector<fs::path> found;
  for (const auto& in : inputs) {
    if (!fs::exists(in)) throw InputError("report: no such path " + in.string());
    if (fs::is_regular_file(in)) {
      found.push_back(in);
      continue;
    }
    if (fs::exists(in / "summary.json")) found.push_back(in / "summary.json");
    for (const auto& e : fs::recursive_directory_iterator(in))
      if (e.is_regular_file() && e.path().filename() == "summary.json" && e.path().parent_path() != in)
        found.push_back(e.path());
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  for (const auto& p : found) {
    c.summaries.push_back(summary_from_json(nlohmann::json::parse(read_file(p))));
    c.records.push_back(read_records(p.parent_path() / "records.jsonl", SIZE_MAX));
  }

  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < c.summaries.size(); ++i) {
    const auto& s = c.summaries[i].spec;
    groups[{std::string(to_string(s.strategy)), s.lambda, s.beta, s.elr_lambda, s.intensity}].push_back(i);
  }

  fs::create_directories(out / "series");
  using Getter = std::optional<double> (*)(const RunSummary&);
  const std::vector<std::pair<std::string, Getter>> metrics = {
      {"final_accuracy", [](const RunSummary& s) { return s.final_accuracy; }},
      {"final_ece", [](const RunSummary& s) { return s.final_ece; }},
      {"peak_accuracy", [](const RunSummary& s) { return s.peak_accuracy; }},
      {"peak_minus_final",
       [](const RunSummary& s) -> std::optional<double> {
         if (!s.peak_accuracy || !s.final_accuracy) return std::nullopt;
         return *s.peak_accuracy - *s.final_accuracy;
       }},
      {"infomax_accuracy", [](const RunSummary& s) { return s.infomax.accuracy; }},
      {"infomax_ece", [](const RunSummary& s) { return s.infomax.ece; }},
      {"ent_accuracy", [](const RunSummary& s) { return s.ent.accuracy; }},
      {"ent_ece", [](const RunSummary& s) { return s.ent.ece; }},
      {"corr_c_accuracy", [](const RunSummary& s) { return s.corr_c.accuracy; }},
      {"corr_c_ece", [](const RunSummary& s) { return s.corr_c.ece; }},
  };

  std::string table = "strategy,lambda,beta,elr_lambda,intensity,seeds";
  for (const auto& [name, get] : metrics) table += "," + name + "_mean," + name + "_std";
  table += "\n";
  std::string long_table = "strategy,lambda,beta,elr_lambda,intensity,metric,mean,std,n\n";

  for (const auto& [key, members] : groups) {
    std::ostringstream prefix;
    prefix << key.strategy << ',' << format_double(key.lambda) << ',' << format_double(key.beta) << ','
           << format_double(key.elr_lambda) << ',' << key.intensity;
    std::ostringstream row;
    row << prefix.str() << ',' << members.size();
    for (const auto& [name, get] : metrics) {
      std::vector<double> xs;
      for (std::size_t i : members)
        if (auto v = get(c.summaries[i])) xs.push_back(*v);
      const Stat s = stat(xs);
      row << ',' << cell(s.mean) << ',' << cell(s.std);
      long_table += prefix.str() + "," + name + "," + cell(s.mean) + "," + cell(s.std) + "," +
                    std::to_string(s.n) + "\n";
    }
    table += row.str() + "\n";

    // Per-epoch series, mean and std over seeds.
    std::size_t epochs = 0;
    for (std::size_t i : members) epochs = std::max(epochs, c.records[i].size());
    std::string series = "epoch,accuracy_mean,accuracy_std,holdout_accuracy_mean,ece_mean,ece_std,infomax_mean,threshold_delta_mean,seeds\n";
    for (std::size_t e = 0; e < epochs; ++e) {
      std::vector<double> acc, hold, ece_v, im, delta;
      for (std::size_t i : members) {
        if (e >= c.records[i].size()) continue;
        const RunRecord& r = c.records[i][e];
        if (r.target_accuracy) acc.push_back(*r.target_accuracy);
        if (r.holdout_accuracy) hold.push_back(*r.holdout_accuracy);
        if (r.ece) ece_v.push_back(*r.ece);
        im.push_back(r.infomax);
        delta.push_back(r.threshold_delta);
      }
      const Stat a = stat(acc), h = stat(hold), ec = stat(ece_v), m = stat(im), d = stat(delta);
      series += std::to_string(e) + "," + cell(a.mean) + "," + cell(a.std) + "," + cell(h.mean) + "," +
                cell(ec.mean) + "," + cell(ec.std) + "," + cell(m.mean) + "," + cell(d.mean) + "," +
                std::to_string(im.size()) + "\n";
    }
    std::string name = key.strategy + "-lam" + label(key.lambda) + "-beta" + label(key.beta) + "-elr" +
                       label(key.elr_lambda) + "-i" + std::to_string(key.intensity) + ".csv";
    std::replace(name.begin(), name.end(), '+', '_');
    write_file_atomic(out / "series" / name, series);
  }
  write_file_atomic(out / "table.csv", table);
  write_file_atomic(out / "table_long.csv", long_table);
  return {c.summaries.size(), groups.size()};
}

}  // namespace anchor
