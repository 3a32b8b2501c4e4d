// Command-line entry point. Exit codes: 0 success, 1 runtime or numeric
// error (including failed verification checks), 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anchor/config.hpp"
#include "anchor/error.hpp"
#include "anchor/experiment.hpp"

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "Experiment config file (defaults apply when omitted)");
  cmd->add_option("-o,--out", c.out, "Output directory (overrides output_dir)");
  cmd->add_option("-s,--set", c.overrides, "Override a config key, as key=value")->take_all();
}

anchor::ExperimentConfig resolve(const Common& c) {
  anchor::ExperimentConfig config =
      c.config_path.empty() ? anchor::ExperimentConfig{} : anchor::load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw anchor::ConfigError("--set expects key=value, got '" + kv + "'");
    anchor::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.out.empty()) config.output_dir = c.out;
  config.validate();
  return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchored-confidence self-training under synthetic covariate shift"};
  app.set_version_flag("--version", anchor::tool_version());
  app.require_subcommand(1);

  Common gen_opts, src_opts, adapt_opts, verify_opts;
  auto* gen = app.add_subcommand("generate", "Write source, target and holdout CSVs with a manifest");
  add_common(gen, gen_opts);

  auto* src = app.add_subcommand("train-source", "Train the source classifier");
  add_common(src, src_opts);

  auto* adapt = app.add_subcommand("adapt", "Run the adaptation grid; completed runs are skipped and partial runs resume");
  add_common(adapt, adapt_opts);
  std::size_t jobs = 1;
  std::optional<std::size_t> stop_after;
  adapt->add_option("-j,--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  adapt->add_option("--stop-after", stop_after, "Stop every run after this many epochs (resume later)");

  auto* verify = app.add_subcommand("verify", "Run the bound and identity verification suite");
  add_common(verify, verify_opts);
  std::string fault;
  verify->add_option("--inject-fault", fault, "Deliberately break a quantity (xi-sign) to exercise the suite");

  auto* report = app.add_subcommand("report", "Aggregate run directories into CSV tables and series");
  std::vector<std::string> inputs;
  std::string report_out;
  report->add_option("runs", inputs, "Adapt output roots or run directories")->required();
  report->add_option("-o,--out", report_out, "Report directory (default: <first input>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto config = resolve(gen_opts);
      const fs::path out = anchor::resolve_output_dir(config);
      anchor::cmd_generate(config, out);
      std::cout << "wrote datasets and manifest to " << out.string() << "\n";
    } else if (*src) {
      const auto config = resolve(src_opts);
      const fs::path out = anchor::resolve_output_dir(config);
      std::vector<std::string> warnings;
      anchor::cmd_train_source(config, out, &warnings);
      print_warnings(warnings);
      std::cout << "wrote source model to " << (out / "source").string() << "\n";
    } else if (*adapt) {
      const auto config = resolve(adapt_opts);
      const fs::path out = anchor::resolve_output_dir(config);
      anchor::AdaptOptions options;
      options.jobs = jobs;
      options.stop_after = stop_after;
      const auto outcome = anchor::cmd_adapt(config, out, options);
      print_warnings(outcome.warnings);
      std::cout << outcome.completed.size() << " runs complete";
      if (outcome.incomplete) std::cout << ", " << outcome.incomplete << " stopped early";
      std::cout << " in " << out.string() << "\n";
    } else if (*verify) {
      const auto config = resolve(verify_opts);
      const fs::path out = anchor::resolve_output_dir(config);
      const auto outcome = anchor::cmd_verify(config, out, fault);
      std::cout << outcome.checks - outcome.failures << "/" << outcome.checks
                << " checks passed; details in " << (out / "verification.csv").string() << "\n";
      if (outcome.failures) return 1;
    } else if (*report) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      const fs::path out = report_out.empty() ? paths.front() / "report" : fs::path(report_out);
      const auto outcome = anchor::cmd_report(paths, out);
      std::cout << outcome.runs << " runs in " << outcome.groups << " groups; tables in " << out.string()
                << "\n";
    }
  } catch (const anchor::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
