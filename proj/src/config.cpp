#include "anchor/config.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <set>
#include <stdexcept>

#include "anchor/error.hpp"
#include "anchor/format.hpp"
#include "anchor/persist.hpp"

namespace anchor {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError("config key '" + std::string(key) + "': invalid value '" + std::string(value) +
                    "' (" + std::string(why) + ")");
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = value.find(',', start);
    auto cell = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!cell.empty()) out.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  double out;
  if (!parse_double(v, out) || !std::isfinite(out)) bad(key, v, "expected a real number");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v.empty()) bad(key, v, "expected a non-negative integer");
  std::uint64_t out = 0;
  for (char c : v) {
    if (c < '0' || c > '9') bad(key, v, "expected a non-negative integer");
    out = out * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "expected true or false");
}

template <class T, class F>
std::vector<T> list_of(std::string_view key, std::string_view v, F convert) {
  std::vector<T> out;
  for (auto cell : split_list(v)) out.push_back(convert(key, cell));
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += fmt(items[i]);
  }
  return out;
}

std::string real(double v) { return format_double(v); }
std::string u64(std::uint64_t v) { return std::to_string(v); }
std::string boolean(bool v) { return v ? "true" : "false"; }

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define ANCHOR_REAL(field) \
  Key{#field, [](ExperimentConfig& c, std::string_view v) { c.field = to_real(#field, v); }, \
      [](const ExperimentConfig& c) { return real(c.field); }}
#define ANCHOR_COUNT(field) \
  Key{#field, [](ExperimentConfig& c, std::string_view v) { c.field = static_cast<decltype(c.field)>(to_u64(#field, v)); }, \
      [](const ExperimentConfig& c) { return u64(c.field); }}
#define ANCHOR_BOOL(field) \
  Key{#field, [](ExperimentConfig& c, std::string_view v) { c.field = to_bool(#field, v); }, \
      [](const ExperimentConfig& c) { return boolean(c.field); }}
#define ANCHOR_STRING(field) \
  Key{#field, [](ExperimentConfig& c, std::string_view v) { c.field = std::string(trim(v)); }, \
      [](const ExperimentConfig& c) { return c.field; }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      ANCHOR_STRING(output_dir),
      ANCHOR_COUNT(classes),
      ANCHOR_COUNT(dim),
      ANCHOR_COUNT(source_n_per_class),
      ANCHOR_COUNT(target_n_per_class),
      ANCHOR_REAL(spread),
      ANCHOR_REAL(radius),
      ANCHOR_COUNT(data_seed),
      Key{"shift_kind",
          [](ExperimentConfig& c, std::string_view v) { c.shift_kind = parse_shift_kind(trim(v)); },
          [](const ExperimentConfig& c) { return std::string(to_string(c.shift_kind)); }},
      Key{"intensities",
          [](ExperimentConfig& c, std::string_view v) {
            c.intensities = list_of<int>("intensities", v, [](std::string_view k, std::string_view s) {
              const auto x = to_u64(k, s);
              if (x > 5) bad(k, s, "intensity must lie in 0..5");
              return static_cast<int>(x);
            });
          },
          [](const ExperimentConfig& c) { return join(c.intensities, [](int i) { return std::to_string(i); }); }},
      ANCHOR_REAL(angle_per_level),
      ANCHOR_REAL(offset_per_level),
      Key{"noise_sigmas",
          [](ExperimentConfig& c, std::string_view v) { c.noise_sigmas = list_of<double>("noise_sigmas", v, to_real); },
          [](const ExperimentConfig& c) { return join(c.noise_sigmas, real); }},
      ANCHOR_REAL(log_scale_per_level),
      ANCHOR_REAL(holdout_fraction),
      ANCHOR_STRING(source_csv),
      ANCHOR_STRING(target_csv),
      ANCHOR_BOOL(target_has_labels),
      ANCHOR_BOOL(csv_header),
      ANCHOR_COUNT(source_epochs),
      ANCHOR_REAL(source_lr),
      ANCHOR_COUNT(source_batch_size),
      ANCHOR_COUNT(source_seed),
      Key{"strategies",
          [](ExperimentConfig& c, std::string_view v) {
            c.strategies = list_of<Strategy>("strategies", v, [](std::string_view, std::string_view s) { return parse_strategy(s); });
          },
          [](const ExperimentConfig& c) { return join(c.strategies, [](Strategy s) { return std::string(to_string(s)); }); }},
      Key{"lambdas",
          [](ExperimentConfig& c, std::string_view v) { c.lambdas = list_of<double>("lambdas", v, to_real); },
          [](const ExperimentConfig& c) { return join(c.lambdas, real); }},
      Key{"betas",
          [](ExperimentConfig& c, std::string_view v) { c.betas = list_of<double>("betas", v, to_real); },
          [](const ExperimentConfig& c) { return join(c.betas, real); }},
      Key{"seeds",
          [](ExperimentConfig& c, std::string_view v) { c.seeds = list_of<std::uint64_t>("seeds", v, to_u64); },
          [](const ExperimentConfig& c) { return join(c.seeds, u64); }},
      Key{"elr_lambdas",
          [](ExperimentConfig& c, std::string_view v) { c.elr_lambdas = list_of<double>("elr_lambdas", v, to_real); },
          [](const ExperimentConfig& c) { return join(c.elr_lambdas, real); }},
      ANCHOR_COUNT(epochs),
      ANCHOR_REAL(lr),
      ANCHOR_COUNT(batch_size),
      ANCHOR_COUNT(inner_steps),
      Key{"weight_scheme",
          [](ExperimentConfig& c, std::string_view v) { c.weight_scheme = parse_weight_scheme(trim(v)); },
          [](const ExperimentConfig& c) { return std::string(to_string(c.weight_scheme)); }},
      Key{"prediction",
          [](ExperimentConfig& c, std::string_view v) { c.prediction = parse_prediction_scheme(trim(v)); },
          [](const ExperimentConfig& c) { return std::string(to_string(c.prediction)); }},
      ANCHOR_REAL(temperature),
      Key{"normalization",
          [](ExperimentConfig& c, std::string_view v) { c.normalization = parse_normalization(trim(v)); },
          [](const ExperimentConfig& c) { return std::string(to_string(c.normalization)); }},
      ANCHOR_REAL(elr_decay),
      ANCHOR_REAL(gce_q),
      ANCHOR_COUNT(ece_bins),
      ANCHOR_COUNT(verify_seed),
      ANCHOR_COUNT(verify_tail_configs),
      ANCHOR_COUNT(verify_mc_trials),
      ANCHOR_COUNT(verify_ensemble_trials),
      ANCHOR_COUNT(verify_identity_sets),
      ANCHOR_REAL(l_gamma),
  };
  return table;
}

#undef ANCHOR_REAL
#undef ANCHOR_COUNT
#undef ANCHOR_BOOL
#undef ANCHOR_STRING

}  // namespace

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const auto& k : keys()) {
    if (key == k.name) {
      try {
        k.set(config, value);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config key '" + std::string(key) + "': " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void ExperimentConfig::validate() const {
  const auto need = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(classes >= 2, "classes must be >= 2");
  need(dim >= 1, "dim must be >= 1");
  need(source_n_per_class > 0 && target_n_per_class > 0, "n_per_class values must be positive");
  need(spread >= 0.0, "spread must be >= 0");
  need(radius > 0.0, "radius must be > 0");
  need(holdout_fraction >= 0.0 && holdout_fraction < 1.0, "holdout_fraction must lie in [0,1)");
  need(noise_sigmas.size() == 5, "noise_sigmas needs exactly 5 entries");
  for (std::size_t i = 0; i < noise_sigmas.size(); ++i)
    need(noise_sigmas[i] > 0.0 && (i == 0 || noise_sigmas[i] > noise_sigmas[i - 1]),
         "noise_sigmas must be positive and strictly increasing");
  need(source_lr >= 0.0 && lr >= 0.0, "learning rates must be >= 0");
  need(source_batch_size > 0 && batch_size > 0, "batch sizes must be positive");
  need(inner_steps > 0, "inner_steps must be positive");
  for (double l : lambdas) need(l >= 0.0 && l <= 1.0, "lambdas must lie in [0,1]");
  for (double b : betas) need(b >= 0.0 && b < 1.0, "betas must lie in [0,1)");
  for (double l : elr_lambdas) need(l >= 0.0, "elr_lambdas must be >= 0");
  need(!lambdas.empty() && !betas.empty() && !elr_lambdas.empty(),
       "lambdas, betas and elr_lambdas need at least one value");
  need(temperature > 0.0, "temperature must be > 0");
  need(elr_decay >= 0.0 && elr_decay < 1.0, "elr_decay must lie in [0,1)");
  need(gce_q > 0.0 && gce_q <= 1.0, "gce_q must lie in (0,1]");
  need(ece_bins >= 1, "ece_bins must be >= 1");
  need(l_gamma > 0.0, "l_gamma must be > 0");
  need(verify_mc_trials > 0 && verify_ensemble_trials > 0, "verification trial counts must be positive");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  bool format_seen = false;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    if (key == "format") {
      if (format_seen || seen.size() != 1)
        throw ConfigError("config line " + std::to_string(line_no) + ": 'format' must be the first setting");
      if (value != std::to_string(kConfigFormat))
        throw ConfigError("unsupported config format '" + std::string(value) + "'");
      format_seen = true;
      continue;
    }
    if (!format_seen) throw ConfigError("config must start with 'format = " + std::to_string(kConfigFormat) + "'");
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!format_seen) throw ConfigError("config must start with 'format = " + std::to_string(kConfigFormat) + "'");
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string config_to_text(const ExperimentConfig& config) {
  std::string out = "format = " + std::to_string(kConfigFormat) + "\n";
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  return hex64(fnv1a64(config_to_text(config)));
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return root;
  return "anchor-out";
}

}  // namespace anchor
