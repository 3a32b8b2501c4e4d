#include "anchor/persist.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "anchor/error.hpp"
#include "anchor/format.hpp"

namespace anchor {

namespace {

// Line-oriented reader that reports positions in errors.
class LineReader {
 public:
  LineReader(std::string_view text, std::string what) : text_(text), what_(std::move(what)) {}

  std::string_view next() {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view line = trim(text_.substr(pos_, end - pos_));
      pos_ = end + 1;
      ++line_;
      if (!line.empty()) return line;
    }
    fail("unexpected end of input");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError(what_ + ": line " + std::to_string(line_) + ": " + msg);
  }

 private:
  std::string_view text_;
  std::string what_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    while (sep == ' ' && start < line.size() && line[start] == ' ') ++start;
    std::size_t cut = line.find(sep, start);
    if (cut == std::string_view::npos) {
      if (start < line.size() || sep != ' ') out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, cut - start)));
    start = cut + 1;
  }
  return out;
}

double number(const LineReader& r, std::string_view cell) {
  double v;
  if (!parse_double(cell, v)) r.fail("invalid number '" + std::string(cell) + "'");
  return v;
}

std::size_t count(const LineReader& r, std::string_view cell) {
  const double v = number(r, cell);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    r.fail("invalid count '" + std::string(cell) + "'");
  return static_cast<std::size_t>(v);
}

void expect_magic(LineReader& r, std::string_view magic) {
  const auto parts = split(r.next(), ' ');
  if (parts.size() != 2 || parts[0] != magic) r.fail("expected header '" + std::string(magic) + " 1'");
  if (parts[1] != "1") r.fail("unsupported format version " + std::string(parts[1]));
}

}  // namespace

std::string checkpoint_to_text(const LinearParams& params, std::size_t epoch) {
  std::string out = "anchor-checkpoint 1\n";
  out += std::to_string(params.dim()) + " " + std::to_string(params.classes()) + " " +
         std::to_string(epoch) + "\n";
  for (std::size_t j = 0; j < params.dim(); ++j) {
    auto row = params.weights().row(j);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ' ';
      out += format_double(row[k]);
    }
    out += '\n';
  }
  return out;
}

Checkpoint checkpoint_from_text(std::string_view text) {
  LineReader r(text, "checkpoint");
  expect_magic(r, "anchor-checkpoint");
  const auto dims = split(r.next(), ' ');
  if (dims.size() != 3) r.fail("expected '<d> <K> <epoch>'");
  const std::size_t d = count(r, dims[0]), K = count(r, dims[1]);
  Checkpoint cp;
  cp.epoch = count(r, dims[2]);
  Matrix w(d, K);
  for (std::size_t j = 0; j < d; ++j) {
    const auto cells = split(r.next(), ' ');
    if (cells.size() != K) r.fail("expected " + std::to_string(K) + " weights");
    for (std::size_t k = 0; k < K; ++k) w(j, k) = number(r, cells[k]);
  }
  cp.params = LinearParams(std::move(w));
  return cp;
}

void write_checkpoint(const std::filesystem::path& path, const LinearParams& params, std::size_t epoch) {
  write_file_atomic(path, checkpoint_to_text(params, epoch));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_text(read_file(path));
}

std::string bank_to_text(const EnsembleBank& bank) {
  std::string out = "anchor-ensemble-bank 1\n";
  out += std::to_string(bank.instances()) + " " + std::to_string(bank.classes()) + "\n";
  for (std::size_t i = 0; i < bank.instances(); ++i) {
    out += std::to_string(i);
    for (double c : bank.counts(i)) out += "," + format_double(c);
    out += "," + format_double(bank.visits(i)) + "\n";
  }
  return out;
}

EnsembleBank bank_from_text(std::string_view text) {
  LineReader r(text, "ensemble bank");
  expect_magic(r, "anchor-ensemble-bank");
  const auto dims = split(r.next(), ' ');
  if (dims.size() != 2) r.fail("expected '<n> <K>'");
  const std::size_t n = count(r, dims[0]), K = count(r, dims[1]);
  Matrix counts(n, K);
  std::vector<double> visits(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cells = split(r.next(), ',');
    if (cells.size() != K + 2) r.fail("expected id, " + std::to_string(K) + " counts and visits");
    if (count(r, cells[0]) != i) r.fail("instance ids must be consecutive from 0");
    for (std::size_t k = 0; k < K; ++k) counts(i, k) = number(r, cells[k + 1]);
    visits[i] = number(r, cells[K + 1]);
  }
  return EnsembleBank::from_tables(std::move(counts), std::move(visits));
}

std::string elr_to_text(const ElrState& state) {
  std::string out = "anchor-elr-state 1\n";
  out += std::to_string(state.instances()) + " " + std::to_string(state.classes()) + " " +
         format_double(state.decay()) + "\n";
  for (std::size_t i = 0; i < state.instances(); ++i) {
    auto row = state.target(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_double(row[k]);
    }
    out += '\n';
  }
  return out;
}

ElrState elr_from_text(std::string_view text) {
  LineReader r(text, "elr state");
  expect_magic(r, "anchor-elr-state");
  const auto dims = split(r.next(), ' ');
  if (dims.size() != 3) r.fail("expected '<n> <K> <decay>'");
  const std::size_t n = count(r, dims[0]), K = count(r, dims[1]);
  const double decay = number(r, dims[2]);
  Matrix targets(n, K);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cells = split(r.next(), ',');
    if (cells.size() != K) r.fail("expected " + std::to_string(K) + " entries");
    for (std::size_t k = 0; k < K; ++k) targets(i, k) = number(r, cells[k]);
  }
  return ElrState::from_table(std::move(targets), decay);
}

nlohmann::ordered_json record_to_json(const RunRecord& rec) {
  nlohmann::ordered_json j;
  const auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["epoch"] = rec.epoch;
  j["train_loss"] = rec.train_loss;
  j["holdout_accuracy"] = opt(rec.holdout_accuracy);
  j["target_accuracy"] = opt(rec.target_accuracy);
  j["ece"] = opt(rec.ece);
  j["infomax"] = rec.infomax;
  j["ent"] = rec.ent;
  j["corr_c"] = rec.corr_c;
  j["mean_confidence"] = rec.mean_confidence;
  j["threshold_delta"] = rec.threshold_delta;
  j["marginal_tv"] = rec.marginal_tv;
  return j;
}

RunRecord record_from_json(const nlohmann::json& j) {
  const auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  try {
    RunRecord rec;
    rec.epoch = j.at("epoch").get<std::size_t>();
    rec.train_loss = j.at("train_loss").get<double>();
    rec.holdout_accuracy = opt("holdout_accuracy");
    rec.target_accuracy = opt("target_accuracy");
    rec.ece = opt("ece");
    rec.infomax = j.at("infomax").get<double>();
    rec.ent = j.at("ent").get<double>();
    rec.corr_c = j.at("corr_c").get<double>();
    rec.mean_confidence = j.at("mean_confidence").get<double>();
    rec.threshold_delta = j.at("threshold_delta").get<double>();
    rec.marginal_tv = j.value("marginal_tv", 0.0);
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("run record: ") + e.what());
  }
}

std::string record_to_line(const RunRecord& record) { return record_to_json(record).dump() + "\n"; }

void save_state(const std::filesystem::path& dir, const AdaptState& state) {
  std::filesystem::create_directories(dir);
  write_checkpoint(dir / "params.txt", state.params, state.epochs_done);
  write_file_atomic(dir / "bank.txt", bank_to_text(state.bank));
  write_file_atomic(dir / "elr.txt", elr_to_text(state.elr));
  nlohmann::ordered_json meta;
  meta["format"] = 1;
  meta["epochs_done"] = state.epochs_done;
  meta["steps_done"] = state.steps_done;
  meta["threshold_delta"] = state.threshold.delta;
  meta["threshold_beta"] = state.threshold.beta;
  meta["threshold_steps"] = state.threshold.steps;
  meta["last_marginal"] = state.last_marginal;
  // Written last: its presence marks a complete snapshot.
  write_file_atomic(dir / "state.json", meta.dump(1) + "\n");
}

AdaptState load_state(const std::filesystem::path& dir) {
  AdaptState state;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "state.json"));
    state.epochs_done = meta.at("epochs_done").get<std::size_t>();
    state.steps_done = meta.at("steps_done").get<std::size_t>();
    state.threshold = ThresholdState::make(meta.at("threshold_beta").get<double>());
    state.threshold.delta = meta.at("threshold_delta").get<double>();
    state.threshold.steps = meta.at("threshold_steps").get<std::size_t>();
    state.last_marginal = meta.at("last_marginal").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("state snapshot " + dir.string() + ": " + e.what());
  }
  state.params = read_checkpoint(dir / "params.txt").params;
  state.bank = bank_from_text(read_file(dir / "bank.txt"));
  state.elr = elr_from_text(read_file(dir / "elr.txt"));
  return state;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace anchor
