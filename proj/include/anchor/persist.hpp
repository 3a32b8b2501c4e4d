#pragma once

// On-disk formats. All numbers are written in shortest round-trip decimal
// form, so reading a file back reproduces the exact doubles.
//
// Checkpoint (text):
//   anchor-checkpoint 1
//   <d> <K> <epoch>
//   d lines of K space-separated weights (row j holds x-coordinate j)
//
// Ensemble bank (text):
//   anchor-ensemble-bank 1
//   <n> <K>
//   n lines: <instance id>,<count_0>,...,<count_{K-1}>,<visits>
//
// ELR state (text):
//   anchor-elr-state 1
//   <n> <K> <decay>
//   n lines of K comma-separated target entries
//
// Run records: one JSON object per line (see record_to_json).

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "anchor/ancon.hpp"
#include "anchor/elr.hpp"
#include "anchor/model.hpp"
#include "anchor/selftrain.hpp"

namespace anchor {

struct Checkpoint {
  LinearParams params;
  std::size_t epoch = 0;
};

std::string checkpoint_to_text(const LinearParams& params, std::size_t epoch);
Checkpoint checkpoint_from_text(std::string_view text);
void write_checkpoint(const std::filesystem::path& path, const LinearParams& params, std::size_t epoch);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string bank_to_text(const EnsembleBank& bank);
EnsembleBank bank_from_text(std::string_view text);

std::string elr_to_text(const ElrState& state);
ElrState elr_from_text(std::string_view text);

nlohmann::ordered_json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);
std::string record_to_line(const RunRecord& record);

/// Writes params/bank/elr/meta files of an AdaptState into `dir`.
void save_state(const std::filesystem::path& dir, const AdaptState& state);
AdaptState load_state(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace anchor
