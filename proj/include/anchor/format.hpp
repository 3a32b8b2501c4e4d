#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace anchor {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);
/// Parses a whole string as a double; returns false on any trailing junk.
bool parse_double(std::string_view text, double& out);

std::string_view trim(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Mixes a base seed with a stream id (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace anchor
