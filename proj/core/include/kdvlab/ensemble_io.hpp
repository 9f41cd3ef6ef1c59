#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kdvlab/measures.hpp"

namespace kdvlab {

/// KDVE ensemble file, little-endian:
///
///   "KDVE" | u32 version (=1) | u32 M | u64 n | u8 flags (bit0: resampled)
///   n x ( f64 weight | M x (f64 re, f64 im) for k = 1..M )
inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

std::vector<std::uint8_t> encode_ensemble(const WeightedEnsemble& ens);
/// Throws FormatError on a malformed buffer.
WeightedEnsemble decode_ensemble(const std::vector<std::uint8_t>& bytes);

/// Throws IoError when the file cannot be written or read.
void write_ensemble(const std::filesystem::path& path, const WeightedEnsemble& ens);
WeightedEnsemble read_ensemble(const std::filesystem::path& path);

}  // namespace kdvlab
