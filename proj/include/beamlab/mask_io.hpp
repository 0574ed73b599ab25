#pragma once

#include <filesystem>
#include <string>

#include "beamlab/geometry.hpp"

namespace beamlab::io {

// P4 portable bitmap (raw). Set mask bits become black (1) pixels, packed
// most-significant-bit first, rows padded to whole bytes.
std::string format_pbm(const geo::BinaryMask& mask);
void write_pbm(const geo::BinaryMask& mask, const std::filesystem::path& path);

// P5 portable graymap (raw, maxval 255). Set bits become 255, background 0.
std::string format_pgm(const geo::BinaryMask& mask);
void write_pgm(const geo::BinaryMask& mask, const std::filesystem::path& path);

}  // namespace beamlab::io
