#pragma once
// Run-length mask codec. Runs alternate background/foreground and start with
// background, so an all-foreground mask begins with a zero-length run.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "divetrack/mask.hpp"

namespace divetrack {

struct RleMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint64_t> runs;
};

// Canonical encoding: first run may be zero, every later run is positive.
RleMask rle_encode(const BinaryMask& m);

// Accepts any non-negative runs whose sum matches width*height.
// Throws CorruptData otherwise.
BinaryMask rle_decode(const RleMask& r);

// Structural check used by manifest validation: returns a human-readable
// problem description, or an empty string when the runs are well formed.
std::string rle_check(const RleMask& r);

// Plain-text persistence: "<width> <height>" on the first line, runs on the
// second. Throws IoError when the file cannot be opened and CorruptData when
// the contents do not parse.
void write_rle_file(const std::filesystem::path& path, const RleMask& r);
RleMask read_rle_file(const std::filesystem::path& path);

} // namespace divetrack
