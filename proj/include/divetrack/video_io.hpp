#pragma once
// On-disk layout for synthetic videos and predictions. Frames are stored as
// binary PPM (raw pixel grids, no codec); masklets go through the manifest +
// RLE format from masklet I/O.
//
//   <dir>/scene.json          scene spec (generate only)
//   <dir>/frames/000000.ppm   one file per frame
//   <dir>/manifest.json       videos + masklets
//   <dir>/masks/*.rle         per-frame masks

#include <filesystem>
#include <vector>

#include "divetrack/manifest.hpp"
#include "divetrack/scene.hpp"
#include "divetrack/types.hpp"

namespace divetrack {

void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path, int frame_index);

// Write a generated scene (frames + ground truth) under `dir`.
void save_scene_dir(const std::filesystem::path& dir, const SyntheticScene& spec,
                    const GeneratedScene& scene);

struct LoadedVideo {
    VideoRecord record;
    std::vector<Frame> frames;
    std::vector<Masklet> masklets;
};

// Load a directory produced by save_scene_dir (or by the track subcommand).
LoadedVideo load_scene_dir(const std::filesystem::path& dir);

// Store predicted masklets for a video under `dir` as manifest + RLE masks.
void save_predictions(const std::filesystem::path& dir, const VideoRecord& video,
                      const std::vector<Masklet>& predictions,
                      const std::vector<std::string>& trace_lines);

} // namespace divetrack
