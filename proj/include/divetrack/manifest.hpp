#pragma once
// Dataset persistence: a human-readable JSON manifest describing videos and
// masklets, with per-frame masks stored as relative paths to RLE files.
// Validators encode the reconstruction invariants (unique temporally
// consistent instance ids, in-range frame references).

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "divetrack/masklet.hpp"

namespace divetrack {

struct VideoRecord {
    std::string id;
    int frame_count = 0;
    int width = 0;
    int height = 0;
    double duration_seconds = 0.0;
};

struct MaskletRecord {
    std::string video_id;
    int instance_id = 0;
    std::optional<std::string> category;
    std::map<int, std::string> mask_paths; // frame index -> relative RLE path
};

struct DatasetManifest {
    std::string name;
    std::vector<VideoRecord> videos;
    std::vector<MaskletRecord> masklets;
};

struct Violation {
    std::string rule;
    std::string video_id;
    std::optional<int> instance_id;
    std::string detail;

    std::string to_string() const;
};

// Structural checks on the manifest alone. Empty result means valid.
std::vector<Violation> validate_manifest(const DatasetManifest& d);

// Additional checks that read the referenced RLE files (existence, run
// structure, resolution agreement with the video record).
std::vector<Violation> validate_mask_files(const DatasetManifest& d,
                                           const std::filesystem::path& base_dir);

// Maps raw category strings onto reporting groups. Unmapped categories fall
// through unchanged; absent categories group as "uncategorized".
struct CategoryGroupMap {
    std::map<std::string, std::string> groups;

    std::string group_for(const std::optional<std::string>& category) const;
};

struct DatasetStats {
    std::size_t videos = 0;
    std::size_t frames = 0;
    std::map<std::string, std::size_t> masks_by_group;
    std::size_t masklets = 0;
    double avg_duration_seconds = 0.0;
};

DatasetStats dataset_stats(const DatasetManifest& d, const CategoryGroupMap& groups = {});

// Aligned text rendering; the average duration is rounded to `decimals`.
std::string format_stats_table(const DatasetStats& s, int decimals = 0);

// JSON persistence. IoError when the file cannot be read/written, CorruptData
// when the content does not parse into a manifest.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& d, const std::filesystem::path& path);

// Materialize a manifest's masklets for one video by reading its RLE files.
std::vector<Masklet> load_masklets(const DatasetManifest& d, const std::string& video_id,
                                   const std::filesystem::path& base_dir);

// Write masklets for one video and append the records to the manifest.
// Masks land under <base_dir>/<rel_mask_dir>/.
void store_masklets(DatasetManifest& d, const VideoRecord& video,
                    const std::vector<Masklet>& masklets,
                    const std::filesystem::path& base_dir, const std::string& rel_mask_dir);

} // namespace divetrack
