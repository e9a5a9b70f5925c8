#include "divetrack/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "divetrack/rle.hpp"

namespace divetrack {

using ordered_json = nlohmann::ordered_json;

std::string Violation::to_string() const {
    std::string s = rule + " [video=" + video_id;
    if (instance_id) s += " masklet=" + std::to_string(*instance_id);
    s += "]";
    if (!detail.empty()) s += " " + detail;
    return s;
}

std::vector<Violation> validate_manifest(const DatasetManifest& d) {
    std::vector<Violation> out;

    std::map<std::string, const VideoRecord*> by_id;
    for (const auto& v : d.videos) {
        if (v.frame_count <= 0 || v.width <= 0 || v.height <= 0 || v.duration_seconds < 0.0) {
            out.push_back({"invalid_video_record", v.id, std::nullopt,
                           "frame_count/resolution must be positive, duration non-negative"});
        }
        if (!by_id.emplace(v.id, &v).second) {
            out.push_back({"duplicate_video_id", v.id, std::nullopt, ""});
        }
    }

    std::set<std::pair<std::string, int>> seen_instances;
    for (const auto& m : d.masklets) {
        const auto it = by_id.find(m.video_id);
        if (it == by_id.end()) {
            out.push_back({"unknown_video", m.video_id, m.instance_id,
                           "masklet references a video not in the manifest"});
            continue;
        }
        if (!seen_instances.emplace(m.video_id, m.instance_id).second) {
            out.push_back({"duplicate_instance_id", m.video_id, m.instance_id,
                           "instance ids must be unique within a video"});
        }
        for (const auto& [frame, path] : m.mask_paths) {
            if (frame < 0 || frame >= it->second->frame_count) {
                out.push_back({"frame_index_out_of_range", m.video_id, m.instance_id,
                               "frame " + std::to_string(frame) + " not in [0, " +
                                   std::to_string(it->second->frame_count) + ")"});
            }
            if (path.empty()) {
                out.push_back({"empty_mask_path", m.video_id, m.instance_id,
                               "frame " + std::to_string(frame)});
            }
        }
    }
    return out;
}

std::vector<Violation> validate_mask_files(const DatasetManifest& d,
                                           const std::filesystem::path& base_dir) {
    std::vector<Violation> out;
    std::map<std::string, const VideoRecord*> by_id;
    for (const auto& v : d.videos) by_id.emplace(v.id, &v);

    for (const auto& m : d.masklets) {
        const auto it = by_id.find(m.video_id);
        if (it == by_id.end()) continue; // structural validation already flags this
        for (const auto& [frame, rel] : m.mask_paths) {
            const auto path = base_dir / rel;
            RleMask r;
            try {
                r = read_rle_file(path);
            } catch (const std::exception& e) {
                out.push_back({"unreadable_mask_file", m.video_id, m.instance_id, e.what()});
                continue;
            }
            if (const auto problem = rle_check(r); !problem.empty()) {
                out.push_back({"corrupt_mask_file", m.video_id, m.instance_id,
                               rel + ": " + problem});
            } else if (r.width != it->second->width || r.height != it->second->height) {
                out.push_back({"mask_resolution_mismatch", m.video_id, m.instance_id,
                               rel + ": " + std::to_string(r.width) + "x" +
                                   std::to_string(r.height) + " vs video " +
                                   std::to_string(it->second->width) + "x" +
                                   std::to_string(it->second->height)});
            }
        }
    }
    return out;
}

std::string CategoryGroupMap::group_for(const std::optional<std::string>& category) const {
    if (!category) return "uncategorized";
    const auto it = groups.find(*category);
    return it == groups.end() ? *category : it->second;
}

DatasetStats dataset_stats(const DatasetManifest& d, const CategoryGroupMap& groups) {
    DatasetStats s;
    s.videos = d.videos.size();
    for (const auto& v : d.videos) s.frames += static_cast<std::size_t>(v.frame_count);
    s.masklets = d.masklets.size();
    for (const auto& m : d.masklets) {
        s.masks_by_group[groups.group_for(m.category)] += m.mask_paths.size();
    }
    if (!d.videos.empty()) {
        double total = 0.0;
        for (const auto& v : d.videos) total += v.duration_seconds;
        s.avg_duration_seconds = total / static_cast<double>(d.videos.size());
    }
    return s;
}

std::string format_stats_table(const DatasetStats& s, int decimals) {
    std::ostringstream out;
    out << std::left;
    out << std::setw(16) << "videos" << s.videos << '\n';
    out << std::setw(16) << "frames" << s.frames << '\n';
    out << std::setw(16) << "masklets" << s.masklets << '\n';
    out << std::setw(16) << "avg_duration_s" << std::fixed << std::setprecision(decimals)
        << s.avg_duration_seconds << '\n';
    out << "masks\n";
    for (const auto& [group, count] : s.masks_by_group) {
        out << "  " << std::setw(14) << group << count << '\n';
    }
    return out.str();
}

namespace {

template <typename T>
T require_field(const ordered_json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw CorruptData("manifest: missing field '" + std::string(key) + "' in " + where);
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptData("manifest: bad field '" + std::string(key) + "' in " + where + ": " +
                          e.what());
    }
}

} // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptData("manifest: " + path.string() + " is not valid JSON: " + e.what());
    }

    DatasetManifest d;
    d.name = j.value("name", "");
    if (j.contains("videos")) {
        for (const auto& vj : j.at("videos")) {
            VideoRecord v;
            v.id = require_field<std::string>(vj, "id", "video record");
            v.frame_count = require_field<int>(vj, "frame_count", "video " + v.id);
            v.width = require_field<int>(vj, "width", "video " + v.id);
            v.height = require_field<int>(vj, "height", "video " + v.id);
            v.duration_seconds = require_field<double>(vj, "duration_seconds", "video " + v.id);
            d.videos.push_back(std::move(v));
        }
    }
    if (j.contains("masklets")) {
        for (const auto& mj : j.at("masklets")) {
            MaskletRecord m;
            m.video_id = require_field<std::string>(mj, "video_id", "masklet record");
            m.instance_id = require_field<int>(mj, "instance_id", "masklet in " + m.video_id);
            if (mj.contains("category") && !mj.at("category").is_null()) {
                m.category = mj.at("category").get<std::string>();
            }
            if (mj.contains("masks")) {
                for (const auto& [key, value] : mj.at("masks").items()) {
                    int frame = 0;
                    try {
                        frame = std::stoi(key);
                    } catch (const std::exception&) {
                        throw CorruptData("manifest: non-integer frame key '" + key + "'");
                    }
                    m.mask_paths[frame] = value.get<std::string>();
                }
            }
            d.masklets.push_back(std::move(m));
        }
    }
    return d;
}

void save_manifest(const DatasetManifest& d, const std::filesystem::path& path) {
    ordered_json j;
    j["name"] = d.name;
    j["videos"] = ordered_json::array();
    for (const auto& v : d.videos) {
        j["videos"].push_back({{"id", v.id},
                               {"frame_count", v.frame_count},
                               {"width", v.width},
                               {"height", v.height},
                               {"duration_seconds", v.duration_seconds}});
    }
    j["masklets"] = ordered_json::array();
    for (const auto& m : d.masklets) {
        ordered_json mj;
        mj["video_id"] = m.video_id;
        mj["instance_id"] = m.instance_id;
        if (m.category) mj["category"] = *m.category;
        ordered_json masks = ordered_json::object();
        for (const auto& [frame, rel] : m.mask_paths) masks[std::to_string(frame)] = rel;
        mj["masks"] = std::move(masks);
        j["masklets"].push_back(std::move(mj));
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Masklet> load_masklets(const DatasetManifest& d, const std::string& video_id,
                                   const std::filesystem::path& base_dir) {
    std::vector<Masklet> out;
    for (const auto& rec : d.masklets) {
        if (rec.video_id != video_id) continue;
        Masklet m;
        m.instance_id = rec.instance_id;
        m.category = rec.category;
        for (const auto& [frame, rel] : rec.mask_paths) {
            m.track.emplace(frame, rle_decode(read_rle_file(base_dir / rel)));
        }
        out.push_back(std::move(m));
    }
    return out;
}

void store_masklets(DatasetManifest& d, const VideoRecord& video,
                    const std::vector<Masklet>& masklets,
                    const std::filesystem::path& base_dir, const std::string& rel_mask_dir) {
    std::filesystem::create_directories(base_dir / rel_mask_dir);
    for (const auto& m : masklets) {
        MaskletRecord rec;
        rec.video_id = video.id;
        rec.instance_id = m.instance_id;
        rec.category = m.category;
        for (const auto& [frame, mask] : m.track) {
            std::ostringstream name;
            name << video.id << "_" << std::setw(3) << std::setfill('0') << m.instance_id << "_"
                 << std::setw(6) << std::setfill('0') << frame << ".rle";
            const std::string rel = rel_mask_dir + "/" + name.str();
            write_rle_file(base_dir / rel, rle_encode(mask));
            rec.mask_paths[frame] = rel;
        }
        d.masklets.push_back(std::move(rec));
    }
}

} // namespace divetrack
