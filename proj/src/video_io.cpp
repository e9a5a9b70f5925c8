#include "divetrack/video_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace divetrack {

void write_ppm(const std::filesystem::path& path, const Frame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.rgb.data()),
              static_cast<std::streamsize>(frame.rgb.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

Frame read_ppm(const std::filesystem::path& path, int frame_index) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
        throw CorruptData("not an 8-bit binary PPM: " + path.string());
    }
    in.get(); // single whitespace after header
    Frame frame(frame_index, w, h);
    in.read(reinterpret_cast<char*>(frame.rgb.data()),
            static_cast<std::streamsize>(frame.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(frame.rgb.size())) {
        throw CorruptData("truncated PPM payload: " + path.string());
    }
    return frame;
}

namespace {

std::string frame_filename(int index) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << index << ".ppm";
    return name.str();
}

} // namespace

void save_scene_dir(const std::filesystem::path& dir, const SyntheticScene& spec,
                    const GeneratedScene& scene) {
    std::filesystem::create_directories(dir / "frames");
    save_scene_spec(spec, dir / "scene.json");
    for (const auto& frame : scene.frames) {
        write_ppm(dir / "frames" / frame_filename(frame.index), frame);
    }

    DatasetManifest manifest;
    manifest.name = spec.name;
    VideoRecord video;
    video.id = spec.name;
    video.frame_count = spec.duration_frames;
    video.width = spec.width;
    video.height = spec.height;
    video.duration_seconds = spec.duration_frames / kSyntheticFps;
    manifest.videos.push_back(video);
    store_masklets(manifest, video, scene.masklets, dir, "masks");
    save_manifest(manifest, dir / "manifest.json");
}

LoadedVideo load_scene_dir(const std::filesystem::path& dir) {
    const DatasetManifest manifest = load_manifest(dir / "manifest.json");
    if (manifest.videos.size() != 1) {
        throw CorruptData("scene directory must describe exactly one video: " + dir.string());
    }
    LoadedVideo out;
    out.record = manifest.videos.front();
    out.masklets = load_masklets(manifest, out.record.id, dir);

    out.frames.reserve(static_cast<std::size_t>(out.record.frame_count));
    for (int t = 0; t < out.record.frame_count; ++t) {
        const auto path = dir / "frames" / frame_filename(t);
        out.frames.push_back(read_ppm(path, t));
        if (out.frames.back().width != out.record.width ||
            out.frames.back().height != out.record.height) {
            throw CorruptData("frame resolution differs from video record: " + path.string());
        }
    }
    return out;
}

void save_predictions(const std::filesystem::path& dir, const VideoRecord& video,
                      const std::vector<Masklet>& predictions,
                      const std::vector<std::string>& trace_lines) {
    std::filesystem::create_directories(dir);
    DatasetManifest manifest;
    manifest.name = video.id + "_predictions";
    manifest.videos.push_back(video);
    store_masklets(manifest, video, predictions, dir, "masks");
    save_manifest(manifest, dir / "manifest.json");

    std::ofstream trace(dir / "trace.txt");
    if (!trace) throw IoError("cannot open trace file under " + dir.string());
    for (const auto& line : trace_lines) trace << line << '\n';
}

} // namespace divetrack
