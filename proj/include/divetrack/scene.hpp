#pragma once
// Synthetic long-horizon scene generator. Flat-colored rectangles/ellipses
// drift over a gradient background with static sensor noise; events make
// objects disappear for a while or zoom the whole camera. Rendering is a pure
// function of the spec, so the same seed always produces identical frames and
// masklets.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "divetrack/masklet.hpp"
#include "divetrack/types.hpp"

namespace divetrack {

// Assumed playback rate used to derive video durations in seconds.
inline constexpr double kSyntheticFps = 10.0;

enum class ShapeKind { rectangle, ellipse };

struct MotionPath {
    double cx0 = 0.0, cy0 = 0.0; // start center, pixels
    double vx = 0.0, vy = 0.0;   // pixels per frame
    double amp_x = 0.0, amp_y = 0.0;
    double period = 40.0;
    double phase = 0.0;

    double x_at(int t) const;
    double y_at(int t) const;
};

struct ScaleKeyframe {
    int frame = 0;
    double scale = 1.0;
};

struct SceneObject {
    int id = 0;
    ShapeKind shape = ShapeKind::rectangle;
    std::array<std::uint8_t, 3> color{200, 60, 60};
    double rx = 12.0, ry = 12.0; // half extents, pixels
    MotionPath path;
    std::vector<ScaleKeyframe> scale_schedule; // piecewise-linear, default 1.0
    std::optional<std::string> category;

    double scale_at(int t) const;
};

struct DisappearEvent {
    int object_id = 0;
    int start = 0; // inclusive
    int end = 0;   // inclusive
};

struct ZoomEvent {
    int start = 0;
    int end = 0;
    double factor = 1.0; // camera scale ramps 1 -> factor over [start, end]
};

struct BackgroundSpec {
    std::array<std::uint8_t, 3> top{38, 51, 77};
    std::array<std::uint8_t, 3> bottom{64, 77, 115};
    int noise_amplitude = 2;
};

struct SyntheticScene {
    std::string name = "scene";
    int width = 96;
    int height = 96;
    int duration_frames = 100;
    std::uint64_t seed = 0;
    BackgroundSpec background;
    std::vector<SceneObject> objects;
    std::vector<DisappearEvent> disappears;
    std::vector<ZoomEvent> zooms;

    void validate() const;
    double camera_zoom_at(int t) const;
    bool object_absent_at(int object_id, int t) const;
};

struct GeneratedScene {
    std::vector<Frame> frames;
    std::vector<Masklet> masklets; // one per object, absent while invisible
};

GeneratedScene generate_scene(const SyntheticScene& spec);

// Scene spec persistence for the generate subcommand (JSON).
SyntheticScene load_scene_spec(const std::filesystem::path& path);
void save_scene_spec(const SyntheticScene& spec, const std::filesystem::path& path);

// Seeded disappear/reappear suite: one moving target per scene (plus an
// occasional same-colored distractor and camera zoom), a mid-video absence
// interval, and a reappearance far from the prompt-frame position.
std::vector<SyntheticScene> build_reappearance_suite(int num_scenes, std::uint64_t base_seed);

// Minimal static scene, useful as a smoke test for the full pipeline.
SyntheticScene static_square_scene(int duration_frames, std::uint64_t seed);

} // namespace divetrack
