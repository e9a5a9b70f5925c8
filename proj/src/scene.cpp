#include "divetrack/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "divetrack/errors.hpp"
#include "divetrack/rng.hpp"

namespace divetrack {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

double MotionPath::x_at(int t) const {
    return cx0 + vx * t + amp_x * std::sin(kTwoPi * t / period + phase);
}

double MotionPath::y_at(int t) const {
    return cy0 + vy * t + amp_y * std::sin(kTwoPi * t / period + phase);
}

double SceneObject::scale_at(int t) const {
    if (scale_schedule.empty()) return 1.0;
    if (t <= scale_schedule.front().frame) return scale_schedule.front().scale;
    if (t >= scale_schedule.back().frame) return scale_schedule.back().scale;
    for (std::size_t i = 1; i < scale_schedule.size(); ++i) {
        const auto& a = scale_schedule[i - 1];
        const auto& b = scale_schedule[i];
        if (t <= b.frame) {
            const double u = static_cast<double>(t - a.frame) /
                             static_cast<double>(b.frame - a.frame);
            return a.scale + u * (b.scale - a.scale);
        }
    }
    return scale_schedule.back().scale;
}

void SyntheticScene::validate() const {
    if (width <= 0 || height <= 0) throw ContractViolation("scene resolution must be positive");
    if (duration_frames < 1) throw ContractViolation("scene duration must be >= 1 frame");
    std::set<int> ids;
    for (const auto& o : objects) {
        if (!ids.insert(o.id).second) {
            throw ContractViolation("duplicate object id " + std::to_string(o.id));
        }
        if (o.rx <= 0.0 || o.ry <= 0.0) {
            throw ContractViolation("object half extents must be positive");
        }
        for (std::size_t i = 1; i < o.scale_schedule.size(); ++i) {
            if (o.scale_schedule[i].frame <= o.scale_schedule[i - 1].frame) {
                throw ContractViolation("scale keyframes must be strictly increasing");
            }
        }
    }
    for (const auto& d : disappears) {
        if (!ids.count(d.object_id)) {
            throw ContractViolation("disappear event references unknown object " +
                                    std::to_string(d.object_id));
        }
        if (d.start < 0 || d.end < d.start || d.end >= duration_frames) {
            throw ContractViolation("disappear interval outside video duration");
        }
    }
    for (const auto& z : zooms) {
        if (z.start < 0 || z.end < z.start || z.end >= duration_frames) {
            throw ContractViolation("zoom interval outside video duration");
        }
        if (z.factor <= 0.0) throw ContractViolation("zoom factor must be positive");
    }
}

double SyntheticScene::camera_zoom_at(int t) const {
    double s = 1.0;
    for (const auto& z : zooms) {
        if (t < z.start) continue;
        if (t >= z.end) {
            s *= z.factor;
        } else {
            const double u = static_cast<double>(t - z.start) /
                             static_cast<double>(z.end - z.start);
            s *= 1.0 + u * (z.factor - 1.0);
        }
    }
    return s;
}

bool SyntheticScene::object_absent_at(int object_id, int t) const {
    for (const auto& d : disappears) {
        if (d.object_id == object_id && t >= d.start && t <= d.end) return true;
    }
    return false;
}

GeneratedScene generate_scene(const SyntheticScene& spec) {
    spec.validate();
    const int w = spec.width, h = spec.height;

    GeneratedScene out;
    out.frames.reserve(static_cast<std::size_t>(spec.duration_frames));
    out.masklets.resize(spec.objects.size());
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        out.masklets[k].instance_id = spec.objects[k].id;
        out.masklets[k].category = spec.objects[k].category;
    }

    // Static per-pixel sensor noise, fixed by the scene seed.
    const auto noise = [&](std::size_t pixel, int channel) {
        if (spec.background.noise_amplitude <= 0) return 0;
        const auto bits = splitmix64(spec.seed * 1000003ULL + pixel * 3 + channel);
        const int span = 2 * spec.background.noise_amplitude + 1;
        return static_cast<int>(bits % static_cast<std::uint64_t>(span)) -
               spec.background.noise_amplitude;
    };

    std::vector<int> owner(static_cast<std::size_t>(w) * h);
    for (int t = 0; t < spec.duration_frames; ++t) {
        const double zoom = spec.camera_zoom_at(t);
        const double cx_frame = (w - 1) / 2.0, cy_frame = (h - 1) / 2.0;

        std::fill(owner.begin(), owner.end(), -1);
        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
            const auto& o = spec.objects[k];
            if (spec.object_absent_at(o.id, t)) continue;
            const double scale = o.scale_at(t) * zoom;
            const double cx = cx_frame + (o.path.x_at(t) - cx_frame) * zoom;
            const double cy = cy_frame + (o.path.y_at(t) - cy_frame) * zoom;
            const double rx = o.rx * scale, ry = o.ry * scale;

            const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
            const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + rx)));
            const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
            const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + ry)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    bool inside;
                    if (o.shape == ShapeKind::rectangle) {
                        inside = std::abs(x - cx) <= rx && std::abs(y - cy) <= ry;
                    } else {
                        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                        inside = dx * dx + dy * dy <= 1.0;
                    }
                    if (inside) owner[static_cast<std::size_t>(y) * w + x] = static_cast<int>(k);
                }
            }
        }

        Frame frame(t, w, h);
        frame.timestamp = static_cast<double>(t) / kSyntheticFps;
        std::vector<BinaryMask> masks(spec.objects.size(), BinaryMask(w, h));
        std::vector<bool> visible(spec.objects.size(), false);
        for (int y = 0; y < h; ++y) {
            const double u = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const int own = owner[i];
                if (own >= 0) {
                    const auto& c = spec.objects[static_cast<std::size_t>(own)].color;
                    frame.set_pixel(x, y, c[0], c[1], c[2]);
                    masks[static_cast<std::size_t>(own)].set(x, y, true);
                    visible[static_cast<std::size_t>(own)] = true;
                } else {
                    std::uint8_t rgb[3];
                    for (int ch = 0; ch < 3; ++ch) {
                        const double base = spec.background.top[ch] +
                                            u * (spec.background.bottom[ch] -
                                                 spec.background.top[ch]);
                        const int v = static_cast<int>(std::lround(base)) + noise(i, ch);
                        rgb[ch] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
                    }
                    frame.set_pixel(x, y, rgb[0], rgb[1], rgb[2]);
                }
            }
        }
        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
            if (visible[k]) out.masklets[k].track.emplace(t, std::move(masks[k]));
        }
        out.frames.push_back(std::move(frame));
    }
    return out;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json color_to_json(const std::array<std::uint8_t, 3>& c) {
    return ordered_json::array({c[0], c[1], c[2]});
}

std::array<std::uint8_t, 3> color_from_json(const ordered_json& j) {
    if (!j.is_array() || j.size() != 3) throw CorruptData("scene spec: color must be [r,g,b]");
    return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

} // namespace

SyntheticScene load_scene_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptData("scene spec: invalid JSON: " + std::string(e.what()));
    }

    try {
        SyntheticScene s;
        s.name = j.value("name", "scene");
        s.width = j.value("width", 96);
        s.height = j.value("height", 96);
        s.duration_frames = j.at("duration_frames").get<int>();
        s.seed = j.value("seed", 0ULL);
        if (j.contains("background")) {
            const auto& b = j.at("background");
            if (b.contains("top")) s.background.top = color_from_json(b.at("top"));
            if (b.contains("bottom")) s.background.bottom = color_from_json(b.at("bottom"));
            s.background.noise_amplitude = b.value("noise_amplitude", 2);
        }
        for (const auto& oj : j.value("objects", ordered_json::array())) {
            SceneObject o;
            o.id = oj.at("id").get<int>();
            o.shape = oj.value("shape", "rectangle") == std::string("ellipse")
                          ? ShapeKind::ellipse
                          : ShapeKind::rectangle;
            if (oj.contains("color")) o.color = color_from_json(oj.at("color"));
            o.rx = oj.value("rx", 12.0);
            o.ry = oj.value("ry", 12.0);
            if (oj.contains("path")) {
                const auto& p = oj.at("path");
                o.path.cx0 = p.value("cx0", 0.0);
                o.path.cy0 = p.value("cy0", 0.0);
                o.path.vx = p.value("vx", 0.0);
                o.path.vy = p.value("vy", 0.0);
                o.path.amp_x = p.value("amp_x", 0.0);
                o.path.amp_y = p.value("amp_y", 0.0);
                o.path.period = p.value("period", 40.0);
                o.path.phase = p.value("phase", 0.0);
            }
            for (const auto& kj : oj.value("scale_schedule", ordered_json::array())) {
                o.scale_schedule.push_back(
                    {kj.at("frame").get<int>(), kj.at("scale").get<double>()});
            }
            if (oj.contains("category") && !oj.at("category").is_null()) {
                o.category = oj.at("category").get<std::string>();
            }
            s.objects.push_back(std::move(o));
        }
        for (const auto& dj : j.value("disappears", ordered_json::array())) {
            s.disappears.push_back({dj.at("object_id").get<int>(), dj.at("start").get<int>(),
                                    dj.at("end").get<int>()});
        }
        for (const auto& zj : j.value("zooms", ordered_json::array())) {
            s.zooms.push_back({zj.at("start").get<int>(), zj.at("end").get<int>(),
                               zj.at("factor").get<double>()});
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptData("scene spec: " + std::string(e.what()));
    }
}

void save_scene_spec(const SyntheticScene& s, const std::filesystem::path& path) {
    ordered_json j;
    j["name"] = s.name;
    j["width"] = s.width;
    j["height"] = s.height;
    j["duration_frames"] = s.duration_frames;
    j["seed"] = s.seed;
    j["background"] = {{"top", color_to_json(s.background.top)},
                       {"bottom", color_to_json(s.background.bottom)},
                       {"noise_amplitude", s.background.noise_amplitude}};
    j["objects"] = ordered_json::array();
    for (const auto& o : s.objects) {
        ordered_json oj;
        oj["id"] = o.id;
        oj["shape"] = o.shape == ShapeKind::ellipse ? "ellipse" : "rectangle";
        oj["color"] = color_to_json(o.color);
        oj["rx"] = o.rx;
        oj["ry"] = o.ry;
        oj["path"] = {{"cx0", o.path.cx0},   {"cy0", o.path.cy0},     {"vx", o.path.vx},
                      {"vy", o.path.vy},     {"amp_x", o.path.amp_x}, {"amp_y", o.path.amp_y},
                      {"period", o.path.period}, {"phase", o.path.phase}};
        if (!o.scale_schedule.empty()) {
            oj["scale_schedule"] = ordered_json::array();
            for (const auto& k : o.scale_schedule) {
                oj["scale_schedule"].push_back({{"frame", k.frame}, {"scale", k.scale}});
            }
        }
        if (o.category) oj["category"] = *o.category;
        j["objects"].push_back(std::move(oj));
    }
    j["disappears"] = ordered_json::array();
    for (const auto& d : s.disappears) {
        j["disappears"].push_back(
            {{"object_id", d.object_id}, {"start", d.start}, {"end", d.end}});
    }
    j["zooms"] = ordered_json::array();
    for (const auto& z : s.zooms) {
        j["zooms"].push_back({{"start", z.start}, {"end", z.end}, {"factor", z.factor}});
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<SyntheticScene> build_reappearance_suite(int num_scenes, std::uint64_t base_seed) {
    if (num_scenes < 1) throw ContractViolation("suite needs at least one scene");
    std::vector<SyntheticScene> scenes;
    scenes.reserve(static_cast<std::size_t>(num_scenes));

    for (int i = 0; i < num_scenes; ++i) {
        std::mt19937_64 rng(base_seed * 7919ULL + static_cast<std::uint64_t>(i));
        SyntheticScene s;
        s.name = "reappear_" + std::to_string(i);
        s.width = 96;
        s.height = 96;
        s.duration_frames = 110;
        s.seed = base_seed + static_cast<std::uint64_t>(i) * 131ULL;

        // Target crosses the frame corner-to-corner so the reappearance pose
        // sits far from the prompt-frame pose.
        SceneObject target;
        target.id = 1;
        target.shape = (rng() & 1) ? ShapeKind::ellipse : ShapeKind::rectangle;
        const std::array<std::array<std::uint8_t, 3>, 4> palette{
            {{214, 60, 54}, {226, 178, 48}, {72, 186, 92}, {196, 92, 196}}};
        target.color = palette[rng() % palette.size()];
        target.rx = 11.0 + uniform_double(rng) * 4.0;
        target.ry = 11.0 + uniform_double(rng) * 4.0;
        const bool left_to_right = (rng() & 1) != 0;
        const bool top_to_bottom = (rng() & 1) != 0;
        target.path.cx0 = left_to_right ? 20.0 + uniform_double(rng) * 6.0
                                        : 76.0 - uniform_double(rng) * 6.0;
        target.path.cy0 = top_to_bottom ? 20.0 + uniform_double(rng) * 6.0
                                        : 76.0 - uniform_double(rng) * 6.0;
        const double travel = 52.0 + uniform_double(rng) * 6.0;
        target.path.vx = (left_to_right ? 1.0 : -1.0) * travel / s.duration_frames;
        target.path.vy = (top_to_bottom ? 1.0 : -1.0) * travel / s.duration_frames;
        target.path.amp_x = uniform_double(rng) * 2.0;
        target.path.amp_y = uniform_double(rng) * 2.0;
        target.path.period = 30.0 + uniform_double(rng) * 20.0;
        target.category = target.shape == ShapeKind::ellipse ? "ellipse" : "rectangle";
        s.objects.push_back(target);

        // Same-colored distractor on roughly the opposite trajectory, far
        // enough to stay clear of the target.
        if (uniform_double(rng) < 0.5) {
            SceneObject distractor = target;
            distractor.id = 2;
            distractor.rx = 8.0;
            distractor.ry = 8.0;
            distractor.path.cx0 = target.path.cx0;
            distractor.path.cy0 = 96.0 - target.path.cy0;
            distractor.path.vx = target.path.vx;
            distractor.path.vy = -target.path.vy;
            distractor.path.amp_x = 0.0;
            distractor.path.amp_y = 0.0;
            s.objects.push_back(distractor);
        }

        const int gone_start = 45 + uniform_int(rng, 0, 10);
        const int gone_len = 15 + uniform_int(rng, 0, 10);
        s.disappears.push_back({1, gone_start, std::min(gone_start + gone_len, 95)});

        if (uniform_double(rng) < 0.3) {
            s.zooms.push_back({30, 60, 1.1 + uniform_double(rng) * 0.15});
        }
        scenes.push_back(std::move(s));
    }
    return scenes;
}

SyntheticScene static_square_scene(int duration_frames, std::uint64_t seed) {
    SyntheticScene s;
    s.name = "static_square";
    s.duration_frames = duration_frames;
    s.seed = seed;
    SceneObject o;
    o.id = 1;
    o.shape = ShapeKind::rectangle;
    o.color = {214, 60, 54};
    o.rx = 13.0;
    o.ry = 13.0;
    o.path.cx0 = 47.0;
    o.path.cy0 = 47.0;
    o.category = "rectangle";
    s.objects.push_back(o);
    return s;
}

} // namespace divetrack
