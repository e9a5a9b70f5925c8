#pragma once
// A masklet is one object's temporally consistent mask track across a video.
// A missing frame index means the object is not visible in that frame.

#include <map>
#include <optional>
#include <string>

#include "divetrack/mask.hpp"

namespace divetrack {

struct Masklet {
    int instance_id = 0;
    std::optional<std::string> category;
    std::map<int, BinaryMask> track; // frame index -> mask

    bool visible_at(int frame_index) const { return track.count(frame_index) > 0; }

    const BinaryMask* mask_at(int frame_index) const {
        const auto it = track.find(frame_index);
        return it == track.end() ? nullptr : &it->second;
    }
};

} // namespace divetrack
