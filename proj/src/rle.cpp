#include "divetrack/rle.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace divetrack {

RleMask rle_encode(const BinaryMask& m) {
    RleMask out;
    out.width = m.width();
    out.height = m.height();

    const auto& bits = m.bits();
    bool current = false; // runs start with background
    std::uint64_t length = 0;
    for (const auto b : bits) {
        const bool v = b != 0;
        if (v == current) {
            ++length;
        } else {
            out.runs.push_back(length);
            current = v;
            length = 1;
        }
    }
    out.runs.push_back(length);
    return out;
}

BinaryMask rle_decode(const RleMask& r) {
    if (r.width <= 0 || r.height <= 0) {
        throw CorruptData("rle_decode: non-positive dimensions");
    }
    const std::uint64_t expected = static_cast<std::uint64_t>(r.width) * r.height;
    std::uint64_t total = 0;
    for (const auto run : r.runs) total += run;
    if (total != expected) {
        throw CorruptData("rle_decode: runs sum to " + std::to_string(total) + ", expected " +
                          std::to_string(expected));
    }

    BinaryMask m(r.width, r.height);
    std::size_t pos = 0;
    bool current = false;
    for (const auto run : r.runs) {
        if (current) {
            for (std::uint64_t i = 0; i < run; ++i) {
                const std::size_t p = pos + i;
                m.set(static_cast<int>(p % r.width), static_cast<int>(p / r.width), true);
            }
        }
        pos += static_cast<std::size_t>(run);
        current = !current;
    }
    return m;
}

std::string rle_check(const RleMask& r) {
    if (r.width <= 0 || r.height <= 0) return "non-positive dimensions";
    std::uint64_t total = 0;
    for (const auto run : r.runs) total += run;
    const std::uint64_t expected = static_cast<std::uint64_t>(r.width) * r.height;
    if (total != expected) {
        return "runs sum to " + std::to_string(total) + ", expected " + std::to_string(expected);
    }
    for (std::size_t i = 1; i + 1 < r.runs.size(); ++i) {
        if (r.runs[i] == 0 && r.runs[i - 1] == 0) {
            return "two consecutive zero-length interior runs at " + std::to_string(i);
        }
    }
    return {};
}

void write_rle_file(const std::filesystem::path& path, const RleMask& r) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << r.width << ' ' << r.height << '\n';
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        if (i) out << ' ';
        out << r.runs[i];
    }
    out << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

RleMask read_rle_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    RleMask r;
    if (!(in >> r.width >> r.height)) {
        throw CorruptData("malformed RLE header in " + path.string());
    }
    std::string rest;
    std::getline(in, rest); // consume end of header line
    if (!std::getline(in, rest)) {
        throw CorruptData("missing RLE run line in " + path.string());
    }
    std::istringstream runs(rest);
    std::uint64_t v;
    while (runs >> v) r.runs.push_back(v);
    if (!runs.eof()) throw CorruptData("malformed RLE runs in " + path.string());
    return r;
}

} // namespace divetrack
