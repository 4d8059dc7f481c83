#include "comotion/tracks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "comotion/errors.hpp"

namespace comotion {

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

LandmarkTrack read_track(const std::filesystem::path& path, int landmark_count_in_file) {
    if (landmark_count_in_file != kLandmarkCount &&
        landmark_count_in_file != kFullLandmarkCount) {
        throw std::invalid_argument("landmark_count_in_file must be 51 or 68");
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open landmark CSV " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty landmark CSV " + path.string());
    if (strip_cr(line) != "frame,landmark,x,y") {
        throw FormatError("landmark CSV must start with header 'frame,landmark,x,y': " +
                          path.string());
    }

    // frame -> landmark -> point, detecting duplicates
    std::map<int, std::map<int, Vec2>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4) {
            throw FormatError("malformed row (expected 4 fields) at line " +
                              std::to_string(line_no) + " in " + path.string());
        }
        int frame = 0, landmark = 0;
        double x = 0.0, y = 0.0;
        try {
            std::size_t used = 0;
            frame = std::stoi(fields[0], &used);
            if (used != fields[0].size()) throw std::invalid_argument("frame");
            landmark = std::stoi(fields[1], &used);
            if (used != fields[1].size()) throw std::invalid_argument("landmark");
            x = std::stod(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("x");
            y = std::stod(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("y");
        } catch (const std::exception&) {
            throw FormatError("malformed row at line " + std::to_string(line_no) + " in " +
                              path.string());
        }
        if (frame < 0 || landmark < 0 || landmark >= landmark_count_in_file) {
            throw FormatError("landmark index out of range at line " + std::to_string(line_no) +
                              " in " + path.string());
        }
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw FormatError("non-finite coordinate at line " + std::to_string(line_no) +
                              " in " + path.string());
        }
        auto [it, inserted] = rows[frame].emplace(landmark, Vec2{x, y});
        if (!inserted) {
            throw FormatError("duplicate (frame,landmark) row at line " +
                              std::to_string(line_no) + " in " + path.string());
        }
    }

    const int first_kept =
        landmark_count_in_file == kFullLandmarkCount ? kBoundaryLandmarkCount : 0;

    LandmarkTrack track;
    track.video_id = path.stem().string();
    for (const auto& [frame, points] : rows) {
        LandmarkFrame lf;
        lf.frame_index = frame;
        lf.points.reserve(kLandmarkCount);
        bool complete = true;
        for (int i = 0; i < kLandmarkCount; ++i) {
            const auto it = points.find(first_kept + i);
            if (it == points.end()) {
                complete = false;
                break;
            }
            lf.points.push_back(it->second);
        }
        if (complete) {
            track.frames.push_back(std::move(lf));
        } else {
            ++track.dropped_frames;
        }
    }
    if (track.frames.empty()) {
        throw EmptyInputError("no complete landmark frames in " + path.string());
    }
    return track;
}

void write_track(const LandmarkTrack& track, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open landmark CSV for writing " + path.string());
    out << "frame,landmark,x,y\n";
    char buf[80];
    for (const auto& frame : track.frames) {
        for (std::size_t i = 0; i < frame.points.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%d,%zu,%.17g,%.17g\n", frame.frame_index, i,
                          frame.points[i].x, frame.points[i].y);
            out << buf;
        }
    }
    if (!out) throw IoError("failed writing landmark CSV " + path.string());
}

std::vector<std::pair<int, int>> frame_pairs(const LandmarkTrack& track) {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 1; i < track.frames.size(); ++i) {
        const int prev = track.frames[i - 1].frame_index;
        const int cur = track.frames[i].frame_index;
        if (cur == prev + 1) pairs.emplace_back(prev, cur);
    }
    return pairs;
}

void validate_track(const LandmarkTrack& track) {
    if (track.frames.size() < 2) {
        throw std::invalid_argument("track needs at least 2 frames");
    }
    int prev = -1;
    bool first = true;
    for (const auto& frame : track.frames) {
        if (!first && frame.frame_index <= prev) {
            throw std::invalid_argument("frame indices must be strictly increasing");
        }
        prev = frame.frame_index;
        first = false;
        if (frame.points.size() != static_cast<std::size_t>(kLandmarkCount)) {
            throw std::invalid_argument("frame must carry exactly 51 landmarks");
        }
        for (const auto& p : frame.points) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw std::invalid_argument("non-finite landmark coordinate");
            }
        }
    }
}

}  // namespace comotion
