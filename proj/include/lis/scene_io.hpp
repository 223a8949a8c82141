#pragma once

// JSON scene and trajectory files, and CSV export of channel snapshots.
//
// Scene schema (all lengths in meters):
//   {
//     "room": [22.0, 22.0, 4.0],
//     "carrier_hz": 3.5e9,
//     "tx_power_dbm": 20,            // or "tx_power_w"
//     "max_paths": 10,
//     "lis": { "anchor": [x, y, z], "rows": 32, "cols": 32,
//              "spacing_wavelengths": 0.5 },   // or "spacing_m"
//     "reflectors": [ { "min": [x, y, z], "max": [x, y, z], "gamma": 0.7 } ]
//   }
//
// Trajectory schema:
//   { "points": [[x, y, z], ...], "labels": ["correct" | "anomalous", ...] }

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lis/channel.hpp"

namespace lis {

Scene scene_from_json_text(const std::string& text);
Scene load_scene(const std::filesystem::path& path);
std::string scene_to_json_text(const Scene& scene);

Trajectory trajectory_from_json_text(const std::string& text);
Trajectory load_trajectory(const std::filesystem::path& path);
std::string trajectory_to_json_text(const Trajectory& trajectory);

/// Rows of "antenna,re,im" with a header line.
void write_snapshot_csv(std::ostream& out, const ChannelSnapshot& snapshot);
ChannelSnapshot read_snapshot_csv(std::istream& in, std::size_t position = 0);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace lis
