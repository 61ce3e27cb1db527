#pragma once

#include "selfstab/flow.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

namespace selfstab {

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file. Creates parent
/// directories.
void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

/// Path dump: `trial,particle,step,time,x1..xd`, one row per time index.
struct PathDump {
  std::uint64_t trial = 0;
  std::uint32_t particle = 0;
  const PathSample* path = nullptr;
};
void write_path_csv(std::ostream& out, const std::vector<PathDump>& paths, int dim);

/// Reads a path dump back into one PathSample per (trial, particle), in
/// order of first appearance.
std::vector<PathSample> read_path_csv(std::istream& in);

}  // namespace selfstab
