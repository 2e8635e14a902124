#pragma once

#include "llloc/simulator.hpp"
#include "llloc/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace llloc {

enum class PlyEncoding {
  Ascii,          // property double, 17 significant digits (lossless)
  BinaryFloat32,  // property float, little endian; compact but lossy
};

/// Writes x y z vertices with the scan timestamp as a header comment.
void write_ply(const std::filesystem::path& path, const Scan& cloud,
               PlyEncoding encoding = PlyEncoding::Ascii);
/// Reads the subset written by write_ply (ascii or binary little endian,
/// float or double x/y/z). The frame is left as given.
Scan read_ply(const std::filesystem::path& path, Frame frame = Frame::Map);

/// "timestamp tx ty tz qx qy qz qw" per line.
void write_tum(const std::filesystem::path& path, const std::vector<TimedPose>& poses);
std::vector<TimedPose> read_tum(const std::filesystem::path& path);
std::string format_tum_line(const TimedPose& pose);

void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples);
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);

/// Session layout: session.json, imu.csv, groundtruth.txt and scans/NNNNNN.ply.
void write_session(const std::filesystem::path& dir, const SessionData& session,
                   PlyEncoding encoding = PlyEncoding::Ascii);
SessionData read_session(const std::filesystem::path& dir);

/// Lists scans/NNNNNN.ply in index order.
std::vector<std::filesystem::path> list_scan_files(const std::filesystem::path& scans_dir);

}  // namespace llloc
