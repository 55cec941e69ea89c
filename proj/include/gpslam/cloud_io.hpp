#pragma once

#include "gpslam/geometry.hpp"
#include "gpslam/scene.hpp"

#include <string>
#include <vector>

namespace gpslam {

struct CloudLoadReport {
  std::vector<std::string> warnings;
  std::size_t rejected = 0;  // records with non-finite coordinates
};

// Reads an ASCII ".xyz"/".txt" point list (first three columns are x y z,
// '#' starts a comment) or a ".pcd" point-cloud-data file (ascii or binary)
// carrying x, y and z fields. Throws ParseError with a line number for
// malformed input.
PointCloud load_cloud(const std::string& path, CloudLoadReport* report = nullptr);

enum class PcdEncoding { Ascii, Binary };

// Format follows the extension: ".pcd" writes a binary PCD with double
// precision x y z, anything else an ASCII point list.
void save_cloud(const PointCloud& cloud, const std::string& path,
                PcdEncoding pcd_encoding = PcdEncoding::Binary);

// "timestamp tx ty tz qx qy qz qw" per line.
std::vector<TimedPose> load_trajectory(const std::string& path);
void save_trajectory(const std::vector<TimedPose>& trajectory, const std::string& path);

}  // namespace gpslam
