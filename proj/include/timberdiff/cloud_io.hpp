#pragma once

#include <string>
#include <vector>

#include "timberdiff/point_cloud.hpp"

namespace timberdiff::io {

enum class CloudFormat {
    Ply,       // binary little-endian on save; load accepts ascii too
    PlyAscii,  // ascii on save; load behaves like Ply
    Xyz,       // "x y z [nx ny nz]" per line, '#' comment lines
};

/// Deduce format from the file extension (.ply / .xyz). Throws InvalidParameter
/// on anything else.
CloudFormat format_from_path(const std::string& path);

/// Load a cloud. Normals/colors are populated when the file carries them.
/// Throws IoError (unreadable file) or ParseError (malformed content, with
/// line or byte offset in the message).
PointCloud load_cloud(const std::string& path, CloudFormat format);
PointCloud load_cloud(const std::string& path);

/// Save a cloud. Returns non-fatal warnings (e.g. colors dropped because the
/// format cannot carry them). Throws IoError when the file cannot be written.
std::vector<std::string> save_cloud(const PointCloud& cloud, const std::string& path,
                                    CloudFormat format);
std::vector<std::string> save_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace timberdiff::io
