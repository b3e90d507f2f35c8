#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace timberdiff {

using Vec3 = Eigen::Vector3d;

/// Point cloud in meters. Normals and colors are optional attribute channels;
/// when present they are parallel to points. Normals are unit vectors, except
/// that a zero normal marks a point whose neighborhood was too degenerate to
/// fit a plane (such points are skipped by normal-based processing).
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<Vec3> colors;  // RGB, each channel in [0, 1]

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !points.empty() && normals.size() == points.size(); }
    bool has_colors() const { return !points.empty() && colors.size() == points.size(); }

    void reserve(std::size_t n) {
        points.reserve(n);
        normals.reserve(n);
        colors.reserve(n);
    }

    /// Throws SemanticError if the attribute channels are inconsistent
    /// (length mismatch, non-unit nonzero normal, color outside [0,1]).
    void validate() const;

    /// Subset by point indices, carrying attributes along.
    PointCloud select(const std::vector<int>& indices) const;

    /// Axis-aligned bounding box; undefined on an empty cloud.
    void bounds(Vec3& lo, Vec3& hi) const;
};

/// Concatenation, preserving order. Attribute channels survive only if every
/// part carries them.
PointCloud concatenate(const std::vector<PointCloud>& parts);

}  // namespace timberdiff
