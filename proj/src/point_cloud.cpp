#include "timberdiff/point_cloud.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "timberdiff/errors.hpp"

namespace timberdiff {

void PointCloud::validate() const {
    if (!normals.empty() && normals.size() != points.size()) {
        throw SemanticError("normal channel length " + std::to_string(normals.size()) +
                            " does not match point count " + std::to_string(points.size()));
    }
    if (!colors.empty() && colors.size() != points.size()) {
        throw SemanticError("color channel length " + std::to_string(colors.size()) +
                            " does not match point count " + std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
        const double n = normals[i].norm();
        if (n != 0.0 && std::abs(n - 1.0) > 1e-6) {
            throw SemanticError("normal " + std::to_string(i) + " has norm " + std::to_string(n));
        }
    }
    for (std::size_t i = 0; i < colors.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = colors[i][c];
            if (!(v >= 0.0 && v <= 1.0)) {
                throw SemanticError("color " + std::to_string(i) + " channel outside [0,1]");
            }
        }
    }
}

PointCloud PointCloud::select(const std::vector<int>& indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    const bool n = has_normals();
    const bool c = has_colors();
    if (n) out.normals.reserve(indices.size());
    if (c) out.colors.reserve(indices.size());
    for (const int i : indices) {
        out.points.push_back(points[static_cast<std::size_t>(i)]);
        if (n) out.normals.push_back(normals[static_cast<std::size_t>(i)]);
        if (c) out.colors.push_back(colors[static_cast<std::size_t>(i)]);
    }
    return out;
}

void PointCloud::bounds(Vec3& lo, Vec3& hi) const {
    lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
}

PointCloud concatenate(const std::vector<PointCloud>& parts) {
    PointCloud out;
    std::size_t total = 0;
    bool all_normals = !parts.empty();
    bool all_colors = !parts.empty();
    for (const auto& part : parts) {
        total += part.size();
        all_normals = all_normals && (part.empty() || part.has_normals());
        all_colors = all_colors && (part.empty() || part.has_colors());
    }
    out.points.reserve(total);
    for (const auto& part : parts) {
        out.points.insert(out.points.end(), part.points.begin(), part.points.end());
        if (all_normals) out.normals.insert(out.normals.end(), part.normals.begin(), part.normals.end());
        if (all_colors) out.colors.insert(out.colors.end(), part.colors.begin(), part.colors.end());
    }
    return out;
}

}  // namespace timberdiff
