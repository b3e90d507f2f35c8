#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace tdtest::oracle {

namespace {

double dist2(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<Neighbor> brute_knn(const std::vector<Vec3>& points, const Vec3& query, int k) {
    std::vector<Neighbor> all;
    all.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        all.push_back({static_cast<int>(i), dist2(query, points[i])});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
    });
    if (static_cast<int>(all.size()) > k) all.resize(k);
    return all;
}

std::vector<Neighbor> brute_radius(const std::vector<Vec3>& points, const Vec3& query,
                                   double radius) {
    const double r2 = radius * radius;
    std::vector<Neighbor> found;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d2 = dist2(query, points[i]);
        if (d2 <= r2) found.push_back({static_cast<int>(i), d2});
    }
    std::sort(found.begin(), found.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
    });
    return found;
}

std::vector<double> brute_nn_distances(const std::vector<Vec3>& source,
                                       const std::vector<Vec3>& target) {
    std::vector<double> out;
    out.reserve(source.size());
    for (const Vec3& s : source) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& t : target) best = std::min(best, dist2(s, t));
        out.push_back(std::sqrt(best));
    }
    return out;
}

std::vector<VoxelCell> brute_voxel_centroids(const PointCloud& cloud, double voxel,
                                             const Vec3& anchor) {
    struct Accumulator {
        Vec3 sum = Vec3::Zero();  // Eigen default-construction leaves garbage
        std::size_t count = 0;
    };
    std::map<std::array<long long, 3>, Accumulator> cells;
    for (const Vec3& p : cloud.points) {
        const std::array<long long, 3> key = {
            static_cast<long long>(std::floor((p.x() - anchor.x()) / voxel)),
            static_cast<long long>(std::floor((p.y() - anchor.y()) / voxel)),
            static_cast<long long>(std::floor((p.z() - anchor.z()) / voxel))};
        auto& [sum, count] = cells[key];
        sum += p;
        ++count;
    }
    std::vector<VoxelCell> out;
    for (const auto& [key, value] : cells) {
        out.push_back({key[0], key[1], key[2], value.sum / static_cast<double>(value.count),
                       value.count});
    }
    return out;
}

std::vector<int> brute_outlier_indices(const PointCloud& cloud, int k, double std_ratio) {
    const std::size_t n = cloud.size();
    std::vector<double> mean_distance(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto nn = brute_knn(cloud.points, cloud.points[i], k + 1);
        double sum = 0.0;
        for (const Neighbor& nb : nn) {
            if (nb.index != static_cast<int>(i)) sum += std::sqrt(nb.distance2);
        }
        mean_distance[i] = sum / static_cast<double>(k);
    }
    double mean = 0.0;
    for (const double d : mean_distance) mean += d;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double d : mean_distance) var += (d - mean) * (d - mean);
    var /= static_cast<double>(n);
    const double cutoff = mean + std_ratio * std::sqrt(var);

    std::vector<int> removed;
    for (std::size_t i = 0; i < n; ++i) {
        if (mean_distance[i] > cutoff) removed.push_back(static_cast<int>(i));
    }
    return removed;
}

double point_triangle_naive(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    auto segment_distance = [](const Vec3& q, const Vec3& s0, const Vec3& s1) {
        const Vec3 d = s1 - s0;
        const double len2 = d.squaredNorm();
        double t = len2 > 0.0 ? (q - s0).dot(d) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return (q - (s0 + t * d)).norm();
    };

    double best = std::min({segment_distance(p, a, b), segment_distance(p, b, c),
                            segment_distance(p, c, a)});

    // Plane foot, accepted only when its barycentric coordinates are inside.
    const Vec3 n = (b - a).cross(c - a);
    const double n2 = n.squaredNorm();
    if (n2 > 0.0) {
        const double signed_distance = (p - a).dot(n) / std::sqrt(n2);
        const Vec3 foot = p - signed_distance * n / std::sqrt(n2);
        const Vec3 v0 = b - a, v1 = c - a, v2 = foot - a;
        const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
        const double d20 = v2.dot(v0), d21 = v2.dot(v1);
        const double denom = d00 * d11 - d01 * d01;
        if (denom > 0.0) {
            const double v = (d11 * d20 - d01 * d21) / denom;
            const double w = (d00 * d21 - d01 * d20) / denom;
            if (v >= 0.0 && w >= 0.0 && v + w <= 1.0) {
                best = std::min(best, std::abs(signed_distance));
            }
        }
    }
    return best;
}

double mesh_distance_naive(const Vec3& p, const std::vector<Vec3>& vertices,
                           const std::vector<Eigen::Vector3i>& triangles) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tri : triangles) {
        best = std::min(best,
                        point_triangle_naive(p, vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]));
    }
    return best;
}

}  // namespace tdtest::oracle
