#pragma once

#include <optional>
#include <vector>

#include "timberdiff/point_cloud.hpp"

// Brute-force reference implementations, independent of the library's
// accelerated code paths. Deliberately naive.
namespace tdtest::oracle {

using timberdiff::PointCloud;
using timberdiff::Vec3;

struct Neighbor {
    int index;
    double distance2;
};

/// Exact k nearest (including the query when it is a member), ties broken by
/// lower index. Linear scan + sort.
std::vector<Neighbor> brute_knn(const std::vector<Vec3>& points, const Vec3& query, int k);

std::vector<Neighbor> brute_radius(const std::vector<Vec3>& points, const Vec3& query,
                                   double radius);

/// O(n*m) nearest-neighbor distances from each source point to the target set.
std::vector<double> brute_nn_distances(const std::vector<Vec3>& source,
                                       const std::vector<Vec3>& target);

/// Voxel binning (floor((p - anchor)/voxel)) to centroids, for checking the
/// down-sampler. Returns centroid per occupied cell keyed by the cell coords.
struct VoxelCell {
    long long x, y, z;
    Vec3 centroid;
    std::size_t count;
};
std::vector<VoxelCell> brute_voxel_centroids(const PointCloud& cloud, double voxel,
                                             const Vec3& anchor);

/// Statistical outlier criterion evaluated naively; returns removed indices.
std::vector<int> brute_outlier_indices(const PointCloud& cloud, int k, double std_ratio);

/// Point-triangle distance via a different derivation than the library's
/// (plane foot with barycentric solve, else min over the three edges).
double point_triangle_naive(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// min over triangles of the naive kernel.
double mesh_distance_naive(const Vec3& p, const std::vector<Vec3>& vertices,
                           const std::vector<Eigen::Vector3i>& triangles);

}  // namespace tdtest::oracle
