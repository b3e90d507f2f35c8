#pragma once

#include <optional>
#include <vector>

#include "timberdiff/point_cloud.hpp"

namespace timberdiff {

/// Voxel-grid down-sampling: at most one point per occupied cell of an
/// axis-aligned grid. Each output point is the centroid of its cell's members;
/// normals are averaged and renormalized, colors averaged. The grid is
/// anchored at the cloud's bounding-box minimum corner unless an explicit
/// anchor is given. Output order follows first cell occupancy in input order.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size,
                            std::optional<Vec3> anchor = std::nullopt);

struct OutlierRemovalResult {
    PointCloud cloud;                  // kept points, input order preserved
    std::vector<int> removed_indices;  // ascending, indices into the input
};

/// Removes points whose mean distance to their k nearest neighbors exceeds
/// the global mean of that statistic by more than std_ratio standard
/// deviations. Requires more than k_neighbors points.
OutlierRemovalResult remove_statistical_outliers(const PointCloud& cloud, int k_neighbors,
                                                 double std_ratio);

/// Per-point normal from the smallest-eigenvalue eigenvector of the k-NN
/// covariance (neighborhood includes the point itself). Orientation: toward
/// orientation_hint when given, otherwise propagated for consistency over a
/// minimum spanning tree of the k-NN graph. Degenerate neighborhoods (not
/// spanning a plane) get a zero normal.
PointCloud estimate_normals(const PointCloud& cloud, int k_neighbors,
                            std::optional<Vec3> orientation_hint = std::nullopt);

}  // namespace timberdiff
