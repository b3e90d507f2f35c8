#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "timberdiff/point_cloud.hpp"
#include "timberdiff/transform.hpp"

namespace timberdiff {

/// Per-point FPFH descriptors: three 11-bin angle histograms concatenated to
/// 33 bins. valid[i] == 0 marks points that had no neighbors in the feature
/// radius (their histogram is all zero).
struct FeatureSet {
    std::vector<std::array<double, 33>> histograms;
    std::vector<char> valid;

    std::size_t size() const { return histograms.size(); }
};

/// Requires normals. Radius is the SPFH neighborhood radius, meters.
FeatureSet compute_fpfh(const PointCloud& cloud, double radius);

struct RegistrationResult {
    RigidTransform transform;
    double fitness = 0.0;      // fraction of source points with a target neighbor in range
    double inlier_rmse = 0.0;  // meters, over matched pairs
    int iterations = 0;        // actually executed
};

struct RansacParams {
    int max_iterations = 100000;
    double distance_threshold = 0.0;  // meters; required
    int sample_size = 3;
    double edge_length_ratio = 0.9;  // pairwise edge similarity gate, in (0, 1]
    double confidence = 0.999;       // early-exit criterion
    double fitness_floor = 0.1;      // below this final fitness -> NoConsensus
    std::uint64_t seed = 0;
    /// Source points entering the feature-correspondence pool (subsampled
    /// deterministically when the cloud is larger).
    int correspondence_pool = 2000;
};

/// Coarse global alignment: feature-space nearest-neighbor correspondences,
/// RANSAC with edge-length pruning, closed-form rigid fits, refit on the
/// winning inlier set. Fitness and RMSE of the result are evaluated on the
/// full clouds at distance_threshold.
RegistrationResult ransac_register(const PointCloud& source, const PointCloud& target,
                                   const FeatureSet& source_features,
                                   const FeatureSet& target_features, const RansacParams& params);

struct IcpParams {
    int max_iterations = 50;
    double max_correspondence_distance = 0.0;  // meters; required
    double rel_rmse_change = 1e-6;
    double rel_fitness_change = 1e-6;
    bool point_to_plane = false;  // requires target normals
};

/// Point-to-point ICP (point-to-plane behind the flag). The returned transform
/// composes the initial transform. Throws NoCorrespondences when no pair is
/// within the cap at the initial alignment.
RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target,
                              const RigidTransform& initial, const IcpParams& params);

/// Least-squares rigid fit of paired points (cross-covariance SVD with
/// reflection correction). Needs >= 3 non-collinear pairs.
RigidTransform fit_rigid_correspondences(const std::vector<Vec3>& source_points,
                                         const std::vector<Vec3>& target_points);

}  // namespace timberdiff
