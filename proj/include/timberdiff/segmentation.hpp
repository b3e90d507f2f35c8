#pragma once

#include <map>
#include <string>
#include <vector>

#include "timberdiff/assembly.hpp"
#include "timberdiff/point_cloud.hpp"

namespace timberdiff {

/// Normal-coherent subset of a registered scan.
struct Segment {
    std::vector<int> point_indices;  // ascending, unique
    Vec3 mean_normal = Vec3::Zero();
    Vec3 centroid = Vec3::Zero();

    std::size_t size() const { return point_indices.size(); }
};

struct SegmentationResult {
    /// Sorted by size descending, ties by smallest member index.
    std::vector<Segment> segments;
    /// Points in no segment (degenerate normals, under-threshold neighbors,
    /// under-sized regions), ascending.
    std::vector<int> residue;
};

/// Region growing over the k-NN graph. A neighbor joins a region when the
/// angle between its normal and the region seed's normal is below
/// angle_threshold. Seeds are processed in input order, so the result is
/// deterministic without any seed parameter.
SegmentationResult segment_by_normals(const PointCloud& cloud, double angle_threshold_deg,
                                      int k_neighbors, int min_segment_size);

/// Reference to a CAD face: plain beam faces have joint == -1 and face ==
/// MeshFace::id; joint faces carry (joint id, joint face id).
struct FaceRef {
    int beam = -1;
    int joint = -1;
    int face = -1;

    auto operator<=>(const FaceRef&) const = default;
    std::string label() const;
};

/// A CAD face prepared for association: its sampled cloud plus the derived
/// plane normal and centroid.
struct TargetFace {
    FaceRef ref;
    PointCloud cloud;
    Vec3 normal = Vec3::Zero();
    Vec3 centroid = Vec3::Zero();
};

TargetFace make_target_face(const FaceRef& ref, PointCloud sampled);

struct FaceAssociation {
    FaceRef face;
    int segment = -1;
    double score = 0.0;  // lower is better
};

/// For each target face, the best segment within max_normal_angle
/// (sign-insensitive) whose mixed score (centroid distance plus weighted
/// normal misalignment) stays under max_centroid_distance. Faces without a
/// qualifying segment are absent from the output.
std::vector<FaceAssociation> associate_segments(const std::vector<Segment>& segments,
                                                const std::vector<TargetFace>& faces,
                                                double max_centroid_distance,
                                                double max_normal_angle_deg, double lambda = 1.0);

struct BeamClusters {
    std::map<int, std::vector<int>> indices;  // beam id -> ascending scan indices
    /// Segments whose associations span more than one beam. Each such segment
    /// is assigned only to its best-scoring beam.
    std::vector<int> multiply_used_segments;
};

/// Maps associated segments back to their beams. Every beam of the assembly
/// appears in the result, with an empty index list when nothing associated.
BeamClusters cluster_beams(const std::vector<FaceAssociation>& associations,
                           const std::vector<Segment>& segments, const Assembly& assembly,
                           const PointCloud& scan);

std::map<int, PointCloud> cluster_beam_clouds(const BeamClusters& clusters,
                                              const PointCloud& scan);

struct JointKey {
    int beam = -1;
    int joint = -1;
    auto operator<=>(const JointKey&) const = default;
};

struct JointExtraction {
    std::vector<int> joint_indices;                // ascending scan indices, unique
    std::map<int, std::vector<int>> face_indices;  // joint face id -> ascending scan indices
};

/// Keeps the points of each associated segment that project perpendicularly
/// onto their target joint face: the projection must land inside one of the
/// face's triangles and the plane distance must not exceed the tolerance.
/// Joints with explicit tags but no extracted points are present with empty
/// index lists.
std::map<JointKey, JointExtraction> extract_joint_clouds(
    const std::vector<FaceAssociation>& associations, const std::vector<Segment>& segments,
    const Assembly& assembly, const PointCloud& scan, double projection_tolerance);

/// Debug dump: JSON list of {segment index, size, centroid, mean_normal,
/// point_indices}.
std::string segments_to_json(const SegmentationResult& result);

}  // namespace timberdiff
