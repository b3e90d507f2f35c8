#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "timberdiff/point_cloud.hpp"

namespace timberdiff {

/// One logical planar face of a beam: an edge-connected, coplanar patch of
/// triangles. Joint faces carry the (joint_id, joint_face_id) tag pair;
/// plain outer faces have joint_id == -1.
struct MeshFace {
    int id = -1;             // unique within the beam
    int joint_id = -1;       // -1 when not part of a joint
    int joint_face_id = -1;  // unique within the joint when tagged

    std::vector<Eigen::Vector3i> triangles;  // vertex indices into the beam pool

    // Fitted plane: normal.dot(x) == offset. plane_deviation records the true
    // max vertex-to-plane distance over the face's vertices.
    Vec3 normal = Vec3::Zero();
    double offset = 0.0;
    double plane_deviation = 0.0;

    double area = 0.0;
    Vec3 centroid = Vec3::Zero();  // area-weighted

    bool is_joint_face() const { return joint_id >= 0; }
};

struct Joint {
    int id = 0;
    std::vector<int> faces;  // indices into Beam::faces, ordered by joint_face_id
};

struct Beam {
    int id = 0;
    std::vector<Vec3> vertices;   // meters
    std::vector<MeshFace> faces;  // all logical faces, joint and plain
    std::vector<Joint> joints;
    bool open = false;  // file declared the mesh open; closure not checked

    std::vector<Eigen::Vector3i> all_triangles() const;
    double total_area() const;

    const Joint* find_joint(int joint_id) const;
    /// Face tagged (joint_id, joint_face_id); nullptr when absent.
    const MeshFace* find_joint_face(int joint_id, int joint_face_id) const;

    /// Diagonal of the two smaller oriented-bounding-box extents; a beam
    /// cross-section size estimate used for association gating defaults.
    double cross_section_diagonal() const;

    /// Structural checks: id uniqueness, triangle sanity, joint face
    /// connectivity, mesh closure (unless open). Throws SemanticError.
    void validate() const;
};

struct Assembly {
    std::string name;
    std::vector<Beam> beams;

    const Beam* find_beam(int beam_id) const;
    void validate() const;
};

/// Fits the plane and fills derived fields (normal, offset, deviation, area,
/// centroid) of a face whose triangles are already set.
void fit_face_plane(MeshFace& face, const std::vector<Vec3>& vertices);

/// Partitions triangles into logical faces: edge-connected components that
/// stay coplanar within the given tolerances. Components are ordered by their
/// smallest vertex index.
std::vector<MeshFace> partition_faces(const std::vector<Vec3>& vertices,
                                      const std::vector<Eigen::Vector3i>& triangles,
                                      double angle_tolerance_deg = 1.0,
                                      double offset_tolerance = 1e-4);

/// Assembles a validated Beam from raw geometry. joint_groups maps
/// (joint id, face id) to that face's triangles; all remaining triangles are
/// partitioned into plain faces.
struct JointFaceInput {
    int joint_id = 0;
    int face_id = 0;
    std::vector<Eigen::Vector3i> triangles;
};
Beam build_beam(int id, std::vector<Vec3> vertices, std::vector<Eigen::Vector3i> plain_triangles,
                std::vector<JointFaceInput> joint_faces, bool open);

/// Fallback joint detection for beams without explicit tags: faces whose
/// fitted plane is not one of the six dominant oriented-bounding-box side
/// planes (normal within dihedral_threshold of a box axis and offset within
/// tolerance of that side) become joint faces; their edge-connected components
/// become joints, ordered by smallest vertex index. Throws NotApplicable when
/// the beam already has joints.
Beam detect_joints(const Beam& beam, double dihedral_threshold_deg);

}  // namespace timberdiff
