#pragma once

#include <Eigen/Dense>
#include <string>

#include "timberdiff/point_cloud.hpp"

namespace timberdiff {

/// Proper rigid transform (rotation + translation), the carrier for the
/// global scan-to-model alignment and the joint-local corrections.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    /// Transforms points and rotates normals; colors pass through.
    PointCloud apply(const PointCloud& cloud) const;

    /// this ∘ other: apply `other` first, then this.
    RigidTransform compose(const RigidTransform& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    RigidTransform inverse() const {
        return {rotation.transpose(), -(rotation.transpose() * translation)};
    }

    /// Throws SemanticError unless the rotation is orthonormal with det +1
    /// (within 1e-9).
    void validate() const;

    bool is_identity(double tol = 0.0) const;
};

/// Rotation angle in radians between two rotations (geodesic distance).
double rotation_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

namespace io {

/// JSON layout: {"rotation": [[r,r,r],[r,r,r],[r,r,r]], "translation": [t,t,t]},
/// rotation row-major.
RigidTransform load_transform(const std::string& path);
void save_transform(const RigidTransform& transform, const std::string& path);
std::string transform_to_json(const RigidTransform& transform);
RigidTransform transform_from_json(const std::string& json_text);

}  // namespace io

}  // namespace timberdiff
