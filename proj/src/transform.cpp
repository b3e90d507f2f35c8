#include "timberdiff/transform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "timberdiff/errors.hpp"

namespace timberdiff {

PointCloud RigidTransform::apply(const PointCloud& cloud) const {
    PointCloud out;
    out.points.resize(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) out.points[i] = apply(cloud.points[i]);
    if (cloud.has_normals()) {
        out.normals.resize(cloud.normals.size());
        for (std::size_t i = 0; i < cloud.normals.size(); ++i) {
            out.normals[i] = rotation * cloud.normals[i];
        }
    }
    out.colors = cloud.colors;
    return out;
}

void RigidTransform::validate() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
        throw SemanticError("rotation matrix is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw SemanticError("rotation matrix determinant is not +1");
    }
}

bool RigidTransform::is_identity(double tol) const {
    return (rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           translation.cwiseAbs().maxCoeff() <= tol;
}

double rotation_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    const Eigen::Matrix3d rel = a.transpose() * b;
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

namespace io {

using nlohmann::json;

std::string transform_to_json(const RigidTransform& t) {
    json j;
    j["rotation"] = json::array();
    for (int r = 0; r < 3; ++r) {
        j["rotation"].push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
    }
    j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
    return j.dump(2);
}

RigidTransform transform_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid transform JSON: ") + e.what());
    }
    RigidTransform t;
    try {
        const auto& rot = j.at("rotation");
        const auto& tr = j.at("translation");
        if (rot.size() != 3 || tr.size() != 3) throw ParseError("transform JSON has wrong shape");
        for (int r = 0; r < 3; ++r) {
            if (rot[r].size() != 3) throw ParseError("transform JSON has wrong shape");
            for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot[r][c].get<double>();
        }
        for (int c = 0; c < 3; ++c) t.translation[c] = tr[c].get<double>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid transform JSON: ") + e.what());
    }
    t.validate();
    return t;
}

RigidTransform load_transform(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return transform_from_json(text);
}

void save_transform(const RigidTransform& transform, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << transform_to_json(transform) << "\n";
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace io

}  // namespace timberdiff
