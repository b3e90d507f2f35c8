#include "timberdiff/assembly.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "timberdiff/errors.hpp"

namespace timberdiff {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

using Edge = std::pair<int, int>;

Edge undirected(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Connected components over triangles sharing an undirected edge, optionally
/// restricted by a coplanarity predicate against the component's first
/// triangle. Components come out ordered by their smallest vertex index.
template <typename Compatible>
std::vector<std::vector<int>> edge_connected_components(
    const std::vector<Eigen::Vector3i>& triangles, Compatible&& compatible) {
    std::map<Edge, std::vector<int>> edge_to_triangles;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (int e = 0; e < 3; ++e) {
            edge_to_triangles[undirected(tri[e], tri[(e + 1) % 3])].push_back(
                static_cast<int>(t));
        }
    }

    std::vector<int> component(triangles.size(), -1);
    std::vector<std::vector<int>> components;
    for (std::size_t seed = 0; seed < triangles.size(); ++seed) {
        if (component[seed] >= 0) continue;
        const int label = static_cast<int>(components.size());
        std::vector<int> members;
        std::vector<int> stack{static_cast<int>(seed)};
        component[seed] = label;
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            members.push_back(t);
            const auto& tri = triangles[t];
            for (int e = 0; e < 3; ++e) {
                for (const int other : edge_to_triangles[undirected(tri[e], tri[(e + 1) % 3])]) {
                    if (component[other] >= 0) continue;
                    if (!compatible(seed, static_cast<std::size_t>(other))) continue;
                    component[other] = label;
                    stack.push_back(other);
                }
            }
        }
        std::sort(members.begin(), members.end());
        components.push_back(std::move(members));
    }

    // Order components by their smallest vertex index, then smallest triangle.
    std::vector<int> min_vertex(components.size(), std::numeric_limits<int>::max());
    for (std::size_t c = 0; c < components.size(); ++c) {
        for (const int t : components[c]) {
            for (int v = 0; v < 3; ++v) min_vertex[c] = std::min(min_vertex[c], triangles[t][v]);
        }
    }
    std::vector<int> order(components.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (min_vertex[a] != min_vertex[b]) return min_vertex[a] < min_vertex[b];
        return components[a].front() < components[b].front();
    });
    std::vector<std::vector<int>> ordered;
    ordered.reserve(components.size());
    for (const int c : order) ordered.push_back(std::move(components[c]));
    return ordered;
}

void check_triangles(const std::vector<Vec3>& vertices,
                     const std::vector<Eigen::Vector3i>& triangles, int beam_id) {
    const int n = static_cast<int>(vertices.size());
    for (const auto& tri : triangles) {
        for (int v = 0; v < 3; ++v) {
            if (tri[v] < 0 || tri[v] >= n) {
                throw SemanticError("beam " + std::to_string(beam_id) +
                                    ": triangle references vertex " + std::to_string(tri[v]) +
                                    " outside pool of " + std::to_string(n));
            }
        }
        if (triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) <= 0.0) {
            throw SemanticError("beam " + std::to_string(beam_id) + ": zero-area triangle");
        }
    }
}

void check_closed(const std::vector<Eigen::Vector3i>& triangles, int beam_id) {
    std::map<Edge, int> directed;
    for (const auto& tri : triangles) {
        for (int e = 0; e < 3; ++e) {
            ++directed[{tri[e], tri[(e + 1) % 3]}];
        }
    }
    for (const auto& [edge, count] : directed) {
        const auto rev = directed.find({edge.second, edge.first});
        if (count != 1 || rev == directed.end() || rev->second != 1) {
            throw SemanticError("beam " + std::to_string(beam_id) +
                                " is not a closed orientable mesh (edge " +
                                std::to_string(edge.first) + "-" + std::to_string(edge.second) +
                                "); declare it open or fix the geometry");
        }
    }
}

}  // namespace

void fit_face_plane(MeshFace& face, const std::vector<Vec3>& vertices) {
    // Unique vertices of the face.
    std::set<int> used;
    for (const auto& tri : face.triangles) {
        used.insert(tri[0]);
        used.insert(tri[1]);
        used.insert(tri[2]);
    }

    face.area = 0.0;
    Vec3 area_centroid = Vec3::Zero();
    Vec3 mean_normal = Vec3::Zero();
    for (const auto& tri : face.triangles) {
        const Vec3 &a = vertices[tri[0]], &b = vertices[tri[1]], &c = vertices[tri[2]];
        const double area = triangle_area(a, b, c);
        face.area += area;
        area_centroid += area * (a + b + c) / 3.0;
        mean_normal += area * triangle_normal(a, b, c);
    }
    face.centroid = face.area > 0.0 ? Vec3(area_centroid / face.area) : Vec3::Zero();

    Vec3 mean = Vec3::Zero();
    for (const int v : used) mean += vertices[v];
    mean /= static_cast<double>(used.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const int v : used) {
        const Vec3 d = vertices[v] - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    Vec3 normal = solver.eigenvectors().col(0);
    // Sign from the triangle winding.
    if (normal.dot(mean_normal) < 0.0) normal = -normal;
    face.normal = normal.normalized();
    face.offset = face.normal.dot(face.centroid);

    face.plane_deviation = 0.0;
    for (const int v : used) {
        face.plane_deviation =
            std::max(face.plane_deviation, std::abs(face.normal.dot(vertices[v]) - face.offset));
    }
}

std::vector<MeshFace> partition_faces(const std::vector<Vec3>& vertices,
                                      const std::vector<Eigen::Vector3i>& triangles,
                                      double angle_tolerance_deg, double offset_tolerance) {
    if (triangles.empty()) return {};

    std::vector<Vec3> tri_normal(triangles.size());
    std::vector<double> tri_offset(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        tri_normal[t] = triangle_normal(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        tri_offset[t] = tri_normal[t].dot(vertices[tri[0]]);
    }

    const double min_cos = std::cos(angle_tolerance_deg * kDegToRad);
    auto coplanar = [&](std::size_t seed, std::size_t other) {
        return tri_normal[seed].dot(tri_normal[other]) >= min_cos &&
               std::abs(tri_offset[seed] - tri_offset[other]) <= offset_tolerance;
    };

    std::vector<MeshFace> faces;
    for (const auto& members : edge_connected_components(triangles, coplanar)) {
        MeshFace face;
        face.triangles.reserve(members.size());
        for (const int t : members) face.triangles.push_back(triangles[t]);
        fit_face_plane(face, vertices);
        faces.push_back(std::move(face));
    }
    return faces;
}

std::vector<Eigen::Vector3i> Beam::all_triangles() const {
    std::vector<Eigen::Vector3i> out;
    for (const auto& face : faces) {
        out.insert(out.end(), face.triangles.begin(), face.triangles.end());
    }
    return out;
}

double Beam::total_area() const {
    double area = 0.0;
    for (const auto& face : faces) area += face.area;
    return area;
}

const Joint* Beam::find_joint(int joint_id) const {
    for (const auto& joint : joints) {
        if (joint.id == joint_id) return &joint;
    }
    return nullptr;
}

const MeshFace* Beam::find_joint_face(int joint_id, int joint_face_id) const {
    for (const auto& face : faces) {
        if (face.joint_id == joint_id && face.joint_face_id == joint_face_id) return &face;
    }
    return nullptr;
}

double Beam::cross_section_diagonal() const {
    if (vertices.size() < 2) return 0.0;
    Vec3 mean = Vec3::Zero();
    for (const Vec3& v : vertices) mean += v;
    mean /= static_cast<double>(vertices.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& v : vertices) {
        const Vec3 d = v - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    Vec3 extents;
    for (int axis = 0; axis < 3; ++axis) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        const Vec3 dir = solver.eigenvectors().col(axis);
        for (const Vec3& v : vertices) {
            const double s = dir.dot(v);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        extents[axis] = hi - lo;
    }
    std::sort(extents.data(), extents.data() + 3);  // ascending
    return std::hypot(extents[0], extents[1]);
}

void Beam::validate() const {
    const auto triangles = all_triangles();
    check_triangles(vertices, triangles, id);
    if (!open) check_closed(triangles, id);

    std::set<int> joint_ids;
    for (const auto& joint : joints) {
        if (!joint_ids.insert(joint.id).second) {
            throw SemanticError("beam " + std::to_string(id) + ": duplicate joint id " +
                                std::to_string(joint.id));
        }
        if (joint.faces.empty()) {
            throw SemanticError("beam " + std::to_string(id) + ", joint " +
                                std::to_string(joint.id) + ": no faces");
        }
        std::set<int> face_ids;
        std::vector<Eigen::Vector3i> joint_triangles;
        for (const int f : joint.faces) {
            if (f < 0 || f >= static_cast<int>(faces.size()) || faces[f].joint_id != joint.id) {
                throw SemanticError("beam " + std::to_string(id) + ", joint " +
                                    std::to_string(joint.id) + ": dangling face reference");
            }
            if (!face_ids.insert(faces[f].joint_face_id).second) {
                throw SemanticError("beam " + std::to_string(id) + ", joint " +
                                    std::to_string(joint.id) + ": duplicate face id " +
                                    std::to_string(faces[f].joint_face_id));
            }
            joint_triangles.insert(joint_triangles.end(), faces[f].triangles.begin(),
                                   faces[f].triangles.end());
        }
        // The joint's faces must form one edge-connected surface patch.
        const auto components =
            edge_connected_components(joint_triangles, [](std::size_t, std::size_t) { return true; });
        if (components.size() != 1) {
            throw SemanticError("beam " + std::to_string(id) + ", joint " +
                                std::to_string(joint.id) + ": faces are not edge-connected");
        }
    }
}

const Beam* Assembly::find_beam(int beam_id) const {
    for (const auto& beam : beams) {
        if (beam.id == beam_id) return &beam;
    }
    return nullptr;
}

void Assembly::validate() const {
    std::set<int> ids;
    for (const auto& beam : beams) {
        if (beam.id < 0) throw SemanticError("negative beam id " + std::to_string(beam.id));
        if (!ids.insert(beam.id).second) {
            throw SemanticError("duplicate beam id " + std::to_string(beam.id));
        }
        beam.validate();
    }
}

Beam build_beam(int id, std::vector<Vec3> vertices, std::vector<Eigen::Vector3i> plain_triangles,
                std::vector<JointFaceInput> joint_faces, bool open) {
    Beam beam;
    beam.id = id;
    beam.vertices = std::move(vertices);
    beam.open = open;

    std::sort(joint_faces.begin(), joint_faces.end(), [](const auto& a, const auto& b) {
        return std::tie(a.joint_id, a.face_id) < std::tie(b.joint_id, b.face_id);
    });

    std::map<int, std::vector<int>> joint_to_faces;
    for (auto& input : joint_faces) {
        if (input.triangles.empty()) {
            throw SemanticError("beam " + std::to_string(id) + ", joint " +
                                std::to_string(input.joint_id) + ", face " +
                                std::to_string(input.face_id) + ": no triangles");
        }
        MeshFace face;
        face.id = static_cast<int>(beam.faces.size());
        face.joint_id = input.joint_id;
        face.joint_face_id = input.face_id;
        face.triangles = std::move(input.triangles);
        fit_face_plane(face, beam.vertices);
        joint_to_faces[input.joint_id].push_back(face.id);
        beam.faces.push_back(std::move(face));
    }
    for (auto& [joint_id, face_list] : joint_to_faces) {
        beam.joints.push_back({joint_id, std::move(face_list)});
    }

    for (auto face : partition_faces(beam.vertices, plain_triangles)) {
        face.id = static_cast<int>(beam.faces.size());
        beam.faces.push_back(std::move(face));
    }

    beam.validate();
    return beam;
}

Beam detect_joints(const Beam& beam, double dihedral_threshold_deg) {
    if (!beam.joints.empty()) {
        throw NotApplicable("beam " + std::to_string(beam.id) + " already has explicit joints");
    }
    const double min_cos = std::cos(dihedral_threshold_deg * kDegToRad);

    // Dominant directions by area-weighted, sign-insensitive normal voting.
    struct Cluster {
        Vec3 direction = Vec3::Zero();  // area-weighted accumulator
        double area = 0.0;
    };
    std::vector<int> by_area(beam.faces.size());
    std::iota(by_area.begin(), by_area.end(), 0);
    std::sort(by_area.begin(), by_area.end(), [&](int a, int b) {
        if (beam.faces[a].area != beam.faces[b].area) return beam.faces[a].area > beam.faces[b].area;
        return a < b;
    });
    std::vector<Cluster> clusters;
    for (const int f : by_area) {
        const MeshFace& face = beam.faces[f];
        bool placed = false;
        for (Cluster& cluster : clusters) {
            const Vec3 dir = cluster.direction.normalized();
            const double d = dir.dot(face.normal);
            if (std::abs(d) >= min_cos) {
                cluster.direction += face.area * (d >= 0.0 ? face.normal : Vec3(-face.normal));
                cluster.area += face.area;
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({face.area * face.normal, face.area});
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.area > b.area; });

    Eigen::Matrix3d axes;
    axes.col(0) = clusters.front().direction.normalized();
    int second = -1;
    for (std::size_t c = 1; c < clusters.size(); ++c) {
        if (std::abs(clusters[c].direction.normalized().dot(axes.col(0))) < 0.5) {
            second = static_cast<int>(c);
            break;
        }
    }
    if (second < 0) {
        // Fewer than two dominant directions (no box-like sides); fall back to
        // an arbitrary orthogonal frame.
        axes.col(1) = axes.col(0).unitOrthogonal();
    } else {
        Vec3 a2 = clusters[second].direction.normalized();
        a2 -= a2.dot(axes.col(0)) * axes.col(0);
        axes.col(1) = a2.normalized();
    }
    axes.col(2) = axes.col(0).cross(axes.col(1));

    // Side plane offsets and the distance tolerance from the box diagonal.
    Eigen::Vector3d lo, hi;
    for (int axis = 0; axis < 3; ++axis) {
        lo[axis] = std::numeric_limits<double>::infinity();
        hi[axis] = -lo[axis];
        for (const Vec3& v : beam.vertices) {
            const double s = axes.col(axis).dot(v);
            lo[axis] = std::min(lo[axis], s);
            hi[axis] = std::max(hi[axis], s);
        }
    }
    const double distance_tolerance = 1e-3 * (hi - lo).norm();

    auto on_box_side = [&](const MeshFace& face) {
        for (int axis = 0; axis < 3; ++axis) {
            const double d = axes.col(axis).dot(face.normal);
            if (std::abs(d) < min_cos) continue;
            const double offset = axes.col(axis).dot(face.centroid);
            if (std::abs(offset - lo[axis]) <= distance_tolerance ||
                std::abs(offset - hi[axis]) <= distance_tolerance) {
                return true;
            }
        }
        return false;
    };

    // Joint faces = everything off the box sides; group them into joints by
    // edge connectivity.
    std::vector<int> joint_face_indices;
    std::vector<Eigen::Vector3i> joint_triangles;
    std::vector<int> triangle_to_face;
    for (std::size_t f = 0; f < beam.faces.size(); ++f) {
        if (on_box_side(beam.faces[f])) continue;
        joint_face_indices.push_back(static_cast<int>(f));
        for (const auto& tri : beam.faces[f].triangles) {
            joint_triangles.push_back(tri);
            triangle_to_face.push_back(static_cast<int>(f));
        }
    }

    Beam out = beam;
    out.joints.clear();
    if (joint_face_indices.empty()) return out;

    const auto components =
        edge_connected_components(joint_triangles, [](std::size_t, std::size_t) { return true; });
    int joint_id = 0;
    for (const auto& members : components) {
        std::vector<int> member_faces;
        for (const int t : members) member_faces.push_back(triangle_to_face[t]);
        std::sort(member_faces.begin(), member_faces.end());
        member_faces.erase(std::unique(member_faces.begin(), member_faces.end()),
                           member_faces.end());
        Joint joint;
        joint.id = joint_id;
        int face_id = 0;
        for (const int f : member_faces) {
            out.faces[f].joint_id = joint_id;
            out.faces[f].joint_face_id = face_id++;
            joint.faces.push_back(f);
        }
        out.joints.push_back(std::move(joint));
        ++joint_id;
    }
    out.validate();
    return out;
}

}  // namespace timberdiff
