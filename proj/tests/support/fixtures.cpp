#include "support/fixtures.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "timberdiff/mesh_sampling.hpp"

namespace tdtest {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

bool point_in_triangle(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                       const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    const double d1 = cross2(b - a, p - a);
    const double d2 = cross2(c - b, p - b);
    const double d3 = cross2(a - c, p - c);
    constexpr double eps = 1e-12;
    return d1 > eps && d2 > eps && d3 > eps;
}

}  // namespace

std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Eigen::Vector2d>& polygon) {
    const int n = static_cast<int>(polygon.size());
    if (n < 3) throw std::invalid_argument("polygon needs at least 3 vertices");

    std::vector<int> remaining(n);
    for (int i = 0; i < n; ++i) remaining[i] = i;
    std::vector<std::array<int, 3>> triangles;

    while (remaining.size() > 3) {
        bool clipped = false;
        for (std::size_t k = 0; k < remaining.size(); ++k) {
            const int ia = remaining[(k + remaining.size() - 1) % remaining.size()];
            const int ib = remaining[k];
            const int ic = remaining[(k + 1) % remaining.size()];
            const Eigen::Vector2d &a = polygon[ia], &b = polygon[ib], &c = polygon[ic];
            if (cross2(b - a, c - b) <= 1e-15) continue;  // reflex or degenerate corner
            bool blocked = false;
            for (const int other : remaining) {
                if (other == ia || other == ib || other == ic) continue;
                if (point_in_triangle(polygon[other], a, b, c)) {
                    blocked = true;
                    break;
                }
            }
            if (blocked) continue;
            triangles.push_back({ia, ib, ic});
            remaining.erase(remaining.begin() + static_cast<long>(k));
            clipped = true;
            break;
        }
        if (!clipped) throw std::runtime_error("ear clipping failed (polygon not simple CCW?)");
    }
    triangles.push_back({remaining[0], remaining[1], remaining[2]});
    return triangles;
}

Beam extrude_beam(int id, const Profile& profile, double width, const std::vector<EdgeTag>& tags) {
    const int n = static_cast<int>(profile.points.size());
    if (tags.size() != profile.points.size()) {
        throw std::invalid_argument("one tag per profile edge required");
    }

    std::vector<Vec3> vertices;
    vertices.reserve(2 * n);
    for (const auto& p : profile.points) vertices.emplace_back(p.x(), p.y(), 0.0);    // back ring
    for (const auto& p : profile.points) vertices.emplace_back(p.x(), p.y(), width);  // front ring

    std::vector<Eigen::Vector3i> plain;
    std::map<std::pair<int, int>, std::vector<Eigen::Vector3i>> joint_faces;

    // Side quads, outward-wound.
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        const int a = i, b = j, c = n + j, d = n + i;
        const Eigen::Vector3i t1(a, b, c), t2(a, c, d);
        if (tags[i].joint >= 0) {
            auto& list = joint_faces[{tags[i].joint, tags[i].face}];
            list.push_back(t1);
            list.push_back(t2);
        } else {
            plain.push_back(t1);
            plain.push_back(t2);
        }
    }

    // Profile caps: back face (z=0) wound for -z, front (z=width) for +z.
    for (const auto& tri : triangulate_polygon(profile.points)) {
        plain.emplace_back(tri[0], tri[2], tri[1]);
        plain.emplace_back(n + tri[0], n + tri[1], n + tri[2]);
    }

    std::vector<timberdiff::JointFaceInput> inputs;
    for (auto& [key, triangles] : joint_faces) {
        inputs.push_back({key.first, key.second, std::move(triangles)});
    }
    return timberdiff::build_beam(id, std::move(vertices), std::move(plain), std::move(inputs),
                                  /*open=*/false);
}

Beam make_box_beam(int id, double length, double height, double width,
                   const std::vector<Notch>& notches, double end_angle_deg) {
    std::vector<Notch> sorted = notches;
    std::sort(sorted.begin(), sorted.end(), [](const Notch& a, const Notch& b) { return a.x0 < b.x0; });

    Profile profile;
    std::vector<EdgeTag> tags;
    auto push = [&](double x, double y, EdgeTag tag = {}) {
        profile.points.emplace_back(x, y);
        tags.push_back(tag);  // tag of the edge leaving this vertex
    };

    int joint_id = 0;
    push(0.0, 0.0);
    if (end_angle_deg > 0.0) {
        push(length, 0.0, {joint_id, 0});  // slanted butt cut, one joint face
        push(length - height * std::tan(end_angle_deg * M_PI / 180.0), height);
        ++joint_id;
    } else {
        push(length, 0.0);
        push(length, height);
    }
    // Top edge, walked right to left; each notch adds wall/floor/wall.
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        const double x1 = it->x0 + it->length;
        push(x1, height, {joint_id, 0});
        push(x1, height - it->depth, {joint_id, 1});
        push(it->x0, height - it->depth, {joint_id, 2});
        push(it->x0, height);
        ++joint_id;
    }
    return extrude_beam(id, profile, width, tags);
}

Beam make_end_lap_beam(int id, double length, double height, double width, double lap_length,
                       double lap_depth) {
    Profile profile;
    std::vector<EdgeTag> tags;
    auto push = [&](double x, double y, EdgeTag tag = {}) {
        profile.points.emplace_back(x, y);
        tags.push_back(tag);
    };
    push(0.0, 0.0);
    push(length, 0.0);
    push(length, height - lap_depth, {0, 0});              // cheek
    push(length - lap_length, height - lap_depth, {0, 1});  // shoulder
    push(length - lap_length, height);
    return extrude_beam(id, profile, width, tags);
}

Beam untagged(const Beam& beam) {
    std::vector<Eigen::Vector3i> all = beam.all_triangles();
    return timberdiff::build_beam(beam.id, beam.vertices, std::move(all), {}, beam.open);
}

Beam transform_beam(const Beam& beam, const RigidTransform& pose) {
    Beam out = beam;
    for (Vec3& v : out.vertices) v = pose.apply(v);
    for (timberdiff::MeshFace& face : out.faces) {
        timberdiff::fit_face_plane(face, out.vertices);
    }
    return out;
}

Assembly make_assembly(int beam_count, std::uint64_t seed) {
    Rng rng(seed);
    Assembly assembly;
    assembly.name = "synthetic-" + std::to_string(beam_count);
    for (int i = 0; i < beam_count; ++i) {
        const double length = 0.8 + 0.05 * static_cast<double>(i % 5);
        Beam beam = make_box_beam(i, length, 0.10, 0.08,
                                  {{0.25 + 0.03 * (i % 3), 0.08, 0.03}});

        RigidTransform pose;
        const double yaw = (i % 2 == 0) ? 0.0 : M_PI / 2.0;
        const double tilt = 0.1 * rng.uniform(-1.0, 1.0);
        pose.rotation = (Eigen::AngleAxisd(yaw + 0.05 * rng.uniform(-1.0, 1.0), Vec3::UnitZ()) *
                         Eigen::AngleAxisd(tilt, Vec3::UnitY()))
                            .toRotationMatrix();
        // Spread on a grid with headroom so beams never intersect.
        pose.translation = Vec3(1.3 * static_cast<double>(i % 4), 1.3 * static_cast<double>(i / 4),
                                0.25 * static_cast<double>(i % 3));
        assembly.beams.push_back(transform_beam(beam, pose));
    }
    assembly.validate();
    return assembly;
}

Assembly make_log_frame() {
    Assembly assembly;
    assembly.name = "log-frame";
    const double length = 1.2, h = 0.1, w = 0.1;
    const std::vector<Notch> notches = {{0.15, 0.1, 0.05}, {0.95, 0.1, 0.05}};
    for (int i = 0; i < 4; ++i) {
        Beam beam = make_box_beam(i, length, h, w, notches);
        RigidTransform pose;
        if (i >= 2) {
            pose.rotation = Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitZ()).toRotationMatrix();
        }
        switch (i) {
            case 0: pose.translation = Vec3(0.0, 0.0, 0.0); break;
            case 1: pose.translation = Vec3(0.0, 1.0, 0.0); break;
            case 2: pose.translation = Vec3(0.2, 0.0, 0.12); break;
            case 3: pose.translation = Vec3(1.2, 0.0, 0.12); break;
        }
        assembly.beams.push_back(transform_beam(beam, pose));
    }
    assembly.validate();
    return assembly;
}

LabeledScan sample_assembly_labeled(const Assembly& assembly, double density, std::uint64_t seed) {
    Rng root(seed);
    LabeledScan scan;
    std::vector<PointCloud> parts;
    for (const Beam& beam : assembly.beams) {
        for (const timberdiff::MeshFace& face : beam.faces) {
            const std::uint64_t face_seed =
                root.split(static_cast<std::uint64_t>(beam.id)).split(
                    static_cast<std::uint64_t>(face.id)).next();
            PointCloud sampled = timberdiff::sample_face(beam.vertices, face, density, face_seed);
            scan.beam_label.insert(scan.beam_label.end(), sampled.size(), beam.id);
            scan.face_label.insert(scan.face_label.end(), sampled.size(), face.id);
            parts.push_back(std::move(sampled));
        }
    }
    scan.cloud = timberdiff::concatenate(parts);
    return scan;
}

PointCloud add_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud out = cloud;
    for (Vec3& p : out.points) {
        p += sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    return out;
}

Vec3 random_unit(Rng& rng) {
    for (;;) {
        const Vec3 v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        const double len = v.norm();
        if (len > 1e-3 && len <= 1.0) return v / len;
    }
}

RigidTransform random_rigid(Rng& rng, double max_angle_rad, double max_translation) {
    RigidTransform t;
    const Vec3 axis = random_unit(rng);
    const double angle = rng.uniform(0.0, max_angle_rad);
    t.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    t.translation = Vec3(rng.uniform(-max_translation, max_translation),
                         rng.uniform(-max_translation, max_translation),
                         rng.uniform(-max_translation, max_translation));
    return t;
}

}  // namespace tdtest
