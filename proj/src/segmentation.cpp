#include "timberdiff/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

#include "timberdiff/errors.hpp"
#include "timberdiff/parallel.hpp"
#include "timberdiff/spatial_index.hpp"

namespace timberdiff {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

}  // namespace

SegmentationResult segment_by_normals(const PointCloud& cloud, double angle_threshold_deg,
                                      int k_neighbors, int min_segment_size) {
    if (!cloud.has_normals()) throw MissingNormals("segmentation requires normals");
    if (k_neighbors < 2) throw InvalidParameter("k_neighbors must be >= 2");

    const std::size_t n = cloud.size();
    SegmentationResult result;
    if (n == 0) return result;

    const SpatialIndex index(cloud);
    const double min_cos = std::cos(angle_threshold_deg * kDegToRad);

    // Precompute neighbor lists once; k-NN output order is deterministic.
    std::vector<std::vector<int>> adjacency(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            for (const auto& nb : index.knn(cloud.points[i], k_neighbors)) {
                if (nb.index != static_cast<int>(i)) adjacency[i].push_back(nb.index);
            }
        }
    });

    std::vector<int> label(n, -1);
    std::vector<std::vector<int>> regions;

    for (std::size_t seed = 0; seed < n; ++seed) {
        if (label[seed] >= 0 || cloud.normals[seed].isZero()) continue;
        const Vec3 seed_normal = cloud.normals[seed];
        const int region_id = static_cast<int>(regions.size());
        std::vector<int> members;
        std::deque<int> frontier{static_cast<int>(seed)};
        label[seed] = region_id;
        while (!frontier.empty()) {
            const int p = frontier.front();
            frontier.pop_front();
            members.push_back(p);
            for (const int q : adjacency[p]) {
                if (label[q] >= 0 || cloud.normals[q].isZero()) continue;
                if (cloud.normals[q].dot(seed_normal) < min_cos) continue;
                label[q] = region_id;
                frontier.push_back(q);
            }
        }
        regions.push_back(std::move(members));
    }

    // Under-sized regions fall into the residue.
    for (auto& members : regions) {
        if (static_cast<int>(members.size()) < min_segment_size) {
            for (const int p : members) label[p] = -1;
            members.clear();
        }
    }

    for (auto& members : regions) {
        if (members.empty()) continue;
        std::sort(members.begin(), members.end());
        Segment segment;
        segment.point_indices = std::move(members);
        Vec3 normal_sum = Vec3::Zero();
        Vec3 centroid = Vec3::Zero();
        for (const int p : segment.point_indices) {
            normal_sum += cloud.normals[p];
            centroid += cloud.points[p];
        }
        segment.centroid = centroid / static_cast<double>(segment.size());
        const double len = normal_sum.norm();
        segment.mean_normal = len > 0.0 ? Vec3(normal_sum / len) : Vec3::Zero();
        result.segments.push_back(std::move(segment));
    }

    std::sort(result.segments.begin(), result.segments.end(), [](const Segment& a, const Segment& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.point_indices.front() < b.point_indices.front();
    });

    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] < 0) result.residue.push_back(static_cast<int>(i));
    }
    return result;
}

std::string FaceRef::label() const {
    std::string s = "beam" + std::to_string(beam);
    if (joint >= 0) s += "/joint" + std::to_string(joint);
    s += "/face" + std::to_string(face);
    return s;
}

TargetFace make_target_face(const FaceRef& ref, PointCloud sampled) {
    TargetFace face;
    face.ref = ref;
    Vec3 centroid = Vec3::Zero();
    Vec3 normal_sum = Vec3::Zero();
    for (const Vec3& p : sampled.points) centroid += p;
    for (const Vec3& n : sampled.normals) normal_sum += n;
    if (!sampled.empty()) face.centroid = centroid / static_cast<double>(sampled.size());
    const double len = normal_sum.norm();
    if (len > 0.0) face.normal = normal_sum / len;
    face.cloud = std::move(sampled);
    return face;
}

std::vector<FaceAssociation> associate_segments(const std::vector<Segment>& segments,
                                                const std::vector<TargetFace>& faces,
                                                double max_centroid_distance,
                                                double max_normal_angle_deg, double lambda) {
    if (!(max_centroid_distance > 0.0)) {
        throw InvalidParameter("max_centroid_distance must be > 0");
    }
    const double min_cos = std::cos(max_normal_angle_deg * kDegToRad);

    std::vector<FaceAssociation> associations;
    for (const TargetFace& face : faces) {
        FaceAssociation best;
        best.face = face.ref;
        best.score = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < segments.size(); ++s) {
            const Segment& segment = segments[s];
            const double cosine = std::abs(segment.mean_normal.dot(face.normal));
            if (cosine < min_cos) continue;  // sign-insensitive angle gate
            const double distance = (segment.centroid - face.centroid).norm();
            const double score = distance + lambda * (1.0 - cosine) * max_centroid_distance;
            if (score < best.score) {
                best.score = score;
                best.segment = static_cast<int>(s);
            }
        }
        if (best.segment >= 0 && best.score <= max_centroid_distance) {
            associations.push_back(best);
        }
    }
    return associations;
}

BeamClusters cluster_beams(const std::vector<FaceAssociation>& associations,
                           const std::vector<Segment>& segments, const Assembly& assembly,
                           const PointCloud& scan) {
    (void)scan;
    BeamClusters clusters;
    for (const Beam& beam : assembly.beams) clusters.indices[beam.id];  // every beam present

    // A segment may win several faces; if those faces span beams, it goes to
    // the beam of its best-scoring association so beam clouds stay disjoint.
    std::map<int, std::pair<int, double>> segment_owner;  // segment -> (beam, best score)
    std::map<int, std::vector<int>> segment_beams;
    for (const FaceAssociation& assoc : associations) {
        auto [it, inserted] = segment_owner.try_emplace(assoc.segment,
                                                        std::make_pair(assoc.face.beam, assoc.score));
        if (!inserted) {
            if (assoc.score < it->second.second ||
                (assoc.score == it->second.second && assoc.face.beam < it->second.first)) {
                it->second = {assoc.face.beam, assoc.score};
            }
        }
        auto& beams = segment_beams[assoc.segment];
        if (std::find(beams.begin(), beams.end(), assoc.face.beam) == beams.end()) {
            beams.push_back(assoc.face.beam);
        }
    }

    for (const auto& [segment, beams] : segment_beams) {
        if (beams.size() > 1) clusters.multiply_used_segments.push_back(segment);
    }

    for (const auto& [segment, owner] : segment_owner) {
        auto& indices = clusters.indices[owner.first];
        const auto& members = segments[segment].point_indices;
        indices.insert(indices.end(), members.begin(), members.end());
    }
    for (auto& [beam, indices] : clusters.indices) {
        std::sort(indices.begin(), indices.end());
    }
    return clusters;
}

std::map<int, PointCloud> cluster_beam_clouds(const BeamClusters& clusters,
                                              const PointCloud& scan) {
    std::map<int, PointCloud> clouds;
    for (const auto& [beam, indices] : clusters.indices) {
        clouds[beam] = scan.select(indices);
    }
    return clouds;
}

namespace {

/// True when the orthogonal projection of q (already on the face plane) lies
/// inside the triangle, with a small barycentric edge tolerance.
bool inside_triangle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
    constexpr double kEdgeTolerance = 1e-9;
    const Vec3 v0 = b - a, v1 = c - a, v2 = q - a;
    const double d00 = v0.dot(v0);
    const double d01 = v0.dot(v1);
    const double d11 = v1.dot(v1);
    const double d20 = v2.dot(v0);
    const double d21 = v2.dot(v1);
    const double denom = d00 * d11 - d01 * d01;
    if (denom <= 0.0) return false;
    const double v = (d11 * d20 - d01 * d21) / denom;
    const double w = (d00 * d21 - d01 * d20) / denom;
    return v >= -kEdgeTolerance && w >= -kEdgeTolerance && v + w <= 1.0 + kEdgeTolerance;
}

}  // namespace

std::map<JointKey, JointExtraction> extract_joint_clouds(
    const std::vector<FaceAssociation>& associations, const std::vector<Segment>& segments,
    const Assembly& assembly, const PointCloud& scan, double projection_tolerance) {
    if (!(projection_tolerance > 0.0)) {
        throw InvalidParameter("projection_tolerance must be > 0");
    }

    std::map<JointKey, JointExtraction> extractions;
    // Every tagged joint is reported, even when nothing was extracted for it.
    for (const Beam& beam : assembly.beams) {
        for (const Joint& joint : beam.joints) {
            extractions[{beam.id, joint.id}];
        }
    }

    for (const FaceAssociation& assoc : associations) {
        if (assoc.face.joint < 0) continue;  // only joint faces participate
        const Beam* beam = assembly.find_beam(assoc.face.beam);
        if (beam == nullptr) continue;
        const MeshFace* face = beam->find_joint_face(assoc.face.joint, assoc.face.face);
        if (face == nullptr) continue;

        JointExtraction& extraction = extractions[{assoc.face.beam, assoc.face.joint}];
        auto& kept = extraction.face_indices[assoc.face.face];

        const std::vector<int>& members = segments[assoc.segment].point_indices;
        std::vector<char> keep(members.size(), 0);
        parallel_for(members.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                const Vec3& p = scan.points[members[k]];
                const double signed_distance = face->normal.dot(p) - face->offset;
                if (std::abs(signed_distance) > projection_tolerance) continue;
                const Vec3 projected = p - signed_distance * face->normal;
                for (const auto& tri : face->triangles) {
                    if (inside_triangle(projected, beam->vertices[tri[0]], beam->vertices[tri[1]],
                                        beam->vertices[tri[2]])) {
                        keep[k] = 1;
                        break;
                    }
                }
            }
        });
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (keep[k]) kept.push_back(members[k]);
        }
        std::sort(kept.begin(), kept.end());
        kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    }

    for (auto& [key, extraction] : extractions) {
        std::vector<int> all;
        for (const auto& [face, indices] : extraction.face_indices) {
            all.insert(all.end(), indices.begin(), indices.end());
        }
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        extraction.joint_indices = std::move(all);
    }
    return extractions;
}

std::string segments_to_json(const SegmentationResult& result) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t i = 0; i < result.segments.size(); ++i) {
        const Segment& s = result.segments[i];
        nlohmann::json js;
        js["segment"] = i;
        js["size"] = s.size();
        js["centroid"] = {s.centroid.x(), s.centroid.y(), s.centroid.z()};
        js["mean_normal"] = {s.mean_normal.x(), s.mean_normal.y(), s.mean_normal.z()};
        js["point_indices"] = s.point_indices;
        j.push_back(std::move(js));
    }
    return j.dump(1);
}

}  // namespace timberdiff
