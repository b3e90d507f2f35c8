#include "timberdiff/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

#include "timberdiff/errors.hpp"
#include "timberdiff/parallel.hpp"

namespace timberdiff {

std::vector<double> cloud_to_cloud_distances(const PointCloud& source,
                                             const SpatialIndex& target_index) {
    if (target_index.size() == 0) throw EmptyTarget("target cloud is empty");
    std::vector<double> distances(source.size());
    parallel_for(source.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            distances[i] = target_index.nearest(source.points[i]).distance;
        }
    });
    return distances;
}

std::vector<double> cloud_to_cloud_distances(const PointCloud& source, const PointCloud& target) {
    if (target.empty()) throw EmptyTarget("target cloud is empty");
    const SpatialIndex index(target);
    return cloud_to_cloud_distances(source, index);
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Closest point on a triangle by barycentric region classification
    // (Ericson, Real-Time Collision Detection, 5.1.5).
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;

    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();  // vertex a

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();  // vertex b

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return (p - (a + v * ab)).norm();  // edge ab
    }

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();  // vertex c

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return (p - (a + w * ac)).norm();  // edge ac
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();  // edge bc
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return (p - (a + v * ab + w * ac)).norm();  // interior
}

MeshDistanceIndex::MeshDistanceIndex(const std::vector<Vec3>& vertices,
                                     const std::vector<Eigen::Vector3i>& triangles) {
    a_.reserve(triangles.size());
    b_.reserve(triangles.size());
    c_.reserve(triangles.size());
    centroids_.reserve(triangles.size());
    for (const auto& tri : triangles) {
        a_.push_back(vertices[tri[0]]);
        b_.push_back(vertices[tri[1]]);
        c_.push_back(vertices[tri[2]]);
        centroids_.push_back((a_.back() + b_.back() + c_.back()) / 3.0);
    }
    triangles_.resize(a_.size());
    std::iota(triangles_.begin(), triangles_.end(), 0);
    if (!triangles_.empty()) root_ = build(0, static_cast<int>(triangles_.size()));
}

MeshDistanceIndex::MeshDistanceIndex(const std::vector<Vec3>& vertices,
                                     const std::vector<MeshFace>& faces)
    : MeshDistanceIndex(vertices, [&] {
          std::vector<Eigen::Vector3i> triangles;
          for (const auto& face : faces) {
              triangles.insert(triangles.end(), face.triangles.begin(), face.triangles.end());
          }
          return triangles;
      }()) {}

int MeshDistanceIndex::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = begin; i < end; ++i) {
        const int t = triangles_[i];
        for (const Vec3* corner : {&a_[t], &b_[t], &c_[t]}) {
            lo = lo.cwiseMin(*corner);
            hi = hi.cwiseMax(*corner);
        }
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(triangles_.begin() + begin, triangles_.begin() + mid,
                     triangles_.begin() + end, [&](int x, int y) {
                         const double cx = centroids_[x][axis], cy = centroids_[y][axis];
                         return cx < cy || (cx == cy && x < y);
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void MeshDistanceIndex::search(int node, const Vec3& p, double& best) const {
    const Node& n = nodes_[node];
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            const int t = triangles_[i];
            best = std::min(best, point_triangle_distance(p, a_[t], b_[t], c_[t]));
        }
        return;
    }
    auto box_distance = [&](int child) {
        const Node& cn = nodes_[child];
        const Vec3 d = (cn.lo - p).cwiseMax(p - cn.hi).cwiseMax(0.0);
        return d.norm();
    };
    const double dl = box_distance(n.left);
    const double dr = box_distance(n.right);
    const int first = dl <= dr ? n.left : n.right;
    const int second = dl <= dr ? n.right : n.left;
    const double dfirst = std::min(dl, dr);
    const double dsecond = std::max(dl, dr);
    if (dfirst < best) search(first, p, best);
    if (dsecond < best) search(second, p, best);
}

double MeshDistanceIndex::distance(const Vec3& point) const {
    if (root_ < 0) throw EmptyTarget("mesh distance index is empty");
    double best = std::numeric_limits<double>::infinity();
    search(root_, point, best);
    return best;
}

std::vector<double> cloud_to_mesh_distances(const PointCloud& source,
                                            const MeshDistanceIndex& index) {
    if (index.empty()) throw EmptyTarget("target mesh is empty");
    std::vector<double> distances(source.size());
    parallel_for(source.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            distances[i] = index.distance(source.points[i]);
        }
    });
    return distances;
}

std::vector<double> cloud_to_mesh_distances(const PointCloud& source,
                                            const std::vector<Vec3>& vertices,
                                            const std::vector<MeshFace>& faces) {
    const MeshDistanceIndex index(vertices, faces);
    return cloud_to_mesh_distances(source, index);
}

DistanceStats summarize(const std::vector<double>& distances, std::optional<double> threshold) {
    if (distances.empty()) throw EmptyInput("cannot summarize an empty distance list");

    DistanceStats stats;
    stats.count = distances.size();
    stats.min = std::numeric_limits<double>::infinity();
    stats.max = -stats.min;
    double sum = 0.0, sum_sq = 0.0;
    for (const double d : distances) {
        sum += d;
        sum_sq += d * d;
        stats.min = std::min(stats.min, d);
        stats.max = std::max(stats.max, d);
    }
    const auto n = static_cast<double>(stats.count);
    stats.mean = sum / n;
    stats.mse = sum_sq / n;

    double var = 0.0;
    for (const double d : distances) var += (d - stats.mean) * (d - stats.mean);
    stats.stddev = std::sqrt(var / n);

    // mse >= mean^2 must hold for any real distance list.
    assert(stats.mse + 1e-12 * std::max(1.0, stats.mse) >= stats.mean * stats.mean);

    if (threshold) {
        stats.threshold = threshold;
        const double t = *threshold;
        for (const double d : distances) {
            if (d <= t) ++stats.n_pass;
            else if (d <= 2.0 * t) ++stats.n_warn;
            else ++stats.n_fail;
        }
        stats.pass_fraction = static_cast<double>(stats.n_pass) / n;
    }
    return stats;
}

std::string EntityRef::label() const {
    switch (level) {
        case Level::Assembly: return "assembly";
        case Level::Beam: return "beam" + std::to_string(beam);
        case Level::Joint: return "beam" + std::to_string(beam) + "/joint" + std::to_string(joint);
        case Level::Face:
            if (joint >= 0) {
                return "beam" + std::to_string(beam) + "/joint" + std::to_string(joint) + "/face" +
                       std::to_string(face);
            }
            return "beam" + std::to_string(beam) + "/face" + std::to_string(face);
    }
    return "?";
}

const char* EntityRef::level_name(Level level) {
    switch (level) {
        case Level::Assembly: return "assembly";
        case Level::Beam: return "beam";
        case Level::Joint: return "joint";
        case Level::Face: return "face";
    }
    return "?";
}

ErrorReport make_report(const EntityRef& entity, std::vector<int> scan_indices,
                        std::vector<double> distances, std::optional<double> threshold) {
    ErrorReport report;
    report.entity = entity;
    report.stats = summarize(distances, threshold);
    report.scan_indices = std::move(scan_indices);
    report.per_point_distances = std::move(distances);
    return report;
}

ColorMap ColorMap::adaptive() { return {}; }

ColorMap ColorMap::fixed(double lo, double hi) {
    ColorMap map;
    map.mode = Mode::Fixed;
    map.fixed_min = lo;
    map.fixed_max = hi;
    return map;
}

Vec3 ColorMap::color_at(double t) const {
    if (stops.empty()) return Vec3::Zero();
    if (t <= stops.front().first) return stops.front().second;
    if (t >= stops.back().first) return stops.back().second;
    for (std::size_t i = 1; i < stops.size(); ++i) {
        if (t <= stops[i].first) {
            const double span = stops[i].first - stops[i - 1].first;
            const double s = span > 0.0 ? (t - stops[i - 1].first) / span : 0.0;
            return (1.0 - s) * stops[i - 1].second + s * stops[i].second;
        }
    }
    return stops.back().second;
}

ColorizeResult colorize(const PointCloud& cloud, const std::vector<double>& distances,
                        const ColorMap& map) {
    if (distances.size() != cloud.size()) {
        throw LengthMismatch("distance list is not parallel to the cloud");
    }

    ColorizeResult result;
    result.cloud = cloud;
    result.cloud.colors.assign(cloud.size(), Vec3::Zero());

    double lo, hi;
    if (map.mode == ColorMap::Mode::Fixed) {
        lo = map.fixed_min;
        hi = map.fixed_max;
    } else {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (const double d : distances) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (distances.empty()) lo = hi = 0.0;
    }
    result.used_min = lo;
    result.used_max = hi;
    const double span = hi - lo;

    for (std::size_t i = 0; i < distances.size(); ++i) {
        double t;
        if (span <= 0.0) {
            t = 0.0;  // degenerate range: everything at the low-end color
        } else {
            t = (distances[i] - lo) / span;
            if (t < 0.0 || t > 1.0) {
                ++result.clamped;
                t = std::clamp(t, 0.0, 1.0);
            }
        }
        result.cloud.colors[i] = map.color_at(t);
    }
    return result;
}

}  // namespace timberdiff
