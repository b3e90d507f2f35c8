#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "timberdiff/assembly.hpp"
#include "timberdiff/point_cloud.hpp"
#include "timberdiff/spatial_index.hpp"

namespace timberdiff {

/// Per-source-point Euclidean distance to the nearest target point (exact).
std::vector<double> cloud_to_cloud_distances(const PointCloud& source, const PointCloud& target);
std::vector<double> cloud_to_cloud_distances(const PointCloud& source,
                                             const SpatialIndex& target_index);

/// Exact unsigned point-to-triangle-mesh distance, accelerated by an AABB
/// tree. Exactness is preserved: the tree only prunes by lower bounds.
class MeshDistanceIndex {
public:
    MeshDistanceIndex(const std::vector<Vec3>& vertices,
                      const std::vector<Eigen::Vector3i>& triangles);
    MeshDistanceIndex(const std::vector<Vec3>& vertices, const std::vector<MeshFace>& faces);

    bool empty() const { return triangles_.empty(); }
    double distance(const Vec3& point) const;

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;  // leaf when left < 0
        int begin = 0, end = 0;     // triangle range for leaves
    };

    int build(int begin, int end);
    void search(int node, const Vec3& p, double& best) const;

    std::vector<Vec3> a_, b_, c_;  // triangle corners, flattened
    std::vector<int> triangles_;   // build ordering
    std::vector<Vec3> centroids_;
    std::vector<Node> nodes_;
    int root_ = -1;
    static constexpr int kLeafSize = 8;
};

std::vector<double> cloud_to_mesh_distances(const PointCloud& source,
                                            const std::vector<Vec3>& vertices,
                                            const std::vector<MeshFace>& faces);
std::vector<double> cloud_to_mesh_distances(const PointCloud& source,
                                            const MeshDistanceIndex& index);

/// Closest distance from a point to one triangle (interior / edge / vertex
/// cases), used by the mesh distance index.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Summary statistics of a distance list. std is the population standard
/// deviation; mse has units meters^2.
struct DistanceStats {
    std::size_t count = 0;
    double mean = 0.0;
    double mse = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::optional<double> threshold;  // meters
    double pass_fraction = 0.0;       // |{d <= threshold}| / n, when threshold set
    // Categorization buckets for threshold t: pass <= t, warn <= 2t, fail > 2t.
    std::size_t n_pass = 0, n_warn = 0, n_fail = 0;
};

DistanceStats summarize(const std::vector<double>& distances,
                        std::optional<double> threshold = std::nullopt);

/// Entity being evaluated, for reports.
struct EntityRef {
    enum class Level { Assembly, Beam, Joint, Face };
    Level level = Level::Assembly;
    int beam = -1;
    int joint = -1;
    int face = -1;

    auto operator<=>(const EntityRef&) const = default;
    std::string label() const;
    static const char* level_name(Level level);
};

/// Per-entity distance report. Statistics are exactly recomputable from
/// per_point_distances.
struct ErrorReport {
    EntityRef entity;
    std::vector<int> scan_indices;  // indices into the evaluated scan subset's parent cloud
    std::vector<double> per_point_distances;  // meters, parallel to scan_indices when present
    DistanceStats stats;
};

ErrorReport make_report(const EntityRef& entity, std::vector<int> scan_indices,
                        std::vector<double> distances, std::optional<double> threshold);

/// Piecewise-linear color gradient over a distance range.
struct ColorMap {
    enum class Mode { Adaptive, Fixed };
    Mode mode = Mode::Adaptive;
    double fixed_min = 0.0;  // meters, Fixed mode
    double fixed_max = 0.0;
    /// Gradient stops (position in [0,1], RGB). Default blue-green-red.
    std::vector<std::pair<double, Vec3>> stops = {
        {0.0, Vec3(0.0, 0.0, 1.0)}, {0.5, Vec3(0.0, 1.0, 0.0)}, {1.0, Vec3(1.0, 0.0, 0.0)}};

    static ColorMap adaptive();
    static ColorMap fixed(double lo, double hi);

    Vec3 color_at(double t) const;  // t in [0,1]
};

struct ColorizeResult {
    PointCloud cloud;  // input cloud with colors set
    std::size_t clamped = 0;
    double used_min = 0.0;
    double used_max = 0.0;
};

/// Colors each point by its distance. Adaptive mode spans [min, max] of the
/// distances; a degenerate range maps everything to the low-end color. Fixed
/// mode clamps out-of-range distances and counts the clamps.
ColorizeResult colorize(const PointCloud& cloud, const std::vector<double>& distances,
                        const ColorMap& map);

}  // namespace timberdiff
