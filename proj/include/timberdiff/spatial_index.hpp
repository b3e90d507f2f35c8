#pragma once

#include <vector>

#include "timberdiff/point_cloud.hpp"

namespace timberdiff {

/// Exact nearest-neighbor index (k-d tree) over a fixed point set. Queries
/// return precisely the brute-force result; equal distances are broken by the
/// lower point index, so every downstream consumer is deterministic.
/// Immutable after construction and safe to share across threads.
class SpatialIndex {
public:
    struct Neighbor {
        int index = -1;
        double distance = 0.0;  // Euclidean, meters
    };

    explicit SpatialIndex(const PointCloud& cloud);
    explicit SpatialIndex(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    /// k nearest points (including the query point itself when it is a member
    /// of the indexed set), sorted by (distance, index). Returns fewer than k
    /// neighbors only when the set is smaller than k.
    std::vector<Neighbor> knn(const Vec3& query, int k) const;

    /// Single nearest point; index -1 on an empty index.
    Neighbor nearest(const Vec3& query) const;

    /// All points with distance <= radius, sorted by (distance, index).
    std::vector<Neighbor> radius(const Vec3& query, double radius) const;

private:
    struct Node {
        // Leaf when axis < 0; then [begin, end) indexes order_.
        int axis = -1;
        double split = 0.0;
        int left = -1;
        int right = -1;
        int begin = 0;
        int end = 0;
    };

    int build(int begin, int end);
    void knn_search(int node, const Vec3& q, int k, std::vector<std::pair<double, int>>& heap) const;
    void radius_search(int node, const Vec3& q, double r2,
                       std::vector<std::pair<double, int>>& out) const;

    static double squared_distance(const Vec3& a, const Vec3& b) {
        const double dx = a.x() - b.x();
        const double dy = a.y() - b.y();
        const double dz = a.z() - b.z();
        return dx * dx + dy * dy + dz * dz;
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;

    static constexpr int kLeafSize = 16;
};

}  // namespace timberdiff
